"""
Composite pulses against amplitude errors
=========================================

A single ``R_X(pi/4)`` pulse, the five-pulse Jones sequence and a sequence
designed for independent errors, compared through worst-case bounds and
sampled fidelities at 5% relative over-rotation.
"""
import math

from qrobust import (Circuit, OptSettings, bound_direct, build_jones_pulse, build_reference_design_pulse,
                     design, make_gate, model_cce, pulse_design_problem, sample_fidelity)

beta, delta = math.pi / 4, 0.05
settings = OptSettings(starts=50)
raw = Circuit(1, [make_gate("rx", [beta], [0])])
jones = build_jones_pulse(beta).to_circuit()
reference = build_reference_design_pulse().to_circuit()

###############################################################################
# Systematic errors share one over-rotation across all pulses; the Jones
# sequence cancels them to first order. Independent errors let every pulse
# drift separately, which the Jones sequence handles poorly.


def row(name, c):
    out = [name]
    for corr in ("systematic", "independent"):
        m = model_cce(c, delta, correlation=corr)
        out.append(bound_direct(c, m, settings).value)
        out.append(sample_fidelity(c, m, 5000, seed=1).worst)
    print("{:10s} sys bound {:.6f} sampled {:.6f} | ind bound {:.6f} sampled {:.6f}".format(*out))


for name, c in (("raw", raw), ("jones", jones), ("reference", reference)):
    row(name, c)

###############################################################################
# Design: maximise the independent-error bound while keeping the systematic
# bound at least 0.999995 and the error-free sequence within 1e-6 infidelity
# of ``R_X(pi/4)``. One start keeps the run short; more starts do better.

problem = pulse_design_problem(beta, delta)
x, report = design(problem, OptSettings(starts=1))
print("angles", [round(float(a), 4) for a in x])
row("designed", problem.template(x))
