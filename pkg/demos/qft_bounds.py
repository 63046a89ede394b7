"""
Bounds versus sampling on the quantum Fourier transform
========================================================

Sweep the control-error level on a three-qubit QFT and compare every bound
with the worst of a few thousand sampled error instances.
"""
from qrobust import OptSettings, build_qft, model_cce, sweep, sweep_csv

qft = build_qft(3)
model = model_cce(qft, 1e-3)
rows = sweep(qft, model, [1e-4, 1e-3, 1e-2], num_samples=2000, seed=0, settings=OptSettings(starts=30))

###############################################################################
# The commutator bound is the tightest; the ``gamma`` bounds trade tightness
# for a single number describing the circuit. The last bound knows only the
# total rotation angle and is the loosest.

for r in rows:
    v = r.values
    print(f"delta={v['delta']:.0e}  direct={v['bound_eq14']:.6f}  gamma(opt)={v['bound_eq17_opt']:.6f}  "
          f"gamma(norm)={v['bound_eq17_norm']:.6f}  prior={v['bound_prior']:.6f}  sampled={v['mc_worst']:.6f}")

###############################################################################
# The same table in the CSV layout the command line writes.

print(sweep_csv(rows))
