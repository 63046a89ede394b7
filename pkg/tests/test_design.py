import math

import numpy as np
import pytest

from qrobust.circuit import Circuit, build_jones_pulse, make_gate
from qrobust.design import DesignProblem, Measure, ModelSpec, design, evaluate, pulse_design_problem
from qrobust.matcore import ValidationError
from qrobust.optkit import OptSettings

INDEP = ModelSpec("cce", "independent", 0.05)
SYST = ModelSpec("cce", "systematic", 0.05)


def rx_template(eta):
    return Circuit(1, [make_gate("rx", [eta[0]], [0])]) if len(eta) else Circuit(1, [make_gate("h", [], [0])])


def test_zero_dimensional_problem_returns_report():
    p = DesignProblem(rx_template, [], [], [], objective=(Measure(ModelSpec("pauli-z", delta=0.1)),))
    x, rep = design(p)
    assert x.size == 0 and rep["before"] == rep["after"]
    assert rep["objective_after"] == pytest.approx(1 - (1 - 0.1 ** 2))


def test_zero_weight_leaves_only_f():
    p = DesignProblem(rx_template, [1.0], [0.0], [2.0],
                      objective=(Measure(ModelSpec("pauli-z", delta=0.1), weight=0.0),),
                      f=lambda x: (x[0] - 0.5) ** 2)
    x, rep = design(p, OptSettings(starts=3))
    assert x[0] == pytest.approx(0.5, abs=1e-4)
    assert rep["objective_after"] == pytest.approx(0, abs=1e-8)


def test_measure_validation():
    with pytest.raises(ValidationError):
        Measure(INDEP, "bogus")
    with pytest.raises(ValidationError):
        Measure(INDEP, weight=-1)
    with pytest.raises(ValidationError):
        DesignProblem(rx_template, [0.0], [0.0], [1.0], objective=(Measure(INDEP),),
                      constraints=(Measure(SYST),))


def test_evaluate_routes_agree_with_systematic_closed_form():
    J = build_jones_pulse(math.pi / 4).to_circuit()
    g = evaluate(Measure(SYST, "gamma_value"), J)
    assert g <= 1e-8
    assert evaluate(Measure(SYST, "direct"), J) >= evaluate(Measure(SYST, "gamma"), J) - 1e-12
    assert evaluate(Measure(INDEP, "direct"), J, OptSettings(starts=20)) == pytest.approx(0.8964, abs=1e-3)


@pytest.mark.slow
def test_pulse_design_improves_on_start():
    problem = pulse_design_problem(math.pi / 4, 0.05)
    x, rep = design(problem, OptSettings(starts=1, max_iters=100))
    key_i, key_s = INDEP.name, SYST.name
    before = rep["before"][f"direct[{key_i}]"]
    after = rep["after"][f"direct[{key_i}]"]
    assert after > before + 0.05
    assert rep["feasible"]
    assert rep["after"][f"direct[{key_s}]"] >= 0.999995 - 1e-9
    assert rep["after"]["target_infidelity"] <= 1e-6 + 1e-12
    assert np.all(x >= problem.lower) and np.all(x <= problem.upper)
