"""Robust circuit design: choose circuit parameters that maximise robustness.

A :class:`DesignProblem` couples a parameterised circuit ``eta -> Circuit``
with robustness measures evaluated on the instantiated circuit:

* ``direct`` - worst-case fidelity from the commutator bound, maximised over
  the admissible errors (exact for a single shared error parameter),
* ``gamma`` - the scalar ``gamma`` bound with ``gamma`` from vertex
  enumeration (or multistart ascent when enumeration is too large),
* ``gamma_value`` - ``gamma`` itself.

The objective minimised is ``f(eta) + sum_l lambda_l loss_l(eta)`` with
``loss = 1 - bound`` for fidelity bounds and ``loss = gamma`` otherwise;
constraints require bounds above (or ``gamma`` below) a threshold.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .circuit import PulseSequence, build_jones_pulse, rx_target
from .cohbound import VERTEX_CAP, bound_direct, bound_gamma, fidelity, gamma_opt, gamma_vertex
from .errmodel import INDEPENDENT, SYSTEMATIC, model_cce, model_pauli
from .matcore import ValidationError, global_phase_distance
from .optkit import InfeasibleProblem, OptSettings, maximize_constrained

ROUTES = ("direct", "gamma", "gamma_value")


@dataclass(frozen=True)
class ModelSpec:
    """Error model to build on each instantiated circuit.

    ``kind`` is ``cce`` (control errors) or ``pauli-x``/``pauli-y``/``pauli-z``.
    """

    kind: str
    correlation: str = INDEPENDENT
    delta: float = 0.0

    def build(self, circuit):
        if self.kind == "cce":
            return model_cce(circuit, self.delta, correlation=self.correlation)
        if self.kind.startswith("pauli-"):
            return model_pauli(circuit.n, self.kind[-1], self.delta, correlation=self.correlation)
        raise ValidationError(f"unknown model kind {self.kind!r}")

    @property
    def name(self):
        return f"{self.kind}/{self.correlation}/{self.delta:g}"


@dataclass(frozen=True)
class Measure:
    model: ModelSpec
    route: str = "direct"
    weight: float = 1.0
    threshold: float | None = None

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValidationError(f"unknown robustness route {self.route!r}")
        if self.weight < 0:
            raise ValidationError("weights must be nonnegative")
        if self.threshold is not None and self.route != "gamma_value" and not 0 < self.threshold <= 1:
            raise ValidationError("fidelity thresholds must lie in (0, 1]")

    @property
    def key(self):
        return f"{self.route}[{self.model.name}]"


@dataclass
class DesignProblem:
    template: object
    x0: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    objective: tuple = ()
    constraints: tuple = ()
    f: object = None
    target: np.ndarray | None = None
    max_target_infidelity: float | None = None
    inner: OptSettings = field(default_factory=lambda: OptSettings(starts=1, max_iters=30, polish_evals=20))
    report_settings: OptSettings = field(default_factory=lambda: OptSettings(starts=50))
    # constraints are enforced with this much headroom (in scaled units)
    margin: float = 1e-4

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if not (self.x0.shape == self.lower.shape == self.upper.shape):
            raise ValidationError("x0, lower and upper must have the same shape")
        if not self.objective and self.f is None:
            raise ValidationError("design problem needs an objective")
        for c in self.constraints:
            if c.threshold is None:
                raise ValidationError(f"constraint {c.key} has no threshold")


def evaluate(measure, circuit, inner=None):
    """Value of one robustness measure for a concrete circuit."""
    model = measure.model.build(circuit).resolve(len(circuit))
    if measure.route == "direct":
        return bound_direct(circuit, model, inner).value
    gamma = (gamma_vertex(circuit, model).value if model.n_params <= VERTEX_CAP
             else gamma_opt(circuit, model, inner).value)
    if measure.route == "gamma_value":
        return gamma
    return bound_gamma(model.level, len(circuit), gamma).value


def _loss(measure, value):
    return value if measure.route == "gamma_value" else 1.0 - value


def _slack(measure, value):
    if measure.route == "gamma_value":
        return measure.threshold - value
    # scaled so that the constraint is O(1) near the threshold
    return (value - measure.threshold) / max(1.0 - measure.threshold, 1e-12)


class _Evaluator:
    def __init__(self, problem):
        self.p = problem
        self.cache = {}

    def values(self, x):
        key = np.asarray(x, dtype=float).tobytes()
        if key not in self.cache:
            circ = self.p.template(x)
            out = {m.key: evaluate(m, circ, self.p.inner) for m in (*self.p.objective, *self.p.constraints)}
            if self.p.target is not None:
                out["target_infidelity"] = 1.0 - fidelity(self.p.target, circ.unitary())
            self.cache[key] = out
        return self.cache[key]

    def objective(self, x):
        v = self.values(x)
        J = sum(m.weight * _loss(m, v[m.key]) for m in self.p.objective)
        if self.p.f is not None:
            J += float(self.p.f(x))
        return -J

    def constraint(self, x):
        v = self.values(x)
        g = [_slack(m, v[m.key]) for m in self.p.constraints]
        if self.p.max_target_infidelity is not None:
            eps = self.p.max_target_infidelity
            g.append((eps - v["target_infidelity"]) / eps)
        return np.array(g) if g else np.zeros(1)


def report_for(problem, x, measures=None):
    """Every robustness measure of the problem (and the extra ``measures``) at ``x``."""
    circ = problem.template(x)
    specs = {m.model for m in (*problem.objective, *problem.constraints)}
    rows = {}
    for spec in sorted(specs, key=lambda s: s.name):
        for route in ROUTES:
            m = Measure(spec, route)
            rows[m.key] = evaluate(m, circ, problem.report_settings)
    for m in measures or ():
        rows[m.key] = evaluate(m, circ, problem.report_settings)
    if problem.target is not None:
        U = circ.unitary()
        rows["target_infidelity"] = 1.0 - fidelity(problem.target, U)
        rows["target_distance"] = global_phase_distance(U, problem.target)
    return rows


def design(problem, settings=None):
    """Optimise the design parameters; returns ``(eta_star, report)``.

    The report lists every measure before and after, the objective, the
    constraint slacks at ``eta_star`` and the optimiser diagnostics.
    Raises :class:`~qrobust.optkit.InfeasibleProblem` when no start is
    feasible.
    """
    settings = settings or OptSettings(starts=4, max_iters=100)
    ev = _Evaluator(problem)
    x0 = problem.x0
    before = report_for(problem, x0)
    obj0 = ev.objective(x0)
    feas0 = bool(np.all(ev.constraint(x0) >= -1e-6))
    if x0.size == 0:
        return x0.copy(), {"before": before, "after": before, "objective_before": -obj0,
                           "objective_after": -obj0, "constraints": ev.constraint(x0).tolist(),
                           "feasible": feas0, "diagnostics": {"starts": 0}}
    try:
        constrained = bool(problem.constraints) or problem.max_target_infidelity is not None
        margin = problem.margin if constrained else 0.0
        res = maximize_constrained(ev.objective, lambda x: ev.constraint(x) - margin,
                                   problem.lower, problem.upper, settings, initial_points=[x0])
        x, diag = res.x, dict(res.diagnostics)
    except InfeasibleProblem:
        if not feas0:
            raise
        x, diag = x0.copy(), {"starts": settings.starts, "feasible": 1}
    if feas0 and ev.objective(x) < obj0:
        x = x0.copy()
    diag.pop("best_trace", None)
    after = report_for(problem, x)
    g = ev.constraint(x)
    return x, {
        "before": before,
        "after": after,
        "objective_before": -obj0,
        "objective_after": -ev.objective(x),
        "constraints": g.tolist(),
        "feasible": bool(np.all(g >= -1e-6)),
        "diagnostics": diag,
    }


# ---------------------------------------------------------------------------
# composite pulses

def pulse_template(m):
    """``eta = (alpha_1..alpha_m, phi_1..phi_m) -> circuit`` of x-y rotations."""
    def build(eta):
        eta = np.asarray(eta, dtype=float)
        if eta.size != 2 * m:
            raise ValidationError(f"expected {2 * m} pulse parameters, got {eta.size}")
        return PulseSequence.from_params(eta).to_circuit()
    return build


def pulse_design_problem(beta=math.pi / 4, delta=0.05, init=None, systematic_threshold=0.999995,
                         max_target_infidelity=1e-6, inner=None):
    """Composite-pulse design for ``R_X(beta)``.

    Maximises the independent-error worst-case bound for control errors of
    relative size ``delta`` while keeping the systematic-error bound above
    ``systematic_threshold`` and the gate infidelity of the error-free
    sequence to the target below ``max_target_infidelity``.
    Starts from the Jones sequence unless ``init`` is given.
    """
    init = init or build_jones_pulse(beta)
    m = len(init)
    indep = ModelSpec("cce", INDEPENDENT, delta)
    syst = ModelSpec("cce", SYSTEMATIC, delta)
    lower = np.concatenate([np.zeros(m), np.full(m, -2 * math.pi)])
    upper = np.concatenate([np.full(m, 2 * math.pi), np.full(m, 2 * math.pi)])
    kw = {} if inner is None else {"inner": inner}
    return DesignProblem(
        template=pulse_template(m),
        x0=init.params,
        lower=lower,
        upper=upper,
        objective=(Measure(indep, "direct"),),
        constraints=(Measure(syst, "direct", threshold=systematic_threshold),),
        target=rx_target(beta),
        max_target_infidelity=max_target_infidelity,
        **kw,
    )
