"""Box-constrained multistart maximisation.

Each start runs L-BFGS-B (``scipy.optimize``) on the negated objective with a
forward-difference gradient unless an analytic one is supplied, followed by a
coordinate pattern search that copes with the kinks of max-singular-value
objectives. The best point over all starts is returned; nothing certifies it
as a global maximum, so the diagnostics record how the top values spread.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.optimize import minimize

log = logging.getLogger(__name__)


class OptimizationError(RuntimeError):
    """No start produced a finite objective value."""


class InfeasibleProblem(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class OptSettings:
    starts: int = 1000
    max_iters: int = 200
    fd_step: float = 1e-6
    seed: int = 0
    gtol: float = 1e-10
    ftol: float = 1e-13
    polish: bool = True
    polish_evals: int = 400
    workers: int = 1

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be positive")


@dataclass
class OptResult:
    x: np.ndarray
    f: float
    diagnostics: dict = field(default_factory=dict)


def fd_gradient(fun, x, lower, upper, h=1e-6, f0=None):
    """Forward-difference gradient that stays inside the box.

    The step is ``h * max(1, |x_i|)``; where a forward step would leave the box
    the backward step is used instead.
    """
    x = np.asarray(x, dtype=float)
    f0 = fun(x) if f0 is None else f0
    g = np.zeros_like(x)
    for i in range(x.size):
        step = h * max(1.0, abs(x[i]))
        if x[i] + step > upper[i]:
            step = -step
        if lower[i] == upper[i]:
            continue
        xi = x.copy()
        xi[i] += step
        g[i] = (fun(xi) - f0) / step
    return g


def _pattern_search(fun, x, fx, lower, upper, budget, step0):
    """Coordinate pattern search (maximisation) with step halving."""
    x = x.copy()
    step = step0.copy()
    evals = 0
    while evals < budget and np.any(step > 1e-12 * np.maximum(1.0, upper - lower)):
        improved = False
        for i in range(x.size):
            if step[i] <= 0:
                continue
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[i] = np.clip(y[i] + sgn * step[i], lower[i], upper[i])
                if y[i] == x[i]:
                    continue
                fy = fun(y)
                evals += 1
                if np.isfinite(fy) and fy > fx:
                    x, fx, improved = y, fy, True
                    break
            if evals >= budget:
                break
        if not improved:
            step *= 0.5
    return x, fx, evals


def _local_ascent(objective, gradient, x0, lower, upper, settings):
    neg = lambda x: -objective(x)
    if gradient is None:
        def jac(x):
            return -fd_gradient(objective, x, lower, upper, settings.fd_step)
    else:
        jac = lambda x: -np.asarray(gradient(x), dtype=float)
    res = minimize(neg, x0, jac=jac, method="L-BFGS-B", bounds=list(zip(lower, upper)),
                   options={"maxiter": settings.max_iters, "gtol": settings.gtol,
                            "ftol": settings.ftol})
    x, fx = np.clip(res.x, lower, upper), -float(res.fun)
    fx_check = objective(x)
    if np.isfinite(fx_check):
        fx = fx_check
    evals = int(res.nfev)
    if settings.polish and x.size:
        step0 = 0.05 * (upper - lower)
        x, fx, extra = _pattern_search(objective, x, fx, lower, upper, settings.polish_evals, step0)
        evals += extra
    return x, fx, bool(res.success), evals


def _start_points(lower, upper, settings, initial_points):
    rng = np.random.Generator(np.random.PCG64(settings.seed))
    pts = [np.clip(np.asarray(p, dtype=float), lower, upper) for p in (initial_points or [])]
    n_random = max(settings.starts - len(pts), 0)
    if n_random:
        pts.extend(rng.uniform(lower, upper, size=(n_random, lower.size)))
    return pts


def maximize_box(objective, lower, upper, settings=None, gradient=None, initial_points=None):
    """Maximise ``objective`` over the box ``lower <= x <= upper``.

    ``initial_points`` are used as the first starts; the remaining
    ``settings.starts - len(initial_points)`` starts are uniform on the box.
    Results are deterministic for a given seed regardless of ``workers``.
    """
    settings = settings or OptSettings()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or np.any(lower > upper):
        raise ValueError("need lower <= upper elementwise")
    if lower.size == 0:
        f = float(objective(lower))
        return OptResult(lower.copy(), f, {"starts": 0, "best_trace": [f]})

    starts = _start_points(lower, upper, settings, initial_points)

    def run(x0):
        try:
            return _local_ascent(objective, gradient, x0, lower, upper, settings)
        except (FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
            log.debug("start discarded: %s", exc)
            return None

    if settings.workers > 1:
        with ThreadPoolExecutor(settings.workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]

    best_x, best_f = None, -np.inf
    values, trace, converged, discarded, evals = [], [], 0, 0, 0
    for res in results:
        if res is None or not np.isfinite(res[1]):
            discarded += 1
            trace.append(best_f)
            continue
        x, fx, ok, ne = res
        values.append(fx)
        converged += ok
        evals += ne
        if fx > best_f:
            best_x, best_f = x, fx
        trace.append(best_f)
    if best_x is None:
        raise OptimizationError("objective was non-finite on every start")
    top = sorted(values, reverse=True)[:5]
    return OptResult(best_x, float(best_f), {
        "starts": len(starts),
        "converged": converged,
        "discarded": discarded,
        "evaluations": evals,
        "top_values": top,
        "spread": float(top[0] - top[-1]),
        "best_trace": trace,
        "certified": False,
    })


def maximize_constrained(objective, constraint, lower, upper, settings=None, initial_points=None,
                         feas_tol=1e-6):
    """Maximise ``objective`` subject to ``constraint(x) >= 0`` on a box.

    ``constraint`` may return a scalar or a vector (all entries must be
    nonnegative). Each start runs SLSQP; a start that ends infeasible is
    retried with an exact-penalty continuation (penalty weight grown tenfold
    until feasible). Raises :class:`InfeasibleProblem` when no start ends
    feasible.
    """
    settings = settings or OptSettings()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    g = lambda x: np.atleast_1d(np.asarray(constraint(x), dtype=float))
    viol = lambda x: float(np.max(np.maximum(-g(x), 0.0)))

    if lower.size == 0:
        if viol(lower) > feas_tol:
            raise InfeasibleProblem("fixed point violates the constraint")
        return OptResult(lower.copy(), float(objective(lower)), {"starts": 0})

    starts = _start_points(lower, upper, settings, initial_points)
    bounds = list(zip(lower, upper))

    def slsqp(x0):
        res = minimize(lambda x: -objective(x), x0, method="SLSQP", bounds=bounds,
                       constraints=[{"type": "ineq", "fun": g}],
                       options={"maxiter": settings.max_iters, "ftol": 1e-12})
        return np.clip(res.x, lower, upper)

    def penalty(x0):
        x, mu = x0, 10.0
        for _ in range(8):
            pen = lambda y, mu=mu: objective(y) - mu * viol(y)
            x = maximize_box(pen, lower, upper,
                             OptSettings(starts=1, max_iters=settings.max_iters,
                                         seed=settings.seed, polish_evals=200),
                             initial_points=[x]).x
            if viol(x) <= feas_tol:
                break
            mu *= 10.0
        return x

    best_x, best_f, feasible_count, trace = None, -np.inf, 0, []
    for x0 in starts:
        try:
            x = slsqp(x0)
            if viol(x) > feas_tol:
                x = penalty(x)
            fx = float(objective(x))
        except (FloatingPointError, ValueError, np.linalg.LinAlgError):
            trace.append(best_f)
            continue
        if viol(x) <= feas_tol and np.isfinite(fx):
            feasible_count += 1
            if fx > best_f:
                best_x, best_f = x, fx
        trace.append(best_f)
    diagnostics = {"starts": len(starts), "feasible": feasible_count, "best_trace": trace}
    if best_x is None:
        raise InfeasibleProblem("no feasible point found", diagnostics)
    diagnostics["constraint"] = g(best_x).tolist()
    return OptResult(best_x, best_f, diagnostics)
