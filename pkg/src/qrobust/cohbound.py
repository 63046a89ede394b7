"""Worst-case fidelity bounds for coherent errors.

With interaction Hamiltonians ``G_j`` and their average ``G`` every admissible
error satisfies

    F >= 1 - (1/2 sum_j ||sum_{k>j} [G_j, G_k]|| + N ||G||)^2           (direct)

and, if ``||H_e_j|| <= delta`` and ``||G|| <= gamma delta``,

    F_wc >= 1 - delta^2 N^2 ((N - 1)/2 delta + gamma)^2                  (gamma)

The direct bound is maximised over the admissible set numerically; ``gamma``
comes from one of three backends (multistart optimisation, exact vertex
enumeration, or a norm bound), or from circuit partitioning.
"""
from dataclasses import dataclass, field
import itertools
import math

import numpy as np
from scipy.optimize import brentq

from .errmodel import InteractionFrame, interaction_frame
from .matcore import ValidationError, dagger, spectral_norm
from .optkit import OptSettings, maximize_box

VERTEX_CAP = 22
_VERTEX_CHUNK = 1 << 15


class VertexCapacityError(ValueError):
    """Too many sign variables for exhaustive vertex enumeration."""


@dataclass
class GammaResult:
    value: float
    method: str
    argmax_theta: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class FidelityBound:
    value: float
    kind: str
    ingredients: dict = field(default_factory=dict)


def fidelity(U_ideal, U_noisy):
    """Gate fidelity ``|tr(U_ideal^H U_noisy) / d|^2`` (batched over ``U_noisy``)."""
    U_ideal = np.asarray(U_ideal)
    U_noisy = np.asarray(U_noisy)
    if U_ideal.shape[-2:] != U_noisy.shape[-2:]:
        raise ValidationError(f"dimension mismatch: {U_ideal.shape} vs {U_noisy.shape}")
    d = U_ideal.shape[-1]
    tr = np.einsum("...ij,...ij->...", np.conj(U_ideal), U_noisy)
    F = np.abs(tr / d) ** 2
    return float(F) if np.ndim(F) == 0 else F


# ---------------------------------------------------------------------------
# direct bound

def _suffix(Gl):
    """``S_j = sum_{k>j} G_k`` along axis -3."""
    S = np.cumsum(Gl[..., ::-1, :, :], axis=-3)[..., ::-1, :, :]
    out = np.zeros_like(Gl)
    out[..., :-1, :, :] = S[..., 1:, :, :]
    return out


def direct_terms(frame, theta):
    """Commutator sum ``1/2 sum_j ||sum_{k>j}[G_j,G_k]||`` and ``N ||G||``."""
    Gl = frame.G_layers(theta)
    S = _suffix(Gl)
    X = Gl @ S - S @ Gl
    comm = 0.5 * frame.norm(X, anti=True).sum(axis=-1)
    NG = frame.norm(Gl.sum(axis=-3))
    return comm, NG


def direct_objective(frame, theta):
    comm, NG = direct_terms(frame, theta)
    return (comm + NG) ** 2


def _top_pair(A):
    U, s, Vh = np.linalg.svd(A)
    return U[..., :, 0], s[..., 0], np.conj(Vh[..., 0, :])


def direct_gradient(frame, theta):
    """Gradient of :func:`direct_objective` with respect to ``theta``.

    Uses the top singular pairs (a subgradient at singular-value crossings).
    """
    theta = np.asarray(theta, dtype=float)
    C, lay, N = frame.C, frame.layer, frame.N
    Gl = frame.G_layers(theta)
    S = _suffix(Gl)
    X = Gl @ S - S @ Gl
    u, s, v = _top_pair(X)                                    # (N, d), (N,), (N, d)
    active = s > 1e-300
    # d||X_j||/dc_i for i on layer j:   u^H (C_i S_j - S_j C_i) v
    w = np.einsum("jab,jb->ja", S, v)
    r = np.einsum("jba,jb->ja", np.conj(S), u)                # S^H u
    same = (np.einsum("ia,iab,ib->i", np.conj(u[lay]), C, w[lay])
            - np.einsum("ia,iab,ib->i", np.conj(r[lay]), C, v[lay])).real
    same = np.where(active[lay], same, 0.0)
    # for i on a later layer than j:       u_j^H (G_j C_i - C_i G_j) v_j
    p = np.einsum("jba,jb->ja", np.conj(Gl), u)               # G_j^H u_j
    q = np.einsum("jab,jb->ja", Gl, v)
    later = (np.einsum("ja,iab,jb->ji", np.conj(p), C, v)
             - np.einsum("ja,iab,jb->ji", np.conj(u), C, q)).real
    mask = (np.arange(N)[:, None] < lay[None, :]) & active[:, None]
    dcomm = 0.5 * (same + np.where(mask, later, 0.0).sum(axis=0))
    NG = Gl.sum(axis=0)
    u0, s0, v0 = _top_pair(NG)
    dNG = np.einsum("a,iab,b->i", np.conj(u0), C, v0).real if s0 > 1e-300 else np.zeros(len(C))
    total = 0.5 * s[active].sum() + s0
    return 2 * total * (frame.E.T @ (dcomm + dNG))


def bound_direct(circuit, model, settings=None, initial_points=None, frame=None):
    """Direct bound ``1 - f*`` with ``f*`` maximised over admissible errors.

    Optimisation runs in unit coordinates ``u = theta / level``;
    ``initial_points`` are extra starts in those coordinates. With a single
    free parameter (e.g. systematic control errors) the objective is monotone
    in ``|theta|`` and the endpoint value is exact.
    """
    model = model.resolve(len(circuit))
    frame = frame or interaction_frame(circuit, model)
    return bound_direct_frame(frame, model.level, settings, initial_points)


def bound_direct_frame(frame, level, settings=None, initial_points=None):
    settings = settings or OptSettings()
    N = frame.N
    b = frame.bounds
    p = frame.n_params
    if level == 0 or p == 0:
        return FidelityBound(1.0, "direct", {
            "delta": level, "N": N, "commutator_sum": 0.0, "N_norm_G": 0.0,
            "theta": np.zeros(p), "unit_theta": np.zeros(p), "certified": True})

    f = lambda u: float(direct_objective(frame, level * u))
    grad = lambda u: level * direct_gradient(frame, level * u)
    if p == 1:
        u_best = b.copy()
        diag = {"certified": True, "starts": 0}
    else:
        points = list(initial_points or [])
        if 2 ** p <= 1024:
            signs = np.array(list(itertools.product((-1.0, 1.0), repeat=p)))
            vals = direct_objective(frame, level * signs * b)
            points.append(signs[int(np.argmax(vals))] * b)
        res = maximize_box(f, -b, b, settings, gradient=grad, initial_points=points)
        u_best = res.x
        diag = dict(res.diagnostics, certified=False)
        diag.pop("best_trace", None)
    comm, NG = direct_terms(frame, level * u_best)
    comm, NG = float(comm), float(NG)
    value = 1.0 - (comm + NG) ** 2
    return FidelityBound(value, "direct", {
        "delta": level, "N": N, "commutator_sum": comm, "N_norm_G": NG,
        "theta": level * u_best, "unit_theta": u_best, **diag})


# ---------------------------------------------------------------------------
# gamma backends

def _frame(circuit, model):
    if isinstance(circuit, InteractionFrame):
        return circuit
    return interaction_frame(circuit, model)


def _norm_and_grad(frame, D, theta):
    G = np.tensordot(theta, D, axes=1) / frame.N
    if frame.hermitian:
        w, V = np.linalg.eigh(G)
        k = int(np.argmax(np.abs(w)))
        x = V[:, k]
        sign = 1.0 if w[k] >= 0 else -1.0
        grad = sign * np.einsum("a,kab,b->k", np.conj(x), D, x).real / frame.N
        return abs(w[k]), grad
    u, s, v = _top_pair(G)
    grad = np.einsum("a,kab,b->k", np.conj(u), D, v).real / frame.N
    return s, grad


def gamma_opt(circuit, model=None, settings=None, initial_points=None):
    """``gamma = max ||G(theta)||`` over the unit box, by multistart ascent.

    The answer is a local maximum at best, so it can underestimate the true
    ``gamma``; ``diagnostics['spread']`` shows how the best starts agree.
    Pass an :class:`InteractionFrame` as ``circuit`` to skip frame assembly.
    """
    frame = _frame(circuit, model)
    p = frame.n_params
    if p == 0:
        return GammaResult(0.0, "opt", np.zeros(0), {"certified": True})
    D = frame.columns
    b = frame.bounds
    f = lambda t: float(_norm_and_grad(frame, D, t)[0])
    g = lambda t: _norm_and_grad(frame, D, t)[1]
    res = maximize_box(f, -b, b, settings or OptSettings(), gradient=g,
                       initial_points=initial_points)
    diag = dict(res.diagnostics)
    diag.pop("best_trace", None)
    return GammaResult(float(res.f), "opt", res.x, diag)


def gamma_vertex(circuit, model=None, cap=VERTEX_CAP):
    """Exact ``gamma`` as the largest ``||G||`` over the box vertices.

    ``||G(theta)||`` is convex in ``theta``, so its maximum over the box sits
    on a vertex; ``G(-theta) = -G(theta)`` halves the enumeration.
    """
    frame = _frame(circuit, model)
    p = frame.n_params
    if p > cap:
        raise VertexCapacityError(
            f"{p} sign variables exceed the vertex cap of {cap}; "
            "use gamma_opt or gamma_partitioned instead")
    if p == 0:
        return GammaResult(0.0, "vertex", np.zeros(0), {"vertices": 0, "certified": True})
    D = frame.columns.reshape(p, -1)
    b = frame.bounds
    d = frame.dim
    free = p - 1
    total = 2 ** free
    best, best_idx = -1.0, 0
    for start in range(0, total, _VERTEX_CHUNK):
        idx = np.arange(start, min(start + _VERTEX_CHUNK, total))
        bits = (idx[:, None] >> np.arange(free)[None, :]) & 1
        signs = np.concatenate([np.ones((idx.size, 1)), 1.0 - 2.0 * bits], axis=1)
        G = ((signs * b) @ D).reshape(-1, d, d) / frame.N
        vals = frame.norm(G)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_idx = float(vals[k]), int(idx[k])
    bits = (best_idx >> np.arange(free)) & 1
    theta = np.concatenate([[1.0], 1.0 - 2.0 * bits]) * b
    return GammaResult(best, "vertex", theta, {"vertices": 2 * total, "certified": True})


def gamma_norm(circuit, model=None):
    """Norm bound ``gamma <= ||M|| * ||theta_max||_2`` with ``vec(G) = M theta``.

    For ``l`` basis elements on each of ``N`` layers this is
    ``sqrt(N / l) ||M||`` with ``M = (1/N)[vec(C_1) ... vec(C_p)]``.
    """
    frame = _frame(circuit, model)
    p = frame.n_params
    if p == 0:
        return GammaResult(0.0, "norm", None, {"matrix_norm": 0.0})
    D = frame.columns
    M = np.stack([d.reshape(-1, order="F") for d in D], axis=1) / frame.N
    Mn = spectral_norm(M)
    radius = float(np.linalg.norm(frame.bounds))
    return GammaResult(float(Mn * radius), "norm", None,
                       {"matrix_norm": float(Mn), "theta_radius": radius})


def compute_gamma(circuit, model, method, settings=None, cap=VERTEX_CAP, plan=None):
    """Dispatch to ``opt``, ``vertex``, ``norm`` or ``partition``."""
    if method == "opt":
        return gamma_opt(circuit, model, settings)
    if method == "vertex":
        return gamma_vertex(circuit, model, cap)
    if method == "norm":
        return gamma_norm(circuit, model)
    if method == "partition":
        from .partition import PartitionPlan, gamma_partitioned
        return gamma_partitioned(circuit, model, plan or PartitionPlan.auto_plan(), settings=settings, cap=cap)
    raise ValidationError(f"unknown gamma method {method!r}")


# ---------------------------------------------------------------------------
# scalar bounds

def bound_gamma(delta, N, gamma):
    """``1 - delta^2 N^2 ((N - 1)/2 delta + gamma)^2``."""
    if delta < 0 or gamma < 0 or N < 1:
        raise ValidationError("need delta >= 0, gamma >= 0, N >= 1")
    value = 1.0 - delta ** 2 * N ** 2 * ((N - 1) / 2 * delta + gamma) ** 2
    return FidelityBound(value, "gamma", {"delta": delta, "N": N, "gamma": gamma})


def threshold_delta(N, gamma, target, relaxed=True):
    """Largest ``delta`` for which the gamma bound guarantees ``target`` fidelity.

    ``relaxed`` replaces ``N - 1`` by ``N`` (the simpler sufficient condition
    ``delta^2 N^2 (delta N / 2 + gamma)^2 <= 1 - target``).
    """
    if not 0 < target < 1:
        raise ValidationError("target fidelity must lie in (0, 1)")
    budget = 1.0 - target
    half = N / 2 if relaxed else (N - 1) / 2

    def excess(delta):
        return delta ** 2 * N ** 2 * (half * delta + gamma) ** 2 - budget

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2
    return brentq(excess, 0.0, hi, xtol=1e-16, rtol=1e-14)


def bound_prior(circuit, theta_max):
    """Earlier control-error bound ``1 - (sum_j ||H_j||)^2 theta_max^2``.

    ``theta_max`` bounds the over-rotation fractions; every gate needs a
    generator.
    """
    if not circuit.has_generators():
        raise ValidationError("bound_prior needs every gate to carry a generator")
    total = float(sum(spectral_norm(g.generator) for g in circuit.gates))
    value = 1.0 - total ** 2 * theta_max ** 2
    return FidelityBound(value, "prior", {"theta_max": theta_max, "generator_norm_sum": total,
                                          "N": len(circuit)})


def exact_worst_fidelity_systematic(circuit, model, grid=2001):
    """Worst fidelity for a single shared error parameter, by dense 1-D scan."""
    from .errmodel import noisy_unitary
    model = model.resolve(len(circuit))
    if model.n_params != 1 or model.correlation != "systematic":
        raise ValidationError("needs a systematic model with one parameter")
    t = np.linspace(-1, 1, grid)[:, None] * model.coordinate_bounds()
    F = fidelity(circuit.unitary(), noisy_unitary(circuit, model, t))
    return float(np.min(F))
