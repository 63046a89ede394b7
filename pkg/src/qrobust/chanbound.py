"""Fidelity bounds for circuits of quantum channels with Lindblad-type errors.

Channels act on column-stacked density matrices, ``vec(E(rho)) = A vec(rho)``
with ``A = sum_k conj(E_k) kron E_k``. An error channel ``exp(M_j)`` acts just
before ideal layer ``j``; in the frame of the ideal prefixes its generator becomes
``calG_j = V_j^{-1} M_j V_j``. With ``calG`` the average, the minimal
fidelity obeys

    F_min >= 1 - c (1/2 sum_j ||sum_{k>j} [calG_j, calG_k]|| + 2^{n/2} N ||calG||)

where ``c = 2^n`` in general and ``c = 2^{n/2}`` when every ideal layer is
unitary. Unitary layers with ``||M_j|| <= delta`` and ``||calG|| <= gamma delta``
further give ``1 - 2^{n/2} delta N ((N-1)/2 delta + 2^{n/2} gamma)``.
"""
from dataclasses import dataclass, field
import warnings

import numpy as np
from scipy.linalg import sqrtm
from scipy.optimize import minimize

from .cohbound import compute_gamma
from .errmodel import INDEPENDENT, CoherentErrorModel, InteractionFrame, _normalise
from .matcore import ValidationError, dagger, gen_exp, is_hermitian, spectral_norm, unvec, vec
from .tolerances import TOL


@dataclass(frozen=True, eq=False)
class Superoperator:
    matrix: np.ndarray

    @property
    def dim(self):
        """Hilbert-space dimension ``d`` (the matrix is ``d^2 x d^2``)."""
        return int(round(np.sqrt(self.matrix.shape[0])))

    def __matmul__(self, other):
        # (self @ other) applies ``other`` first
        return Superoperator(self.matrix @ other.matrix)

    def apply(self, rho):
        return apply_superop(self, rho)

    def is_trace_preserving(self, tol=TOL.trace_preserving):
        v = vec(np.eye(self.dim))
        return bool(np.linalg.norm(v.conj() @ self.matrix - v.conj()) <= tol)


def kraus_to_superop(kraus):
    """``sum_k conj(E_k) kron E_k``; warns when ``sum E^H E != I``."""
    kraus = [np.asarray(E, dtype=complex) for E in kraus]
    if not kraus:
        raise ValidationError("need at least one Kraus operator")
    d = kraus[0].shape[0]
    for E in kraus:
        if E.shape != (d, d):
            raise ValidationError(f"Kraus operators must all be {d}x{d}, got {E.shape}")
    comp = sum(dagger(E) @ E for E in kraus)
    if np.linalg.norm(comp - np.eye(d)) > TOL.kraus_completeness:
        warnings.warn("Kraus operators are not trace preserving", RuntimeWarning, stacklevel=2)
    return Superoperator(sum(np.kron(E.conj(), E) for E in kraus))


def unitary_superop(U):
    U = np.asarray(U, dtype=complex)
    return Superoperator(np.kron(U.conj(), U))


def apply_superop(S, rho):
    M = S.matrix if isinstance(S, Superoperator) else np.asarray(S)
    rho = np.asarray(rho)
    return unvec(M @ vec(rho), rho.shape[0])


@dataclass(frozen=True, eq=False)
class LindbladChannel:
    """``drho/dt = -i[K, rho] + sum_k (2 L rho L^H - L^H L rho - rho L^H L)`` for unit time."""

    K: np.ndarray
    dissipators: tuple = ()

    def __post_init__(self):
        K = np.asarray(self.K, dtype=complex)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValidationError("K must be a square matrix")
        if not is_hermitian(K, TOL.hermitian):
            raise ValidationError("K must be Hermitian")
        for L in self.dissipators:
            if np.shape(L) != K.shape:
                raise ValidationError("dissipators must match the dimension of K")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "dissipators", tuple(np.asarray(L, dtype=complex) for L in self.dissipators))

    @property
    def dim(self):
        return self.K.shape[0]


def lindblad_generator(ch):
    """Matrix ``M`` with ``vec(drho/dt) = M vec(rho)``; ``exp(M)`` is the channel."""
    d = ch.dim
    I = np.eye(d)
    M = -1j * (np.kron(I, ch.K) - np.kron(ch.K.conj(), I))
    for L in ch.dissipators:
        LL = dagger(L) @ L
        M = M + 2 * np.kron(L.conj(), L) - np.kron(I, LL) - np.kron(LL.T, I)
    return M


def lindblad_rhs(ch, rho):
    out = -1j * (ch.K @ rho - rho @ ch.K)
    for L in ch.dissipators:
        LL = dagger(L) @ L
        out = out + 2 * L @ rho @ dagger(L) - LL @ rho - rho @ LL
    return out


def lindblad_superop(ch):
    return Superoperator(gen_exp(lindblad_generator(ch)))


def circuit_superops(circuit):
    """Unitary superoperators of the circuit layers, shape ``(N, d^2, d^2)``."""
    U = circuit.layers
    return np.einsum("nab,ncd->nacbd", U.conj(), U).reshape(len(U), circuit.dim ** 2, circuit.dim ** 2)


def _stack(superops):
    mats = [S.matrix if isinstance(S, Superoperator) else np.asarray(S) for S in superops]
    return np.asarray(mats, dtype=complex)


def _prefixes(A):
    """``V_1 = I``, ``V_k = A_{k-1} ... A_1`` with a conditioning check per layer."""
    D = A.shape[-1]
    V = [np.eye(D, dtype=complex)]
    for j, Aj in enumerate(A[:-1]):
        V.append(Aj @ V[-1])
    for j, Aj in enumerate(A):
        cond = np.linalg.cond(Aj)
        if not np.isfinite(cond) or cond > TOL.condition_max:
            raise ValidationError(f"layer {j} is numerically singular (condition {cond:.3g})")
    return np.asarray(V)


def channel_interaction_generators(superops, generators):
    """``calG_j = V_j^{-1} M_j V_j`` for every layer and their average."""
    A = _stack(superops)
    M = np.asarray(generators, dtype=complex)
    if A.shape != M.shape:
        raise ValidationError(f"{len(A)} layers but {len(M)} error generators")
    V = _prefixes(A)
    G = np.linalg.solve(V, M @ V)
    return G, G.mean(axis=0)


def is_unitary_superop(S, tol=1e-9):
    S = np.asarray(S)
    return bool(np.linalg.norm(dagger(S) @ S - np.eye(S.shape[-1])) <= tol)


@dataclass
class ChannelBoundResult:
    value: float
    kind: str
    terms: dict = field(default_factory=dict)


def bound_channel_instance(superops, generators, unitary=None):
    """Bound for one error instance (generators ``M_j``) on the given layers.

    ``unitary`` defaults to checking the layers; unitary layers use the
    tighter ``2^{n/2}`` prefactor.
    """
    A = _stack(superops)
    N = len(A)
    if N == 0:
        return ChannelBoundResult(1.0, "instance", {"N": 0})
    d = int(round(np.sqrt(A.shape[-1])))
    n = int(round(np.log2(d)))
    if unitary is None:
        unitary = all(is_unitary_superop(a) for a in A)
    Gj, G = channel_interaction_generators(A, generators)
    S = np.zeros_like(Gj)
    S[:-1] = np.cumsum(Gj[::-1], axis=0)[::-1][1:]
    comm = 0.5 * float(spectral_norm(Gj @ S - S @ Gj).sum()) if N > 1 else 0.0
    normG = float(spectral_norm(G))
    pref = 2 ** (n / 2) if unitary else 2 ** n
    value = 1.0 - pref * (comm + 2 ** (n / 2) * N * normG)
    return ChannelBoundResult(value, "instance", {
        "commutator_sum": comm, "norm_G": normG, "n": n, "N": N, "unitary": bool(unitary),
        "prefactor": pref})


def bound_channel_worst(n, N, delta, gamma, unitary=True):
    """Worst-case ``1 - 2^{n/2} delta N ((N-1)/2 delta + 2^{n/2} gamma)``; unitary layers only."""
    if not unitary:
        raise ValidationError("the worst-case channel bound needs unitary ideal layers")
    if delta < 0 or gamma < 0 or N < 1:
        raise ValidationError("need delta >= 0, gamma >= 0, N >= 1")
    r = 2 ** (n / 2)
    value = 1.0 - r * delta * N * ((N - 1) / 2 * delta + r * gamma)
    return ChannelBoundResult(value, "worst", {"n": n, "N": N, "delta": delta, "gamma": gamma})


# ---------------------------------------------------------------------------
# structured error generators

def model_generators(n, basis, delta, *, per_layer=False, correlation=INDEPENDENT, label="channel"):
    """Error model over Liouville-space generators ``M = sum_k theta_k B_k``.

    ``basis`` entries are :class:`LindbladChannel` objects or ``4^n x 4^n``
    matrices. They are normalised by their largest spectral norm, so
    ``model.level`` bounds ``||M_j||``.
    """
    def as_block(items):
        mats = [lindblad_generator(b) if isinstance(b, LindbladChannel) else np.asarray(b, dtype=complex)
                for b in items]
        D = 4 ** n
        for m in mats:
            if m.shape != (D, D):
                raise ValidationError(f"generator of shape {m.shape} does not act on {n} qubits")
        return np.stack(mats) if mats else np.zeros((0, D, D), dtype=complex)

    if per_layer:
        blocks, s = _normalise([as_block(b) for b in basis])
        return CoherentErrorModel(n, float(delta), basis=tuple(blocks), scale=s, correlation=correlation,
                                  kind="channel", label=label, liouville=True)
    (block,), s = _normalise([as_block(basis)])
    return CoherentErrorModel(n, float(delta), uniform=block, scale=s, correlation=correlation,
                              kind="channel", label=label, liouville=True)


def model_dephasing(n, delta, *, correlation=INDEPENDENT):
    """Uncertain dephasing rate on every qubit: ``L = sqrt(r) Z_q``, ``|r| <= delta / n``.

    Each generator ``Z* kron Z - I`` has norm 2; coefficients are in units of
    the rate, so ``||M_j|| <= 2 delta``.
    """
    from .errmodel import pauli_string
    d = 2 ** n
    blocks = []
    for q in range(n):
        Zq = pauli_string(n, {q: "Z"})
        blocks.append(lindblad_generator(LindbladChannel(np.zeros((d, d)), (Zq / np.sqrt(2),))))
    return model_generators(n, blocks, delta, correlation=correlation, label="dephasing")


def channel_frame(superops, model):
    """Interaction frame (non-Hermitian) of a generator model on channel layers."""
    A = _stack(superops)
    model = model.resolve(len(A))
    if not model.liouville:
        raise ValidationError("channel frames need a Liouville-space model")
    V = _prefixes(A)
    B, layer = model.stacked()
    C = np.linalg.solve(V[layer], B @ V[layer])
    return InteractionFrame(C=C, layer=layer, N=len(A), E=model.expansion(),
                            bounds=model.coordinate_bounds(unit=True), hermitian=False)


def channel_gamma(superops, model, method="vertex", settings=None):
    """``gamma`` for the averaged interaction generator, via the coherent backends."""
    frame = channel_frame(superops, model)
    if method == "partition":
        raise ValidationError("partitioning is only available for unitary circuits")
    return compute_gamma(frame, None, method, settings)


def noisy_superops(superops, model, theta):
    """Noisy layers ``A_j exp(M_j(theta))``."""
    A = _stack(superops)
    model = model.resolve(len(A))
    M = model.hamiltonians(theta)
    return np.asarray([a @ gen_exp(m) for a, m in zip(A, M)])


def compose(superops):
    """Product ``A_N ... A_1``."""
    A = _stack(superops)
    out = np.eye(A.shape[-1], dtype=complex)
    for a in A:
        out = a @ out
    return out


# ---------------------------------------------------------------------------
# minimal fidelity by sampling

def state_fidelity(rho, sigma):
    """``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    r = sqrtm(rho)
    inner = r @ sigma @ r
    w = np.linalg.eigvalsh((inner + dagger(inner)) / 2)
    return float(np.sum(np.sqrt(np.clip(w, 0, None))) ** 2)


def _pure_fidelity(psi, sigma):
    # for pure rho the general formula reduces to <psi|sigma|psi>
    return float(np.real(np.conj(psi) @ sigma @ psi))


def _output(S, psi):
    rho = np.outer(psi, np.conj(psi))
    out = unvec(S @ vec(rho), len(psi))
    return (out + dagger(out)) / 2


@dataclass
class FminEstimate:
    value: float
    samples: np.ndarray
    best_state: np.ndarray


def estimate_fmin(ideal, noisy, samples=2000, seed=0, polish=5):
    """Minimal state fidelity between two channels over pure inputs, by sampling.

    Draws ``samples`` Haar-random pure states (Philox stream keyed by
    ``seed``), then refines the ``polish`` worst with Nelder-Mead on the state
    amplitudes. The result upper-bounds the true minimal fidelity.
    """
    Si = ideal.matrix if isinstance(ideal, Superoperator) else np.asarray(ideal)
    Sn = noisy.matrix if isinstance(noisy, Superoperator) else np.asarray(noisy)
    if Si.shape != Sn.shape:
        raise ValidationError("channels act on different dimensions")
    d = int(round(np.sqrt(Si.shape[0])))
    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal((samples, d)) + 1j * rng.standard_normal((samples, d))
    states = z / np.linalg.norm(z, axis=1, keepdims=True)

    def fid(psi):
        a = _output(Si, psi)
        b = _output(Sn, psi)
        for out in (a, b):
            wmin = np.linalg.eigvalsh(out).min()
            if wmin < -TOL.negative_eigenvalue:
                raise ValidationError(f"channel output is not a density matrix (eigenvalue {wmin:.3g})")
        w, V = np.linalg.eigh(a)
        if w.max() > 1 - 1e-12:
            # ideal output stays pure
            return _pure_fidelity(V[:, -1], b)
        return state_fidelity(a, b)

    values = np.array([fid(psi) for psi in states])
    order = np.argsort(values, kind="stable")
    best_val, best_psi = float(values[order[0]]), states[order[0]]

    def from_real(x):
        psi = x[:d] + 1j * x[d:]
        nrm = np.linalg.norm(psi)
        return psi / nrm if nrm > 1e-12 else states[0]

    for idx in order[:polish]:
        x0 = np.concatenate([states[idx].real, states[idx].imag])
        res = minimize(lambda x: fid(from_real(x)), x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400 * d})
        psi = from_real(res.x)
        val = fid(psi)
        if val < best_val:
            best_val, best_psi = val, psi
    return FminEstimate(best_val, values, best_psi)
