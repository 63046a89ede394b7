"""Set-membership coherent error models.

Layer ``j`` of a circuit suffers an error ``exp(-i H_e_j)`` with

    H_e_j = sum_k theta_jk B_jk,    |theta_jk| <= level / l_j,

where the ``B_jk`` are fixed Hermitian matrices with ``||B_jk|| <= 1``. The
bound guarantees ``||H_e_j|| <= level``. Basis matrices supplied by the user
are rescaled by one common factor ``scale`` at construction (so the
admissible set is unchanged) and ``level = delta * scale``; ``delta`` stays in
the user's units, e.g. the over-rotation fraction for control errors.

Errors are *independent* (one theta block per layer) or *systematic* (a single
block shared by all layers).
"""
from dataclasses import dataclass, replace

import numpy as np

from .matcore import PAULIS, ValidationError, dagger, herm_exp, is_hermitian, kron, spectral_norm
from .tolerances import TOL

INDEPENDENT = "independent"
SYSTEMATIC = "systematic"


@dataclass(frozen=True, eq=False)
class CoherentErrorModel:
    """Coherent error model; see the module docstring for the parametrisation.

    ``basis`` holds one ``(l_j, d, d)`` array per layer. A model built with a
    single ``uniform`` basis has ``basis=None`` until :meth:`resolve` fixes
    the number of layers.
    """

    n: int
    delta: float
    basis: tuple | None = None
    uniform: np.ndarray | None = None
    scale: float = 1.0
    bound_norm: str = "inf"
    correlation: str = INDEPENDENT
    kind: str = "custom"
    label: str = ""
    liouville: bool = False

    def __post_init__(self):
        if self.delta < 0:
            raise ValidationError("delta must be nonnegative")
        if self.bound_norm not in ("inf", "two"):
            raise ValidationError(f"bound_norm must be 'inf' or 'two', got {self.bound_norm!r}")
        if self.correlation not in (INDEPENDENT, SYSTEMATIC):
            raise ValidationError(f"unknown correlation mode {self.correlation!r}")
        d = self.dim
        blocks = [self.uniform] if self.basis is None else list(self.basis)
        if self.basis is None and self.uniform is None:
            raise ValidationError("error model needs a basis")
        for B in blocks:
            B = np.asarray(B)
            if B.ndim != 3 or B.shape[1:] != (d, d):
                raise ValidationError(f"basis block of shape {B.shape} does not act on {self.n} qubits")
            if B.shape[0] and spectral_norm(B).max() > 1 + TOL.basis_norm:
                raise ValidationError("basis matrices must satisfy ||B|| <= 1")
        if self.correlation == SYSTEMATIC:
            ells = {np.asarray(B).shape[0] for B in blocks} - {0}
            if len(ells) > 1:
                raise ValidationError("systematic errors need the same number of basis elements per layer")

    # -- structure -----------------------------------------------------------

    @property
    def dim(self):
        """Matrix size: ``2^n``, or ``4^n`` for superoperator generators."""
        return 4 ** self.n if self.liouville else 2 ** self.n

    @property
    def level(self):
        """Bound on ``||H_e_j||`` implied by the admissible set."""
        return self.delta * self.scale

    @property
    def resolved(self):
        return self.basis is not None

    def resolve(self, N):
        """Model with an explicit per-layer basis for an ``N``-layer circuit."""
        if self.basis is not None:
            if len(self.basis) != N:
                raise ValidationError(f"model has {len(self.basis)} layers, circuit has {N}")
            return self
        B = np.asarray(self.uniform, dtype=complex)
        return replace(self, basis=tuple(B for _ in range(N)), uniform=None)

    @property
    def N(self):
        self._need_resolved()
        return len(self.basis)

    @property
    def ells(self):
        self._need_resolved()
        return np.array([np.asarray(B).shape[0] for B in self.basis], dtype=int)

    @property
    def shared_ell(self):
        ells = set(self.ells.tolist()) - {0}
        return ells.pop() if ells else 0

    @property
    def n_params(self):
        if self.correlation == SYSTEMATIC:
            return self.shared_ell
        return int(self.ells.sum())

    def _need_resolved(self):
        if self.basis is None:
            raise ValidationError("call model.resolve(N) (or pass a circuit) first")

    def stacked(self):
        """All basis elements, shape ``(L, d, d)``, and the layer of each."""
        self._need_resolved()
        blocks = [np.asarray(B, dtype=complex) for B in self.basis]
        L = sum(b.shape[0] for b in blocks)
        if L == 0:
            return np.zeros((0, self.dim, self.dim), dtype=complex), np.zeros(0, dtype=int)
        layer = np.concatenate([np.full(b.shape[0], j) for j, b in enumerate(blocks)])
        return np.concatenate(blocks), layer

    def expansion(self):
        """0/1 matrix ``E`` (L x p) mapping parameters to basis coefficients."""
        ells = self.ells
        L = int(ells.sum())
        if self.correlation == INDEPENDENT:
            return np.eye(L)
        E = np.zeros((L, self.shared_ell))
        row = 0
        for ell in ells:
            E[row:row + ell, :ell] = np.eye(ell)
            row += ell
        return E

    def coordinate_bounds(self, unit=False):
        """Per-parameter box half-widths: ``level / l_j`` (or ``1 / l_j`` with ``unit``)."""
        top = 1.0 if unit else self.level
        if self.correlation == SYSTEMATIC:
            ell = self.shared_ell
            return np.full(ell, top / ell) if ell else np.zeros(0)
        ells = self.ells
        return np.concatenate([np.full(ell, top / ell) for ell in ells if ell]) if ells.sum() else np.zeros(0)

    # -- assembly ------------------------------------------------------------

    def coefficients(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta @ self.expansion().T

    def hamiltonians(self, theta):
        """Error Hamiltonians ``H_e_j(theta)``; shape ``(..., N, d, d)``."""
        B, layer = self.stacked()
        coeff = self.coefficients(theta)
        onehot = np.eye(self.N)[layer]                      # (L, N)
        return np.einsum("...l,ln,lab->...nab", coeff, onehot, B)

    def physical(self, theta):
        """Parameters in the user's units (undo the basis normalisation)."""
        return np.asarray(theta) / self.scale

    def admissible(self, theta, slack=1e-12):
        theta = np.asarray(theta, dtype=float)
        if self.bound_norm == "inf":
            return bool(np.all(np.abs(theta) <= self.coordinate_bounds() + slack))
        blocks = self._blocks(theta)
        return all(np.linalg.norm(b) <= self.level + slack for b in blocks)

    def _blocks(self, theta):
        if self.correlation == SYSTEMATIC:
            return [theta]
        out, start = [], 0
        for ell in self.ells:
            out.append(theta[start:start + ell])
            start += ell
        return out

    def with_delta(self, delta):
        return replace(self, delta=float(delta))

    def slice(self, start, stop):
        self._need_resolved()
        return replace(self, basis=tuple(self.basis[start:stop]))

    def describe(self):
        return {
            "kind": self.kind, "label": self.label, "delta": self.delta,
            "scale": self.scale, "level": self.level, "bound_norm": self.bound_norm,
            "correlation": self.correlation,
        }


def _normalise(blocks):
    norms = [spectral_norm(np.asarray(B)).max() for B in blocks if np.asarray(B).shape[0]]
    s = max(norms) if norms else 1.0
    if s <= 0:
        s = 1.0
    return [np.asarray(B, dtype=complex) / s for B in blocks], float(s)


def model_custom(n, basis, delta, *, per_layer=False, bound_norm="inf",
                 correlation=INDEPENDENT, label="custom"):
    """Model from user-supplied Hermitian basis matrices (full ``2^n`` dimension).

    ``basis`` is a list of matrices applied to every layer, or with
    ``per_layer=True`` a list (one entry per layer) of such lists.
    """
    def as_block(mats):
        mats = [np.asarray(M, dtype=complex) for M in mats]
        for M in mats:
            if not is_hermitian(M):
                raise ValidationError("coherent error basis matrices must be Hermitian")
        d = 2 ** n
        return np.stack(mats) if mats else np.zeros((0, d, d), dtype=complex)

    if per_layer:
        blocks, s = _normalise([as_block(m) for m in basis])
        return CoherentErrorModel(n, float(delta), basis=tuple(blocks), scale=s,
                                  bound_norm=bound_norm, correlation=correlation,
                                  kind="custom", label=label)
    (block,), s = _normalise([as_block(basis)])
    return CoherentErrorModel(n, float(delta), uniform=block, scale=s,
                              bound_norm=bound_norm, correlation=correlation,
                              kind="custom", label=label)


def pauli_string(n, qubit_ops):
    """Kronecker product with ``qubit_ops[q]`` on qubit ``q`` and identity elsewhere."""
    return kron(*[PAULIS[qubit_ops.get(q, "I")] for q in range(n)])


def model_pauli(n, P, delta, *, correlation=INDEPENDENT, bound_norm="inf"):
    """Single-qubit Pauli-``P`` rotation errors on every qubit of every layer.

    ``l = n`` basis elements per layer (``P`` on one qubit, identity
    elsewhere), each coefficient bounded by ``delta / n``.
    """
    P = P.upper()
    if P not in ("X", "Y", "Z"):
        raise ValidationError(f"Pauli error type must be X, Y or Z, got {P!r}")
    if n < 1:
        raise ValidationError("n must be positive")
    block = np.stack([pauli_string(n, {q: P}) for q in range(n)])
    return CoherentErrorModel(n, float(delta), uniform=block, scale=1.0,
                              bound_norm=bound_norm, correlation=correlation,
                              kind="pauli", label=f"pauli-{P.lower()}")


def model_cce(circuit, delta, *, correlation=INDEPENDENT, zero_tol=1e-12):
    """Coherent control errors: layer ``j`` runs ``exp(-i (1 + t_j) H_j)``.

    ``delta`` bounds the over-rotation fractions ``|t_j|``. The basis is
    ``H_j / s`` with ``s = max_j ||H_j||``, so normalised coefficients are
    ``t_j * s`` and the model level is ``delta * s``. Layers with a zero
    generator carry no error.
    """
    gens = circuit.generators
    norms = np.array([spectral_norm(H) for H in gens]) if len(gens) else np.zeros(0)
    s = float(norms.max()) if norms.size and norms.max() > zero_tol else 1.0
    d = circuit.dim
    blocks = tuple(
        (H / s)[None] if nrm > zero_tol else np.zeros((0, d, d), dtype=complex)
        for H, nrm in zip(gens, norms)
    )
    return CoherentErrorModel(circuit.n, float(delta), basis=blocks, scale=s,
                              correlation=correlation, kind="cce", label="cce")


def noisy_unitary(circuit, model, theta):
    """Noisy circuit ``prod_j U_j exp(-i H_e_j(theta_j))`` for (a batch of) ``theta``."""
    model = model.resolve(len(circuit))
    theta = np.asarray(theta, dtype=float)
    Hs = model.hamiltonians(theta)                       # (..., N, d, d)
    batch = theta.shape[:-1]
    U = np.broadcast_to(np.eye(circuit.dim, dtype=complex), batch + (circuit.dim,) * 2).copy()
    for j, Uj in enumerate(circuit.layers):
        Ue = herm_exp(Hs[..., j, :, :], check=False)
        U = Uj @ Ue @ U
    return U


@dataclass(frozen=True, eq=False)
class InteractionFrame:
    """Error basis moved into the interaction picture of the ideal circuit.

    ``C[i] = V_j^{-1} B_i V_j`` for basis element ``i`` on layer ``j``; ``E``
    maps the free parameters to basis coefficients and ``bounds`` are the
    unit-scale box half-widths (``1 / l_j``). ``hermitian`` is False for
    superoperator frames.
    """

    C: np.ndarray
    layer: np.ndarray
    N: int
    E: np.ndarray
    bounds: np.ndarray
    hermitian: bool = True

    @property
    def n_params(self):
        return self.E.shape[1]

    @property
    def dim(self):
        return self.C.shape[-1]

    @property
    def columns(self):
        """``D_k`` with ``G(theta) = (1/N) sum_k theta_k D_k``; shape ``(p, d, d)``."""
        return np.tensordot(self.E.T, self.C, axes=1)

    def G(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.tensordot(theta, self.columns, axes=1) / self.N

    def G_layers(self, theta):
        coeff = np.asarray(theta, dtype=float) @ self.E.T
        onehot = np.eye(self.N)[self.layer]
        return np.einsum("...l,ln,lab->...nab", coeff, onehot, self.C)

    def norm(self, A, anti=False):
        """Spectral norm of (a stack of) matrices built from this frame.

        Hermitian frames use eigenvalues: ``G`` is Hermitian and commutators
        of Hermitian matrices are anti-Hermitian (``anti=True``).
        """
        A = np.asarray(A)
        if not self.hermitian:
            return np.linalg.svd(A, compute_uv=False)[..., 0]
        if anti:
            A = 1j * A
        return np.max(np.abs(np.linalg.eigvalsh(A)), axis=-1)


def interaction_frame(circuit, model):
    """Conjugate the model's basis into the frame of the circuit prefixes."""
    model = model.resolve(len(circuit))
    if model.bound_norm != "inf":
        raise ValidationError("interaction frames need an infinity-norm model")
    B, layer = model.stacked()
    V = circuit.prefix[layer]                             # (L, d, d)
    C = dagger(V) @ B @ V
    return InteractionFrame(C=C, layer=layer, N=len(circuit), E=model.expansion(),
                            bounds=model.coordinate_bounds(unit=True), hermitian=True)


def interaction_hamiltonians(circuit, model, theta):
    """``G_j = V_j^H H_e_j(theta) V_j`` for every layer; shape ``(N, d, d)``."""
    model = model.resolve(len(circuit))
    Hs = model.hamiltonians(theta)
    V = circuit.prefix[:-1]
    return dagger(V) @ Hs @ V


def averaged_G(circuit, model, theta):
    """Averaged interaction Hamiltonian ``G = (1/N) sum_j G_j``."""
    return interaction_hamiltonians(circuit, model, theta).mean(axis=-3)
