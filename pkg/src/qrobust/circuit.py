"""Circuit data model and builders.

A :class:`Circuit` is an ordered list of layers ``U_1, ..., U_N`` on ``n`` qubits.
Each layer is one :class:`Gate`; gates acting in parallel on disjoint qubits are
only fused into one layer through :func:`merge_parallel`, never implicitly,
because the depth ``N`` enters every bound.

Qubit 0 is the leftmost Kronecker factor.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from .matcore import (
    PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, ValidationError,
    herm_exp, is_hermitian, is_unitary, principal_log_unitary, kron,
)
from .tolerances import TOL

_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary acting on ``support`` (ordered qubit indices).

    ``generator`` is a Hermitian ``H`` on the same support with
    ``exp(-iH) == unitary``; ``params`` are the printed gate arguments.
    """

    label: str
    unitary: np.ndarray
    support: tuple
    generator: np.ndarray | None = None
    params: tuple = ()

    def __post_init__(self):
        U = np.asarray(self.unitary, dtype=complex)
        support = tuple(int(q) for q in self.support)
        object.__setattr__(self, "unitary", U)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(set(support)) != len(support):
            raise ValidationError(f"gate {self.label!r}: repeated qubit in support {support}")
        if U.shape != (2 ** len(support),) * 2:
            raise ValidationError(
                f"gate {self.label!r}: unitary shape {U.shape} does not match support {support}")
        if not is_unitary(U):
            raise ValidationError(f"gate {self.label!r} is not unitary")
        if self.generator is not None:
            H = np.asarray(self.generator, dtype=complex)
            if H.shape != U.shape or not is_hermitian(H):
                raise ValidationError(f"gate {self.label!r}: generator must be Hermitian, shape {U.shape}")
            if np.linalg.norm(herm_exp(H) - U, 2) > TOL.generator:
                raise ValidationError(f"gate {self.label!r}: exp(-i generator) != unitary")
            object.__setattr__(self, "generator", H)

    @property
    def arity(self):
        return len(self.support)

    def with_generator(self):
        """Return this gate with a generator, computing a principal log if needed."""
        if self.generator is not None:
            return self
        H = principal_log_unitary(self.unitary)
        return Gate(self.label, self.unitary, self.support, H, self.params)


def embed(op, support, n):
    """Embed an operator on ``support`` into the full ``2^n``-dimensional space.

    Untouched qubits get the identity. ``op`` may be a :class:`Gate` (its
    unitary is embedded) or a plain matrix.
    """
    if isinstance(op, Gate):
        op = op.unitary
    op = np.asarray(op, dtype=complex)
    support = tuple(int(q) for q in support)
    m = len(support)
    if any(q < 0 or q >= n for q in support):
        raise ValidationError(f"support {support} out of range for {n} qubits")
    if op.shape != (2 ** m, 2 ** m):
        raise ValidationError(f"operator shape {op.shape} does not match support {support}")
    if m == 0:
        return np.eye(2 ** n, dtype=complex)
    lo = support[0]
    if support == tuple(range(lo, lo + m)):
        return kron(np.eye(2 ** lo), op, np.eye(2 ** (n - lo - m)))
    rest = [q for q in range(n) if q not in support]
    full = np.kron(op, np.eye(2 ** len(rest))).reshape((2,) * (2 * n))
    order = list(support) + rest
    # axis k of `full` (and k+n) belongs to qubit order[k]; move it back to position order[k]
    perm = np.argsort(order)
    full = full.transpose(list(perm) + [p + n for p in perm])
    return full.reshape(2 ** n, 2 ** n)


@dataclass(frozen=True, eq=False)
class Circuit:
    n: int
    gates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n < 1:
            raise ValidationError("a circuit needs at least one qubit")
        for g in self.gates:
            if any(q < 0 or q >= self.n for q in g.support):
                raise ValidationError(
                    f"gate {g.label!r} acts on {g.support}, outside a {self.n}-qubit register")

    def __len__(self):
        return len(self.gates)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Circuit(self.n, self.gates[item])
        return self.gates[item]

    def __add__(self, other):
        if other.n != self.n:
            raise ValidationError("cannot concatenate circuits of different width")
        return Circuit(self.n, self.gates + other.gates)

    @property
    def dim(self):
        return 2 ** self.n

    @cached_property
    def layers(self):
        """Embedded layer unitaries, shape ``(N, 2^n, 2^n)``."""
        if not self.gates:
            return np.zeros((0, self.dim, self.dim), dtype=complex)
        return np.stack([embed(g.unitary, g.support, self.n) for g in self.gates])

    @cached_property
    def generators(self):
        """Embedded layer generators, computing principal logs where missing."""
        if not self.gates:
            return np.zeros((0, self.dim, self.dim), dtype=complex)
        return np.stack([embed(g.with_generator().generator, g.support, self.n)
                         for g in self.gates])

    @cached_property
    def prefix(self):
        """Prefix products ``V_1 = I``, ``V_k = U_{k-1} ... U_1``; shape ``(N+1, d, d)``.

        The last entry is the total unitary.
        """
        out = np.empty((len(self) + 1, self.dim, self.dim), dtype=complex)
        out[0] = np.eye(self.dim)
        for k, U in enumerate(self.layers):
            out[k + 1] = U @ out[k]
        return out

    def unitary(self):
        return self.prefix[-1]

    def has_generators(self):
        return all(g.generator is not None for g in self.gates)


# --------------------------------------------------------------------------
# standard gates

def _rot1(axis, theta):
    H = 0.5 * theta * axis
    return herm_exp(H), H


def _fixed(label, U, H, support):
    return Gate(label, U, support, H)


def gate_h(q):
    A = (PAULI_X + PAULI_Z) / math.sqrt(2)
    H = 0.5 * math.pi * (PAULI_I - A)
    return _fixed("h", A, H, (q,))


def gate_pauli(label, q):
    P = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}[label]
    return _fixed(label, P, 0.5 * math.pi * (PAULI_I - P), (q,))


def gate_sx(q):
    H = 0.25 * math.pi * (PAULI_I - PAULI_X)
    return _fixed("sx", herm_exp(H), H, (q,))


def gate_rx(theta, q):
    U, H = _rot1(PAULI_X, theta)
    return Gate("rx", U, (q,), H, (theta,))


def gate_ry(theta, q):
    U, H = _rot1(PAULI_Y, theta)
    return Gate("ry", U, (q,), H, (theta,))


def gate_rz(theta, q):
    U, H = _rot1(PAULI_Z, theta)
    return Gate("rz", U, (q,), H, (theta,))


def gate_p(theta, q):
    H = -theta * _P1
    return Gate("p", np.diag([1.0, np.exp(1j * theta)]), (q,), H, (theta,))


def gate_rot(alpha, phi, q=0):
    """Rotation by ``alpha`` about the axis ``cos(phi) X + sin(phi) Y``."""
    axis = math.cos(phi) * PAULI_X + math.sin(phi) * PAULI_Y
    U, H = _rot1(axis, alpha)
    return Gate("rot", U, (q,), H, (alpha, phi))


def gate_cp(theta, q1, q2):
    H = -theta * np.kron(_P1, _P1)
    U = np.diag([1.0, 1.0, 1.0, np.exp(1j * theta)])
    return Gate("cp", U, (q1, q2), H, (theta,))


def gate_cz(q1, q2):
    H = math.pi * np.kron(_P1, _P1)
    return Gate("cz", np.diag([1.0, 1.0, 1.0, -1.0]), (q1, q2), H)


def gate_cx(q1, q2):
    U = np.kron(_P0, PAULI_I) + np.kron(_P1, PAULI_X)
    H = 0.5 * math.pi * np.kron(_P1, PAULI_I - PAULI_X)
    return Gate("cx", U, (q1, q2), H)


def gate_swap(q1, q2):
    U = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    H = 0.5 * math.pi * (np.eye(4) - U)
    return Gate("swap", U, (q1, q2), H)


def gate_rzz(theta, q1, q2):
    H = 0.5 * theta * np.kron(PAULI_Z, PAULI_Z)
    return Gate("rzz", herm_exp(H), (q1, q2), H, (theta,))


def gate_iswap(q1, q2):
    H = -0.25 * math.pi * (np.kron(PAULI_X, PAULI_X) + np.kron(PAULI_Y, PAULI_Y))
    return Gate("iswap", herm_exp(H), (q1, q2), H)


def gate_identity(q=0):
    return Gate("id", PAULI_I, (q,), np.zeros((2, 2), dtype=complex))


# name -> (number of angle parameters, number of qubits, factory)
GATES = {
    "h": (0, 1, gate_h),
    "x": (0, 1, lambda q: gate_pauli("x", q)),
    "y": (0, 1, lambda q: gate_pauli("y", q)),
    "z": (0, 1, lambda q: gate_pauli("z", q)),
    "sx": (0, 1, gate_sx),
    "id": (0, 1, gate_identity),
    "rx": (1, 1, gate_rx),
    "ry": (1, 1, gate_ry),
    "rz": (1, 1, gate_rz),
    "p": (1, 1, gate_p),
    "rot": (2, 1, gate_rot),
    "cp": (1, 2, gate_cp),
    "cz": (0, 2, gate_cz),
    "cx": (0, 2, gate_cx),
    "swap": (0, 2, gate_swap),
    "rzz": (1, 2, gate_rzz),
    "iswap": (0, 2, gate_iswap),
}


def make_gate(name, params, qubits):
    try:
        nparams, nqubits, factory = GATES[name]
    except KeyError:
        raise ValidationError(f"unknown gate {name!r}") from None
    if len(params) != nparams or len(qubits) != nqubits:
        raise ValidationError(
            f"gate {name!r} takes {nparams} angle(s) and {nqubits} qubit(s), "
            f"got {len(params)} and {len(qubits)}")
    return factory(*params, *qubits)


def merge_parallel(gates, label=None):
    """Fuse gates on pairwise disjoint qubits into a single layer.

    The merged generator is the sum of the embedded generators, which commute
    because the supports are disjoint.
    """
    gates = list(gates)
    support = tuple(q for g in gates for q in g.support)
    if len(set(support)) != len(support):
        raise ValidationError("merge_parallel needs gates on disjoint qubits")
    order = tuple(sorted(support))
    local = {q: i for i, q in enumerate(order)}
    m = len(order)
    U = np.eye(2 ** m, dtype=complex)
    H = np.zeros((2 ** m, 2 ** m), dtype=complex)
    for g in gates:
        idx = tuple(local[q] for q in g.support)
        U = embed(g.unitary, idx, m) @ U
        g = g.with_generator()
        H = H + embed(g.generator, idx, m)
    label = label or "+".join(g.label for g in gates)
    return Gate(label, U, order, H)


def identity_circuit(N, n=1):
    """``N`` identity layers on ``n`` qubits (zero generators)."""
    layer = Gate("id", np.eye(2 ** n), tuple(range(n)), np.zeros((2 ** n, 2 ** n)))
    return Circuit(n, [layer] * N)


def build_qft(n):
    """Textbook quantum Fourier transform: Hadamards, controlled phases, final swaps.

    With qubit 0 as the most significant bit the unitary is the DFT matrix
    ``omega^{jk} / sqrt(2^n)``.
    """
    if not 1 <= n <= 10:
        raise ValidationError(f"build_qft supports 1 <= n <= 10, got {n}")
    gates = []
    for q in range(n):
        gates.append(gate_h(q))
        for k in range(q + 1, n):
            gates.append(gate_cp(math.pi / 2 ** (k - q), k, q))
    for q in range(n // 2):
        gates.append(gate_swap(q, n - 1 - q))
    return Circuit(n, gates)


def dft_matrix(n):
    d = 2 ** n
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / math.sqrt(d)


@dataclass(frozen=True)
class PulseSequence:
    """Single-qubit sequence of x-y plane rotations ``alpha_phi``.

    Each pulse is ``exp(-i alpha/2 (cos(phi) X + sin(phi) Y))``; the first
    pulse acts first.
    """

    pulses: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "pulses", tuple((float(a), float(p)) for a, p in self.pulses))

    def __len__(self):
        return len(self.pulses)

    def to_circuit(self):
        return Circuit(1, [gate_rot(a, p, 0) for a, p in self.pulses])

    def unitary(self):
        return self.to_circuit().unitary()

    @property
    def params(self):
        """Flat parameter vector ``(alpha_1..alpha_m, phi_1..phi_m)``."""
        a, p = zip(*self.pulses) if self.pulses else ((), ())
        return np.array(a + p, dtype=float)

    @classmethod
    def from_params(cls, x):
        x = np.asarray(x, dtype=float)
        m = x.size // 2
        return cls(tuple(zip(x[:m], x[m:])))


def rx_target(beta):
    return herm_exp(0.5 * beta * PAULI_X)


def build_jones_pulse(beta):
    """Five-pulse sequence replacing ``R_X(beta)`` that cancels systematic
    amplitude errors to first order:
    ``(beta/2)_0  pi_phi1  2pi_phi2  pi_phi1  (beta/2)_0`` with
    ``phi1 = arccos(-beta / (4 pi))`` and ``phi2 = 3 phi1``.
    """
    if not 0 < beta <= math.pi:
        raise ValidationError(f"beta must lie in (0, pi], got {beta}")
    phi1 = math.acos(-beta / (4 * math.pi))
    phi2 = 3 * phi1
    return PulseSequence((
        (beta / 2, 0.0),
        (math.pi, phi1),
        (2 * math.pi, phi2),
        (math.pi, phi1),
        (beta / 2, 0.0),
    ))


def build_reference_design_pulse():
    """Reference five-pulse ``R_X(pi/4)`` sequence optimised for robustness
    against independent amplitude errors (angles to three decimals)."""
    return PulseSequence((
        (0.876, -1.43),
        (0.834, 0.126),
        (1.544, 1.985),
        (0.975, 0.031),
        (0.808, -1.68),
    ))


def rotation_template(generators, n, labels=None):
    """Parameterised circuit ``eta -> exp(-i eta_N H_N) ... exp(-i eta_1 H_1)``.

    ``generators`` is a list of ``(H, support)`` pairs.
    """
    gens = [(np.asarray(H, dtype=complex), tuple(s)) for H, s in generators]
    labels = labels or ["gen"] * len(gens)

    def build(eta):
        gates = []
        for lab, (H, s), e in zip(labels, gens, np.asarray(eta, dtype=float)):
            Hs = e * H
            gates.append(Gate(lab, herm_exp(Hs), s, Hs, (e,)))
        return Circuit(n, gates)

    return build
