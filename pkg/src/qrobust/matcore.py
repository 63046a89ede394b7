"""Dense complex linear algebra kernels.

Everything here works on plain ``numpy`` arrays. Functions that make sense on
stacks of matrices (``herm_exp``, ``spectral_norm``) accept arrays with leading
batch dimensions.
"""
import warnings

import numpy as np
import scipy.linalg

from .tolerances import TOL

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


class ValidationError(ValueError):
    """Raised when an input violates a structural precondition."""


class BranchCutWarning(RuntimeWarning):
    """A unitary has an eigenvalue at (or very near) -1, so its principal
    logarithm sits on the branch cut and the generator is not unique."""


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def commutator(A, B):
    return A @ B - B @ A


def kron(*ops):
    """Kronecker product of any number of matrices, left to right."""
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def frobenius_norm(A):
    return np.linalg.norm(A, axis=(-2, -1))


def spectral_norm(A):
    """Largest singular value. Works on stacks of matrices."""
    A = np.asarray(A)
    if A.ndim == 2:
        return float(np.linalg.norm(A, 2))
    return np.linalg.svd(A, compute_uv=False)[..., 0]


def hermitian_norm(H):
    """Spectral norm of a Hermitian matrix (or stack) via its eigenvalues."""
    w = np.linalg.eigvalsh(H)
    return np.max(np.abs(w), axis=-1)


def is_hermitian(A, tol=None):
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        return False
    tol = TOL.hermitian if tol is None else tol
    A = A.reshape((-1,) + A.shape[-2:])
    skew = spectral_norm(A - dagger(A))
    scale = np.maximum(1.0, spectral_norm(A))
    return bool(np.all(skew <= tol * scale))


def is_unitary(U, tol=None):
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    tol = TOL.unitary if tol is None else tol
    return bool(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2) <= tol)


def _require_square(M, name="matrix"):
    M = np.asarray(M)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2] or M.shape[-1] == 0:
        raise ValidationError(f"{name} must be square, got shape {M.shape}")
    return M


def herm_exp(H, check=True):
    """Return ``exp(-i H)`` for Hermitian ``H`` via its eigendecomposition.

    The result is unitary to round-off, which a generic Padé exponential does
    not guarantee. ``H`` may carry leading batch dimensions.
    """
    H = _require_square(np.asarray(H, dtype=complex), "H")
    if check and not is_hermitian(H):
        raise ValidationError("herm_exp requires a Hermitian matrix")
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w)[..., None, :]) @ dagger(V)


def gen_exp(M):
    """Matrix exponential ``exp(M)`` of a general square matrix.

    Scaling and squaring with a Padé core (``scipy.linalg.expm``).
    """
    M = _require_square(M, "M")
    return scipy.linalg.expm(M)


def principal_log_unitary(U, check=True):
    """Hermitian ``H`` with eigenvalues in (-pi, pi] such that ``exp(-iH) = U``.

    Uses the complex Schur form, which is diagonal for normal matrices. An
    eigenvalue within ``TOL.branch_cut`` of -1 emits :class:`BranchCutWarning`;
    the generator is still returned, with that eigenphase mapped to +pi.
    """
    U = _require_square(np.asarray(U, dtype=complex), "U")
    if check and not is_unitary(U):
        raise ValidationError("principal_log_unitary requires a unitary matrix")
    T, Z = scipy.linalg.schur(U, output="complex")
    lam = np.diag(T)
    lam = lam / np.abs(lam)
    phases = -np.angle(lam)
    near_cut = np.abs(lam + 1.0) < TOL.branch_cut
    phases = np.where(near_cut | (phases <= -np.pi), np.pi, phases)
    if np.any(near_cut):
        warnings.warn(
            "unitary has an eigenvalue at -1; generator chosen with eigenphase +pi",
            BranchCutWarning,
            stacklevel=2,
        )
    H = (Z * phases) @ Z.conj().T
    return 0.5 * (H + H.conj().T)


def vec(A):
    """Column-stacking vectorisation, so ``vec(A X B) = (B.T kron A) vec(X)``."""
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValidationError(f"vec expects a matrix, got ndim={A.ndim}")
    return A.reshape(-1, order="F")


def unvec(v, rows, cols=None):
    v = np.asarray(v)
    cols = rows if cols is None else cols
    if v.size != rows * cols:
        raise ValidationError(f"cannot reshape vector of size {v.size} to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def global_phase_distance(U, V):
    """``min_chi ||U - e^{i chi} V||`` in the spectral norm.

    The optimal phase sits at the centre of the smallest arc covering the
    eigenphases of ``V^H U``; the farthest eigenvalue is then half the arc
    away, giving ``2 sin(arc / 4)``.
    """
    W = np.conj(V).T @ U
    phases = np.sort(np.angle(np.linalg.eigvals(W)))
    if phases.size == 1:
        return 0.0
    gaps = np.diff(np.concatenate([phases, [phases[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    arc = 2 * np.pi - gaps[k]
    return float(2 * np.sin(arc / 4))
