import warnings

import numpy as np
import pytest

from qrobust.matcore import (PAULI_X, PAULI_Y, PAULI_Z, BranchCutWarning, ValidationError, commutator,
                             frobenius_norm, gen_exp, global_phase_distance, herm_exp,
                             principal_log_unitary, spectral_norm, unvec, vec)

from conftest import expm_taylor, random_hermitian, random_unitary


def test_herm_exp_zero_and_pauli():
    assert np.allclose(herm_exp(np.zeros((2, 2))), np.eye(2), atol=1e-15)
    assert np.allclose(herm_exp(np.pi / 2 * PAULI_X), -1j * PAULI_X, atol=1e-14)


def test_herm_exp_matches_taylor_oracle(rng):
    for _ in range(5):
        H = random_hermitian(rng, 4)
        assert np.linalg.norm(herm_exp(H) - expm_taylor(-1j * H)) <= 1e-12


def test_herm_exp_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        herm_exp(np.array([[0, 1], [0, 0]]))


def test_herm_exp_inverse(rng):
    for d in (2, 4, 8, 16):
        H = random_hermitian(rng, d)
        assert np.linalg.norm(herm_exp(H) @ herm_exp(-H) - np.eye(d)) <= 1e-10


def test_herm_exp_batched(rng):
    Hs = np.stack([random_hermitian(rng, 2) for _ in range(3)])
    U = herm_exp(Hs)
    for H, u in zip(Hs, U):
        assert np.allclose(u, herm_exp(H), atol=1e-14)


def test_gen_exp_cases():
    assert np.allclose(gen_exp(np.zeros((3, 3))), np.eye(3))
    assert np.allclose(gen_exp(np.diag([np.log(2), np.log(3)])), np.diag([2, 3]), rtol=1e-12)
    K = np.pi / 4 * PAULI_Z
    I = np.eye(2)
    M = -1j * (np.kron(I, K) - np.kron(K.conj(), I))
    U = herm_exp(K)
    assert np.linalg.norm(gen_exp(M) - np.kron(U.conj(), U)) <= 1e-12
    with pytest.raises(ValidationError):
        gen_exp(np.zeros((2, 3)))


def test_gen_exp_matches_taylor(rng):
    M = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    E = gen_exp(M)
    assert np.linalg.norm(E - expm_taylor(M)) <= 1e-10 * np.linalg.norm(E)


def test_principal_log_cases(rng):
    assert np.allclose(principal_log_unitary(np.eye(2)), 0, atol=1e-15)
    assert np.allclose(principal_log_unitary(-1j * PAULI_X), np.pi / 2 * PAULI_X, atol=1e-12)
    for d in (2, 4, 8):
        U = random_unitary(rng, d)
        H = principal_log_unitary(U)
        assert np.linalg.norm(herm_exp(H) - U) <= 1e-10
        w = np.linalg.eigvalsh(H)
        assert np.all(w > -np.pi) and np.all(w <= np.pi + 1e-12)


def test_principal_log_branch_cut_warns():
    with pytest.warns(BranchCutWarning):
        H = principal_log_unitary(PAULI_Z)          # eigenvalue -1
    assert np.linalg.norm(herm_exp(H) - PAULI_Z) <= 1e-10


def _power_norm(A, iters=2000):
    v = np.ones(A.shape[1], dtype=complex)
    B = A.conj().T @ A
    for _ in range(iters):
        v = B @ v
        v /= np.linalg.norm(v)
    return np.sqrt(np.real(v.conj() @ B @ v))


def test_spectral_norm(rng):
    assert spectral_norm(np.eye(5)) == pytest.approx(1)
    assert spectral_norm(np.diag([1, 2, 3])) == pytest.approx(3)
    A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    assert abs(spectral_norm(A) - _power_norm(A)) <= 1e-9 * spectral_norm(A)


def test_norm_properties(rng):
    for _ in range(10):
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        assert spectral_norm(np.kron(A, B)) == pytest.approx(spectral_norm(A) * spectral_norm(B), rel=1e-9)
        C = rng.normal(size=(3, 3))
        assert spectral_norm(commutator(A, C)) <= 2 * spectral_norm(A) * spectral_norm(C) + 1e-12
        f, s = frobenius_norm(A), spectral_norm(A)
        assert f >= s - 1e-12 and s >= f / np.sqrt(3) - 1e-12


def test_vec_conventions(rng):
    assert np.array_equal(vec(np.eye(2)), [1, 0, 0, 1])
    A = rng.normal(size=(3, 3))
    assert np.array_equal(unvec(vec(A), 3), A)
    rho = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    lhs = vec(PAULI_X @ rho @ PAULI_Z)
    rhs = np.kron(PAULI_Z.T, PAULI_X) @ vec(rho)
    assert np.linalg.norm(lhs - rhs) <= 1e-14
    with pytest.raises(ValidationError):
        unvec(np.ones(5), 2)


def test_global_phase_distance(rng):
    U = random_unitary(rng, 4)
    assert global_phase_distance(U, np.exp(0.7j) * U) <= 1e-12
    # brute-force over the phase
    V = random_unitary(rng, 4)
    chis = np.linspace(0, 2 * np.pi, 20001)
    brute = min(np.linalg.norm(U - np.exp(1j * c) * V, 2) for c in chis)
    assert global_phase_distance(U, V) <= brute + 1e-9
    assert global_phase_distance(U, V) >= brute - 1e-3
    assert global_phase_distance(PAULI_X, PAULI_Y) == pytest.approx(np.sqrt(2))
