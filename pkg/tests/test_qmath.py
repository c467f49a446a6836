import numpy as np
import pytest

import qmath
from conftest import random_density, random_pure_state
from errors import InvalidArgumentError

X = qmath.PAULI["X"]
Y = qmath.PAULI["Y"]
Z = qmath.PAULI["Z"]
I2 = np.eye(2)


def test_kron_identity_and_projector():
    np.testing.assert_allclose(qmath.kron(I2, I2), np.eye(4))
    np.testing.assert_allclose(qmath.kron(np.diag([1, 0]), I2), np.diag([1, 1, 0, 0]))


def test_kron_index_formula():
    k = qmath.kron(X, Z)
    for ia in range(2):
        for ib in range(2):
            for ja in range(2):
                for jb in range(2):
                    assert k[ia * 2 + ib, ja * 2 + jb] == X[ia, ja] * Z[ib, jb]


def test_kron_mixed_product(rng):
    a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
    np.testing.assert_allclose(qmath.kron(a, b) @ qmath.kron(c, d), qmath.kron(a @ c, b @ d), atol=1e-10)


def test_kron_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        qmath.kron(np.array([[np.nan]]), I2)


def test_pauli_string_order():
    np.testing.assert_allclose(qmath.pauli("XZ"), np.kron(X, Z))
    with pytest.raises(InvalidArgumentError):
        qmath.pauli("XQ")


def test_partial_trace_examples():
    ket00 = np.zeros(4)
    ket00[0] = 1
    rho = np.outer(ket00, ket00)
    np.testing.assert_allclose(qmath.partial_trace(rho, [2, 2], {1}), np.diag([1, 0]))

    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(qmath.partial_trace(np.outer(bell, bell), [2, 2], {1}), I2 / 2, atol=1e-12)
    np.testing.assert_allclose(qmath.partial_trace(rho, [2, 2], {0, 1}), rho)


def test_partial_trace_keeps_the_right_factor():
    rho_a = np.diag([0.7, 0.3])
    rho_b = np.array([[0.5, 0.5], [0.5, 0.5]])
    joint = np.kron(rho_a, rho_b)
    np.testing.assert_allclose(qmath.partial_trace(joint, [2, 2], [0]), rho_a, atol=1e-12)
    np.testing.assert_allclose(qmath.partial_trace(joint, [2, 2], [1]), rho_b, atol=1e-12)


def test_partial_trace_is_trace_preserving_and_psd(rng):
    for _ in range(20):
        rho = random_density(rng, 8)
        reduced = qmath.partial_trace(rho, [2, 2, 2], [0, 2])
        assert np.trace(reduced).real == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.eigvalsh(reduced).min() >= -1e-10


def test_partial_trace_errors():
    with pytest.raises(InvalidArgumentError):
        qmath.partial_trace(np.eye(4) / 4, [2, 4], [0])
    with pytest.raises(InvalidArgumentError):
        qmath.partial_trace(np.eye(4) / 4, [2, 2], [])
    with pytest.raises(InvalidArgumentError):
        qmath.partial_trace(np.eye(4) / 4, [2, 2], [2])


def test_reduced_state_matches_partial_trace(rng):
    psi = random_pure_state(rng, 3)
    rho = qmath.density_from_state(psi)
    np.testing.assert_allclose(
        qmath.reduced_state(psi, 3, [0, 2]), qmath.partial_trace(rho, [2, 2, 2], [0, 2]), atol=1e-12
    )


def test_hermitian_eig_examples():
    values, _ = qmath.hermitian_eig(Z)
    np.testing.assert_allclose(values, [-1, 1])
    values, vectors = qmath.hermitian_eig(X)
    np.testing.assert_allclose(values, [-1, 1], atol=1e-12)
    minus = np.array([1, -1]) / np.sqrt(2)
    assert abs(np.vdot(minus, vectors[:, 0])) == pytest.approx(1.0)
    np.testing.assert_allclose(qmath.hermitian_eig(np.eye(4))[0], np.ones(4))


def test_hermitian_eig_reconstruction(rng):
    for _ in range(20):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = a + a.conj().T
        values, vectors = qmath.hermitian_eig(h)
        assert np.all(np.diff(values) >= 0)
        np.testing.assert_allclose(vectors @ np.diag(values) @ vectors.conj().T, h, atol=1e-9)
        np.testing.assert_allclose(vectors.conj().T @ vectors, np.eye(4), atol=1e-9)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(InvalidArgumentError):
        qmath.hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_trace_norm():
    assert qmath.trace_norm(Z) == pytest.approx(2.0)
    assert qmath.trace_norm(np.zeros((2, 2))) == pytest.approx(0.0)
    plus = np.array([1, 1]) / np.sqrt(2)
    lam = (np.diag([1, 0]) - np.outer(plus, plus)) / 2
    assert qmath.trace_norm(lam) == pytest.approx(np.sqrt(2) / 2, abs=1e-12)


def test_trace_norm_bounds_trace(rng):
    for _ in range(10):
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        h = a + a.conj().T
        assert qmath.trace_norm(h) >= abs(np.trace(h).real) - 1e-12


def test_psd_inv_sqrt():
    np.testing.assert_allclose(qmath.psd_inv_sqrt(np.eye(2)), np.eye(2))
    np.testing.assert_allclose(qmath.psd_inv_sqrt(np.diag([4.0, 0.0])), np.diag([0.5, 0.0]))
    with pytest.raises(InvalidArgumentError):
        qmath.psd_inv_sqrt(np.diag([1.0, -0.5]))


def test_psd_inv_sqrt_gives_support_projector(rng):
    rho = random_density(rng, 4, rank=1)
    s = qmath.psd_inv_sqrt(rho)
    projector = s @ rho @ s
    np.testing.assert_allclose(projector, qmath.support_projector(rho), atol=1e-8)
    np.testing.assert_allclose(projector @ projector, projector, atol=1e-8)


def test_expm_hermitian():
    np.testing.assert_allclose(qmath.expm_hermitian(X, np.pi / 2), 1j * X, atol=1e-12)
    np.testing.assert_allclose(qmath.expm_hermitian(np.zeros((2, 2))), I2)


def test_state_validators():
    qmath.as_pure_state(np.array([1, 0]))
    with pytest.raises(InvalidArgumentError):
        qmath.as_pure_state(np.array([1, 1]))
    with pytest.raises(InvalidArgumentError):
        qmath.as_pure_state(np.array([1, 0, 0]))
    with pytest.raises(InvalidArgumentError):
        qmath.as_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidArgumentError):
        qmath.as_density_matrix(np.eye(2))


def test_bloch_vector():
    np.testing.assert_allclose(qmath.bloch_vector(np.diag([1, 0])), [0, 0, 1])
    np.testing.assert_allclose(qmath.bloch_vector((I2 + Y) / 2), [0, 1, 0], atol=1e-12)
