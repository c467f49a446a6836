"""
Dense complex linear algebra for few-qubit simulation.

Matrices are plain complex128 numpy arrays. Qubit 0 is the most significant
tensor factor, so |01> is index 1 and partial traces keep subsystems in
increasing index order.
"""
from functools import reduce
from typing import Iterable, Sequence, Tuple

import numpy as np

from errors import InvalidArgumentError

HERMITIAN_TOL = 1e-8
STATE_TOL = 1e-10
KERNEL_TOL = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise InvalidArgumentError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError("matrix has non-finite entries")
    return m


def qubit_count(dim: int) -> int:
    """Number of qubits for a power-of-two dimension"""
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise InvalidArgumentError(f"dimension {dim} is not a power of two")
    return n


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def kron(a, b) -> np.ndarray:
    return np.kron(_as_matrix(a), _as_matrix(b))


def kron_all(ops: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, ops, np.eye(1, dtype=complex))


def pauli(label: str) -> np.ndarray:
    """Matrix of a Pauli string such as "XZ" (first character acts on qubit 0)"""
    try:
        return kron_all(PAULI[ch] for ch in label.upper())
    except KeyError:
        raise InvalidArgumentError(f"unknown Pauli label {label!r}")


def hermiticity_error(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def hermitian_eig(h) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in ascending order and unitary eigenvector columns of a Hermitian matrix.

    The input is symmetrized before handing it to LAPACK, which makes the
    result deterministic for inputs that are Hermitian only up to rounding.
    """
    m = _as_matrix(h)
    if m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {m.shape}")
    err = hermiticity_error(m)
    if err > HERMITIAN_TOL:
        raise InvalidArgumentError(f"matrix is not Hermitian (max |H - H^dagger| = {err:.3e})")
    m = 0.5 * (m + dagger(m))
    eigenvalues, eigenvectors = np.linalg.eigh(m)
    return eigenvalues, eigenvectors


def trace_norm(a) -> float:
    eigenvalues, _ = hermitian_eig(a)
    return float(np.sum(np.abs(eigenvalues)))


def expm_hermitian(h, scale: float = 1.0) -> np.ndarray:
    """exp(i * scale * H) for Hermitian H"""
    eigenvalues, eigenvectors = hermitian_eig(h)
    return (eigenvectors * np.exp(1j * scale * eigenvalues)) @ dagger(eigenvectors)


def psd_inv_sqrt(a, kernel_tol: float = KERNEL_TOL) -> np.ndarray:
    """Pseudo-inverse square root; eigenvalues at or below kernel_tol map to zero"""
    eigenvalues, eigenvectors = hermitian_eig(a)
    if eigenvalues[0] < -kernel_tol:
        raise InvalidArgumentError(f"matrix is not positive semidefinite (eigenvalue {eigenvalues[0]:.3e})")
    support = eigenvalues > kernel_tol
    inv_sqrt = np.zeros_like(eigenvalues)
    inv_sqrt[support] = 1.0 / np.sqrt(eigenvalues[support])
    return (eigenvectors * inv_sqrt) @ dagger(eigenvectors)


def support_projector(a, kernel_tol: float = KERNEL_TOL) -> np.ndarray:
    eigenvalues, eigenvectors = hermitian_eig(a)
    kept = eigenvectors[:, eigenvalues > kernel_tol]
    return kept @ dagger(kept)


def partial_trace(rho, qubit_dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix on the subsystems listed in keep"""
    m = _as_matrix(rho)
    dims = [int(d) for d in qubit_dims]
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"subsystem dims {dims} do not match matrix shape {m.shape}")
    kept = sorted(set(keep))
    if not kept or kept[0] < 0 or kept[-1] >= len(dims):
        raise InvalidArgumentError(f"invalid subsystem selection {kept} for {len(dims)} subsystems")
    n = len(dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise InvalidArgumentError("too many subsystems")
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for i in range(n):
        if i not in kept:
            cols[i] = rows[i]
    out = "".join(rows[i] for i in kept) + "".join(cols[i] for i in kept)
    reduced = np.einsum(f"{''.join(rows)}{''.join(cols)}->{out}", m.reshape(dims + dims))
    d = int(np.prod([dims[i] for i in kept]))
    return reduced.reshape(d, d)


def reduced_state(psi, n_qubits: int, keep: Sequence[int]) -> np.ndarray:
    """Partial trace of |psi><psi| without forming the full density matrix.

    Unlike partial_trace, the kept qubits come out in the order given by keep.
    """
    keep = list(keep)
    rest = [q for q in range(n_qubits) if q not in keep]
    tensor = np.asarray(psi, dtype=complex).reshape((2,) * n_qubits)
    tensor = np.transpose(tensor, keep + rest).reshape(2 ** len(keep), -1)
    return tensor @ dagger(tensor)


def density_from_state(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(v, np.conj(v))


def as_pure_state(psi, tol: float = STATE_TOL) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1:
        raise InvalidArgumentError(f"state vector must be one-dimensional, got shape {v.shape}")
    qubit_count(v.shape[0])
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError("state vector has non-finite amplitudes")
    norm = float(np.vdot(v, v).real)
    if abs(norm - 1.0) > tol:
        raise InvalidArgumentError(f"state vector is not normalized (squared norm {norm:.12f})")
    return v


def as_density_matrix(rho, tol: float = STATE_TOL) -> np.ndarray:
    m = _as_matrix(rho)
    if m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"density matrix must be square, got shape {m.shape}")
    qubit_count(m.shape[0])
    err = hermiticity_error(m)
    if err > tol:
        raise InvalidArgumentError(f"density matrix is not Hermitian (error {err:.3e})")
    trace = np.trace(m).real
    if abs(trace - 1.0) > tol:
        raise InvalidArgumentError(f"density matrix trace is {trace:.12f}, expected 1")
    min_eig = hermitian_eig(m)[0][0]
    if min_eig < -tol:
        raise InvalidArgumentError(f"density matrix has negative eigenvalue {min_eig:.3e}")
    return m


def bloch_vector(rho) -> np.ndarray:
    m = _as_matrix(rho)
    if m.shape != (2, 2):
        raise InvalidArgumentError("Bloch vector is defined for single-qubit states only")
    return np.array([np.trace(m @ PAULI[p]).real for p in "XYZ"])
