"""
Minimum-error state discrimination: error probability, Helstrom bound,
pretty-good measurement, optimality certificate and a brute-force oracle
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel

import qmath
from errors import InvalidArgumentError

logger = logging.getLogger(__name__)

PRIOR_TOL = 1e-10
ZERO_EIGENVALUE_TOL = 1e-12
ANALYTIC_CERTIFICATE_TOL = 1e-9
TRAINED_CERTIFICATE_TOL = 1e-5


def _check_priors(priors: np.ndarray) -> None:
    if np.any(priors < 0) or abs(priors.sum() - 1.0) > PRIOR_TOL:
        raise InvalidArgumentError(f"priors must be non-negative and sum to 1, got {priors.tolist()}")


@dataclass(frozen=True)
class LabeledEnsemble:
    """States rho_m with a priori probabilities q_m; label m is the list position"""

    states: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=complex)
        priors = np.asarray(self.priors, dtype=float)
        if states.ndim != 3 or states.shape[0] < 2:
            raise InvalidArgumentError("an ensemble needs at least two density matrices of equal size")
        if priors.shape != (states.shape[0],):
            raise InvalidArgumentError(f"{states.shape[0]} states but {priors.size} priors")
        _check_priors(priors)
        for rho in states:
            qmath.as_density_matrix(rho)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", priors)

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def average_state(self) -> np.ndarray:
        return np.tensordot(self.priors, self.states, axes=1)

    @classmethod
    def from_pure_states(cls, states: Sequence[np.ndarray], priors: Optional[Sequence[float]] = None):
        rhos = [qmath.density_from_state(qmath.as_pure_state(psi)) for psi in states]
        if priors is None:
            priors = np.full(len(rhos), 1.0 / len(rhos))
        return cls(np.stack(rhos), np.asarray(priors, dtype=float))

    @classmethod
    def from_labeled_states(cls, states: Sequence[np.ndarray], labels: Sequence[int], target_qubits: Sequence[int]):
        """Class mixtures of the reduced target states with priors |N_m| / |D|"""
        labels = np.asarray(labels, dtype=int)
        n_classes = int(labels.max()) + 1
        reduced = [
            qmath.reduced_state(psi, qmath.qubit_count(len(psi)), target_qubits) for psi in states
        ]
        mixtures, priors = [], []
        for m in range(n_classes):
            members = [reduced[i] for i in np.flatnonzero(labels == m)]
            if not members:
                raise InvalidArgumentError(f"class {m} has no states")
            mixtures.append(np.mean(members, axis=0))
            priors.append(len(members) / len(labels))
        return cls(np.stack(mixtures), np.asarray(priors))


@dataclass(frozen=True)
class HelstromResult:
    bound: float
    e0: np.ndarray
    e1: np.ndarray
    spectrum: np.ndarray

    @property
    def povm(self) -> np.ndarray:
        return np.stack([self.e0, self.e1])


class CertificateReport(BaseModel):
    pairwise_residual_max: float
    dual_min_eigenvalue: float
    passed: bool


def _as_povm(ens: LabeledEnsemble, povm) -> np.ndarray:
    elements = np.asarray(povm, dtype=complex)
    if elements.ndim != 3 or elements.shape[1:] != (ens.dim, ens.dim):
        raise InvalidArgumentError(
            f"POVM of shape {elements.shape} does not act on {ens.dim}-dimensional states"
        )
    if elements.shape[0] < ens.size:
        raise InvalidArgumentError(f"POVM has {elements.shape[0]} elements for {ens.size} states")
    return elements


def success_probability(ens: LabeledEnsemble, povm) -> float:
    elements = _as_povm(ens, povm)[: ens.size]
    overlaps = np.einsum("mij,mji->m", ens.states, elements).real
    return float(np.dot(ens.priors, overlaps))


def error_probability(ens: LabeledEnsemble, povm) -> float:
    """1 - sum_m q_m Tr[rho_m E_m]; elements past the last label are never rewarded"""
    return 1.0 - success_probability(ens, povm)


def helstrom(rho0, rho1, q0: float, q1: float) -> HelstromResult:
    rho0 = qmath.as_density_matrix(rho0)
    rho1 = qmath.as_density_matrix(rho1)
    if rho0.shape != rho1.shape:
        raise InvalidArgumentError("states act on different dimensions")
    _check_priors(np.array([q0, q1], dtype=float))

    gamma = q0 * rho0 - q1 * rho1
    eigenvalues, eigenvectors = qmath.hermitian_eig(gamma)
    # zero eigenvalues go to E0
    positive = eigenvectors[:, eigenvalues >= -ZERO_EIGENVALUE_TOL]
    e0 = positive @ qmath.dagger(positive)
    e1 = np.eye(rho0.shape[0]) - e0
    bound = 0.5 - 0.5 * qmath.trace_norm(gamma)
    return HelstromResult(bound=min(0.5, max(0.0, bound)), e0=e0, e1=e1, spectrum=eigenvalues)


def pretty_good_measurement(ens: LabeledEnsemble, kernel_tol: float = qmath.KERNEL_TOL) -> np.ndarray:
    """q_m rho^(-1/2) rho_m rho^(-1/2), completed with I - P_support when rho is rank deficient"""
    average = ens.average_state
    inv_sqrt = qmath.psd_inv_sqrt(average, kernel_tol)
    elements = [q * inv_sqrt @ rho @ inv_sqrt for q, rho in zip(ens.priors, ens.states)]
    elements = [0.5 * (e + qmath.dagger(e)) for e in elements]
    support = qmath.support_projector(average, kernel_tol)
    rank = int(round(np.trace(support).real))
    if rank < ens.dim:
        logger.warning(f"Average state has rank {rank} < {ens.dim}; appending PGM completion element")
        elements.append(np.eye(ens.dim) - support)
    return np.stack(elements)


def optimality_certificate(ens: LabeledEnsemble, povm, tol: float) -> CertificateReport:
    """Check the minimum-error optimality conditions.

    Pairwise: E_m (q_m rho_m - q_n rho_n) E_n = 0 for all labels m, n.
    Dual: Gamma - q_n rho_n >= 0 for all n, with Gamma the Hermitian part of
    sum_m q_m E_m rho_m.
    """
    elements = _as_povm(ens, povm)[: ens.size]
    weighted = ens.priors[:, None, None] * ens.states

    residual = 0.0
    for m, n in itertools.product(range(ens.size), repeat=2):
        term = elements[m] @ (weighted[m] - weighted[n]) @ elements[n]
        residual = max(residual, float(np.max(np.abs(term))))

    gamma = np.einsum("mij,mjk->ik", elements, weighted)
    gamma = 0.5 * (gamma + qmath.dagger(gamma))
    dual_min = min(float(qmath.hermitian_eig(gamma - weighted[n])[0][0]) for n in range(ens.size))

    return CertificateReport(
        pairwise_residual_max=residual,
        dual_min_eigenvalue=dual_min,
        passed=residual <= tol and dual_min >= -tol,
    )


def brute_force_two_state(rho0, rho1, q0: float, q1: float, grid_size: int) -> float:
    """Minimum error over rank-one projective qubit measurements on a polar x azimuthal grid.

    The trivial measurements {I, 0} and {0, I} are included as well, so the
    result is never worse than guessing the likelier state.
    """
    rho0 = qmath.as_density_matrix(rho0)
    rho1 = qmath.as_density_matrix(rho1)
    if rho0.shape != (2, 2) or rho1.shape != (2, 2):
        raise InvalidArgumentError("brute-force oracle is defined for single-qubit states")
    if grid_size < 2:
        raise InvalidArgumentError("grid_size must be at least 2")
    _check_priors(np.array([q0, q1], dtype=float))

    polar = np.linspace(0.0, np.pi, grid_size)
    azimuth = np.linspace(0.0, 2.0 * np.pi, grid_size, endpoint=False)
    theta, phi = np.meshgrid(polar, azimuth, indexing="ij")
    directions = np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
    ).reshape(-1, 3)

    r0 = qmath.bloch_vector(rho0)
    r1 = qmath.bloch_vector(rho1)
    # Tr[rho P(n)] = (1 + r.n) / 2
    errors = 1.0 - 0.5 * q0 * (1.0 + directions @ r0) - 0.5 * q1 * (1.0 - directions @ r1)
    return float(min(errors.min(), q0, q1))


def povm_distance(a, b, labels: int) -> float:
    """Largest entry distance between the first `labels` elements, minimized over relabelings"""
    a = np.asarray(a, dtype=complex)[:labels]
    b = np.asarray(b, dtype=complex)[:labels]
    best = np.inf
    for perm in itertools.permutations(range(labels)):
        best = min(best, float(np.max(np.abs(a - b[list(perm)]))))
    return best
