"""
Parameterized POVM circuit built on the cosine-sine decomposition template.

Layer a (1-based) of the circuit acts on the target qubits and ancilla a,
uniformly controlled by ancillas 1..a-1. For each control pattern it applies
a general target unitary U_j followed by an R_y rotation on ancilla a whose
angle depends on the target basis state. Block j = j(a) enumerates the
variants, which gives Kraus operators

    K_m = D_{j(n_A)} U_{j(n_A)} ... D_{j(1)} U_{j(1)}

with D = diag(cos(theta/2)) for a 0 outcome bit and diag(sin(theta/2)) for
a 1, using R_y(theta)|0> = cos(theta/2)|0> + sin(theta/2)|1>.
"""
import itertools
import logging
import math
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

import qmath
from errors import InvalidArgumentError

logger = logging.getLogger(__name__)

POVM_TOL = 1e-10


class PovmCircuitSpec(BaseModel):
    """Shape of the POVM circuit: target qubits, ancillas and outcome count"""

    model_config = ConfigDict(frozen=True)

    n_target: int
    n_ancilla: int
    n_outcomes: int
    target_qubits: Tuple[int, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def default_targets(cls, data):
        if isinstance(data, dict) and not data.get("target_qubits"):
            data = {**data, "target_qubits": tuple(range(int(data.get("n_target") or 0)))}
        return data

    @model_validator(mode="after")
    def check_values(self) -> "PovmCircuitSpec":
        if self.n_target < 1:
            raise ValueError("n_target must be at least 1")
        if self.n_ancilla < 1:
            raise ValueError("n_ancilla must be at least 1")
        if self.n_outcomes < 2:
            raise ValueError("a POVM needs at least 2 outcomes")
        if not 2 ** (self.n_ancilla - 1) < self.n_outcomes <= 2**self.n_ancilla:
            raise ValueError(
                f"{self.n_outcomes} outcomes need ceil(log2 l) ancillas, not {self.n_ancilla}"
            )
        if len(self.target_qubits) != self.n_target:
            raise ValueError("target_qubits must list exactly n_target qubits")
        if len(set(self.target_qubits)) != self.n_target or min(self.target_qubits) < 0:
            raise ValueError("target_qubits must be distinct non-negative indices")
        return self

    @classmethod
    def for_outcomes(
        cls, n_target: int, n_outcomes: int, target_qubits: Optional[Sequence[int]] = None
    ) -> "PovmCircuitSpec":
        n_ancilla = max(1, math.ceil(math.log2(n_outcomes)))
        return cls(
            n_target=n_target,
            n_ancilla=n_ancilla,
            n_outcomes=n_outcomes,
            target_qubits=tuple(target_qubits or ()),
        )

    @property
    def n_blocks(self) -> int:
        return 2**self.n_ancilla - 1

    @property
    def target_dim(self) -> int:
        return 2**self.n_target


def block_param_count(n_target: int) -> int:
    return 4**n_target - 1 + 2**n_target


def param_count(n_target: int, n_ancilla: int) -> int:
    return (2**n_ancilla - 1) * block_param_count(n_target)


def kraus_index(a: int, prefix_bits: Sequence[int]) -> int:
    """Block index j(a) = 2^(a-1) + sum_i z_i 2^(a-1-i) for outcome bits z_1..z_(a-1)"""
    if a < 1:
        raise InvalidArgumentError(f"layer index must be at least 1, got {a}")
    if len(prefix_bits) != a - 1:
        raise InvalidArgumentError(f"layer {a} needs {a - 1} prefix bits, got {len(prefix_bits)}")
    j = 2 ** (a - 1)
    for i, z in enumerate(prefix_bits, start=1):
        j += int(z) * 2 ** (a - 1 - i)
    return j


@lru_cache(maxsize=8)
def pauli_generators(n_qubits: int) -> np.ndarray:
    """The 4^n - 1 non-identity Pauli strings, lexicographic in I < X < Y < Z"""
    labels = ["".join(p) for p in itertools.product("IXYZ", repeat=n_qubits)][1:]
    generators = np.stack([qmath.pauli(label) for label in labels])
    generators.setflags(write=False)
    return generators


def build_block_unitary(generator_coeffs: Sequence[float]) -> np.ndarray:
    coeffs = np.asarray(generator_coeffs, dtype=float)
    n = 1
    while 4**n - 1 < coeffs.size:
        n += 1
    if 4**n - 1 != coeffs.size:
        raise InvalidArgumentError(f"{coeffs.size} generator coefficients is not 4^n - 1 for any n")
    hamiltonian = np.tensordot(coeffs, pauli_generators(n), axes=1)
    return qmath.expm_hermitian(hamiltonian)


def validate_params(spec: PovmCircuitSpec, theta: Sequence[float]) -> np.ndarray:
    params = np.asarray(theta, dtype=float)
    expected = param_count(spec.n_target, spec.n_ancilla)
    if params.ndim != 1 or params.size != expected:
        raise InvalidArgumentError(f"parameter vector must have length {expected}, got shape {params.shape}")
    if not np.all(np.isfinite(params)):
        raise InvalidArgumentError("parameter vector has non-finite entries")
    return params


def split_params(spec: PovmCircuitSpec, theta: Sequence[float]) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Per block j = 1..2^n_A - 1: (U_j, R_y angles indexed by target basis state)"""
    params = validate_params(spec, theta)
    n_gen = 4**spec.n_target - 1
    per_block = block_param_count(spec.n_target)
    blocks = []
    for b in range(spec.n_blocks):
        chunk = params[b * per_block : (b + 1) * per_block]
        blocks.append((build_block_unitary(chunk[:n_gen]), chunk[n_gen:]))
    return blocks


def outcome_bits(m: int, n_ancilla: int) -> Tuple[int, ...]:
    """Ancilla bits z_1..z_nA of outcome m, z_1 most significant"""
    return tuple((m >> (n_ancilla - 1 - i)) & 1 for i in range(n_ancilla))


def _check_register(spec: PovmCircuitSpec, n_input: int) -> None:
    if max(spec.target_qubits) >= n_input:
        raise InvalidArgumentError(
            f"target qubits {spec.target_qubits} do not fit a {n_input}-qubit input register"
        )


def apply_povm_circuit(input_state, spec: PovmCircuitSpec, theta: Sequence[float]) -> np.ndarray:
    """Statevector of input (x) |0..0>_A after the circuit; ancillas are the last qubits"""
    psi = qmath.as_pure_state(input_state)
    n_input = qmath.qubit_count(psi.size)
    _check_register(spec, n_input)
    blocks = split_params(spec, theta)

    targets = list(spec.target_qubits)
    others = [q for q in range(n_input) if q not in targets]
    perm = targets + others
    grouped = psi.reshape((2,) * n_input).transpose(perm).reshape(spec.target_dim, -1)

    n_a = spec.n_ancilla
    state = np.zeros(grouped.shape + (2,) * n_a, dtype=complex)
    state[(slice(None), slice(None)) + (0,) * n_a] = grouped

    for a in range(1, n_a + 1):
        for prefix in itertools.product((0, 1), repeat=a - 1):
            unitary, angles = blocks[kraus_index(a, prefix) - 1]
            idx = (slice(None), slice(None)) + prefix
            sub = np.tensordot(unitary, state[idx], axes=([1], [0]))
            shape = (-1,) + (1,) * (sub.ndim - 2)
            c = np.cos(angles / 2).reshape(shape)
            s = np.sin(angles / 2).reshape(shape)
            zero, one = sub[:, :, 0], sub[:, :, 1]
            state[idx] = np.stack([c * zero - s * one, s * zero + c * one], axis=2)

    inverse = list(np.argsort(perm)) + list(range(n_input, n_input + n_a))
    out = state.reshape((2,) * (n_input + n_a)).transpose(inverse)
    return out.reshape(-1)


def outcome_probabilities(input_state, spec: PovmCircuitSpec, theta: Sequence[float]) -> np.ndarray:
    """p(m) for all 2^n_A ancilla outcomes by full statevector simulation"""
    out = apply_povm_circuit(input_state, spec, theta)
    probs = np.abs(out.reshape(-1, 2**spec.n_ancilla)) ** 2
    return probs.sum(axis=0)


def kraus_operators(spec: PovmCircuitSpec, theta: Sequence[float]) -> np.ndarray:
    """Stack of Kraus operators, shape (2^n_A, 2^n_T, 2^n_T); layer 1 acts first"""
    blocks = split_params(spec, theta)
    ops = np.empty((2**spec.n_ancilla, spec.target_dim, spec.target_dim), dtype=complex)
    for m in range(2**spec.n_ancilla):
        bits = outcome_bits(m, spec.n_ancilla)
        k = np.eye(spec.target_dim, dtype=complex)
        for a in range(1, spec.n_ancilla + 1):
            unitary, angles = blocks[kraus_index(a, bits[: a - 1]) - 1]
            diag = np.cos(angles / 2) if bits[a - 1] == 0 else np.sin(angles / 2)
            k = (diag[:, None] * unitary) @ k
        ops[m] = k
    return ops


def povm_elements(spec: PovmCircuitSpec, theta: Sequence[float]) -> np.ndarray:
    kraus = kraus_operators(spec, theta)
    return qmath.dagger(kraus) @ kraus


def check_povm(elements, tol: float = POVM_TOL) -> np.ndarray:
    """Validate a POVM (PSD elements summing to the identity) and return it as a stack"""
    povm = np.asarray(elements, dtype=complex)
    if povm.ndim != 3 or povm.shape[1] != povm.shape[2]:
        raise InvalidArgumentError(f"POVM must be a stack of square matrices, got shape {povm.shape}")
    for m, element in enumerate(povm):
        if qmath.hermiticity_error(element) > tol:
            raise InvalidArgumentError(f"POVM element {m} is not Hermitian")
        if qmath.hermitian_eig(element)[0][0] < -tol:
            raise InvalidArgumentError(f"POVM element {m} is not positive semidefinite")
    completeness = np.max(np.abs(povm.sum(axis=0) - np.eye(povm.shape[1])))
    if completeness > tol:
        raise InvalidArgumentError(f"POVM elements do not sum to identity (error {completeness:.3e})")
    return povm


def reduced_target_states(states: Sequence[np.ndarray], spec: PovmCircuitSpec) -> np.ndarray:
    """rho_T for each input state, target qubits in the order of spec.target_qubits"""
    reduced = []
    for psi in states:
        n_input = qmath.qubit_count(len(psi))
        _check_register(spec, n_input)
        reduced.append(qmath.reduced_state(psi, n_input, spec.target_qubits))
    return np.stack(reduced)


def probabilities_from_reduced(elements: np.ndarray, reduced: np.ndarray) -> np.ndarray:
    """p[n, m] = Tr[E_m rho_n] for a stack of reduced target states"""
    return np.einsum("mij,nji->nm", elements, reduced).real


class PovmCircuit:
    """A circuit spec bundled with its parameter layout"""

    def __init__(self, spec: PovmCircuitSpec):
        self.spec = spec

    @property
    def param_count(self) -> int:
        return param_count(self.spec.n_target, self.spec.n_ancilla)

    def random_params(self, rng: np.random.Generator, scale: float) -> np.ndarray:
        return rng.uniform(-scale, scale, size=self.param_count)

    def split_params(self, theta):
        return split_params(self.spec, theta)

    def apply(self, input_state, theta) -> np.ndarray:
        return apply_povm_circuit(input_state, self.spec, theta)

    def probabilities(self, input_state, theta) -> np.ndarray:
        return outcome_probabilities(input_state, self.spec, theta)

    def kraus_operators(self, theta) -> np.ndarray:
        return kraus_operators(self.spec, theta)

    def povm_elements(self, theta) -> np.ndarray:
        return povm_elements(self.spec, theta)
