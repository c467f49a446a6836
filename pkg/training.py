"""
Training loop for the POVM circuit: cost over labeled quantum data,
central finite-difference gradients and ADAM updates
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

import encoding
import povm_circuit
import qmath
from discrimination import LabeledEnsemble
from errors import InvalidArgumentError, TrainingError
from povm_circuit import PovmCircuit, PovmCircuitSpec

logger = logging.getLogger(__name__)

LOG_EVERY = 25
LOG_FLOOR = 1e-12


class Objective(str, Enum):
    ERROR = "error"
    LOG_LOSS = "log_loss"


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    circuit_spec: PovmCircuitSpec
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    max_iterations: int = 300
    convergence_tol: float = 1e-7
    fd_step: float = 1e-5
    seed: int = 0
    init_scale: float = 0.1
    restarts: int = 5
    patience: int = 5
    lr_decay: float = 0.0
    objective: Objective = Objective.ERROR

    @model_validator(mode="after")
    def check_values(self) -> "TrainConfig":
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("ADAM betas must lie in [0, 1)")
        if self.convergence_tol <= 0 or self.fd_step <= 0:
            raise ValueError("convergence_tol and fd_step must be positive")
        if self.max_iterations < 1 or self.restarts < 1 or self.patience < 1:
            raise ValueError("max_iterations, restarts and patience must be at least 1")
        if self.lr_decay < 0:
            raise ValueError("lr_decay must be non-negative")
        return self


@dataclass(frozen=True)
class LabeledStateSet:
    """Pure input states with integer labels.

    Each sample carries a weight, 1/|D| unless given, so class priors are the
    label frequencies by default.
    """

    states: List[np.ndarray]
    labels: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        states = [qmath.as_pure_state(psi) for psi in self.states]
        labels = np.asarray(self.labels, dtype=int)
        if not states or len(states) != labels.size:
            raise InvalidArgumentError(f"{len(states)} states but {labels.size} labels")
        if len({psi.size for psi in states}) != 1:
            raise InvalidArgumentError("all input states must have the same number of qubits")
        if labels.min() < 0:
            raise InvalidArgumentError("labels must be non-negative")
        if self.weights is None:
            weights = np.full(labels.size, 1.0 / labels.size)
        else:
            weights = np.asarray(self.weights, dtype=float)
            if weights.shape != labels.shape or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-10:
                raise InvalidArgumentError("sample weights must be non-negative, one per state and sum to 1")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", weights)

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def priors(self) -> np.ndarray:
        return np.bincount(self.labels, weights=self.weights)


@dataclass
class TrainTrace:
    cost_history: List[float]
    iterations: int
    converged: bool
    final_theta: np.ndarray
    initial_theta: np.ndarray
    initial_cost: float
    seed: int

    @property
    def final_cost(self) -> float:
        return self.cost_history[-1] if self.cost_history else self.initial_cost


@dataclass
class TrainResult:
    best: TrainTrace
    traces: List[TrainTrace] = field(default_factory=list)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


class CostFunction:
    """1 - sum_n w_n p(y_n | n), with w_n = 1/|D| by default, evaluated from per-class sums of reduced target states"""

    def __init__(self, data: LabeledStateSet, spec: PovmCircuitSpec):
        if data.n_classes > spec.n_outcomes:
            raise InvalidArgumentError(
                f"labels run up to {data.n_classes - 1} but the circuit has {spec.n_outcomes} outcomes"
            )
        self.spec = spec
        reduced = povm_circuit.reduced_target_states(data.states, spec)
        weights = np.zeros((data.n_classes, spec.target_dim, spec.target_dim), dtype=complex)
        np.add.at(weights, data.labels, data.weights[:, None, None] * reduced)
        self.weights = weights

    def __call__(self, theta) -> float:
        elements = povm_circuit.povm_elements(self.spec, theta)[: self.weights.shape[0]]
        success = np.einsum("mij,mji->", elements, self.weights).real
        return float(np.clip(1.0 - success, 0.0, 1.0))


class LogLossCost:
    """-sum_n w_n log p(y_n | n), with p floored at LOG_FLOOR"""

    def __init__(self, data: LabeledStateSet, spec: PovmCircuitSpec):
        if data.n_classes > spec.n_outcomes:
            raise InvalidArgumentError(
                f"labels run up to {data.n_classes - 1} but the circuit has {spec.n_outcomes} outcomes"
            )
        self.spec = spec
        self.reduced = povm_circuit.reduced_target_states(data.states, spec)
        self.labels = data.labels
        self.weights = data.weights

    def __call__(self, theta) -> float:
        elements = povm_circuit.povm_elements(self.spec, theta)[self.labels]
        hits = np.einsum("nij,nji->n", elements, self.reduced).real
        return float(-np.dot(self.weights, np.log(np.maximum(hits, LOG_FLOOR))))


def objective_for(data: LabeledStateSet, config: TrainConfig) -> Callable[[np.ndarray], float]:
    if config.objective == Objective.LOG_LOSS:
        return LogLossCost(data, config.circuit_spec)
    return CostFunction(data, config.circuit_spec)


def cost(theta, data: LabeledStateSet, spec: PovmCircuitSpec) -> float:
    return CostFunction(data, spec)(theta)


def cost_by_simulation(theta, data: LabeledStateSet, spec: PovmCircuitSpec) -> float:
    """Same cost computed state by state through the full circuit simulation"""
    if data.n_classes > spec.n_outcomes:
        raise InvalidArgumentError(f"labels exceed the {spec.n_outcomes} circuit outcomes")
    hits = [
        povm_circuit.outcome_probabilities(psi, spec, theta)[label]
        for psi, label in zip(data.states, data.labels)
    ]
    return float(np.clip(1.0 - np.dot(data.weights, hits), 0.0, 1.0))


def central_difference(objective: Callable[[np.ndarray], float], theta, step: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for k in range(theta.size):
        shift = np.zeros_like(theta)
        shift[k] = step
        grad[k] = (objective(theta + shift) - objective(theta - shift)) / (2.0 * step)
    return grad


def grad_fd(theta, data: LabeledStateSet, spec: PovmCircuitSpec, fd_step: float = 1e-5) -> np.ndarray:
    if fd_step <= 0:
        raise InvalidArgumentError("fd_step must be positive")
    return central_difference(CostFunction(data, spec), theta, fd_step)


def adam_step(theta, grad, state: AdamState, config: TrainConfig):
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape or state.m.shape != theta.shape:
        raise InvalidArgumentError("parameter, gradient and moment shapes differ")
    t = state.t + 1
    m = config.adam_beta1 * state.m + (1.0 - config.adam_beta1) * grad
    v = config.adam_beta2 * state.v + (1.0 - config.adam_beta2) * grad**2
    m_hat = m / (1.0 - config.adam_beta1**t)
    v_hat = v / (1.0 - config.adam_beta2**t)
    rate = config.learning_rate / (1.0 + config.lr_decay * t)
    theta = theta - rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)
    return theta, AdamState(m, v, t)


def train(data: LabeledStateSet, config: TrainConfig) -> TrainTrace:
    spec = config.circuit_spec
    objective = objective_for(data, config)
    rng = np.random.default_rng(config.seed % 2**64)
    theta = initial_theta = PovmCircuit(spec).random_params(rng, config.init_scale)
    state = AdamState.zeros(theta.size)

    previous = initial = objective(theta)
    history: List[float] = []
    calm = 0
    converged = False
    for iteration in range(1, config.max_iterations + 1):
        grad = central_difference(objective, theta, config.fd_step)
        theta, state = adam_step(theta, grad, state, config)
        current = objective(theta)
        if not np.isfinite(current):
            raise TrainingError(f"cost became non-finite at iteration {iteration}")
        history.append(current)
        if iteration % LOG_EVERY == 0:
            logger.debug(f"seed {config.seed} iteration {iteration}: cost {current:.10f}")
        calm = calm + 1 if abs(current - previous) < config.convergence_tol else 0
        previous = current
        if calm >= config.patience:
            converged = True
            break

    if not converged:
        logger.warning(f"Training with seed {config.seed} stopped at {config.max_iterations} iterations without converging")
    return TrainTrace(
        cost_history=history,
        iterations=len(history),
        converged=converged,
        final_theta=theta,
        initial_theta=initial_theta,
        initial_cost=initial,
        seed=config.seed,
    )


def train_best_of(data: LabeledStateSet, config: TrainConfig) -> TrainResult:
    """Independent restarts with seeds seed + r; the lowest final cost wins (first one on ties)"""
    traces = []
    for r in range(config.restarts):
        trace = train(data, config.model_copy(update={"seed": config.seed + r}))
        logger.info(f"Restart {r} (seed {trace.seed}): final cost {trace.final_cost:.10f} after {trace.iterations} iterations")
        traces.append(trace)
    best = min(traces, key=lambda tr: tr.final_cost)
    return TrainResult(best=best, traces=traces)


def predict_proba(states: Sequence[np.ndarray], spec: PovmCircuitSpec, theta) -> np.ndarray:
    """p(m | state) for every state and all 2^n_A outcomes"""
    elements = povm_circuit.povm_elements(spec, theta)
    reduced = povm_circuit.reduced_target_states(states, spec)
    return np.clip(povm_circuit.probabilities_from_reduced(elements, reduced), 0.0, 1.0)


def labeled_data_from_ensemble(ens: LabeledEnsemble) -> Tuple[LabeledStateSet, Tuple[int, ...]]:
    """One purified state per class weighted by its prior, and the qubits holding the system.

    A pure rho_m purifies to |i>|psi_m>, so the target register always sits on
    the last log2(dim) qubits.
    """
    n_system = qmath.qubit_count(ens.dim)
    states = [encoding.purify(rho) for rho in ens.states]
    targets = tuple(range(n_system, 2 * n_system))
    data = LabeledStateSet(states, np.arange(ens.size), weights=ens.priors)
    return data, targets
