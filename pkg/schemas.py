"""
Experiment configuration and result document models
"""
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, model_validator

from classify import Metrics
from discrimination import CertificateReport
from encoding import Axis, EncodingFunction, RotationConvention
from training import Objective

PRIOR_SUM_TOL = 1e-9

KET_SYMBOLS = set("01+-")
BELL_STATES = ("phi+", "phi-", "psi+", "psi-")
PRESET_NAMES = ("fig4a", "fig4b", "fig4c", "fig4d")

# Training settings each mode starts from before the config file and flags apply
MODE_TRAIN_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "discriminate": {"max_iterations": 3000, "convergence_tol": 1e-9, "lr_decay": 0.01},
    "baselines": {},
    "classify-iris": {"objective": "log_loss", "max_iterations": 1000},
}


class StateSpec(BaseModel):
    """One a-priori state: a product ket, a Bell state, rho_zeta(angle) or a density-matrix literal"""

    kind: Literal["ket", "bell", "rho_zeta", "density"]
    label: Optional[str] = None
    axis: Optional[Axis] = None
    angle: Optional[float] = None
    real: Optional[List[List[float]]] = None
    imag: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def check_values(self) -> "StateSpec":
        if self.kind == "ket":
            if not self.label or not set(self.label) <= KET_SYMBOLS:
                raise ValueError(f"ket label must be a non-empty string over 0, 1, +, -, got {self.label!r}")
        elif self.kind == "bell":
            if self.label not in BELL_STATES:
                raise ValueError(f"bell label must be one of {BELL_STATES}, got {self.label!r}")
        elif self.kind == "rho_zeta":
            if self.axis is None or self.angle is None:
                raise ValueError("rho_zeta needs axis and angle")
        elif self.real is None:
            raise ValueError("density needs the real part of the matrix")
        elif self.imag is not None and np.shape(self.imag) != np.shape(self.real):
            raise ValueError("density real and imag parts differ in shape")
        return self


class CircuitConfig(BaseModel):
    """Circuit shape overrides; anything left out is inferred from the states"""

    n_target: Optional[int] = None
    n_ancilla: Optional[int] = None
    target_qubits: Optional[List[int]] = None


class TrainSettings(BaseModel):
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    max_iterations: int = 300
    convergence_tol: float = 1e-7
    fd_step: float = 1e-5
    init_scale: float = 0.1
    restarts: int = 5
    patience: int = 5
    lr_decay: float = 0.0
    objective: Objective = Objective.ERROR


class IrisSettings(BaseModel):
    data: Optional[str] = None
    n_target: Literal[1, 2] = 1
    encoding: EncodingFunction = EncodingFunction.INVCOSCOS
    layers: int = 2
    rotation: RotationConvention = RotationConvention.GATE
    folds: int = 5
    target_qubits: Optional[List[int]] = None

    @model_validator(mode="after")
    def check_values(self) -> "IrisSettings":
        if self.layers < 1:
            raise ValueError("layers must be at least 1")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        return self


class ExperimentConfig(BaseModel):
    mode: Literal["discriminate", "classify-iris", "baselines"]
    preset: Optional[Literal["fig4a", "fig4b", "fig4c", "fig4d"]] = None
    states: List[StateSpec] = []
    priors: Optional[List[float]] = None
    circuit: CircuitConfig = CircuitConfig()
    train: TrainSettings = TrainSettings()
    iris: IrisSettings = IrisSettings()
    output: Optional[str] = None
    seed: int = 0
    grid_size: int = 400

    @model_validator(mode="after")
    def check_values(self) -> "ExperimentConfig":
        if self.mode == "classify-iris":
            return self
        if (self.preset is None) == (not self.states):
            raise ValueError(f"{self.mode} needs exactly one of a preset or a list of states")
        if self.states and len(self.states) < 2:
            raise ValueError("an ensemble needs at least two states")
        if self.priors is not None:
            if self.states and len(self.priors) != len(self.states):
                raise ValueError(f"{len(self.states)} states but {len(self.priors)} priors")
            if any(q < 0 for q in self.priors):
                raise ValueError("priors must be non-negative")
            if abs(sum(self.priors) - 1.0) > PRIOR_SUM_TOL:
                raise ValueError(f"priors must sum to 1, got {sum(self.priors)!r}")
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        return self


class RunMetadata(BaseModel):
    seed: int
    mode: str
    artifact_version: str
    timestamp: str
    config: Dict[str, Any]


class Baselines(BaseModel):
    helstrom: Optional[float] = None
    pgm_error: Optional[float] = None
    brute_force: Optional[float] = None


class ComplexMatrix(BaseModel):
    real: List[List[float]]
    imag: List[List[float]]

    @classmethod
    def from_array(cls, m) -> "ComplexMatrix":
        m = np.asarray(m, dtype=complex)
        return cls(real=m.real.tolist(), imag=m.imag.tolist())

    def to_array(self) -> np.ndarray:
        return np.asarray(self.real) + 1j * np.asarray(self.imag)


class RestartSummary(BaseModel):
    restart: int
    seed: int
    final_cost: float
    iterations: int
    converged: bool


class RocCurveDoc(BaseModel):
    positive_class: int
    auc: float
    fpr: List[float]
    tpr: List[float]


class FoldDoc(BaseModel):
    fold: int
    metrics: Metrics
    train_accuracy: float
    initial_train_accuracy: float
    final_cost: float
    test_indices: List[int]
    roc: List[RocCurveDoc]


class ClassificationDoc(BaseModel):
    n_target: int
    encoding: str
    folds: List[FoldDoc]
    mean: Metrics
    mean_roc: List[RocCurveDoc]


class ResultDocument(BaseModel):
    run_metadata: RunMetadata
    final_cost: Optional[float] = None
    baselines: Optional[Baselines] = None
    certificate: Optional[CertificateReport] = None
    povm: Optional[List[ComplexMatrix]] = None
    cost_history: Optional[List[float]] = None
    restarts: Optional[List[RestartSummary]] = None
    classification: Optional[ClassificationDoc] = None
