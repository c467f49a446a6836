"""
Input-state preparation: entangled mixed-state sources, the Iris feature map,
attribute rescaling and dataset ingestion
"""
import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

import qmath
from errors import DatasetParseError, InvalidArgumentError

logger = logging.getLogger(__name__)

RESCALE_BOUND = np.pi / 5
COS_FLOOR = 1e-9

IRIS_COLUMNS = ["sepal_length", "sepal_width", "petal_length", "petal_width", "species"]
SPECIES = {"setosa": 0, "versicolor": 1, "virginica": 2}

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE = np.diag([1, 1j])
# U_zeta maps |0>, |1> to the +/- eigenstates of sigma_zeta; for y the circuit applies H then S
BASIS_CHANGE = {"z": np.eye(2, dtype=complex), "x": HADAMARD, "y": PHASE @ HADAMARD}

# P_1..P_4 and the literal products P_g P_(g+1) with P_5 = P_1
FEATURE_PAULIS = ["XI", "IX", "ZI", "IZ"]
COUPLING_PAULIS = ["XX", "ZX", "ZZ", "XZ"]


class Axis(str, Enum):
    X = "x"
    Y = "y"
    Z = "z"


class EncodingFunction(str, Enum):
    INVCOSCOS = "invcoscos"
    GAUSSIAN = "gaussian"


class RotationConvention(str, Enum):
    """How a coefficient phi becomes a Pauli rotation: exp(i phi P), or the gate R_P(phi) = exp(-i phi P / 2)"""

    EXPONENT = "exponent"
    GATE = "gate"


ROTATION_SCALE = {RotationConvention.EXPONENT: 1.0, RotationConvention.GATE: -0.5}


class MixedStateSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    axis: Axis
    angle: float

    @model_validator(mode="after")
    def check_values(self) -> "MixedStateSpec":
        if not np.isfinite(self.angle):
            raise ValueError("angle must be finite")
        return self


class FeatureMapConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    encoding_function: EncodingFunction = EncodingFunction.INVCOSCOS
    layers: int = 2
    rotation: RotationConvention = RotationConvention.GATE

    @model_validator(mode="after")
    def check_values(self) -> "FeatureMapConfig":
        if self.layers < 1:
            raise ValueError("layers must be at least 1")
        return self


@dataclass(frozen=True)
class FeatureCoefficients:
    """phi_j in `single`; phi_(i,j) in the symmetric matrix `pair`"""

    single: np.ndarray
    pair: np.ndarray


@dataclass(frozen=True)
class IrisDataset:
    points: np.ndarray
    labels: np.ndarray

    @property
    def minimum(self) -> np.ndarray:
        return self.points.min(axis=0)

    @property
    def maximum(self) -> np.ndarray:
        return self.points.max(axis=0)

    def __len__(self) -> int:
        return self.labels.size


def prepare_rho_zeta(spec: MixedStateSpec) -> np.ndarray:
    """(U_zeta (x) U_zeta)(cos phi |00> + sin phi |11>); qubit 1 then holds rho_zeta(phi)"""
    entangled = np.zeros(4, dtype=complex)
    entangled[0] = np.cos(spec.angle)
    entangled[3] = np.sin(spec.angle)
    u = BASIS_CHANGE[spec.axis.value]
    return np.kron(u, u) @ entangled


def rho_zeta(axis: str, angle: float) -> np.ndarray:
    psi = prepare_rho_zeta(MixedStateSpec(axis=axis, angle=angle))
    return qmath.reduced_state(psi, 2, [1])


def purify(rho) -> np.ndarray:
    """Purification sum_i sqrt(lambda_i)|i>_R |v_i>_S; the system occupies the last qubits"""
    rho = qmath.as_density_matrix(rho)
    eigenvalues, eigenvectors = qmath.hermitian_eig(rho)
    weights = np.sqrt(np.clip(eigenvalues, 0.0, None))
    amplitudes = (eigenvectors * weights).T
    psi = amplitudes.reshape(-1)
    return psi / np.linalg.norm(psi)


def rescale_points(points: np.ndarray, minimum: np.ndarray, maximum: np.ndarray) -> np.ndarray:
    span = maximum - minimum
    if np.any(span <= 0):
        raise InvalidArgumentError(f"attributes {np.flatnonzero(span <= 0).tolist()} are constant")
    return RESCALE_BOUND * (2.0 * points - (minimum + maximum)) / span


def rescale(raw: IrisDataset) -> IrisDataset:
    """Map every attribute affinely onto [-pi/5, pi/5] using min/max over the whole dataset"""
    return IrisDataset(rescale_points(raw.points, raw.minimum, raw.maximum), raw.labels)


def encode_invcoscos(x: Sequence[float]) -> FeatureCoefficients:
    x = np.asarray(x, dtype=float)
    cosines = np.outer(np.cos(x), np.cos(x))
    if np.any(np.abs(cosines) < COS_FLOOR):
        raise InvalidArgumentError("cos(x_i)cos(x_j) vanishes; rescale the attributes first")
    return FeatureCoefficients(single=x.copy(), pair=np.pi / (3.0 * cosines))


def encode_gaussian(x: Sequence[float]) -> FeatureCoefficients:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("attributes must be finite")
    diff = x[:, None] - x[None, :]
    return FeatureCoefficients(single=x.copy(), pair=np.exp(diff**2 * np.log(np.pi) / 8.0))


ENCODERS = {
    EncodingFunction.INVCOSCOS: encode_invcoscos,
    EncodingFunction.GAUSSIAN: encode_gaussian,
}


def _pauli_rotation(label: str, phi: float) -> np.ndarray:
    # P^2 = I, so exp(i phi P) = cos(phi) I + i sin(phi) P
    return np.cos(phi) * np.eye(4) + 1j * np.sin(phi) * qmath.pauli(label)


def feature_map(coeffs: FeatureCoefficients, layers: int) -> np.ndarray:
    """(V_Phi)^layers exp(i phi_1 P_1) |00>, gamma = 1 applied first inside each layer"""
    if layers < 1:
        raise InvalidArgumentError("layers must be at least 1")
    state = np.zeros(4, dtype=complex)
    state[0] = 1.0
    state = _pauli_rotation(FEATURE_PAULIS[0], coeffs.single[0]) @ state

    layer = np.eye(4, dtype=complex)
    for g in range(4):
        nxt = (g + 1) % 4
        layer = _pauli_rotation(FEATURE_PAULIS[g], coeffs.single[g]) @ layer
        layer = _pauli_rotation(COUPLING_PAULIS[g], coeffs.pair[g, nxt]) @ layer
    for _ in range(layers):
        state = layer @ state
    return state / np.linalg.norm(state)


def encode_point(x: Sequence[float], config: FeatureMapConfig) -> np.ndarray:
    coeffs = ENCODERS[config.encoding_function](x)
    scale = ROTATION_SCALE[config.rotation]
    return feature_map(FeatureCoefficients(scale * coeffs.single, scale * coeffs.pair), config.layers)


def encode_dataset(points: np.ndarray, config: FeatureMapConfig) -> List[np.ndarray]:
    return [encode_point(x, config) for x in np.asarray(points, dtype=float)]


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_iris(path: str) -> IrisDataset:
    """Parse sepal_length,sepal_width,petal_length,petal_width,species rows (header optional)"""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        frame = pd.read_csv(
            path, header=None, dtype=str, na_filter=False, skip_blank_lines=False, encoding="utf-8"
        )
    except pd.errors.EmptyDataError:
        raise DatasetParseError(f"{path} is empty")
    except pd.errors.ParserError as e:
        raise DatasetParseError(f"wrong column count: {e}")
    except UnicodeDecodeError as e:
        raise DatasetParseError(f"{path} is not UTF-8 text: {e}")

    if frame.shape[1] != len(IRIS_COLUMNS):
        raise DatasetParseError(f"expected {len(IRIS_COLUMNS)} columns, found {frame.shape[1]}", line=1)

    first = frame.iat[0, 0]
    start = 0 if not pd.isna(first) and _is_number(str(first).strip()) else 1
    points, labels = [], []
    for row in range(start, frame.shape[0]):
        line = row + 1
        fields = ["" if pd.isna(v) else str(v).strip() for v in frame.iloc[row]]
        if not any(fields):
            continue
        if any(not f for f in fields):
            raise DatasetParseError("missing field", line=line)
        try:
            values = [float(v) for v in fields[:4]]
        except ValueError:
            raise DatasetParseError(f"non-numeric attribute in {fields[:4]}", line=line)
        species = fields[4].lower().removeprefix("iris-")
        if species not in SPECIES:
            raise DatasetParseError(f"unknown species {fields[4]!r}", line=line)
        points.append(values)
        labels.append(SPECIES[species])

    if not points:
        raise DatasetParseError(f"{path} has no data rows")
    logger.info(f"Loaded {len(points)} Iris rows from {path}")
    return IrisDataset(np.asarray(points, dtype=float), np.asarray(labels, dtype=int))
