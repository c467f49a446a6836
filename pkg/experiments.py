"""
Orchestration of the three command-line experiments: discrimination training,
baseline evaluation and Iris cross-validation
"""
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

import classify
import discrimination
import encoding
import qmath
import settings
import training
from discrimination import LabeledEnsemble
from encoding import FeatureMapConfig
from errors import ConfigError, DatasetParseError, InvalidArgumentError
from povm_circuit import PovmCircuitSpec, povm_elements
from schemas import (
    Baselines,
    ClassificationDoc,
    ComplexMatrix,
    MODE_TRAIN_DEFAULTS,
    ExperimentConfig,
    FoldDoc,
    RestartSummary,
    ResultDocument,
    RocCurveDoc,
    RunMetadata,
    StateSpec,
)
from training import LabeledStateSet, TrainConfig

logger = logging.getLogger(__name__)

PRESETS: Dict[str, List[StateSpec]] = {
    "fig4a": [
        StateSpec(kind="rho_zeta", axis="z", angle=math.pi / 5),
        StateSpec(kind="rho_zeta", axis="x", angle=math.pi / 6),
    ],
    "fig4b": [
        StateSpec(kind="ket", label="0"),
        StateSpec(kind="ket", label="1"),
        StateSpec(kind="ket", label="+"),
    ],
    "fig4c": [
        StateSpec(kind="rho_zeta", axis="z", angle=math.pi / 5),
        StateSpec(kind="rho_zeta", axis="x", angle=math.pi / 6),
        StateSpec(kind="rho_zeta", axis="y", angle=math.pi / 8),
    ],
    "fig4d": [
        StateSpec(kind="ket", label="00"),
        StateSpec(kind="ket", label="++"),
        StateSpec(kind="bell", label="phi+"),
        StateSpec(kind="bell", label="psi+"),
    ],
}

KETS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
}

BELL = {
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}

IRIS_ANCILLAS = 2
IRIS_TARGETS = {1: (1,), 2: (0, 1)}


@dataclass(frozen=True)
class PreparedState:
    """A state as the register it is prepared on plus its reduced state on the system qubits"""

    vector: Optional[np.ndarray]
    density: np.ndarray
    targets: Tuple[int, ...]


@dataclass(frozen=True)
class DiscriminationTask:
    ensemble: LabeledEnsemble
    data: LabeledStateSet
    spec: PovmCircuitSpec


def resolve_seed(config_seed: int, flag_seed: Optional[int] = None) -> int:
    """--seed beats VQSD_SEED, which beats the seed in the config file"""
    if flag_seed is not None:
        return flag_seed
    env_seed = settings.seed_override()
    return config_seed if env_seed is None else env_seed


def load_config(path: str, mode: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    if raw.setdefault("mode", mode) != mode:
        raise ConfigError(f"config {path} is for mode {raw['mode']!r}, not {mode!r}")
    return build_config(raw, overrides)


def build_config(raw: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Validate a raw config dict after applying flag overrides (dotted keys reach into sections)"""
    raw = json.loads(json.dumps(raw))
    train = raw.get("train", {})
    if isinstance(train, dict):
        raw["train"] = {**MODE_TRAIN_DEFAULTS.get(raw.get("mode"), {}), **train}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, name = key.rpartition(".")
        target = raw.setdefault(section, {}) if section else raw
        target[name] = value
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {e}")


def _product_ket(label: str) -> np.ndarray:
    return qmath.kron_all(KETS[ch].reshape(-1, 1) for ch in label).reshape(-1)


def prepare_state(spec: StateSpec) -> PreparedState:
    if spec.kind == "ket":
        psi = _product_ket(spec.label)
        return PreparedState(psi, qmath.density_from_state(psi), tuple(range(len(spec.label))))
    if spec.kind == "bell":
        psi = BELL[spec.label]
        return PreparedState(psi, qmath.density_from_state(psi), (0, 1))
    if spec.kind == "rho_zeta":
        psi = encoding.prepare_rho_zeta(encoding.MixedStateSpec(axis=spec.axis, angle=spec.angle))
        return PreparedState(psi, qmath.reduced_state(psi, 2, [1]), (1,))
    imag = np.zeros_like(spec.real) if spec.imag is None else np.asarray(spec.imag)
    rho = qmath.as_density_matrix(np.asarray(spec.real) + 1j * imag)
    return PreparedState(None, rho, tuple(range(qmath.qubit_count(rho.shape[0]))))


def build_task(config: ExperimentConfig) -> DiscriminationTask:
    """Ensemble, training data and circuit shape for a discriminate/baselines config"""
    specs = PRESETS[config.preset] if config.preset else config.states
    try:
        prepared = [prepare_state(s) for s in specs]
        if len({p.density.shape for p in prepared}) != 1:
            raise InvalidArgumentError("all states must act on the same number of qubits")
        priors = config.priors or [1.0 / len(prepared)] * len(prepared)
        ens = LabeledEnsemble(np.stack([p.density for p in prepared]), np.asarray(priors))
    except (ValueError, ValidationError) as e:
        raise ConfigError(f"invalid ensemble: {e}")

    vectors = [p.vector for p in prepared]
    same_register = (
        all(v is not None for v in vectors)
        and len({v.size for v in vectors}) == 1
        and len({p.targets for p in prepared}) == 1
    )
    if same_register:
        data = LabeledStateSet(vectors, np.arange(ens.size), weights=ens.priors)
        targets = prepared[0].targets
    else:
        logger.info("States live on different registers; training on purifications")
        data, targets = training.labeled_data_from_ensemble(ens)

    circuit = config.circuit
    n_target = qmath.qubit_count(ens.dim)
    if circuit.n_target is not None and circuit.n_target != n_target:
        raise ConfigError(f"circuit.n_target is {circuit.n_target} but the states have {n_target} system qubits")
    target_qubits = tuple(circuit.target_qubits or targets)
    try:
        if circuit.n_ancilla is None:
            spec = PovmCircuitSpec.for_outcomes(n_target, ens.size, target_qubits)
        else:
            spec = PovmCircuitSpec(
                n_target=n_target, n_ancilla=circuit.n_ancilla, n_outcomes=ens.size, target_qubits=target_qubits
            )
    except ValidationError as e:
        raise ConfigError(f"invalid circuit: {e}")
    return DiscriminationTask(ens, data, spec)


def compute_baselines(ens: LabeledEnsemble, grid_size: int) -> Baselines:
    baselines = Baselines(
        pgm_error=discrimination.error_probability(ens, discrimination.pretty_good_measurement(ens))
    )
    if ens.size == 2:
        (rho0, rho1), (q0, q1) = ens.states, ens.priors
        baselines.helstrom = discrimination.helstrom(rho0, rho1, q0, q1).bound
        if ens.dim == 2:
            baselines.brute_force = discrimination.brute_force_two_state(rho0, rho1, q0, q1, grid_size)
    return baselines


def _metadata(config: ExperimentConfig) -> RunMetadata:
    return RunMetadata(
        seed=config.seed,
        mode=config.mode,
        artifact_version=settings.ARTIFACT_VERSION,
        timestamp=datetime.now(timezone.utc).isoformat(),
        config=config.model_dump(mode="json", exclude={"output"}),
    )


def train_config_for(config: ExperimentConfig, spec: PovmCircuitSpec) -> TrainConfig:
    try:
        return TrainConfig(circuit_spec=spec, seed=config.seed, **config.train.model_dump())
    except ValidationError as e:
        raise ConfigError(f"invalid training settings: {e}")


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.info(f"Wrote {path}")


def write_csv(path: str, frame: pd.DataFrame) -> None:
    write_atomic(path, frame.to_csv(index=False, lineterminator="\n"))


def write_result(out_dir: str, doc: ResultDocument) -> str:
    path = os.path.join(out_dir, "result.json")
    write_atomic(path, json.dumps(doc.model_dump(mode="json"), indent=2) + "\n")
    return path


def run_discriminate(config: ExperimentConfig, out_dir: str) -> ResultDocument:
    task = build_task(config)
    train_config = train_config_for(config, task.spec)
    logger.info(
        f"Discriminating {task.ensemble.size} states with n_T={task.spec.n_target}, "
        f"n_A={task.spec.n_ancilla}, seed {config.seed}"
    )
    result = training.train_best_of(task.data, train_config)
    best = result.best
    povm = povm_elements(task.spec, best.final_theta)
    certificate = discrimination.optimality_certificate(
        task.ensemble, povm, discrimination.TRAINED_CERTIFICATE_TOL
    )
    baselines = compute_baselines(task.ensemble, config.grid_size)
    logger.info(f"Final cost {best.final_cost:.10f}; PGM error {baselines.pgm_error:.10f}")

    doc = ResultDocument(
        run_metadata=_metadata(config),
        final_cost=best.final_cost,
        baselines=baselines,
        certificate=certificate,
        povm=[ComplexMatrix.from_array(e) for e in povm],
        cost_history=list(best.cost_history),
        restarts=[
            RestartSummary(
                restart=r,
                seed=trace.seed,
                final_cost=trace.final_cost,
                iterations=trace.iterations,
                converged=trace.converged,
            )
            for r, trace in enumerate(result.traces)
        ],
    )
    write_result(out_dir, doc)
    write_csv(
        os.path.join(out_dir, "cost_history.csv"),
        pd.DataFrame({"iteration": np.arange(1, best.iterations + 1), "cost": best.cost_history}),
    )
    write_csv(
        os.path.join(out_dir, "cost_history_restarts.csv"),
        pd.DataFrame(
            [
                {"restart": r, "iteration": i, "cost": c}
                for r, trace in enumerate(result.traces)
                for i, c in enumerate(trace.cost_history, start=1)
            ],
            columns=["restart", "iteration", "cost"],
        ),
    )
    return doc


def run_baselines(config: ExperimentConfig, out_dir: str) -> ResultDocument:
    task = build_task(config)
    baselines = compute_baselines(task.ensemble, config.grid_size)
    logger.info(f"Baselines: {baselines.model_dump()}")
    doc = ResultDocument(run_metadata=_metadata(config), baselines=baselines)
    write_result(out_dir, doc)
    return doc


def _roc_doc(positive_class: int, curve: classify.RocCurve) -> RocCurveDoc:
    return RocCurveDoc(
        positive_class=positive_class, auc=curve.auc, fpr=curve.fpr.tolist(), tpr=curve.tpr.tolist()
    )


def run_classify_iris(config: ExperimentConfig, out_dir: str) -> ResultDocument:
    iris = config.iris
    path = iris.data or settings.DATA_PATH
    dataset = encoding.load_iris(path)
    try:
        encoding.rescale(dataset)
    except InvalidArgumentError as e:
        raise DatasetParseError(f"cannot rescale {path}: {e}")
    n_classes = len(encoding.SPECIES)
    try:
        spec = PovmCircuitSpec(
            n_target=iris.n_target,
            n_ancilla=IRIS_ANCILLAS,
            n_outcomes=n_classes,
            target_qubits=tuple(iris.target_qubits or IRIS_TARGETS[iris.n_target]),
        )
    except ValidationError as e:
        raise ConfigError(f"invalid circuit: {e}")
    feature_map = FeatureMapConfig(encoding_function=iris.encoding, layers=iris.layers, rotation=iris.rotation)
    logger.info(
        f"Classifying {len(dataset)} Iris points: n_T={iris.n_target}, encoding {iris.encoding.value}, "
        f"{iris.folds} folds, seed {config.seed}"
    )
    cv = classify.cross_validate(
        dataset, feature_map, spec, train_config_for(config, spec), iris.folds, config.seed
    )

    doc = ResultDocument(
        run_metadata=_metadata(config),
        classification=ClassificationDoc(
            n_target=iris.n_target,
            encoding=iris.encoding.value,
            folds=[
                FoldDoc(
                    fold=f.fold,
                    metrics=f.metrics,
                    train_accuracy=f.train_accuracy,
                    initial_train_accuracy=f.initial_train_accuracy,
                    final_cost=f.final_cost,
                    test_indices=f.test_indices.tolist(),
                    roc=[_roc_doc(c, curve) for c, curve in enumerate(f.curves)],
                )
                for f in cv.folds
            ],
            mean=cv.mean_metrics,
            mean_roc=[_roc_doc(c, curve) for c, curve in enumerate(cv.mean_curves)],
        ),
    )
    logger.info(f"Mean accuracy {cv.mean_metrics.accuracy:.4f}, mean AUC {cv.mean_metrics.mean_auc:.4f}")

    write_result(out_dir, doc)
    for c, curve in enumerate(cv.mean_curves):
        write_csv(os.path.join(out_dir, f"roc_class{c}.csv"), pd.DataFrame({"fpr": curve.fpr, "tpr": curve.tpr}))
    for f in cv.folds:
        frame = pd.DataFrame(
            {
                "index": f.test_indices,
                "truth": dataset.labels[f.test_indices],
                "predicted": f.predictions,
            }
        )
        for c in range(n_classes):
            frame[f"p{c}"] = f.probabilities[:, c]
        write_csv(os.path.join(out_dir, f"predictions_fold{f.fold}.csv"), frame)
    return doc


RUNNERS = {
    "discriminate": run_discriminate,
    "baselines": run_baselines,
    "classify-iris": run_classify_iris,
}


def run(config: ExperimentConfig, out_dir: Optional[str] = None) -> ResultDocument:
    out_dir = out_dir or config.output or settings.OUTPUT_DIR
    return RUNNERS[config.mode](config, out_dir)
