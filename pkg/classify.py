"""
Supervised classification with a trained POVM circuit: stratified k-fold
cross-validation, the argmax decision rule, accuracy and one-vs-rest ROC/AUC
"""
import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, model_validator
from sklearn.metrics import accuracy_score, auc, roc_curve
from sklearn.model_selection import StratifiedKFold

import encoding
import training
from encoding import FeatureMapConfig, IrisDataset
from errors import InvalidArgumentError, TrainingError, VqsdError
from povm_circuit import PovmCircuitSpec
from training import LabeledStateSet, TrainConfig

logger = logging.getLogger(__name__)

ROC_GRID_POINTS = 101


@dataclass(frozen=True)
class FoldSplit:
    train_indices: np.ndarray
    test_indices: np.ndarray


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


class Metrics(BaseModel):
    accuracy: float
    per_class_auc: List[float]
    mean_auc: float

    @model_validator(mode="after")
    def check_values(self) -> "Metrics":
        if self.per_class_auc and abs(self.mean_auc - float(np.mean(self.per_class_auc))) > 1e-12:
            raise ValueError("mean_auc must be the mean of per_class_auc")
        return self

    @classmethod
    def from_parts(cls, accuracy: float, per_class_auc: Sequence[float]) -> "Metrics":
        aucs = [float(a) for a in per_class_auc]
        return cls(accuracy=float(accuracy), per_class_auc=aucs, mean_auc=float(np.mean(aucs)))


@dataclass
class FoldResult:
    fold: int
    metrics: Metrics
    curves: List[RocCurve]
    test_indices: np.ndarray
    predictions: np.ndarray
    probabilities: np.ndarray
    train_accuracy: float
    initial_train_accuracy: float
    final_cost: float
    restart_seeds: List[int] = field(default_factory=list)


@dataclass
class CrossValidationResult:
    folds: List[FoldResult]
    mean_metrics: Metrics
    mean_curves: List[RocCurve] = field(default_factory=list)


def stratified_kfold(labels: Sequence[int], k: int, seed: int) -> List[FoldSplit]:
    labels = np.asarray(labels, dtype=int)
    if k < 2:
        raise InvalidArgumentError("k must be at least 2")
    counts = np.bincount(labels)
    small = [c for c in range(counts.size) if 0 < counts[c] < k]
    if small:
        raise InvalidArgumentError(f"classes {small} have fewer than {k} members")
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed % 2**32)
    return [
        FoldSplit(np.sort(train), np.sort(test))
        for train, test in splitter.split(np.zeros(labels.size), labels)
    ]


def fold_seed(seed: int, fold: int, restarts: int) -> int:
    """Fold f trains restarts on seeds seed + f*restarts + r, so no two runs in a cross-validation share a seed"""
    return seed + fold * restarts


def predict_label(probabilities: Sequence[float], valid_labels: int) -> int:
    """argmax over the first valid_labels outcomes; ties go to the smallest index"""
    return int(np.argmax(np.asarray(probabilities, dtype=float)[:valid_labels]))


def accuracy(predictions: Sequence[int], truth: Sequence[int]) -> float:
    if len(predictions) != len(truth):
        raise InvalidArgumentError(f"{len(predictions)} predictions for {len(truth)} labels")
    return float(accuracy_score(truth, predictions))


def roc_auc_ovr(scores, truth: Sequence[int], positive_class: int) -> RocCurve:
    """One-vs-rest ROC of the class-m probabilities; equal scores share a threshold"""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim == 2:
        scores = scores[:, positive_class]
    binary = np.asarray(truth) == positive_class
    if binary.all() or not binary.any():
        raise InvalidArgumentError(f"truth needs both class {positive_class} and other classes")
    fpr, tpr, _ = roc_curve(binary, scores, drop_intermediate=False)
    return RocCurve(fpr=fpr, tpr=tpr, auc=float(auc(fpr, tpr)))


def mean_roc(curves: Sequence[RocCurve], grid_points: int = ROC_GRID_POINTS) -> RocCurve:
    """Vertical averaging of TPR on a fixed FPR grid"""
    grid = np.linspace(0.0, 1.0, grid_points)
    stacked = []
    for curve in curves:
        interp = np.interp(grid, curve.fpr, curve.tpr)
        interp[0] = 0.0
        stacked.append(interp)
    tpr = np.mean(stacked, axis=0)
    tpr[-1] = 1.0
    return RocCurve(fpr=grid, tpr=tpr, auc=float(auc(grid, tpr)))


def _predict(states, spec: PovmCircuitSpec, theta, valid_labels: int):
    probs = training.predict_proba(states, spec, theta)
    preds = np.array([predict_label(p, valid_labels) for p in probs], dtype=int)
    return probs, preds


def cross_validate(
    dataset: IrisDataset,
    encoder_config: FeatureMapConfig,
    circuit_spec: PovmCircuitSpec,
    train_config: TrainConfig,
    k: int,
    seed: int,
) -> CrossValidationResult:
    rescaled = encoding.rescale(dataset)
    states = encoding.encode_dataset(rescaled.points, encoder_config)
    labels = rescaled.labels
    n_classes = int(labels.max()) + 1

    folds = []
    for i, split in enumerate(stratified_kfold(labels, k, seed)):
        config = train_config.model_copy(
            update={"circuit_spec": circuit_spec, "seed": fold_seed(seed, i, train_config.restarts)}
        )
        train_states = [states[j] for j in split.train_indices]
        test_states = [states[j] for j in split.test_indices]
        try:
            data = LabeledStateSet(train_states, labels[split.train_indices])
            result = training.train_best_of(data, config)
        except VqsdError as e:
            raise TrainingError(str(e), fold=i) from e

        best = result.best
        probs, preds = _predict(test_states, circuit_spec, best.final_theta, n_classes)
        truth = labels[split.test_indices]
        curves = [roc_auc_ovr(probs, truth, c) for c in range(n_classes)]
        metrics = Metrics.from_parts(accuracy(preds, truth), [c.auc for c in curves])

        _, train_preds = _predict(train_states, circuit_spec, best.final_theta, n_classes)
        _, initial_preds = _predict(train_states, circuit_spec, best.initial_theta, n_classes)
        train_truth = labels[split.train_indices]
        folds.append(
            FoldResult(
                fold=i,
                metrics=metrics,
                curves=curves,
                test_indices=split.test_indices,
                predictions=preds,
                probabilities=probs,
                train_accuracy=accuracy(train_preds, train_truth),
                initial_train_accuracy=accuracy(initial_preds, train_truth),
                final_cost=best.final_cost,
                restart_seeds=[t.seed for t in result.traces],
            )
        )
        logger.info(f"Fold {i}: accuracy {metrics.accuracy:.4f}, mean AUC {metrics.mean_auc:.4f}")

    mean_metrics = Metrics.from_parts(
        np.mean([f.metrics.accuracy for f in folds]),
        np.mean([f.metrics.per_class_auc for f in folds], axis=0),
    )
    mean_curves = [mean_roc([f.curves[c] for f in folds]) for c in range(n_classes)]
    return CrossValidationResult(folds=folds, mean_metrics=mean_metrics, mean_curves=mean_curves)
