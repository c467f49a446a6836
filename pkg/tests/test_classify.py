import numpy as np
import pytest
from pydantic import ValidationError

import classify
import encoding
import settings
from classify import Metrics, RocCurve
from encoding import EncodingFunction, FeatureMapConfig, IrisDataset
from errors import InvalidArgumentError, TrainingError
from povm_circuit import PovmCircuitSpec
from training import Objective, TrainConfig

IRIS_ONE_QUBIT = PovmCircuitSpec(n_target=1, n_ancilla=2, n_outcomes=3, target_qubits=(1,))
IRIS_TWO_QUBIT = PovmCircuitSpec(n_target=2, n_ancilla=2, n_outcomes=3, target_qubits=(0, 1))


def test_stratified_kfold_on_iris_labels():
    labels = np.repeat([0, 1, 2], 50)
    folds = classify.stratified_kfold(labels, 5, seed=7)
    assert len(folds) == 5
    seen = np.concatenate([f.test_indices for f in folds])
    np.testing.assert_array_equal(np.sort(seen), np.arange(150))
    for f in folds:
        assert f.test_indices.size == 30
        np.testing.assert_array_equal(np.bincount(labels[f.test_indices]), [10, 10, 10])
        assert not set(f.test_indices) & set(f.train_indices)
        assert f.test_indices.size + f.train_indices.size == 150


def test_stratified_kfold_small_case():
    folds = classify.stratified_kfold([0, 0, 1, 1], 2, seed=1)
    for f in folds:
        assert sorted(np.asarray([0, 0, 1, 1])[f.test_indices]) == [0, 1]


def test_stratified_kfold_is_deterministic():
    labels = np.repeat([0, 1, 2], 12)
    first = classify.stratified_kfold(labels, 4, seed=99)
    second = classify.stratified_kfold(labels, 4, seed=99)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.test_indices, b.test_indices)


def test_stratified_kfold_errors():
    with pytest.raises(InvalidArgumentError):
        classify.stratified_kfold([0, 0, 1, 1, 1], 3, seed=0)
    with pytest.raises(InvalidArgumentError):
        classify.stratified_kfold([0, 1], 1, seed=0)


def test_predict_label():
    assert classify.predict_label([0.1, 0.7, 0.2, 0.0], 3) == 1
    assert classify.predict_label([0.4, 0.4, 0.2, 0.0], 3) == 0
    assert classify.predict_label([0.1, 0.2, 0.3, 0.4], 3) == 2


def test_predict_label_is_scale_invariant(rng):
    for _ in range(20):
        p = rng.dirichlet(np.ones(4))
        assert classify.predict_label(p, 3) == classify.predict_label(p * rng.uniform(0.1, 10), 3)


def test_accuracy():
    assert classify.accuracy([0, 1, 2], [0, 1, 2]) == 1.0
    assert classify.accuracy([1, 2, 0], [0, 1, 2]) == 0.0
    truth = np.zeros(30, dtype=int)
    predictions = truth.copy()
    predictions[:3] = 1
    assert classify.accuracy(predictions, truth) == pytest.approx(0.9)
    with pytest.raises(InvalidArgumentError):
        classify.accuracy([0, 1], [0])


def test_roc_examples():
    truth = np.array([0, 0, 1, 1])
    curve = classify.roc_auc_ovr(np.array([0.1, 0.2, 0.8, 0.9]), truth, 1)
    assert curve.auc == pytest.approx(1.0)
    curve = classify.roc_auc_ovr(np.full(4, 0.5), truth, 1)
    assert curve.auc == pytest.approx(0.5)
    assert curve.points[0] == (0.0, 0.0)
    assert curve.points[-1] == (1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        classify.roc_auc_ovr(np.array([0.1, 0.2]), np.array([1, 1]), 1)


def test_roc_random_scores(rng):
    truth = np.repeat([0, 1], 500)
    curve = classify.roc_auc_ovr(rng.uniform(size=1000), truth, 1)
    assert curve.auc == pytest.approx(0.5, abs=0.05)
    assert np.all(np.diff(curve.fpr) >= 0)
    assert np.all(np.diff(curve.tpr) >= 0)
    assert curve.fpr.min() >= 0 and curve.tpr.max() <= 1


def test_roc_uses_class_column_and_is_transform_invariant(rng):
    scores = rng.dirichlet(np.ones(3), size=60)
    truth = rng.integers(0, 3, size=60)
    truth[:3] = [0, 1, 2]
    for c in range(3):
        base = classify.roc_auc_ovr(scores, truth, c)
        column = scores[:, c]
        transformed = classify.roc_auc_ovr(column**3 + column, truth, c)
        assert base.auc == pytest.approx(transformed.auc, abs=1e-12)


def test_mean_roc_grid():
    curves = [
        RocCurve(np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 1.0]), 1.0),
        RocCurve(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 0.5),
    ]
    mean = classify.mean_roc(curves)
    assert mean.fpr.size == 101
    assert mean.fpr[0] == 0.0 and mean.fpr[-1] == 1.0
    assert mean.tpr[0] == 0.0 and mean.tpr[-1] == 1.0
    assert mean.tpr[50] == pytest.approx(0.75)
    assert np.all(np.diff(mean.tpr) >= 0)


def test_metrics_validation():
    metrics = Metrics.from_parts(0.9, [0.97, 0.99, 1.0])
    assert metrics.mean_auc == pytest.approx(np.mean([0.97, 0.99, 1.0]), abs=1e-12)
    with pytest.raises(ValidationError):
        Metrics(accuracy=0.9, per_class_auc=[0.5, 1.0], mean_auc=0.9)


def small_iris(per_class=8):
    data = encoding.load_iris(settings.DATA_PATH)
    keep = np.concatenate([np.flatnonzero(data.labels == c)[:per_class] for c in range(3)])
    return IrisDataset(data.points[keep], data.labels[keep])


def test_cross_validate_small_run():
    config = TrainConfig(circuit_spec=IRIS_ONE_QUBIT, restarts=1, max_iterations=25)
    result = classify.cross_validate(
        small_iris(), FeatureMapConfig(), IRIS_ONE_QUBIT, config, k=2, seed=3
    )
    assert len(result.folds) == 2
    for fold in result.folds:
        assert 0.0 <= fold.metrics.accuracy <= 1.0
        assert len(fold.curves) == 3
        assert fold.probabilities.shape == (fold.test_indices.size, 4)
        assert np.all(fold.predictions < 3)
    assert len(result.mean_curves) == 3
    assert result.mean_metrics.accuracy == pytest.approx(np.mean([f.metrics.accuracy for f in result.folds]))


def test_cross_validate_is_deterministic():
    config = TrainConfig(circuit_spec=IRIS_ONE_QUBIT, restarts=1, max_iterations=10)
    runs = [
        classify.cross_validate(small_iris(6), FeatureMapConfig(), IRIS_ONE_QUBIT, config, k=2, seed=5)
        for _ in range(2)
    ]
    for a, b in zip(runs[0].folds, runs[1].folds):
        np.testing.assert_array_equal(a.probabilities, b.probabilities)


def test_fold_seeds_never_collide():
    seeds = [classify.fold_seed(11, fold, 5) + r for fold in range(5) for r in range(5)]
    assert len(set(seeds)) == 25
    assert classify.fold_seed(11, 0, 5) == 11


def test_cross_validate_uses_distinct_restart_seeds():
    config = TrainConfig(circuit_spec=IRIS_ONE_QUBIT, restarts=3, max_iterations=2)
    result = classify.cross_validate(small_iris(4), FeatureMapConfig(), IRIS_ONE_QUBIT, config, k=2, seed=1)
    seeds = [s for fold in result.folds for s in fold.restart_seeds]
    assert seeds == [1, 2, 3, 4, 5, 6]


def test_cross_validate_attaches_fold_index(monkeypatch):
    import training

    def broken(data, config):
        raise training.TrainingError("cost became non-finite")

    monkeypatch.setattr(training, "train_best_of", broken)
    config = TrainConfig(circuit_spec=IRIS_ONE_QUBIT, restarts=1, max_iterations=5)
    with pytest.raises(TrainingError) as exc:
        classify.cross_validate(small_iris(4), FeatureMapConfig(), IRIS_ONE_QUBIT, config, k=2, seed=0)
    assert exc.value.fold == 0
    assert str(exc.value).startswith("fold 0:")


@pytest.mark.slow
@pytest.mark.parametrize(
    "spec,encoding_function,threshold",
    [
        (IRIS_ONE_QUBIT, EncodingFunction.INVCOSCOS, 0.85),
        (IRIS_TWO_QUBIT, EncodingFunction.GAUSSIAN, 0.88),
    ],
)
def test_iris_cross_validation_accuracy(spec, encoding_function, threshold):
    data = encoding.load_iris(settings.DATA_PATH)
    config = TrainConfig(circuit_spec=spec, objective=Objective.LOG_LOSS, max_iterations=1000)
    result = classify.cross_validate(
        data, FeatureMapConfig(encoding_function=encoding_function, layers=2), spec, config, k=5, seed=0
    )
    assert result.mean_metrics.accuracy >= threshold
    assert result.mean_metrics.mean_auc >= 0.95
    for fold in result.folds:
        assert fold.train_accuracy >= fold.initial_train_accuracy
