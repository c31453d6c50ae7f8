"""Linear soft-margin max-margin classifier and cross-validation harness.

Training minimizes the L2-regularized mean hinge loss by deterministic
seeded subgradient descent (step size 1/(lam*t), Polyak-Ruppert weight
averaging).  Subgradient steps are not monotone in the objective, so the
trainer retains the best averaged iterate seen so far; the recorded
objective history is that of the retained solution and is therefore
non-increasing by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .featurize import FeatureVector
from .selector import rank_features, select_top


@dataclass(frozen=True)
class TrainConfig:
    c: float = 1.0
    epochs: int = 200
    seed: int = 42


@dataclass(frozen=True)
class FoldMetrics:
    fold: int
    accuracy: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class CVReport:
    folds: tuple[FoldMetrics, ...]
    mean_accuracy: float
    std_accuracy: float
    mean_precision: float
    mean_recall: float
    mean_f1: float


@dataclass
class ClassifierModel:
    """Trained hyperplane over an ordered feature subset.

    Feature values are divided by the stored per-feature max-abs scaler
    before scoring.  The decision is margin > 0; an exact zero margin is
    classified as non-map.
    """

    selected_features: tuple[str, ...]
    weights: tuple[float, ...]
    bias: float
    scaler: tuple[float, ...]
    config: TrainConfig
    training_error: float
    objective_history: tuple[float, ...]
    cv_report: CVReport | None = field(default=None, compare=False)


def _project(
    vectors: list[FeatureVector], features: tuple[str, ...]
) -> np.ndarray:
    X = np.zeros((len(vectors), len(features)), dtype=np.float64)
    for j, fid in enumerate(features):
        for i, vec in enumerate(vectors):
            X[i, j] = vec.get(fid)
    return X


def _labels_pm1(vectors: list[FeatureVector]) -> np.ndarray:
    labels = [v.label for v in vectors]
    if any(lbl is None for lbl in labels):
        raise ValueError("all training vectors must be labeled")
    if all(labels) or not any(labels):
        raise ValueError("training needs at least one example of each class")
    return np.array([1.0 if lbl else -1.0 for lbl in labels], dtype=np.float64)


def train(
    vectors: list[FeatureVector],
    selected: set[str],
    config: TrainConfig = TrainConfig(),
) -> ClassifierModel:
    """Fit the hyperplane on vectors projected onto the selected features."""
    features = tuple(sorted(selected))
    y = _labels_pm1(vectors)
    X = _project(vectors, features)
    if not np.isfinite(X).all():
        raise ValueError("non-finite feature values in training data")

    scaler = np.abs(X).max(axis=0) if X.size else np.ones(0)
    scaler = np.where(scaler > 0, scaler, 1.0)
    Xs = np.ascontiguousarray(X / scaler)

    n, d = Xs.shape
    lam = 1.0 / (config.c * n)
    rng = np.random.default_rng(config.seed)

    w = np.zeros(d, dtype=np.float64)
    wsum = np.zeros(d, dtype=np.float64)
    b = 0.0
    bsum = 0.0
    t = 0
    best_objective = math.inf
    best_w = w.copy()
    best_b = 0.0
    history: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(n).astype(np.int64)
        b, bsum, t = _kernels.pegasos_epoch(Xs, y, order, lam, w, wsum, b, bsum, t)
        w_avg = wsum / t
        b_avg = bsum / t
        objective = _kernels.hinge_objective(Xs, y, w_avg, b_avg, lam)
        if objective <= best_objective:
            best_objective = objective
            best_w = w_avg.copy()
            best_b = b_avg
        history.append(best_objective)

    margins = Xs @ best_w + best_b
    predictions = margins > 0
    training_error = float(np.mean(predictions != (y > 0)))
    return ClassifierModel(
        selected_features=features,
        weights=tuple(best_w.tolist()),
        bias=float(best_b),
        scaler=tuple(scaler.tolist()),
        config=config,
        training_error=training_error,
        objective_history=tuple(history),
    )


def predict(model: ClassifierModel, vector: FeatureVector) -> tuple[bool, float]:
    """(is_map, margin); features outside the model's subset are ignored."""
    margin = model.bias
    for fid, weight, scale in zip(model.selected_features, model.weights, model.scaler):
        margin += weight * (vector.get(fid) / scale)
    return margin > 0, margin


def evaluate(
    model: ClassifierModel, vectors: list[FeatureVector], fold: int = 0
) -> FoldMetrics:
    tp = fp = tn = fn = 0
    for vec in vectors:
        predicted, _ = predict(model, vec)
        if vec.label is None:
            raise ValueError("evaluation requires labeled vectors")
        if predicted and vec.label:
            tp += 1
        elif predicted and not vec.label:
            fp += 1
        elif not predicted and vec.label:
            fn += 1
        else:
            tn += 1
    total = tp + fp + tn + fn
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return FoldMetrics(
        fold=fold, accuracy=accuracy, precision=precision, recall=recall, f1=f1
    )


def stratified_folds(
    vectors: list[FeatureVector], folds: int, seed: int
) -> list[tuple[list[int], list[int]]]:
    """Seeded stratified split: (train_indices, test_indices) per fold.

    Test sets are disjoint and cover the data.  Raises when either class
    has fewer examples than folds.
    """
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    labels = [v.label for v in vectors]
    if any(lbl is None for lbl in labels):
        raise ValueError("all vectors must be labeled for cross-validation")
    pos = [i for i, lbl in enumerate(labels) if lbl]
    neg = [i for i, lbl in enumerate(labels) if not lbl]
    if len(pos) < folds or len(neg) < folds:
        raise ValueError(
            f"stratification needs >= {folds} examples per class; "
            f"got {len(pos)} positive, {len(neg)} negative"
        )
    rng = np.random.default_rng(seed)
    assignments: dict[int, int] = {}
    for group in (pos, neg):
        shuffled = [group[i] for i in rng.permutation(len(group))]
        for position, index in enumerate(shuffled):
            assignments[index] = position % folds
    out = []
    for f in range(folds):
        test = [i for i in range(len(vectors)) if assignments[i] == f]
        train_idx = [i for i in range(len(vectors)) if assignments[i] != f]
        out.append((train_idx, test))
    return out


def cross_validate(
    vectors: list[FeatureVector],
    folds: int,
    config: TrainConfig = TrainConfig(),
    selector_k: int | None = None,
    selector_min_loss: float | None = None,
) -> CVReport:
    """Stratified k-fold evaluation with in-fold feature selection.

    Selection runs on each fold's training split only, so held-out data
    never influences the chosen features.
    """
    fold_metrics: list[FoldMetrics] = []
    for f, (train_idx, test_idx) in enumerate(
        stratified_folds(vectors, folds, config.seed)
    ):
        train_vecs = [vectors[i] for i in train_idx]
        test_vecs = [vectors[i] for i in test_idx]
        if selector_k is not None or selector_min_loss is not None:
            scores = rank_features(train_vecs)
            selected = select_top(scores, k=selector_k, min_loss=selector_min_loss)
        else:
            selected = {fid for v in train_vecs for fid in v.values}
        model = train(train_vecs, selected, config)
        fold_metrics.append(evaluate(model, test_vecs, fold=f))

    accuracies = [m.accuracy for m in fold_metrics]
    return CVReport(
        folds=tuple(fold_metrics),
        mean_accuracy=float(np.mean(accuracies)),
        std_accuracy=float(np.std(accuracies)),
        mean_precision=float(np.mean([m.precision for m in fold_metrics])),
        mean_recall=float(np.mean([m.recall for m in fold_metrics])),
        mean_f1=float(np.mean([m.f1 for m in fold_metrics])),
    )


def model_to_dict(model: ClassifierModel) -> dict:
    out = {
        "selected_features": list(model.selected_features),
        "weights": list(model.weights),
        "bias": model.bias,
        "scaler": list(model.scaler),
        "config": {
            "c": model.config.c,
            "epochs": model.config.epochs,
            "seed": model.config.seed,
        },
        "training_error": model.training_error,
        "objective_history": list(model.objective_history),
    }
    if model.cv_report is not None:
        rep = model.cv_report
        out["cv_report"] = {
            "folds": [
                {
                    "fold": m.fold,
                    "accuracy": m.accuracy,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                }
                for m in rep.folds
            ],
            "mean_accuracy": rep.mean_accuracy,
            "std_accuracy": rep.std_accuracy,
            "mean_precision": rep.mean_precision,
            "mean_recall": rep.mean_recall,
            "mean_f1": rep.mean_f1,
        }
    return out


def model_from_dict(obj: dict) -> ClassifierModel:
    cv = None
    if obj.get("cv_report"):
        rep = obj["cv_report"]
        cv = CVReport(
            folds=tuple(
                FoldMetrics(
                    fold=m["fold"],
                    accuracy=m["accuracy"],
                    precision=m["precision"],
                    recall=m["recall"],
                    f1=m["f1"],
                )
                for m in rep["folds"]
            ),
            mean_accuracy=rep["mean_accuracy"],
            std_accuracy=rep["std_accuracy"],
            mean_precision=rep["mean_precision"],
            mean_recall=rep["mean_recall"],
            mean_f1=rep["mean_f1"],
        )
    return ClassifierModel(
        selected_features=tuple(obj["selected_features"]),
        weights=tuple(obj["weights"]),
        bias=obj["bias"],
        scaler=tuple(obj["scaler"]),
        config=TrainConfig(**obj["config"]),
        training_error=obj["training_error"],
        objective_history=tuple(obj["objective_history"]),
        cv_report=cv,
    )
