"""Feature selection by expected entropy loss.

Each feature is binarized at value > 0 and scored by how much knowing
its presence reduces class entropy; features are then ranked descending
and cut at a threshold (top-k or minimum loss).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .featurize import FeatureVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureScore:
    feature_id: str
    entropy_loss: float
    rank: int


def _check_labels(vectors: list[FeatureVector]) -> None:
    labels = [v.label for v in vectors]
    if any(lbl is None for lbl in labels):
        raise ValueError("all vectors must be labeled for selection")
    if not any(labels) or all(labels):
        raise ValueError("need at least one example of each class")


def _score_features(
    vectors: list[FeatureVector], feature_ids: list[str]
) -> np.ndarray:
    n = len(vectors)
    presence = np.zeros((n, len(feature_ids)), dtype=np.uint8)
    col = {fid: j for j, fid in enumerate(feature_ids)}
    for i, vec in enumerate(vectors):
        for fid, value in vec.values.items():
            if value > 0 and fid in col:
                presence[i, col[fid]] = 1
    labels = np.array([1 if v.label else 0 for v in vectors], dtype=np.uint8)
    out = np.zeros(len(feature_ids), dtype=np.float64)
    _kernels.entropy_losses(presence, labels, out)
    return out


def entropy_loss(feature_id: str, vectors: list[FeatureVector]) -> float:
    """Prior class entropy minus expected entropy given feature presence."""
    _check_labels(vectors)
    return float(_score_features(vectors, [feature_id])[0])


def rank_features(vectors: list[FeatureVector]) -> list[FeatureScore]:
    """Score every observed feature, sorted by descending loss.

    Ties are broken lexicographically by feature_id so ranking is
    deterministic; ranks are 1..K.
    """
    _check_labels(vectors)
    feature_ids = sorted({fid for v in vectors for fid in v.values})
    losses = _score_features(vectors, feature_ids)
    order = sorted(zip(feature_ids, losses.tolist()), key=lambda kv: (-kv[1], kv[0]))
    return [
        FeatureScore(feature_id=fid, entropy_loss=loss, rank=i + 1)
        for i, (fid, loss) in enumerate(order)
    ]


def select_top(
    scores: list[FeatureScore],
    k: int | None = None,
    min_loss: float | None = None,
) -> set[str]:
    """Cut the ranking at top-k or at a minimum loss; exactly one mode."""
    if (k is None) == (min_loss is None):
        raise ValueError("pass exactly one of k or min_loss")
    if k is not None:
        if k <= 0:
            raise ValueError(f"k must be positive, got {k}")
        if k > len(scores):
            logger.warning("k=%d exceeds %d scored features; using all", k, len(scores))
            k = len(scores)
        return {s.feature_id for s in scores if s.rank <= k}
    selected = {s.feature_id for s in scores if s.entropy_loss >= min_loss}
    if not selected:
        logger.warning("min_loss=%g exceeds the best score; empty selection", min_loss)
    return selected


def export_scores(scores: list[FeatureScore], path) -> None:
    """Two-column text dump (feature_id, loss) for inspection."""
    with open(path, "w", encoding="utf-8") as handle:
        for s in scores:
            handle.write(f"{s.feature_id}\t{s.entropy_loss:.12g}\n")
