"""Feature scoring on the source project: equal-frequency discretization,
gain ratio, and top-fraction selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import DefectDataset

__all__ = ["FeatureScore", "SelectedFeatures", "discretize", "gain_ratio", "select_top"]


@dataclass(frozen=True)
class FeatureScore:
    metric_name: str
    gain_ratio: float


@dataclass(frozen=True)
class SelectedFeatures:
    metric_names: tuple[str, ...]  # descending score, ties by column order
    column_indices: tuple[int, ...]
    fraction: float
    scores: tuple[FeatureScore, ...]  # all metrics, selection order first


def discretize(values, n_bins: int) -> np.ndarray:
    """Equal-frequency binning that never splits tied values across bins.

    Each value's bin is floor(rank * n_bins / n) where rank counts strictly
    smaller values, so equal values always share a bin and the result depends
    only on the multiset of inputs, not their order.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("discretize requires a non-empty 1-D input")
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    n = values.size
    rank = np.searchsorted(np.sort(values), values, side="left")
    return (rank * n_bins // n).astype(np.int64)


def _entropy_from_counts(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def gain_ratio(feature_bins, labels) -> float:
    """Information gain about the label divided by the feature's own entropy.

    Entropies are in bits; a feature with zero entropy (constant) scores 0.
    """
    bins = np.asarray(feature_bins)
    labels = np.asarray(labels, dtype=bool)
    if bins.shape[0] != labels.shape[0]:
        raise ValueError(f"length mismatch: {bins.shape[0]} vs {labels.shape[0]}")
    n = bins.shape[0]
    _, bin_ids = np.unique(bins, return_inverse=True)
    n_groups = int(bin_ids.max()) + 1 if n else 0
    group_sizes = np.bincount(bin_ids, minlength=n_groups)
    h_feature = _entropy_from_counts(group_sizes)
    if h_feature == 0.0:
        return 0.0
    h_label = _entropy_from_counts(np.bincount(labels.astype(np.int64), minlength=2))
    # conditional entropy of the label within each bin
    pos = np.bincount(bin_ids, weights=labels.astype(np.float64), minlength=n_groups)
    h_cond = 0.0
    for size, npos in zip(group_sizes, pos):
        if size == 0:
            continue
        h_cond += (size / n) * _entropy_from_counts(np.array([npos, size - npos]))
    return (h_label - h_cond) / h_feature


def select_top(dataset: DefectDataset, fraction: float = 0.15, n_bins: int = 10) -> SelectedFeatures:
    """Score every metric by gain ratio over its discretized values and keep
    the top ceil(fraction * n_metrics), ties broken by original column order."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    scores = []
    for j, name in enumerate(dataset.metric_names):
        bins = discretize(dataset.instances[:, j], n_bins)
        scores.append((gain_ratio(bins, dataset.labels), j, name))
    ranked = sorted(scores, key=lambda t: (-t[0], t[1]))
    n_keep = math.ceil(fraction * dataset.n_metrics)
    kept = ranked[:n_keep]
    return SelectedFeatures(
        metric_names=tuple(name for _, _, name in kept),
        column_indices=tuple(j for _, j, _ in kept),
        fraction=fraction,
        scores=tuple(FeatureScore(name, g) for g, _, name in ranked),
    )
