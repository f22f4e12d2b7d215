"""Metric matching between a source and a target project.

Builds the matrix of KS-test p-values between selected source metrics and all
target metrics, removes edges below a cutoff, and solves maximum-weight
bipartite matching over the surviving edges. A pairing is feasible when the
configured policy is satisfied; infeasibility is a result, not an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import DefectDataset
from .selection import SelectedFeatures, select_top
from .stats import ks_p_value

__all__ = [
    "POLICY_ALL_SOURCE",
    "POLICY_ANY",
    "ScoreMatrix",
    "MetricMatching",
    "score_matrix",
    "apply_cutoff",
    "max_weight_matching",
    "match",
]

POLICY_ALL_SOURCE = "all-source"  # every selected source metric must be paired
POLICY_ANY = "any"  # at least one pair suffices

_NEG_INF = float("-inf")
_WEIGHT_TOL = 1e-9  # two float sums of the same optimum can differ by rounding


@dataclass(frozen=True)
class ScoreMatrix:
    source_metrics: tuple[str, ...]
    target_metrics: tuple[str, ...]
    scores: np.ndarray  # (n_source, n_target); -inf marks a removed edge

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.shape != (len(self.source_metrics), len(self.target_metrics)):
            raise ValueError("score matrix shape does not match metric name lists")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "source_metrics", tuple(self.source_metrics))
        object.__setattr__(self, "target_metrics", tuple(self.target_metrics))


@dataclass(frozen=True)
class MetricMatching:
    pairs: tuple[tuple[str, str, float], ...]  # (source metric, target metric, score)
    source_indices: tuple[int, ...]
    target_indices: tuple[int, ...]
    total_weight: float
    feasible: bool
    cutoff: float


def score_matrix(
    source: DefectDataset,
    target: DefectDataset,
    selected: SelectedFeatures | None = None,
    target_rows: np.ndarray | None = None,
) -> ScoreMatrix:
    """KS p-value of every (selected source metric, target metric) pair.

    ``target_rows`` restricts the target side to a row subset (a CV fold).
    """
    if selected is None:
        cols = list(range(source.n_metrics))
        names = source.metric_names
    else:
        cols = list(selected.column_indices)
        names = selected.metric_names
    tgt = target.instances if target_rows is None else target.instances[target_rows]
    if tgt.shape[0] == 0:
        raise ValueError("target side has no rows")
    src_sorted = [np.sort(source.instances[:, j]) for j in cols]
    tgt_sorted = [np.sort(np.ascontiguousarray(tgt[:, j])) for j in range(tgt.shape[1])]
    return ScoreMatrix(
        tuple(names),
        tuple(target.metric_names),
        _ks_p_matrix(src_sorted, tgt_sorted, source.n_instances, tgt.shape[0]),
    )


def _ks_p_matrix(src_sorted, tgt_sorted, n_src, n_tgt) -> np.ndarray:
    scores = np.empty((len(src_sorted), len(tgt_sorted)), dtype=np.float64)
    for i, a in enumerate(src_sorted):
        for j, b in enumerate(tgt_sorted):
            scores[i, j] = ks_p_value(kernels.ks_statistic(a, b), n_src, n_tgt)
    return scores


def apply_cutoff(m: ScoreMatrix, cutoff: float = 0.05) -> ScoreMatrix:
    """Remove edges scoring below the cutoff (exact-cutoff scores survive)."""
    if not 0.0 <= cutoff <= 1.0:
        raise ValueError("cutoff must be in [0, 1]")
    scores = m.scores.copy()
    scores[scores < cutoff] = _NEG_INF
    return ScoreMatrix(m.source_metrics, m.target_metrics, scores)


def _solve_assignment(weights: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximum-weight partial matching via shortest augmenting paths.

    Rows may stay unmatched: the cost matrix gets one zero-cost dummy column
    per row, then the classic potentials/augmenting-path scheme runs on
    negated weights. Returns (total weight, per-row column or -1). Absent
    edges are -inf in ``weights``; all present weights must be >= 0.
    """
    n, m = weights.shape
    assign = np.full(n, -1, dtype=np.int64)
    if n == 0 or m == 0 or not np.isfinite(weights).any():
        return 0.0, assign
    big = m + n  # real columns then one dummy per row
    cost = np.zeros((n, big), dtype=np.float64)
    cost[:, :m] = np.where(np.isfinite(weights), -weights, np.inf)

    u = np.zeros(n + 1)
    v = np.zeros(big + 1)
    col_row = np.zeros(big + 1, dtype=np.int64)  # 1-based col -> 1-based row, 0 free
    way = np.zeros(big + 1, dtype=np.int64)
    for i in range(1, n + 1):
        col_row[0] = i
        j0 = 0
        minv = np.full(big + 1, np.inf)
        used = np.zeros(big + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = col_row[j0]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            tail_minv = minv[1:]
            tail_way = way[1:]
            unused = ~used[1:]
            better = unused & (cur < tail_minv)
            tail_minv[better] = cur[better]
            tail_way[better] = j0
            cand = np.where(unused, tail_minv, np.inf)
            j0 = int(np.argmin(cand)) + 1
            delta = float(cand[j0 - 1])
            u[col_row[used]] += delta
            v[used] -= delta
            tail_minv[unused] -= delta
            if col_row[j0] == 0:
                break
        while j0 != 0:
            j1 = int(way[j0])
            col_row[j0] = col_row[j1]
            j0 = j1

    total = 0.0
    for j in range(1, m + 1):
        r = int(col_row[j])
        if r > 0 and np.isfinite(weights[r - 1, j - 1]):
            assign[r - 1] = j - 1
            total += float(weights[r - 1, j - 1])
    return total, assign


def _solve_with_bans(weights, banned_rows: set, banned_cols: set) -> tuple[float, np.ndarray]:
    """Optimal matching ignoring some rows/columns, in original indices."""
    n, m = weights.shape
    keep_r = [i for i in range(n) if i not in banned_rows]
    keep_c = [j for j in range(m) if j not in banned_cols]
    assign = np.full(n, -1, dtype=np.int64)
    if not keep_r or not keep_c:
        return 0.0, assign
    total, sub = _solve_assignment(weights[np.ix_(keep_r, keep_c)])
    for si, i in enumerate(keep_r):
        if sub[si] >= 0:
            assign[i] = keep_c[sub[si]]
    return total, assign


def max_weight_matching(m: ScoreMatrix, policy: str = POLICY_ALL_SOURCE, cutoff: float = 0.05) -> MetricMatching:
    """Maximum-weight bipartite matching over present edges.

    Among equal-weight optima the lexicographically smallest pair list by
    (source index, target index) wins: walking sources in order, each is
    pinned to the smallest target that keeps the total optimal (a source is
    left unmatched only when no pinning does).
    """
    weights = m.scores
    n = weights.shape[0]
    best_total, cur_assign = _solve_assignment(weights)
    tol = _WEIGHT_TOL * max(1.0, abs(best_total))

    fixed: list[tuple[int, int]] = []
    fixed_weight = 0.0
    used_cols: set[int] = set()
    fixed_rows: set[int] = set()
    for i in range(n):
        current = int(cur_assign[i])
        limit = current if current >= 0 else weights.shape[1]
        chosen = current
        for j in np.nonzero(np.isfinite(weights[i]))[0]:
            j = int(j)
            if j >= limit:
                break
            if j in used_cols:
                continue
            rest_total, rest_assign = _solve_with_bans(
                weights, fixed_rows | {i}, used_cols | {j}
            )
            if fixed_weight + float(weights[i, j]) + rest_total >= best_total - tol:
                chosen = j
                cur_assign = rest_assign
                break
        fixed_rows.add(i)
        if chosen >= 0:
            fixed.append((i, chosen))
            fixed_weight += float(weights[i, chosen])
            used_cols.add(chosen)

    pairs = tuple(
        (m.source_metrics[i], m.target_metrics[j], float(weights[i, j])) for i, j in fixed
    )
    total = float(sum(w for _, _, w in pairs))
    if policy == POLICY_ALL_SOURCE:
        feasible = n > 0 and len(pairs) == n
    elif policy == POLICY_ANY:
        feasible = len(pairs) >= 1
    else:
        raise ValueError(f"unknown feasibility policy: {policy!r}")
    return MetricMatching(
        pairs=pairs,
        source_indices=tuple(i for i, _ in fixed),
        target_indices=tuple(j for _, j in fixed),
        total_weight=total,
        feasible=feasible,
        cutoff=cutoff,
    )


def match(
    source: DefectDataset,
    target: DefectDataset,
    fraction: float = 0.15,
    cutoff: float = 0.05,
    policy: str = POLICY_ALL_SOURCE,
    n_bins: int = 10,
) -> MetricMatching:
    """Full pipeline: select source metrics, score against the target, apply
    the cutoff, and solve the matching."""
    selected = select_top(source, fraction=fraction, n_bins=n_bins)
    scored = score_matrix(source, target, selected)
    filtered = apply_cutoff(scored, cutoff)
    return max_weight_matching(filtered, policy=policy, cutoff=cutoff)
