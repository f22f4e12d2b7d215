"""Pure-numpy kernels: the fallback backend for the compiled extension.

Every function here mirrors its compiled twin in hdp._ckernels bit for bit:
the float expressions are written in the same order, score comparisons are
strict, and tie handling works on value groups so that sort stability never
matters. The parity test suite asserts exact equality between backends.
"""

from __future__ import annotations

import numpy as np

_SM_MASK = (1 << 64) - 1


def ks_statistic(a_sorted: np.ndarray, b_sorted: np.ndarray) -> float:
    """Sup-distance between the ECDFs of two pre-sorted samples."""
    n = a_sorted.size
    m = b_sorted.size
    pooled = np.concatenate([a_sorted, b_sorted])
    ca = np.searchsorted(a_sorted, pooled, side="right") / float(n)
    cb = np.searchsorted(b_sorted, pooled, side="right") / float(m)
    return float(np.max(np.abs(ca - cb)))


def auc_mann_whitney(sorted_scores: np.ndarray, sorted_labels: np.ndarray) -> float:
    """Rank-sum AUC from scores pre-sorted ascending with aligned 0/1 labels.

    Ties share mid-ranks, which makes the result equal to
    P(score_pos > score_neg) + 0.5 * P(tie).
    """
    n = sorted_scores.size
    boundary = np.empty(n, dtype=bool)
    boundary[0] = True
    boundary[1:] = sorted_scores[1:] != sorted_scores[:-1]
    group = np.cumsum(boundary) - 1
    counts = np.bincount(group)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    # 1-based mid-rank of each tie group
    mid = 0.5 * (starts + (starts + counts - 1)) + 1.0
    labels = sorted_labels.astype(np.int64)
    npos = int(labels.sum())
    nneg = n - npos
    rank_pos = float(np.sum(mid * np.bincount(group, weights=labels)))
    return (rank_pos - 0.5 * npos * (npos + 1.0)) / (float(npos) * float(nneg))


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _SM_MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _SM_MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _SM_MASK
    z = z ^ (z >> 31)
    return state, z


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample_idx: np.ndarray,
    n_candidates: int,
    min_leaf: int,
    seed: int,
):
    """Grow one binary CART tree on the given bootstrap rows.

    Splits minimize the weighted Gini impurity of the children; candidate
    features per node are drawn without replacement from a splitmix64 stream
    seeded by ``seed``. Children are explored depth-first, left first, so
    node ids and random draws are reproducible. Returns parallel arrays
    (feature, threshold, left, right, value); feature of -1 marks a leaf and
    value is the node's buggy fraction.
    """
    nb = sample_idx.size
    p = X.shape[1]
    max_nodes = 2 * nb + 1
    feature = np.full(max_nodes, -1, dtype=np.int32)
    threshold = np.zeros(max_nodes, dtype=np.float64)
    left = np.full(max_nodes, -1, dtype=np.int32)
    right = np.full(max_nodes, -1, dtype=np.int32)
    value = np.zeros(max_nodes, dtype=np.float64)

    samples = np.array(sample_idx, dtype=np.int64, copy=True)
    state = int(seed) & _SM_MASK
    k = min(n_candidates, p)

    # stack of (start, end, parent, is_left); right pushed first so left pops first
    stack = [(0, nb, -1, False)]
    n_nodes = 0
    while stack:
        start, end, parent, is_left = stack.pop()
        node_id = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left:
                left[parent] = node_id
            else:
                right[parent] = node_id

        node_samples = samples[start:end]
        n_node = end - start
        ynode = y[node_samples].astype(np.int64)
        c1_total = int(ynode.sum())
        value[node_id] = c1_total / float(n_node)
        if c1_total == 0 or c1_total == n_node or n_node < 2 * min_leaf:
            continue

        # draw the candidate features for this node
        pool = list(range(p))
        for i in range(k):
            state, z = _splitmix64(state)
            j = i + z % (p - i)
            pool[i], pool[j] = pool[j], pool[i]
        candidates = pool[:k]

        best_score = np.inf
        best_feature = -1
        best_threshold = 0.0
        for f in candidates:
            col = X[node_samples, f]
            order = np.argsort(col, kind="stable")
            sv = col[order]
            c1 = np.cumsum(ynode[order], dtype=np.int64)
            s_all = np.nonzero(sv[1:] != sv[:-1])[0] + 1
            s = s_all[(s_all >= min_leaf) & (s_all <= n_node - min_leaf)]
            if s.size == 0:
                continue
            nl = s.astype(np.float64)
            nr = float(n_node) - nl
            c1l = c1[s - 1].astype(np.float64)
            c1r = float(c1_total) - c1l
            pl1 = c1l / nl
            pl0 = (nl - c1l) / nl
            pr1 = c1r / nr
            pr0 = (nr - c1r) / nr
            gl = 1.0 - pl1 * pl1 - pl0 * pl0
            gr = 1.0 - pr1 * pr1 - pr0 * pr0
            score = (nl * gl + nr * gr) / float(n_node)
            kbest = int(np.argmin(score))
            if score[kbest] < best_score:
                s_at = int(s[kbest])
                v0 = float(sv[s_at - 1])
                v1 = float(sv[s_at])
                thr = (v0 + v1) * 0.5
                if not thr < v1:  # midpoint rounded up to v1
                    thr = v0
                best_score = float(score[kbest])
                best_feature = f
                best_threshold = thr
        if best_feature < 0:
            continue  # every candidate feature constant: stay a leaf

        col = X[node_samples, best_feature]
        left_mask = col <= best_threshold
        left_ids = node_samples[left_mask]
        right_ids = node_samples[~left_mask]
        n_left = left_ids.size
        samples[start : start + n_left] = left_ids
        samples[start + n_left : end] = right_ids
        feature[node_id] = best_feature
        threshold[node_id] = best_threshold
        stack.append((start + n_left, end, node_id, False))
        stack.append((start, start + n_left, node_id, True))

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


def predict_forest(feature, threshold, left, right, value, offsets, X):
    """Mean leaf fraction over a concatenated forest, one value per row of X.

    ``offsets`` holds each tree's root index (length n_trees + 1); child
    pointers are global into the concatenated arrays.
    """
    n = X.shape[0]
    acc = np.zeros(n, dtype=np.float64)
    n_trees = offsets.size - 1
    for t in range(n_trees):
        node = np.full(n, offsets[t], dtype=np.int64)
        while True:
            f = feature[node]
            active = f >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            nd = node[rows]
            go_left = X[rows, f[rows]] <= threshold[nd]
            node[rows] = np.where(go_left, left[nd], right[nd])
        acc += value[node]
    return acc / float(n_trees)
