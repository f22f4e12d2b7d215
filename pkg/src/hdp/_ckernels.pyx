# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the hot inner loops: ECDF sup-distance, rank-sum AUC,
and CART tree growth/prediction. Each function has a pure-numpy twin in
hdp._pykernels with identical floating-point behaviour."""

from libc.math cimport INFINITY
from libc.stdlib cimport free, malloc, qsort

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef struct ValLab:
    double v
    int y


cdef int _cmp_vallab(const void* pa, const void* pb) noexcept nogil:
    cdef double av = (<const ValLab*> pa).v
    cdef double bv = (<const ValLab*> pb).v
    if av < bv:
        return -1
    if av > bv:
        return 1
    return 0


def ks_statistic(double[::1] a_sorted, double[::1] b_sorted):
    """Sup-distance between the ECDFs of two pre-sorted samples."""
    cdef Py_ssize_t n = a_sorted.shape[0]
    cdef Py_ssize_t m = b_sorted.shape[0]
    cdef Py_ssize_t i = 0, j = 0
    cdef double d = 0.0, fa, fb, diff, v
    while i < n or j < m:
        if j >= m:
            v = a_sorted[i]
        elif i >= n:
            v = b_sorted[j]
        elif a_sorted[i] <= b_sorted[j]:
            v = a_sorted[i]
        else:
            v = b_sorted[j]
        while i < n and a_sorted[i] == v:
            i += 1
        while j < m and b_sorted[j] == v:
            j += 1
        fa = (<double> i) / (<double> n)
        fb = (<double> j) / (<double> m)
        diff = fa - fb
        if diff < 0.0:
            diff = -diff
        if diff > d:
            d = diff
    return d


def auc_mann_whitney(double[::1] sorted_scores, cnp.uint8_t[::1] sorted_labels):
    """Rank-sum AUC from scores pre-sorted ascending with aligned 0/1 labels."""
    cdef Py_ssize_t n = sorted_scores.shape[0]
    cdef Py_ssize_t i = 0, j, gpos
    cdef long long npos = 0
    cdef double rank_pos = 0.0, midrank
    for i in range(n):
        npos += sorted_labels[i]
    i = 0
    while i < n:
        j = i
        gpos = sorted_labels[i]
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
            gpos += sorted_labels[j]
        midrank = 0.5 * <double> (i + j) + 1.0
        rank_pos += midrank * <double> gpos
        i = j + 1
    cdef double npos_f = <double> npos
    cdef double nneg_f = <double> (n - npos)
    return (rank_pos - 0.5 * npos_f * (npos_f + 1.0)) / (npos_f * nneg_f)


def grow_tree(double[:, ::1] X, cnp.uint8_t[::1] y, cnp.int64_t[::1] sample_idx,
              int n_candidates, int min_leaf, unsigned long long seed):
    """Grow one binary CART tree on the given bootstrap rows.

    Same algorithm, traversal order, and random stream as the pure twin:
    depth-first, left child first, splitmix64 feature sampling, strict-less
    score comparisons so the first optimum wins.
    """
    cdef Py_ssize_t nb = sample_idx.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t max_nodes = 2 * nb + 1
    cdef Py_ssize_t kf = n_candidates if n_candidates < p else p

    feature_arr = np.full(max_nodes, -1, dtype=np.int32)
    threshold_arr = np.zeros(max_nodes, dtype=np.float64)
    left_arr = np.full(max_nodes, -1, dtype=np.int32)
    right_arr = np.full(max_nodes, -1, dtype=np.int32)
    value_arr = np.zeros(max_nodes, dtype=np.float64)
    samples_arr = np.array(sample_idx, dtype=np.int64, copy=True)
    st_start_arr = np.empty(max_nodes + 1, dtype=np.int64)
    st_end_arr = np.empty(max_nodes + 1, dtype=np.int64)
    st_parent_arr = np.empty(max_nodes + 1, dtype=np.int64)
    st_isleft_arr = np.empty(max_nodes + 1, dtype=np.int64)

    cdef cnp.int32_t[::1] feature = feature_arr
    cdef double[::1] threshold = threshold_arr
    cdef cnp.int32_t[::1] left = left_arr
    cdef cnp.int32_t[::1] right = right_arr
    cdef double[::1] value = value_arr
    cdef cnp.int64_t[::1] samples = samples_arr
    cdef cnp.int64_t[::1] st_start = st_start_arr
    cdef cnp.int64_t[::1] st_end = st_end_arr
    cdef cnp.int64_t[::1] st_parent = st_parent_arr
    cdef cnp.int64_t[::1] st_isleft = st_isleft_arr

    cdef ValLab* pairs = <ValLab*> malloc(nb * sizeof(ValLab))
    cdef cnp.int64_t* scratch = <cnp.int64_t*> malloc(nb * sizeof(cnp.int64_t))
    cdef int* pool = <int*> malloc(p * sizeof(int))
    if pairs == NULL or scratch == NULL or pool == NULL:
        free(pairs)
        free(scratch)
        free(pool)
        raise MemoryError()

    cdef unsigned long long state = seed, z
    cdef Py_ssize_t sp = 0, n_nodes = 0
    cdef Py_ssize_t start, end, parent, isl, node_id, n_node, i, j, s, ci
    cdef Py_ssize_t nleft, mfill
    cdef long long c1_total, c1run
    cdef int f, best_feature, tmp
    cdef double best_score, best_threshold, score, thr, v0, v1
    cdef double nl, nr, c1l, c1r, pl1, pl0, pr1, pr0, gl, gr

    st_start[0] = 0
    st_end[0] = nb
    st_parent[0] = -1
    st_isleft[0] = 0
    sp = 1
    try:
        while sp > 0:
            sp -= 1
            start = st_start[sp]
            end = st_end[sp]
            parent = st_parent[sp]
            isl = st_isleft[sp]
            node_id = n_nodes
            n_nodes += 1
            if parent >= 0:
                if isl:
                    left[parent] = <cnp.int32_t> node_id
                else:
                    right[parent] = <cnp.int32_t> node_id

            n_node = end - start
            c1_total = 0
            for i in range(start, end):
                c1_total += y[samples[i]]
            value[node_id] = (<double> c1_total) / (<double> n_node)
            if c1_total == 0 or c1_total == n_node or n_node < 2 * min_leaf:
                continue

            for i in range(p):
                pool[i] = <int> i
            for i in range(kf):
                state = state + 0x9E3779B97F4A7C15ULL
                z = state
                z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
                z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
                z = z ^ (z >> 31)
                j = i + <Py_ssize_t> (z % <unsigned long long> (p - i))
                tmp = pool[i]
                pool[i] = pool[j]
                pool[j] = tmp

            best_score = INFINITY
            best_feature = -1
            best_threshold = 0.0
            for ci in range(kf):
                f = pool[ci]
                for i in range(n_node):
                    pairs[i].v = X[samples[start + i], f]
                    pairs[i].y = y[samples[start + i]]
                qsort(pairs, n_node, sizeof(ValLab), _cmp_vallab)
                c1run = 0
                for s in range(1, n_node):
                    c1run += pairs[s - 1].y
                    if pairs[s].v == pairs[s - 1].v:
                        continue
                    if s < min_leaf or s > n_node - min_leaf:
                        continue
                    nl = <double> s
                    nr = <double> (n_node - s)
                    c1l = <double> c1run
                    c1r = <double> (c1_total - c1run)
                    pl1 = c1l / nl
                    pl0 = (nl - c1l) / nl
                    pr1 = c1r / nr
                    pr0 = (nr - c1r) / nr
                    gl = 1.0 - pl1 * pl1 - pl0 * pl0
                    gr = 1.0 - pr1 * pr1 - pr0 * pr0
                    score = (nl * gl + nr * gr) / <double> n_node
                    if score < best_score:
                        v0 = pairs[s - 1].v
                        v1 = pairs[s].v
                        thr = (v0 + v1) * 0.5
                        if not thr < v1:
                            thr = v0
                        best_score = score
                        best_feature = f
                        best_threshold = thr
            if best_feature < 0:
                continue

            nleft = 0
            for i in range(start, end):
                if X[samples[i], best_feature] <= best_threshold:
                    scratch[nleft] = samples[i]
                    nleft += 1
            mfill = nleft
            for i in range(start, end):
                if not X[samples[i], best_feature] <= best_threshold:
                    scratch[mfill] = samples[i]
                    mfill += 1
            for i in range(n_node):
                samples[start + i] = scratch[i]

            feature[node_id] = best_feature
            threshold[node_id] = best_threshold
            st_start[sp] = start + nleft
            st_end[sp] = end
            st_parent[sp] = node_id
            st_isleft[sp] = 0
            sp += 1
            st_start[sp] = start
            st_end[sp] = start + nleft
            st_parent[sp] = node_id
            st_isleft[sp] = 1
            sp += 1
    finally:
        free(pairs)
        free(scratch)
        free(pool)

    return (
        feature_arr[:n_nodes].copy(),
        threshold_arr[:n_nodes].copy(),
        left_arr[:n_nodes].copy(),
        right_arr[:n_nodes].copy(),
        value_arr[:n_nodes].copy(),
    )


def predict_forest(cnp.int32_t[::1] feature, double[::1] threshold,
                   cnp.int32_t[::1] left, cnp.int32_t[::1] right,
                   double[::1] value, cnp.int64_t[::1] offsets,
                   double[:, ::1] X):
    """Mean leaf fraction over a concatenated forest, one value per row of X."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_trees = offsets.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] acc = out
    cdef Py_ssize_t t, r
    cdef cnp.int64_t node
    cdef cnp.int32_t f
    for t in range(n_trees):
        for r in range(n):
            node = offsets[t]
            f = feature[node]
            while f >= 0:
                if X[r, f] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
                f = feature[node]
            acc[r] += value[node]
    for r in range(n):
        acc[r] /= <double> n_trees
    return out
