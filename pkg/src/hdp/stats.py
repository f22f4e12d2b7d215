"""Statistical primitives: two-sample KS test, Spearman rank correlation,
ROC-AUC, Wilcoxon signed-rank test, Cliff's delta, and a one-sample t-test.

All functions are pure and operate on 1-D numeric sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "KsResult",
    "WilcoxonResult",
    "CliffsDelta",
    "ks_two_sample",
    "spearman",
    "auc_roc",
    "wilcoxon_signed_rank",
    "cliffs_delta",
    "t_test_one_sample",
    "MAGNITUDE_NEGLIGIBLE",
    "MAGNITUDE_SMALL",
    "MAGNITUDE_MEDIUM",
    "MAGNITUDE_LARGE",
]

MAGNITUDE_NEGLIGIBLE = "Negligible"
MAGNITUDE_SMALL = "Small"
MAGNITUDE_MEDIUM = "Medium"
MAGNITUDE_LARGE = "Large"


@dataclass(frozen=True)
class KsResult:
    d_statistic: float
    p_value: float


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # rank sum of positive differences
    p_value: float
    n_effective: int  # nonzero differences entering the test


@dataclass(frozen=True)
class CliffsDelta:
    delta: float
    magnitude: str


def _as_1d_float(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    return arr


def midranks(x) -> np.ndarray:
    """1-based ranks with ties sharing the mean rank of their group."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    sx = x[order]
    n = x.size
    boundary = np.empty(n, dtype=bool)
    boundary[0] = True
    boundary[1:] = sx[1:] != sx[:-1]
    group = np.cumsum(boundary) - 1
    counts = np.bincount(group)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    mid = 0.5 * (2 * starts + counts - 1) + 1.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = mid[group]
    return ranks


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution.

    Alternating series 2*sum_k (-1)^(k-1) exp(-2 k^2 lam^2), truncated once a
    term drops below 1e-10; if 100 terms do not get there (tiny lam) the
    limit is 1.
    """
    if lam <= 0.0:
        return 1.0
    total = 0.0
    sign = 1.0
    for k in range(1, 101):
        term = 2.0 * math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term < 1e-10:
            return min(max(total, 0.0), 1.0)
        sign = -sign
    return 1.0


def ks_p_value(d: float, n: int, m: int) -> float:
    """Asymptotic two-sample KS p-value at effective size n*m/(n+m)."""
    ne = n * m / (n + m)
    sqrt_ne = math.sqrt(ne)
    lam = d * (sqrt_ne + 0.12 + 0.11 / sqrt_ne)
    return kolmogorov_sf(lam)


def ks_two_sample(a, b) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test.

    The statistic is the exact sup-distance between the two empirical CDFs,
    evaluated at every pooled point so ties are handled correctly.
    """
    a = _as_1d_float(a, "a")
    b = _as_1d_float(b, "b")
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample requires non-empty samples")
    d = kernels.ks_statistic(np.sort(a), np.sort(b))
    return KsResult(d_statistic=d, p_value=ks_p_value(d, a.size, b.size))


def spearman(x, y) -> float:
    """Spearman rank correlation: Pearson correlation of mid-ranks.

    Defined as 0 when either input is constant (no monotone association).
    """
    x = _as_1d_float(x, "x")
    y = _as_1d_float(y, "y")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("spearman requires at least 2 observations")
    rx = midranks(x)
    ry = midranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    if denom == 0.0:
        return 0.0
    r = float(np.dot(dx, dy)) / denom
    return max(-1.0, min(1.0, r))


def auc_roc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum (Mann-Whitney) statistic."""
    scores = _as_1d_float(scores, "scores")
    labels = np.asarray(labels, dtype=bool)
    if scores.size != labels.size:
        raise ValueError(f"length mismatch: {scores.size} vs {labels.size}")
    if labels.all() or not labels.any():
        raise ValueError("auc_roc requires both a positive and a negative label")
    order = np.argsort(scores, kind="stable")
    return kernels.auc_mann_whitney(
        np.ascontiguousarray(scores[order]),
        np.ascontiguousarray(labels[order].astype(np.uint8)),
    )


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


_WILCOXON_EXACT_MAX_N = 25


def _wilcoxon_exact_p(ranks: np.ndarray, w_plus: float) -> float:
    """Exact two-sided p over all sign assignments of the given mid-ranks.

    Mid-ranks are doubled to integers, then the rank-sum distribution is
    built by convolution; the p-value doubles the smaller tail (capped at 1).
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    top = 0
    for r in doubled:
        counts[r : top + r + 1] += counts[0 : top + 1]
        top += r
    w2 = int(round(2.0 * w_plus))
    n_all = 2.0 ** len(doubled)
    lo = counts[: w2 + 1].sum() / n_all
    hi = counts[w2:].sum() / n_all
    return min(1.0, 2.0 * min(lo, hi))


def wilcoxon_signed_rank(a, b, continuity_correction: bool = True) -> WilcoxonResult:
    """Two-sided paired Wilcoxon signed-rank test.

    Zero differences are dropped and tied absolute differences share
    mid-ranks. Up to 25 effective pairs the p-value comes from the exact
    sign-assignment distribution (a normal approximation is off by more than
    the test's own resolution there); beyond that, the normal approximation
    with tie-corrected variance and optional continuity correction. The
    statistic is the rank sum of positive differences.
    """
    a = _as_1d_float(a, "a")
    b = _as_1d_float(b, "b")
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    diff = a - b
    diff = diff[diff != 0.0]
    n = diff.size
    if n == 0:
        return WilcoxonResult(statistic=0.0, p_value=1.0, n_effective=0)
    ranks = midranks(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    if n <= _WILCOXON_EXACT_MAX_N:
        return WilcoxonResult(
            statistic=w_plus, p_value=_wilcoxon_exact_p(ranks, w_plus), n_effective=n
        )
    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(diff), return_counts=True)
    tie_term = float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts))
    sigma2 = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    if sigma2 <= 0.0:
        return WilcoxonResult(statistic=w_plus, p_value=1.0, n_effective=n)
    z = w_plus - mu
    if continuity_correction and z != 0.0:
        z -= 0.5 * math.copysign(1.0, z)
    p = 2.0 * _normal_sf(abs(z) / math.sqrt(sigma2))
    return WilcoxonResult(statistic=w_plus, p_value=min(1.0, p), n_effective=n)


def cliffs_delta(a, b) -> CliffsDelta:
    """Cliff's delta effect size with the conventional magnitude labels."""
    a = _as_1d_float(a, "a")
    b = _as_1d_float(b, "b")
    if a.size == 0 or b.size == 0:
        raise ValueError("cliffs_delta requires non-empty samples")
    sb = np.sort(b)
    greater = np.searchsorted(sb, a, side="left").sum()  # b values strictly below
    less_eq = np.searchsorted(sb, a, side="right").sum()
    less = sb.size * a.size - less_eq  # b values strictly above
    delta = (float(greater) - float(less)) / (a.size * b.size)
    mag = abs(delta)
    if mag < 0.147:
        magnitude = MAGNITUDE_NEGLIGIBLE
    elif mag < 0.33:
        magnitude = MAGNITUDE_SMALL
    elif mag < 0.474:
        magnitude = MAGNITUDE_MEDIUM
    else:
        magnitude = MAGNITUDE_LARGE
    return CliffsDelta(delta=delta, magnitude=magnitude)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 201):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            break
    return h


def _betainc_reg(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_test_one_sample(values, mu: float = 1.0) -> tuple[float, float]:
    """Plain two-sided one-sample t-test against mean ``mu``.

    Returns (t statistic, p-value). Interpretation is left to the caller.
    """
    values = _as_1d_float(values, "values")
    n = values.size
    if n < 2:
        raise ValueError("t-test requires at least 2 observations")
    mean = float(values.mean())
    sd = float(values.std(ddof=1))
    if sd == 0.0:
        return (0.0 if mean == mu else math.inf * math.copysign(1.0, mean - mu), 0.0 if mean != mu else 1.0)
    t = (mean - mu) / (sd / math.sqrt(n))
    dof = n - 1
    p = _betainc_reg(dof / 2.0, 0.5, dof / (dof + t * t))
    return t, min(1.0, max(0.0, p))
