"""Binary classifiers exposing probability-of-defect scores: logistic
regression fit by iteratively reweighted least squares, and a random forest
of CART trees grown by the kernel backend.

Both fits are deterministic given their inputs (the forest given its seed),
so experiment grids are reproducible regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

__all__ = [
    "Hyperparameters",
    "LogisticModel",
    "ForestModel",
    "fit_logistic",
    "fit_random_forest",
]

_SCORE_CAP = 30.0  # |linear score| bound during IRLS; quasi-separation guard


@dataclass(frozen=True)
class Hyperparameters:
    lr_max_iter: int = 100
    lr_tol: float = 1e-6
    lr_ridge: float = 1e-8
    rf_trees: int = 100
    rf_min_leaf: int = 1
    rf_seed: int = 0


@dataclass(frozen=True)
class LogisticModel:
    kind = "lr"
    coef: np.ndarray  # per standardized feature
    intercept: float
    mean: np.ndarray
    scale: np.ndarray  # 0 marks a constant column (contributes nothing)
    feature_count: int
    converged: bool
    n_iter: int

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise ValueError(
                f"expected {self.feature_count} feature columns, got shape {X.shape}"
            )
        safe = np.where(self.scale > 0.0, self.scale, 1.0)
        z = (X - self.mean) / safe
        z[:, self.scale == 0.0] = 0.0
        score = z @ self.coef + self.intercept
        return _sigmoid(score)


@dataclass(frozen=True)
class ForestModel:
    kind = "rf"
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    offsets: np.ndarray  # root index per tree, length n_trees + 1
    feature_count: int
    n_trees: int
    seed: int

    def predict_proba(self, X) -> np.ndarray:
        X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise ValueError(
                f"expected {self.feature_count} feature columns, got shape {X.shape}"
            )
        return kernels.predict_forest(
            self.feature, self.threshold, self.left, self.right,
            self.value, self.offsets, X,
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _validate_xy(X, y):
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=bool)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if y.all() or not y.any():
        raise ValueError("training labels contain a single class")
    return X, y


def fit_logistic(X, y, hp: Hyperparameters = Hyperparameters()) -> LogisticModel:
    """Maximum-likelihood logistic regression via IRLS.

    Features are standardized internally (constant columns map to 0); a small
    ridge term keeps the normal equations solvable on singular designs, and
    linear scores are capped so separated data cannot overflow. If the
    coefficient change never drops below tolerance the last iterate is
    returned with converged=False.
    """
    X, y = _validate_xy(X, y)
    n, p = X.shape
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    safe = np.where(scale > 0.0, scale, 1.0)
    Z = (X - mean) / safe
    Z[:, scale == 0.0] = 0.0
    design = np.hstack([np.ones((n, 1)), Z])

    beta = np.zeros(p + 1)
    yf = y.astype(np.float64)
    converged = False
    it = 0
    for it in range(1, hp.lr_max_iter + 1):
        score = np.clip(design @ beta, -_SCORE_CAP, _SCORE_CAP)
        prob = _sigmoid(score)
        w = prob * (1.0 - prob)
        # working response for the weighted least-squares step
        z = score + (yf - prob) / np.maximum(w, 1e-12)
        wd = design * w[:, None]
        normal = design.T @ wd + hp.lr_ridge * np.eye(p + 1)
        rhs = design.T @ (w * z)
        new_beta = np.linalg.solve(normal, rhs)
        delta = float(np.max(np.abs(new_beta - beta)))
        beta = new_beta
        if delta < hp.lr_tol:
            converged = True
            break
    return LogisticModel(
        coef=beta[1:],
        intercept=float(beta[0]),
        mean=mean,
        scale=scale,
        feature_count=p,
        converged=converged,
        n_iter=it,
    )


def fit_random_forest(X, y, hp: Hyperparameters = Hyperparameters()) -> ForestModel:
    """Random forest of CART trees: bootstrap resamples of size n, Gini
    splits over sqrt(p) candidate features per node, grown to purity (or the
    minimum leaf size). Fully reproducible from hp.rf_seed."""
    X, y = _validate_xy(X, y)
    n, p = X.shape
    y8 = y.astype(np.uint8)
    n_candidates = max(1, int(np.sqrt(p)))
    root = np.random.SeedSequence(hp.rf_seed)
    features, thresholds, lefts, rights, values = [], [], [], [], []
    offsets = [0]
    for child in root.spawn(hp.rf_trees):
        boot_ss, feat_ss = child.spawn(2)
        rng = np.random.default_rng(boot_ss)
        boot = rng.integers(0, n, size=n, dtype=np.int64)
        tree_seed = int(feat_ss.generate_state(1, np.uint64)[0])
        f, t, l, r, v = kernels.grow_tree(
            X, y8, boot, n_candidates, hp.rf_min_leaf, tree_seed
        )
        base = offsets[-1]
        l = l.copy()
        r = r.copy()
        l[l >= 0] += base
        r[r >= 0] += base
        features.append(f)
        thresholds.append(t)
        lefts.append(l)
        rights.append(r)
        values.append(v)
        offsets.append(base + f.size)
    return ForestModel(
        feature=np.concatenate(features),
        threshold=np.concatenate(thresholds),
        left=np.concatenate(lefts),
        right=np.concatenate(rights),
        value=np.concatenate(values),
        offsets=np.asarray(offsets, dtype=np.int64),
        feature_count=p,
        n_trees=hp.rf_trees,
        seed=hp.rf_seed,
    )
