import dataclasses

import numpy as np
import pytest

from hdp.model import (
    ForestModel,
    Hyperparameters,
    LogisticModel,
    fit_logistic,
    fit_random_forest,
)
from hdp.stats import auc_roc


# ---------------------------------------------------------------------------
# oracle: plain gradient ascent on the same standardized log-likelihood

def oracle_logistic_gd(X, y, iters=60_000, lr=1.0):
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = np.hstack([np.ones((X.shape[0], 1)), (X - mean) / scale])
    beta = np.zeros(Z.shape[1])
    step = lr / X.shape[0]
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-(Z @ beta)))
        beta = beta + step * (Z.T @ (y - p))
    return beta[0], beta[1:]


def _well_behaved_problem(rng, n=150, p=3):
    """Moderate coefficients and noisy labels so the MLE is finite."""
    X = rng.normal(size=(n, p))
    true = rng.uniform(-1.0, 1.0, size=p)
    logits = X @ true + rng.uniform(-0.3, 0.3)
    prob = 1.0 / (1.0 + np.exp(-logits))
    y = rng.random(n) < prob
    if y.all() or not y.any():
        y[0] = ~y[0]
    return X, y


# ---------------------------------------------------------------------------
# logistic regression

def test_lr_separable_orders_probabilities():
    rng = np.random.default_rng(60)
    X = np.concatenate([rng.normal(-3, 0.5, 50), rng.normal(3, 0.5, 50)])[:, None]
    y = np.arange(100) >= 50
    m = fit_logistic(X, y)
    assert auc_roc(m.predict_proba(X), y) == 1.0


def test_lr_intercept_only_base_rate():
    X = np.full((40, 3), 7.0)  # all features constant
    y = np.arange(40) < 10  # 25% buggy
    m = fit_logistic(X, y)
    assert np.allclose(m.predict_proba(X), 0.25, atol=1e-6)


def test_lr_matches_gradient_oracle():
    rng = np.random.default_rng(61)
    for _ in range(50):
        X, y = _well_behaved_problem(rng)
        m = fit_logistic(X, y)
        b0, coef = oracle_logistic_gd(X, y)
        assert m.converged
        assert abs(m.intercept - b0) < 1e-4
        assert np.max(np.abs(m.coef - coef)) < 1e-4


def test_lr_affine_rescaling_invariance():
    rng = np.random.default_rng(62)
    X, y = _well_behaved_problem(rng, n=200, p=4)
    base = fit_logistic(X, y).predict_proba(X)
    X2 = X.copy()
    X2[:, 2] = X2[:, 2] * 1000.0 - 77.0
    rescaled = fit_logistic(X2, y).predict_proba(X2)
    assert np.max(np.abs(base - rescaled)) < 1e-6


def test_lr_feature_order_invariance():
    rng = np.random.default_rng(63)
    X, y = _well_behaved_problem(rng, n=120, p=4)
    perm = [2, 0, 3, 1]
    base = fit_logistic(X, y)
    permuted = fit_logistic(X[:, perm], y)
    assert np.allclose(base.coef[perm], permuted.coef, atol=1e-8)
    assert np.max(np.abs(base.predict_proba(X) - permuted.predict_proba(X[:, perm]))) < 1e-9


def test_lr_zero_model_predicts_half():
    m = LogisticModel(
        coef=np.zeros(2), intercept=0.0, mean=np.zeros(2), scale=np.ones(2),
        feature_count=2, converged=True, n_iter=0,
    )
    assert np.all(m.predict_proba(np.random.default_rng(0).normal(size=(5, 2))) == 0.5)


def test_lr_probability_from_fitted_coefficients():
    rng = np.random.default_rng(64)
    X, y = _well_behaved_problem(rng, n=100, p=2)
    m = fit_logistic(X, y)
    x = np.array([[0.3, -1.2]])
    z = (x[0] - m.mean) / np.where(m.scale > 0, m.scale, 1.0)
    want = 1.0 / (1.0 + np.exp(-(float(z @ m.coef) + m.intercept)))
    assert m.predict_proba(x)[0] == pytest.approx(want, abs=1e-12)


def test_lr_single_class_error():
    with pytest.raises(ValueError, match="single class"):
        fit_logistic(np.ones((4, 2)), np.array([True] * 4))


def test_lr_dimension_mismatch_on_predict():
    rng = np.random.default_rng(65)
    X, y = _well_behaved_problem(rng, n=50, p=3)
    m = fit_logistic(X, y)
    with pytest.raises(ValueError, match="feature columns"):
        m.predict_proba(X[:, :2])


# ---------------------------------------------------------------------------
# random forest

def test_rf_single_class_error():
    with pytest.raises(ValueError, match="single class"):
        fit_random_forest(np.random.default_rng(0).normal(size=(6, 2)),
                          np.zeros(6, dtype=bool))


def test_rf_deterministic_given_seed():
    rng = np.random.default_rng(66)
    X = rng.normal(size=(150, 4))
    y = X[:, 1] > 0.2
    hp = Hyperparameters(rf_trees=30, rf_seed=9)
    m1 = fit_random_forest(X, y, hp)
    m2 = fit_random_forest(X, y, hp)
    assert np.array_equal(m1.predict_proba(X), m2.predict_proba(X))
    m3 = fit_random_forest(X, y, dataclasses.replace(hp, rf_seed=10))
    assert not np.array_equal(m1.predict_proba(X), m3.predict_proba(X))


def test_rf_learns_threshold_rule():
    rng = np.random.default_rng(67)
    X = rng.normal(size=(500, 3))
    y = X[:, 0] > 0.0
    m = fit_random_forest(X, y, Hyperparameters(rf_trees=50, rf_seed=1))
    Xt = rng.normal(size=(300, 3))
    yt = Xt[:, 0] > 0.0
    assert auc_roc(m.predict_proba(Xt), yt) > 0.95


def test_rf_probabilities_bounded():
    rng = np.random.default_rng(68)
    X = rng.normal(size=(80, 2))
    y = rng.random(80) < 0.4
    if y.all() or not y.any():
        y[0] = ~y[0]
    probs = fit_random_forest(X, y, Hyperparameters(rf_trees=20, rf_seed=2)).predict_proba(X)
    assert np.all(probs >= 0.0) and np.all(probs <= 1.0)


def test_rf_pure_region_predicts_one():
    # cleanly separated data grows pure leaves, so a deep-in-region point is 1.0
    X = np.concatenate([np.full((30, 1), -5.0) + np.arange(30)[:, None] * 0.01,
                        np.full((30, 1), 5.0) + np.arange(30)[:, None] * 0.01])
    y = np.arange(60) >= 30
    m = fit_random_forest(X, y, Hyperparameters(rf_trees=40, rf_seed=3))
    assert m.predict_proba(np.array([[10.0]]))[0] == 1.0
    assert m.predict_proba(np.array([[-10.0]]))[0] == 0.0


def test_rf_default_tree_count():
    assert Hyperparameters().rf_trees == 100


def test_rf_dimension_mismatch_on_predict():
    rng = np.random.default_rng(69)
    X = rng.normal(size=(40, 3))
    y = X[:, 0] > 0
    m = fit_random_forest(X, y, Hyperparameters(rf_trees=5, rf_seed=0))
    with pytest.raises(ValueError, match="feature columns"):
        m.predict_proba(X[:, :2])
