import numpy as np
import pytest

from hdp.dataset import DefectDataset
from hdp.experiment import (
    AucGrid,
    compare_wpdp_hdp,
    coverage_report,
    cpdp,
    domain_agnostic_distance,
    domain_agnostic_select,
    ensemble_hdp,
    feasibility_curve,
    fold_rng,
    hdp_pairwise,
    run_hdp_grid,
    run_wpdp_all,
    stratified_folds,
    wpdp,
)

from conftest import latent_dataset, make_corpus, make_hdp_pair


def _predictable_dataset(seed=0, n=240):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = X[:, 0] > 0.1
    return DefectDataset(f"easy{seed}", "g", ("a", "b", "c"), X, y)


# ---------------------------------------------------------------------------
# folds

def test_stratified_folds_balance():
    rng = np.random.default_rng(90)
    labels = rng.random(203) < 0.3
    for k in (2, 5, 10):
        fold = stratified_folds(labels, k, np.random.default_rng(1))
        assert fold.min() >= 0 and fold.max() < k
        for cls in (True, False):
            counts = np.bincount(fold[labels == cls], minlength=k)
            assert counts.max() - counts.min() <= 1


def test_stratified_folds_deterministic():
    labels = np.arange(50) % 3 == 0
    f1 = stratified_folds(labels, 2, fold_rng(7, "proj", 3))
    f2 = stratified_folds(labels, 2, fold_rng(7, "proj", 3))
    assert np.array_equal(f1, f2)
    f3 = stratified_folds(labels, 2, fold_rng(7, "proj", 4))
    assert not np.array_equal(f1, f3)


# ---------------------------------------------------------------------------
# wpdp / cpdp

def test_wpdp_predictable_dataset():
    d = _predictable_dataset()
    cells = wpdp(d, "lr", seed=1, n_repeats=3, n_folds=2)
    assert cells.shape == (3, 2)
    assert np.all(cells > 0.95)


def test_wpdp_deterministic():
    d = _predictable_dataset(1)
    a = wpdp(d, "lr", seed=5, n_repeats=2, n_folds=2)
    b = wpdp(d, "lr", seed=5, n_repeats=2, n_folds=2)
    assert np.array_equal(a, b)


def test_wpdp_single_class_fold_is_nan(caplog):
    X = np.random.default_rng(2).normal(size=(30, 2))
    y = np.zeros(30, dtype=bool)
    y[0] = True  # 2-fold stratification leaves one fold without a buggy row
    d = DefectDataset("one", "g", ("a", "b"), X, y)
    cells = wpdp(d, "lr", seed=0, n_repeats=2, n_folds=2)
    assert np.isnan(cells).sum() >= 2


def test_wpdp_ten_by_ten_mode():
    d = _predictable_dataset(3)
    cells = wpdp(d, "lr", seed=2, n_repeats=2, n_folds=10)
    assert cells.shape == (2, 10)
    assert np.nanmean(cells) > 0.9


def test_cpdp_shared_schema():
    a = _predictable_dataset(4)
    b = _predictable_dataset(5)
    auc = cpdp(a, b, "lr", seed=0)
    assert auc is not None and auc > 0.9


def test_cpdp_no_common_metrics():
    a = _predictable_dataset(6)
    X = np.random.default_rng(7).normal(size=(50, 2))
    b = DefectDataset("other", "g", ("x", "y"), X, X[:, 0] > 0)
    assert cpdp(a, b, "lr") is None


def test_cpdp_partial_overlap_uses_shared_columns():
    rng = np.random.default_rng(8)
    Xa = rng.normal(size=(150, 3))
    ya = Xa[:, 0] > 0
    a = DefectDataset("a", "g", ("shared", "only_a", "extra"), Xa, ya)
    Xb = rng.normal(size=(100, 2))
    yb = Xb[:, 1] > 0
    b = DefectDataset("b", "g", ("only_b", "shared"), Xb, yb)
    auc = cpdp(a, b, "lr")
    assert auc is not None  # trained on the single shared column


def test_cpdp_self_at_least_wpdp_mean():
    d = _predictable_dataset(9)
    self_auc = cpdp(d, d, "lr", seed=1)
    mean_wpdp = float(np.nanmean(wpdp(d, "lr", seed=1, n_repeats=3, n_folds=2)))
    assert self_auc >= mean_wpdp - 0.02


# ---------------------------------------------------------------------------
# pairwise heterogeneous prediction

def test_hdp_pairwise_synthetic_pair():
    # cutoff 0.01: a true same-distribution edge dies w.p. ~0.01 per fold,
    # so nearly every fold matching stays feasible
    src, tgt, _ = make_hdp_pair(seed=91, n_rows=260)
    summary, cells = hdp_pairwise(
        src, tgt, fraction=0.5, cutoff=0.01, n_repeats=5, seed=3
    )
    assert cells.shape == (5, 2)
    assert summary.n_total == 10
    assert summary.n_feasible >= 8
    assert summary.mean_auc is not None and summary.mean_auc > 0.85


def test_hdp_pairwise_dissimilar_pair_all_nan():
    rng = np.random.default_rng(92)
    src = DefectDataset(
        "s", "g", ("a", "b"),
        np.column_stack([rng.uniform(0, 1, 120), rng.uniform(2, 3, 120)]),
        rng.random(120) < 0.4,
    )
    tgt = DefectDataset(
        "t", "g", ("x", "y"),
        np.column_stack([rng.uniform(100, 101, 120), rng.uniform(500, 600, 120)]),
        rng.random(120) < 0.4,
    )
    summary, cells = hdp_pairwise(src, tgt, fraction=1.0, n_repeats=3, seed=0)
    assert summary.n_feasible == 0
    assert np.isnan(cells).all()
    assert summary.mean_auc is None


def test_grid_matches_pairwise_cells():
    datasets = make_corpus(seed=93, n_rows=120)[:3]
    grid = run_hdp_grid(datasets, fraction=0.4, n_repeats=3, seed=11, jobs=1)
    for src in datasets:
        for tgt in datasets:
            if src.project_name == tgt.project_name:
                continue
            _, cells = hdp_pairwise(
                src, tgt, fraction=0.4, n_repeats=3, seed=11
            )
            got = grid.cells[(src.project_name, tgt.project_name)]
            assert np.array_equal(got, cells, equal_nan=True)


def test_grid_parallel_equals_serial():
    datasets = make_corpus(seed=94, n_rows=100)[:4]
    kwargs = dict(fraction=0.4, n_repeats=4, seed=13, rep_chunk=2)
    serial = run_hdp_grid(datasets, jobs=1, **kwargs)
    parallel = run_hdp_grid(datasets, jobs=4, **kwargs)
    assert serial.cells.keys() == parallel.cells.keys()
    for key in serial.cells:
        assert np.array_equal(serial.cells[key], parallel.cells[key], equal_nan=True)


def test_run_wpdp_all_parallel_equals_serial():
    datasets = make_corpus(seed=95, n_rows=90)[:3]
    a = run_wpdp_all(datasets, "lr", seed=3, n_repeats=4, n_folds=2, jobs=1, rep_chunk=2)
    b = run_wpdp_all(datasets, "lr", seed=3, n_repeats=4, n_folds=2, jobs=3, rep_chunk=2)
    for name in a:
        assert np.array_equal(a[name], b[name], equal_nan=True)


def test_rf_classifier_path_runs():
    src, tgt, _ = make_hdp_pair(seed=96, n_rows=150)
    from hdp.model import Hyperparameters

    summary, cells = hdp_pairwise(
        src, tgt, fraction=0.5, classifier="rf", n_repeats=2, seed=4,
        hp=Hyperparameters(rf_trees=15),
    )
    assert summary.n_total == 4
    feasible = cells[~np.isnan(cells)]
    assert feasible.size == 0 or np.all((feasible >= 0) & (feasible <= 1))


# ---------------------------------------------------------------------------
# grid-level analyses

def _toy_grid(missing_map, n_repeats=4):
    """Grid over projects p0..p2 with given per-pair NaN counts."""
    names = ("p0", "p1", "p2")
    rng = np.random.default_rng(0)
    cells = {}
    for s in names:
        for t in names:
            if s == t:
                continue
            arr = rng.uniform(0.4, 0.9, size=(n_repeats, 2))
            k = missing_map.get((s, t), 0)
            flat = arr.ravel()
            flat[:k] = np.nan
            cells[(s, t)] = flat.reshape(n_repeats, 2)
    return AucGrid(names, names, n_repeats, cells, {})


def test_feasibility_curve_monotone():
    grid = _toy_grid({("p0", "p1"): 8, ("p1", "p0"): 3, ("p2", "p0"): 1})
    curve = feasibility_curve(grid, [0.0, 0.25, 0.5, 0.99, 1.0])
    counts = [c for _, c in curve]
    assert counts == sorted(counts)
    assert curve[-1][1] == 6  # every pair feasible when all NaN allowed


def test_feasibility_curve_thresholds():
    grid = _toy_grid({("p0", "p1"): 8, ("p1", "p0"): 4})  # of 8 cells each
    curve = dict(feasibility_curve(grid, [0.0, 0.5, 1.0]))
    assert curve[0.0] == 4  # fully clean pairs only
    assert curve[0.5] == 5  # the half-NaN pair joins
    assert curve[1.0] == 6


def test_compare_all_ties_when_hdp_equals_wpdp():
    datasets = make_corpus(seed=97, n_rows=110)[:3]
    names = [d.project_name for d in datasets]
    wpdp_cells = {
        d.project_name: wpdp(d, "lr", seed=5, n_repeats=4, n_folds=2) for d in datasets
    }
    cells = {}
    for s in names:
        for t in names:
            if s != t:
                cells[(s, t)] = wpdp_cells[t].copy()
    grid = AucGrid(tuple(names), tuple(names), 4, cells, {})
    records = compare_wpdp_hdp(grid, wpdp_cells, alpha=0.05, nan_threshold=0.99)
    for r in records:
        assert r.win == 0 and r.loss == 0
        assert r.tie == len(names) - 1
        assert r.cliffs is not None and abs(r.cliffs.delta) < 0.3


def test_compare_win_tie_loss_totals_match_threshold():
    grid = _toy_grid({("p0", "p1"): 8})  # that pair is fully missing
    wpdp_cells = {
        t: np.random.default_rng(1).uniform(0.6, 0.9, size=(4, 2))
        for t in grid.targets
    }
    records = compare_wpdp_hdp(grid, wpdp_cells, nan_threshold=0.5)
    by_target = {r.target: r for r in records}
    assert by_target["p1"].win + by_target["p1"].tie + by_target["p1"].loss == 1
    assert by_target["p0"].win + by_target["p0"].tie + by_target["p0"].loss == 2


def test_compare_detects_worse_hdp():
    rng = np.random.default_rng(98)
    names = ("p0", "p1")
    wpdp_cells = {n: rng.uniform(0.8, 0.95, size=(20, 2)) for n in names}
    cells = {
        ("p0", "p1"): wpdp_cells["p1"] - 0.3,
        ("p1", "p0"): wpdp_cells["p0"] - 0.3,
    }
    grid = AucGrid(names, names, 20, cells, {})
    for r in compare_wpdp_hdp(grid, wpdp_cells):
        assert (r.win, r.tie, r.loss) == (0, 0, 1)
        assert r.cliffs.delta < -0.9


# ---------------------------------------------------------------------------
# ensemble

def test_ensemble_single_source_equals_pairwise():
    src, tgt, _ = make_hdp_pair(seed=99, n_rows=200)
    res = ensemble_hdp([src], tgt, fraction=0.5, cutoff=0.01, seed=1)
    assert res.feasible_sources == (src.project_name,)
    assert res.ensemble_auc == res.pairwise_mean_auc
    assert res.ensemble_auc == res.per_source_auc[src.project_name]


def test_ensemble_no_feasible_sources():
    rng = np.random.default_rng(100)
    src = DefectDataset(
        "s", "g", ("a",), rng.uniform(0, 1, 100)[:, None], rng.random(100) < 0.5
    )
    tgt = DefectDataset(
        "t", "g", ("x",), rng.uniform(50, 60, 100)[:, None], rng.random(100) < 0.5
    )
    res = ensemble_hdp([src], tgt, fraction=1.0)
    assert res.feasible_sources == ()
    assert res.ensemble_auc is None and res.pairwise_mean_auc is None


def test_ensemble_multiple_sources_reasonable():
    datasets = make_corpus(seed=101, n_rows=220)
    tgt = datasets[0]
    sources = datasets[1:]
    res = ensemble_hdp(sources, tgt, fraction=0.4, seed=2)
    assert len(res.feasible_sources) >= 2
    assert 0.0 <= res.ensemble_auc <= 1.0
    # votes average across sources: ensemble should hold up against the mean
    assert res.ensemble_auc >= res.pairwise_mean_auc - 0.05


# ---------------------------------------------------------------------------
# domain-agnostic selection

def test_domain_agnostic_identical_dataset_distance_zero():
    d = latent_dataset("d", "g", np.random.default_rng(102), 150)
    clone = DefectDataset("clone", "g", d.metric_names, d.instances, d.labels)
    assert domain_agnostic_distance(d, clone) == pytest.approx(0.0, abs=1e-12)


def test_domain_agnostic_missing_metrics_none():
    rng = np.random.default_rng(103)
    a = latent_dataset("a", "g", rng, 100, metric_names=("m1", "m2", "m3", "m4", "m5"))
    b = latent_dataset("b", "g", rng, 100, metric_names=("z1", "z2", "z3", "z4", "z5"))
    assert domain_agnostic_distance(a, b) is None


def test_domain_agnostic_select_prefers_clone():
    rng = np.random.default_rng(104)
    target = latent_dataset("t", "g", rng, 200)
    clone = DefectDataset("clone", "g", target.metric_names, target.instances, target.labels)
    other = latent_dataset("other", "g", rng, 200, noise=2.5)
    chosen, distances = domain_agnostic_select([other, clone], target)
    assert chosen.project_name == "clone"
    assert distances["clone"] == pytest.approx(0.0, abs=1e-12)
    assert distances["other"] is None or distances["other"] >= 0.0


def test_domain_agnostic_select_none_when_no_candidates_usable():
    rng = np.random.default_rng(105)
    target = latent_dataset("t", "g", rng, 100)
    cand = latent_dataset("c", "g", rng, 100, metric_names=("z1", "z2", "z3", "z4", "z5"))
    chosen, distances = domain_agnostic_select([cand], target)
    assert chosen is None
    assert distances["c"] is None


# ---------------------------------------------------------------------------
# coverage

def test_coverage_all_feasible_grid():
    datasets = make_corpus(seed=106, n_rows=80)
    names = tuple(d.project_name for d in datasets)
    groups = {d.project_name: d.group_name for d in datasets}
    rng = np.random.default_rng(0)
    cells = {
        (s, t): rng.uniform(0.5, 0.9, size=(3, 2))
        for s in names for t in names if s != t
    }
    grid = AucGrid(names, names, 3, cells, {})
    wpdp_cells = {n: rng.uniform(0.7, 0.95, size=(3, 2)) for n in names}
    cov = coverage_report(grid, groups, wpdp_cells, nan_threshold=0.99)
    assert cov.group_names == ("alpha", "beta")
    assert cov.pair_counts[("alpha", "alpha")] == (6, 6)  # 3*2 self pairs
    assert cov.pair_counts[("alpha", "beta")] == (9, 9)
    for g in cov.group_names:
        assert cov.coverage_pct[g] == 100.0
        assert cov.wpdp_median[g] is not None
        assert cov.hdp_median[g] is not None


def test_coverage_partial_feasibility():
    names = ("p0", "p1", "p2")
    groups = {"p0": "g1", "p1": "g1", "p2": "g2"}
    rng = np.random.default_rng(1)
    cells = {}
    for s in names:
        for t in names:
            if s == t:
                continue
            arr = rng.uniform(0.4, 0.8, size=(2, 2))
            if (s, t) in {("p0", "p2"), ("p1", "p2")}:
                arr[:] = np.nan  # g1 cannot reach p2
            cells[(s, t)] = arr
    grid = AucGrid(names, names, 2, cells, {})
    cov = coverage_report(grid, groups, None, nan_threshold=0.5)
    assert cov.pair_counts[("g1", "g2")] == (0, 2)
    assert cov.coverage_pct["g1"] == pytest.approx(100.0 * 2 / 3)
    assert cov.coverage_pct["g2"] == pytest.approx(100.0 * 2 / 3)
    assert cov.wpdp_median["g1"] is None
