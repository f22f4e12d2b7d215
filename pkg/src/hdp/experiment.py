"""Experiment runners: within-project and cross-project baselines, the
pairwise heterogeneous prediction grid, feasibility/coverage analyses,
ensemble voting, and domain-agnostic model selection.

Every stochastic step draws from a seed derived deterministically from the
global seed and stable names (project, replication, fold), so grids come out
bit-identical regardless of execution order or parallelism. Fold seeds depend
only on the target project and replication: the within-project baseline and
the heterogeneous runs see the same target folds, which is what makes their
AUC samples pairable.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import multiprocessing
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import DefectDataset
from .matching import (
    POLICY_ALL_SOURCE,
    ScoreMatrix,
    _ks_p_matrix,
    apply_cutoff,
    max_weight_matching,
)
from .model import Hyperparameters, fit_logistic, fit_random_forest
from .selection import SelectedFeatures, select_top
from .stats import CliffsDelta, auc_roc, cliffs_delta, spearman, wilcoxon_signed_rank

log = logging.getLogger("hdp")

MISSING = float("nan")

CLASSIFIER_LR = "lr"
CLASSIFIER_RF = "rf"

__all__ = [
    "MISSING",
    "CLASSIFIER_LR",
    "CLASSIFIER_RF",
    "AucGrid",
    "PairSummary",
    "ComparisonRecord",
    "EnsembleResult",
    "CoverageReport",
    "derive_seed",
    "stratified_folds",
    "wpdp",
    "cpdp",
    "hdp_pairwise",
    "run_hdp_grid",
    "run_wpdp_all",
    "feasibility_curve",
    "compare_wpdp_hdp",
    "ensemble_hdp",
    "domain_agnostic_distance",
    "domain_agnostic_select",
    "coverage_report",
]


# ---------------------------------------------------------------------------
# seeding and folds

def derive_seed(global_seed: int, *parts) -> np.random.SeedSequence:
    """Deterministic child seed keyed by stable string/int parts."""
    key = tuple(zlib.crc32(str(p).encode("utf-8")) for p in parts)
    return np.random.SeedSequence(int(global_seed), spawn_key=key)


def _seed_int(global_seed: int, *parts) -> int:
    return int(derive_seed(global_seed, *parts).generate_state(1, np.uint64)[0])


def fold_rng(global_seed: int, target_name: str, rep: int) -> np.random.Generator:
    """Fold shuffling stream shared by every analysis of the same target."""
    return np.random.default_rng(derive_seed(global_seed, "folds", target_name, rep))


def stratified_folds(labels, n_folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per instance; each class is shuffled then dealt round-robin,
    so fold class ratios track the dataset's."""
    labels = np.asarray(labels, dtype=bool)
    fold = np.empty(labels.size, dtype=np.int64)
    for cls in (True, False):  # buggy class first
        idx = np.nonzero(labels == cls)[0]
        perm = rng.permutation(idx)
        fold[perm] = np.arange(perm.size) % n_folds
    return fold


def _fit(classifier: str, X, y, hp: Hyperparameters):
    if classifier == CLASSIFIER_LR:
        return fit_logistic(X, y, hp)
    if classifier == CLASSIFIER_RF:
        return fit_random_forest(X, y, hp)
    raise ValueError(f"unknown classifier kind: {classifier!r}")


def _both_classes(y) -> bool:
    return bool(y.any()) and not bool(y.all())


# ---------------------------------------------------------------------------
# result containers

@dataclass(frozen=True)
class PairSummary:
    source: str
    target: str
    n_feasible: int
    n_total: int
    mean_auc: float | None
    feasible_under_threshold: bool


@dataclass
class AucGrid:
    sources: tuple[str, ...]
    targets: tuple[str, ...]
    n_repeats: int
    cells: dict  # (source, target) -> (n_repeats, 2) float array, NaN = infeasible
    config: dict

    def missing_fraction(self, source: str, target: str) -> float:
        arr = self.cells[(source, target)]
        return float(np.isnan(arr).sum()) / arr.size

    def pair_summary(self, source: str, target: str, nan_threshold: float) -> PairSummary:
        arr = self.cells[(source, target)]
        feasible = arr[~np.isnan(arr)]
        return PairSummary(
            source=source,
            target=target,
            n_feasible=int(feasible.size),
            n_total=int(arr.size),
            mean_auc=float(feasible.mean()) if feasible.size else None,
            feasible_under_threshold=self.missing_fraction(source, target) <= nan_threshold,
        )


@dataclass(frozen=True)
class ComparisonRecord:
    target: str
    wpdp_mean: float
    hdp_mean: float | None
    cliffs: CliffsDelta | None
    win: int
    tie: int
    loss: int
    n_feasible_cells: int
    n_possible_cells: int


@dataclass(frozen=True)
class EnsembleResult:
    target: str
    feasible_sources: tuple[str, ...]
    ensemble_auc: float | None
    pairwise_mean_auc: float | None
    per_source_auc: dict


@dataclass(frozen=True)
class CoverageReport:
    group_names: tuple[str, ...]
    pair_counts: dict  # (source group, target group) -> (feasible, total)
    wpdp_median: dict  # source group -> median AUC or None
    hdp_median: dict  # source group -> median AUC of feasible cells or None
    coverage_pct: dict  # source group -> % of all datasets predictable


# ---------------------------------------------------------------------------
# within-project and same-schema cross-project baselines

def wpdp(
    dataset: DefectDataset,
    classifier: str = CLASSIFIER_LR,
    seed: int = 0,
    n_repeats: int = 100,
    n_folds: int = 2,
    hp: Hyperparameters = Hyperparameters(),
) -> np.ndarray:
    """Repeated stratified cross-validation on one project.

    Returns an (n_repeats, n_folds) AUC array; a fold whose train or test
    side degenerates to a single class is NaN and logged.
    """
    return _wpdp_range(dataset, classifier, seed, 0, n_repeats, n_folds, hp)


def cpdp(
    source: DefectDataset,
    target: DefectDataset,
    classifier: str = CLASSIFIER_LR,
    seed: int = 0,
    hp: Hyperparameters = Hyperparameters(),
) -> float | None:
    """Train on the metrics both projects share by name, test once on the
    whole target. None when no metric names are shared."""
    common = [n for n in source.metric_names if n in target.metric_names]
    if not common:
        return None
    Xs = source.instances[:, [source.metric_names.index(n) for n in common]]
    Xt = target.instances[:, [target.metric_names.index(n) for n in common]]
    hp_run = dataclasses.replace(
        hp, rf_seed=_seed_int(seed, "clf-cpdp", classifier,
                              source.project_name, target.project_name),
    )
    model = _fit(classifier, Xs, source.labels, hp_run)
    return auc_roc(model.predict_proba(Xt), target.labels)


# ---------------------------------------------------------------------------
# the heterogeneous prediction core

@dataclass
class _SourceCtx:
    dataset: DefectDataset
    selected: SelectedFeatures
    sorted_cols: list  # selected columns pre-sorted for KS


def _prepare_source(source: DefectDataset, fraction: float) -> _SourceCtx:
    selected = select_top(source, fraction=fraction)
    sorted_cols = [np.sort(source.instances[:, j]) for j in selected.column_indices]
    return _SourceCtx(source, selected, sorted_cols)


def _hdp_cell(
    ctx: _SourceCtx,
    target: DefectDataset,
    test_rows: np.ndarray,
    tgt_sorted: list,
    test_labels: np.ndarray,
    cutoff: float,
    policy: str,
    classifier: str,
    hp: Hyperparameters,
    lr_cache: dict,
) -> float:
    """One grid cell: match against the fold, train on the source restricted
    to the matched metrics, score the fold. NaN when matching is infeasible."""
    scores = _ks_p_matrix(
        ctx.sorted_cols, tgt_sorted, ctx.dataset.n_instances, test_rows.size
    )
    sm = ScoreMatrix(ctx.selected.metric_names, target.metric_names, scores)
    mm = max_weight_matching(apply_cutoff(sm, cutoff), policy=policy, cutoff=cutoff)
    if not mm.feasible:
        return MISSING
    src_cols = [ctx.selected.column_indices[i] for i in mm.source_indices]
    tgt_cols = list(mm.target_indices)
    key = tuple(src_cols)
    if classifier == CLASSIFIER_LR:
        model = lr_cache.get(key)
        if model is None:
            model = fit_logistic(ctx.dataset.instances[:, src_cols], ctx.dataset.labels, hp)
            lr_cache[key] = model
    else:
        model = _fit(classifier, ctx.dataset.instances[:, src_cols], ctx.dataset.labels, hp)
    probs = model.predict_proba(target.instances[np.ix_(test_rows, tgt_cols)])
    return auc_roc(probs, test_labels)


def _cells_for_target(
    target: DefectDataset,
    source_ctxs: list,
    rep_lo: int,
    rep_hi: int,
    cutoff: float,
    classifier: str,
    seed: int,
    policy: str,
    hp: Hyperparameters,
) -> dict:
    """HDP AUC cells for one target against many sources over a rep range.

    Target folds and their sorted metric columns are built once per
    (rep, fold) and shared across sources.
    """
    n_reps = rep_hi - rep_lo
    out = {ctx.dataset.project_name: np.full((n_reps, 2), MISSING) for ctx in source_ctxs}
    lr_caches = {ctx.dataset.project_name: {} for ctx in source_ctxs}
    y = target.labels
    for rep in range(rep_lo, rep_hi):
        fold = stratified_folds(y, 2, fold_rng(seed, target.project_name, rep))
        for f in (0, 1):
            rows = np.nonzero(fold == f)[0]
            test_labels = y[rows]
            if not _both_classes(test_labels):
                log.warning(
                    "hdp target %s rep %d fold %d: single-class fold, recording NaN",
                    target.project_name, rep + 1, f + 1,
                )
                continue
            tgt_sorted = [
                np.sort(np.ascontiguousarray(target.instances[rows, j]))
                for j in range(target.n_metrics)
            ]
            for ctx in source_ctxs:
                name = ctx.dataset.project_name
                hp_cell = dataclasses.replace(
                    hp,
                    rf_seed=_seed_int(seed, "clf", classifier, name,
                                      target.project_name, rep, f),
                )
                out[name][rep - rep_lo, f] = _hdp_cell(
                    ctx, target, rows, tgt_sorted, test_labels,
                    cutoff, policy, classifier, hp_cell, lr_caches[name],
                )
    return out


def hdp_pairwise(
    source: DefectDataset,
    target: DefectDataset,
    fraction: float = 0.15,
    cutoff: float = 0.05,
    classifier: str = CLASSIFIER_LR,
    n_repeats: int = 100,
    seed: int = 0,
    policy: str = POLICY_ALL_SOURCE,
    nan_threshold: float = 0.99,
    hp: Hyperparameters = Hyperparameters(),
) -> tuple[PairSummary, np.ndarray]:
    """Heterogeneous prediction for one (source, target) pair: matching is
    recomputed against every target fold, so per-replication infeasibility
    shows up as NaN cells."""
    ctx = _prepare_source(source, fraction)
    cells = _cells_for_target(
        target, [ctx], 0, n_repeats, cutoff, classifier, seed, policy, hp
    )[source.project_name]
    feasible = cells[~np.isnan(cells)]
    summary = PairSummary(
        source=source.project_name,
        target=target.project_name,
        n_feasible=int(feasible.size),
        n_total=int(cells.size),
        mean_auc=float(feasible.mean()) if feasible.size else None,
        feasible_under_threshold=float(np.isnan(cells).sum()) / cells.size <= nan_threshold,
    )
    return summary, cells


# ---------------------------------------------------------------------------
# grid runners (parallel over independent tasks, keyed order-free merge)

_WORKER_CTX: dict = {}


def _grid_task(args):
    kind, tgt_idx, rep_lo, rep_hi = args
    ctx = _WORKER_CTX
    datasets: list[DefectDataset] = ctx["datasets"]
    target = datasets[tgt_idx]
    if kind == "hdp":
        source_ctxs = [
            ctx["source_ctxs"][i] for i in range(len(datasets)) if i != tgt_idx
        ]
        cells = _cells_for_target(
            target, source_ctxs, rep_lo, rep_hi,
            ctx["cutoff"], ctx["classifier"], ctx["seed"], ctx["policy"], ctx["hp"],
        )
        log.info(
            "hdp target %s: replications %d-%d done", target.project_name,
            rep_lo + 1, rep_hi,
        )
        return (tgt_idx, rep_lo, cells)
    if kind == "wpdp":
        sub = _wpdp_range(
            target, ctx["classifier"], ctx["seed"], rep_lo, rep_hi,
            ctx["n_folds"], ctx["hp"],
        )
        return (tgt_idx, rep_lo, sub)
    raise ValueError(kind)


def _wpdp_range(dataset, classifier, seed, rep_lo, rep_hi, n_folds, hp):
    X, y = dataset.instances, dataset.labels
    out = np.full((rep_hi - rep_lo, n_folds), MISSING)
    for rep in range(rep_lo, rep_hi):
        fold = stratified_folds(y, n_folds, fold_rng(seed, dataset.project_name, rep))
        for f in range(n_folds):
            test = fold == f
            train = ~test
            if not (_both_classes(y[train]) and _both_classes(y[test])):
                log.warning(
                    "wpdp %s rep %d fold %d: single-class fold, recording NaN",
                    dataset.project_name, rep + 1, f + 1,
                )
                continue
            hp_cell = dataclasses.replace(
                hp, rf_seed=_seed_int(seed, "clf", classifier,
                                      dataset.project_name, dataset.project_name, rep, f),
            )
            model = _fit(classifier, X[train], y[train], hp_cell)
            out[rep - rep_lo, f] = auc_roc(model.predict_proba(X[test]), y[test])
    return out


def _run_tasks(tasks, jobs: int):
    if jobs <= 1:
        return [_grid_task(t) for t in tasks]
    mp_ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=jobs, mp_context=mp_ctx) as ex:
        return list(ex.map(_grid_task, tasks))


def _rep_chunks(n_repeats: int, chunk: int):
    return [(lo, min(lo + chunk, n_repeats)) for lo in range(0, n_repeats, chunk)]


def run_hdp_grid(
    datasets: list,
    fraction: float = 0.15,
    cutoff: float = 0.05,
    classifier: str = CLASSIFIER_LR,
    n_repeats: int = 100,
    seed: int = 0,
    policy: str = POLICY_ALL_SOURCE,
    hp: Hyperparameters = Hyperparameters(),
    jobs: int = 1,
    rep_chunk: int = 25,
) -> AucGrid:
    """The full source x target grid: every ordered pair of distinct projects,
    n_repeats x 2 stratified folds each."""
    names = tuple(d.project_name for d in datasets)
    _WORKER_CTX.clear()
    _WORKER_CTX.update(
        datasets=list(datasets),
        source_ctxs=[_prepare_source(d, fraction) for d in datasets],
        cutoff=cutoff,
        classifier=classifier,
        seed=seed,
        policy=policy,
        hp=hp,
    )
    tasks = [
        ("hdp", t, lo, hi)
        for t in range(len(datasets))
        for lo, hi in _rep_chunks(n_repeats, rep_chunk)
    ]
    cells = {
        (s, t): np.full((n_repeats, 2), MISSING)
        for s in names for t in names if s != t
    }
    for tgt_idx, rep_lo, sub in _run_tasks(tasks, jobs):
        tname = names[tgt_idx]
        for sname, arr in sub.items():
            cells[(sname, tname)][rep_lo : rep_lo + arr.shape[0]] = arr
    _WORKER_CTX.clear()
    grid = AucGrid(
        sources=names,
        targets=names,
        n_repeats=n_repeats,
        cells=cells,
        config=dict(
            fraction=fraction, cutoff=cutoff, classifier=classifier,
            n_repeats=n_repeats, seed=seed, policy=policy,
        ),
    )
    for s in names:
        for t in names:
            if s == t:
                continue
            arr = cells[(s, t)]
            log.info(
                "hdp %s -> %s: feasible %d/%d",
                s, t, int((~np.isnan(arr)).sum()), arr.size,
            )
    return grid


def run_wpdp_all(
    datasets: list,
    classifier: str = CLASSIFIER_LR,
    seed: int = 0,
    n_repeats: int = 100,
    n_folds: int = 2,
    hp: Hyperparameters = Hyperparameters(),
    jobs: int = 1,
    rep_chunk: int = 25,
) -> dict:
    """Within-project CV for every dataset; {project: (n_repeats, n_folds)}."""
    _WORKER_CTX.clear()
    _WORKER_CTX.update(
        datasets=list(datasets), classifier=classifier, seed=seed,
        n_folds=n_folds, hp=hp,
    )
    tasks = [
        ("wpdp", t, lo, hi)
        for t in range(len(datasets))
        for lo, hi in _rep_chunks(n_repeats, rep_chunk)
    ]
    out = {d.project_name: np.full((n_repeats, n_folds), MISSING) for d in datasets}
    for tgt_idx, rep_lo, sub in _run_tasks(tasks, jobs):
        name = datasets[tgt_idx].project_name
        out[name][rep_lo : rep_lo + sub.shape[0]] = sub
    _WORKER_CTX.clear()
    for name, arr in out.items():
        log.info("wpdp %s: %d/%d folds scored", name, int((~np.isnan(arr)).sum()), arr.size)
    return out


# ---------------------------------------------------------------------------
# analyses over a finished grid

def feasibility_curve(grid: AucGrid, nan_thresholds) -> list:
    """(threshold, feasible ordered-pair count) for each threshold; a pair is
    feasible when its NaN fraction does not exceed the threshold."""
    fractions = {
        pair: grid.missing_fraction(*pair) for pair in grid.cells
    }
    out = []
    for t in nan_thresholds:
        count = sum(1 for frac in fractions.values() if frac <= t)
        out.append((float(t), count))
    return out


def compare_wpdp_hdp(
    grid: AucGrid,
    wpdp_cells: dict,
    alpha: float = 0.05,
    nan_threshold: float = 0.99,
) -> list:
    """Per-target comparison: pooled means, Cliff's delta of pooled HDP cells
    against the within-project cells, and win/tie/loss over the sources that
    pass the NaN threshold (paired Wilcoxon on shared folds)."""
    records = []
    for target in grid.targets:
        wp = wpdp_cells[target]
        wp_flat = wp[~np.isnan(wp)]
        pooled = []
        win = tie = loss = 0
        n_feasible_cells = 0
        n_possible_cells = 0
        for source in grid.sources:
            if source == target:
                continue
            arr = grid.cells[(source, target)]
            n_possible_cells += arr.size
            ok = ~np.isnan(arr)
            n_feasible_cells += int(ok.sum())
            pooled.append(arr[ok])
            if grid.missing_fraction(source, target) > nan_threshold:
                continue
            paired = ok & ~np.isnan(wp)
            if not paired.any():
                continue
            res = wilcoxon_signed_rank(arr[paired], wp[paired])
            if res.p_value >= alpha:
                tie += 1
            else:
                med = float(np.median(arr[paired] - wp[paired]))
                if med > 0:
                    win += 1
                elif med < 0:
                    loss += 1
                else:
                    tie += 1
        pooled_arr = np.concatenate(pooled) if pooled else np.empty(0)
        records.append(
            ComparisonRecord(
                target=target,
                wpdp_mean=float(wp_flat.mean()) if wp_flat.size else MISSING,
                hdp_mean=float(pooled_arr.mean()) if pooled_arr.size else None,
                cliffs=cliffs_delta(pooled_arr, wp_flat)
                if pooled_arr.size and wp_flat.size
                else None,
                win=win,
                tie=tie,
                loss=loss,
                n_feasible_cells=n_feasible_cells,
                n_possible_cells=n_possible_cells,
            )
        )
    return records


def ensemble_hdp(
    sources: list,
    target: DefectDataset,
    fraction: float = 0.15,
    cutoff: float = 0.05,
    classifier: str = CLASSIFIER_LR,
    seed: int = 0,
    policy: str = POLICY_ALL_SOURCE,
    hp: Hyperparameters = Hyperparameters(),
) -> EnsembleResult:
    """Average the defect probabilities of every feasible source model over
    the whole target (no target cross-validation); the pairwise mean is the
    mean AUC of the individual source models on the same rows."""
    if not sources:
        raise ValueError("ensemble_hdp requires at least one source")
    prob_sum = np.zeros(target.n_instances)
    per_source_auc = {}
    feasible_names = []
    for source in sources:
        ctx = _prepare_source(source, fraction)
        scores = _ks_p_matrix(
            ctx.sorted_cols,
            [np.sort(target.instances[:, j]) for j in range(target.n_metrics)],
            source.n_instances,
            target.n_instances,
        )
        sm = ScoreMatrix(ctx.selected.metric_names, target.metric_names, scores)
        mm = max_weight_matching(apply_cutoff(sm, cutoff), policy=policy, cutoff=cutoff)
        if not mm.feasible:
            continue
        src_cols = [ctx.selected.column_indices[i] for i in mm.source_indices]
        hp_run = dataclasses.replace(
            hp, rf_seed=_seed_int(seed, "clf-ens", classifier,
                                  source.project_name, target.project_name),
        )
        model = _fit(classifier, source.instances[:, src_cols], source.labels, hp_run)
        probs = model.predict_proba(target.instances[:, list(mm.target_indices)])
        prob_sum += probs
        per_source_auc[source.project_name] = auc_roc(probs, target.labels)
        feasible_names.append(source.project_name)
    if not feasible_names:
        return EnsembleResult(target.project_name, (), None, None, {})
    ensemble_probs = prob_sum / len(feasible_names)
    return EnsembleResult(
        target=target.project_name,
        feasible_sources=tuple(feasible_names),
        ensemble_auc=auc_roc(ensemble_probs, target.labels),
        pairwise_mean_auc=float(np.mean([per_source_auc[n] for n in feasible_names])),
        per_source_auc=per_source_auc,
    )


# ---------------------------------------------------------------------------
# domain-agnostic similarity

def _top3_label_correlated(dataset: DefectDataset) -> list:
    """Indices of the 3 metrics most rank-correlated (absolute) with the label."""
    y = dataset.labels.astype(np.float64)
    scored = []
    for j in range(dataset.n_metrics):
        rho = spearman(dataset.instances[:, j], y)
        scored.append((-abs(rho), j))
    scored.sort()
    return [j for _, j in scored[:3]]


def domain_agnostic_distance(train: DefectDataset, test: DefectDataset) -> float | None:
    """Euclidean distance between the pairwise rank-correlation signatures of
    the training side's top-3 label-correlated metrics, looked up by name on
    both sides. None when the test side lacks any of those metrics."""
    if train.n_metrics < 3 or test.n_metrics < 3:
        return None
    cols = _top3_label_correlated(train)
    names = [train.metric_names[j] for j in cols]
    if any(n not in test.metric_names for n in names):
        return None
    test_cols = [test.metric_names.index(n) for n in names]
    pairs = [(0, 1), (0, 2), (1, 2)]
    q = np.array([
        spearman(train.instances[:, cols[a]], train.instances[:, cols[b]])
        for a, b in pairs
    ])
    r = np.array([
        spearman(test.instances[:, test_cols[a]], test.instances[:, test_cols[b]])
        for a, b in pairs
    ])
    return float(np.sqrt(np.sum((q - r) ** 2)))


def domain_agnostic_select(candidates: list, target: DefectDataset):
    """Pick the candidate whose correlation signature is closest to the
    target's. Returns (chosen dataset or None, {candidate: distance or None})."""
    distances = {}
    chosen = None
    best = math.inf
    for cand in candidates:
        if cand.project_name == target.project_name:
            continue
        dist = domain_agnostic_distance(cand, target)
        distances[cand.project_name] = dist
        if dist is not None and dist < best:
            best = dist
            chosen = cand
    return chosen, distances


# ---------------------------------------------------------------------------
# coverage

def coverage_report(
    grid: AucGrid,
    groups: dict,
    wpdp_cells: dict | None = None,
    nan_threshold: float = 0.99,
) -> CoverageReport:
    """Group-level feasibility counts, per-group AUC medians, and the share of
    all datasets each source group can predict through at least one member."""
    group_names = []
    for name in grid.sources:
        g = groups[name]
        if g not in group_names:
            group_names.append(g)
    members = {g: [n for n in grid.sources if groups[n] == g] for g in group_names}

    def feasible(s, t):
        return grid.missing_fraction(s, t) <= nan_threshold

    pair_counts = {}
    for sg in group_names:
        for tg in group_names:
            total = (
                len(members[sg]) * (len(members[sg]) - 1)
                if sg == tg
                else len(members[sg]) * len(members[tg])
            )
            count = sum(
                1
                for s in members[sg]
                for t in members[tg]
                if s != t and feasible(s, t)
            )
            pair_counts[(sg, tg)] = (count, total)

    wpdp_median = {}
    hdp_median = {}
    coverage_pct = {}
    n_all = len(grid.sources)
    for sg in group_names:
        if wpdp_cells is not None:
            pool = np.concatenate([
                wpdp_cells[n][~np.isnan(wpdp_cells[n])] for n in members[sg]
            ])
            wpdp_median[sg] = float(np.median(pool)) if pool.size else None
        else:
            wpdp_median[sg] = None
        hdp_pool = []
        for s in members[sg]:
            for t in grid.targets:
                if s == t or not feasible(s, t):
                    continue
                arr = grid.cells[(s, t)]
                hdp_pool.append(arr[~np.isnan(arr)])
        pooled = np.concatenate(hdp_pool) if hdp_pool else np.empty(0)
        hdp_median[sg] = float(np.median(pooled)) if pooled.size else None
        covered = sum(
            1
            for t in grid.targets
            if any(s != t and feasible(s, t) for s in members[sg])
        )
        coverage_pct[sg] = 100.0 * covered / n_all
    return CoverageReport(
        group_names=tuple(group_names),
        pair_counts=pair_counts,
        wpdp_median=wpdp_median,
        hdp_median=hdp_median,
        coverage_pct=coverage_pct,
    )
