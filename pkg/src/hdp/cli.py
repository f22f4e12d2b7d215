"""Command-line front end: validate a dataset manifest, run the experiment
matrix, and render report tables from the emitted files.

All output files are deterministic for a given configuration: floats are
written in shortest round-trip form, infeasible cells as "NaN", and every
file header embeds the config hash and seed so reports refuse to mix results
from different runs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiment
from .dataset import (
    DatasetError,
    Manifest,
    apply_inclusion_criteria,
    compute_stats,
    load_manifest,
)
from .experiment import (
    CLASSIFIER_LR,
    CLASSIFIER_RF,
    AucGrid,
    compare_wpdp_hdp,
    coverage_report,
    cpdp,
    domain_agnostic_select,
    ensemble_hdp,
    feasibility_curve,
    run_hdp_grid,
    run_wpdp_all,
)
from .matching import POLICY_ALL_SOURCE, POLICY_ANY
from .stats import t_test_one_sample, wilcoxon_signed_rank

log = logging.getLogger("hdp")

ANALYSES = ("wpdp", "cpdp", "hdp", "ensemble", "similarity", "coverage")

_TEN_BY_TEN = (10, 10)  # repeats x folds for the per-project baseline table


# ---------------------------------------------------------------------------
# configuration

class ConfigError(ValueError):
    pass


class RunConfig:
    def __init__(
        self,
        manifest_path,
        classifiers=(CLASSIFIER_LR,),
        fraction=0.15,
        cutoff=0.05,
        n_repeats=100,
        nan_threshold=0.99,
        policy=POLICY_ALL_SOURCE,
        seed=0,
        out_dir="hdp-out",
        jobs=1,
        analyses=ANALYSES,
    ):
        self.manifest_path = Path(manifest_path)
        self.classifiers = tuple(classifiers)
        self.fraction = float(fraction)
        self.cutoff = float(cutoff)
        self.n_repeats = int(n_repeats)
        self.nan_threshold = float(nan_threshold)
        self.policy = policy
        self.seed = int(seed)
        self.out_dir = Path(out_dir)
        self.jobs = int(jobs)
        self.analyses = tuple(analyses)
        self.validate()

    def validate(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ConfigError("fraction must be in (0, 1]")
        if not 0.0 <= self.cutoff <= 1.0:
            raise ConfigError("cutoff must be in [0, 1]")
        if not 0.0 <= self.nan_threshold <= 1.0:
            raise ConfigError("nan-threshold must be in [0, 1]")
        if self.n_repeats < 1:
            raise ConfigError("repeats must be at least 1")
        if self.policy not in (POLICY_ALL_SOURCE, POLICY_ANY):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        for c in self.classifiers:
            if c not in (CLASSIFIER_LR, CLASSIFIER_RF):
                raise ConfigError(f"unknown classifier {c!r}")
        for a in self.analyses:
            if a not in ANALYSES:
                raise ConfigError(f"unknown analysis {a!r}")

    def payload(self, manifest: Manifest) -> dict:
        return {
            "datasets": [
                [e.project_name, e.group_name, e.label_column, e.path.name]
                for e in manifest.entries
            ],
            "fraction": self.fraction,
            "cutoff": self.cutoff,
            "n_repeats": self.n_repeats,
            "nan_threshold": self.nan_threshold,
            "policy": self.policy,
            "seed": self.seed,
        }

    def config_hash(self, manifest: Manifest) -> str:
        blob = json.dumps(self.payload(manifest), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# file formats

def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float) or isinstance(v, np.floating):
        v = float(v)
        return "NaN" if np.isnan(v) else repr(v)
    return str(v)


def write_table(path: Path, header: list, rows: list, config_hash: str, seed: int):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash} seed={seed}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_table(path: Path) -> tuple[str, int, list, list]:
    """Return (config_hash, seed, header, rows) from a file written by
    write_table."""
    with open(path, encoding="utf-8") as fh:
        meta = fh.readline().strip()
        if not meta.startswith("# config_hash="):
            raise ConfigError(f"{path}: missing config header")
        parts = dict(p.split("=", 1) for p in meta[2:].split())
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    return parts["config_hash"], int(parts["seed"]), header, rows


def _cv_headers(n_repeats: int, n_folds: int) -> list:
    return [f"CV{r}-{f}" for r in range(1, n_repeats + 1) for f in range(1, n_folds + 1)]


def _parse_cell(text: str) -> float:
    return experiment.MISSING if text == "NaN" else float(text)


def write_wpdp(path, results: dict, n_folds: int, config_hash: str, seed: int):
    names = list(results)
    n_repeats = results[names[0]].shape[0]
    header = ["project"] + _cv_headers(n_repeats, n_folds)
    rows = [[name] + [c for c in results[name].ravel()] for name in names]
    write_table(path, header, rows, config_hash, seed)


def read_wpdp(path) -> tuple[str, int, dict]:
    config_hash, seed, header, rows = read_table(path)
    n_cells = len(header) - 1
    n_folds = int(header[-1].rsplit("-", 1)[1])
    out = {}
    for row in rows:
        cells = np.array([_parse_cell(c) for c in row[1:]])
        out[row[0]] = cells.reshape(n_cells // n_folds, n_folds)
    return config_hash, seed, out


def write_grid(path, grid: AucGrid, config_hash: str, seed: int):
    header = ["train", "test"] + _cv_headers(grid.n_repeats, 2)
    rows = []
    for t in grid.targets:
        for s in grid.sources:
            if s == t:
                continue
            rows.append([s, t] + [c for c in grid.cells[(s, t)].ravel()])
    write_table(path, header, rows, config_hash, seed)


def read_grid(path, config: dict) -> tuple[str, int, AucGrid]:
    config_hash, seed, header, rows = read_table(path)
    n_repeats = len(header[2:]) // 2
    cells = {}
    sources: list = []
    targets: list = []
    for row in rows:
        s, t = row[0], row[1]
        if s not in sources:
            sources.append(s)
        if t not in targets:
            targets.append(t)
        arr = np.array([_parse_cell(c) for c in row[2:]]).reshape(n_repeats, 2)
        cells[(s, t)] = arr
    if set(sources) == set(targets):
        sources = targets  # keep one canonical project order for both axes
    grid = AucGrid(
        sources=tuple(sources),
        targets=tuple(targets),
        n_repeats=n_repeats,
        cells=cells,
        config=config,
    )
    return config_hash, seed, grid


def format_text_table(headers: list, rows: list) -> str:
    cols = len(headers)
    widths = [
        max(len(str(headers[i])), max((len(str(r[i])) for r in rows), default=0))
        for i in range(cols)
    ]
    lines = ["  ".join(str(headers[i]).ljust(widths[i]) for i in range(cols)).rstrip()]
    lines.append("  ".join("-" * widths[i] for i in range(cols)))
    for r in rows:
        cells = [str(r[0]).ljust(widths[0])]
        cells += [str(r[i]).rjust(widths[i]) for i in range(1, cols)]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _f3(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "NaN" if np.isnan(v) else f"{v:.3f}"


# ---------------------------------------------------------------------------
# validate

def cmd_validate(manifest_path, min_epv=10.0, max_buggy_ratio=0.5, out=None) -> int:
    out = out if out is not None else sys.stdout
    try:
        manifest = load_manifest(manifest_path)
        datasets = manifest.load_all()
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    accepted, rejected = apply_inclusion_criteria(
        datasets, min_epv=min_epv, max_buggy_ratio=max_buggy_ratio
    )
    accepted_names = {d.project_name for d in accepted}
    reasons = {d.project_name: reason for d, reason in rejected}
    group_of = {e.project_name: e.group_name for e in manifest.entries}
    rows = []
    for d in datasets:
        s = compute_stats(d)
        verdict = (
            "accepted"
            if d.project_name in accepted_names
            else f"rejected ({reasons[d.project_name]})"
        )
        rows.append([
            group_of[d.project_name],
            d.project_name,
            s.n_instances,
            s.n_buggy,
            f"{100.0 * s.buggy_ratio:.1f}",
            s.n_metrics,
            f"{s.epv:.1f}",
            verdict,
        ])
    headers = ["group", "project", "instances", "buggy", "buggy%", "metrics", "EPV", "status"]
    out.write(format_text_table(headers, rows))
    out.write(f"accepted {len(accepted)} of {len(datasets)} datasets\n")
    return 0


# ---------------------------------------------------------------------------
# run

def _maybe_load_grid(cfg: RunConfig, clf: str, config_hash: str, payload: dict):
    path = cfg.out_dir / f"hdp_grid_{clf}.csv"
    if path.exists():
        file_hash, _, grid = read_grid(path, payload)
        if file_hash == config_hash:
            log.info("reusing %s", path)
            return grid
    return None


def _maybe_load_wpdp(cfg: RunConfig, clf: str, config_hash: str):
    path = cfg.out_dir / f"wpdp_100x2_{clf}.csv"
    if path.exists():
        file_hash, _, cells = read_wpdp(path)
        if file_hash == config_hash:
            log.info("reusing %s", path)
            return cells
    return None


def cmd_run(cfg: RunConfig) -> int:
    try:
        manifest = load_manifest(cfg.manifest_path)
        datasets = manifest.load_all()
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not datasets:
        print("error: manifest lists no datasets", file=sys.stderr)
        return 2
    accepted, rejected = apply_inclusion_criteria(datasets)
    for d, reason in rejected:
        log.warning(
            "%s fails inclusion criterion (%s) but is run as listed in the manifest",
            d.project_name, reason,
        )
    config_hash = cfg.config_hash(manifest)
    payload = cfg.payload(manifest)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    groups = {e.project_name: e.group_name for e in manifest.entries}

    meta = {
        "config": payload,
        "config_hash": config_hash,
        "classifiers": list(cfg.classifiers),
        "analyses": list(cfg.analyses),
    }
    with open(cfg.out_dir / "run_meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    wants = set(cfg.analyses)
    need_wpdp = bool(wants & {"wpdp", "coverage"})
    need_grid = bool(wants & {"hdp", "coverage"})

    wpdp_cells: dict = {}
    grids: dict = {}
    for clf in cfg.classifiers:
        if need_wpdp:
            cells = None if "wpdp" in wants else _maybe_load_wpdp(cfg, clf, config_hash)
            if cells is None:
                log.info("wpdp (%s): %d projects x %d x 2-fold", clf, len(datasets), cfg.n_repeats)
                cells = run_wpdp_all(
                    datasets, classifier=clf, seed=cfg.seed,
                    n_repeats=cfg.n_repeats, n_folds=2, jobs=cfg.jobs,
                )
                write_wpdp(cfg.out_dir / f"wpdp_100x2_{clf}.csv", cells, 2, config_hash, cfg.seed)
            wpdp_cells[clf] = cells
        if "wpdp" in wants:
            reps, folds = _TEN_BY_TEN
            log.info("wpdp (%s): %d projects x %dx%d-fold", clf, len(datasets), reps, folds)
            tens = run_wpdp_all(
                datasets, classifier=clf, seed=cfg.seed,
                n_repeats=reps, n_folds=folds, jobs=cfg.jobs,
            )
            write_wpdp(cfg.out_dir / f"wpdp_10x10_{clf}.csv", tens, folds, config_hash, cfg.seed)

        if "cpdp" in wants:
            log.info("cpdp (%s): %d ordered pairs", clf, len(datasets) * (len(datasets) - 1))
            rows = []
            for t in datasets:
                for s in datasets:
                    if s.project_name == t.project_name:
                        continue
                    auc = cpdp(s, t, classifier=clf, seed=cfg.seed)
                    rows.append([s.project_name, t.project_name, auc])
            write_table(
                cfg.out_dir / f"cpdp_{clf}.csv",
                ["train", "test", "auc"], rows, config_hash, cfg.seed,
            )

        if need_grid:
            grid = None if "hdp" in wants else _maybe_load_grid(cfg, clf, config_hash, payload)
            if grid is None:
                log.info(
                    "hdp grid (%s): %d pairs x %d x 2-fold",
                    clf, len(datasets) * (len(datasets) - 1), cfg.n_repeats,
                )
                grid = run_hdp_grid(
                    datasets, fraction=cfg.fraction, cutoff=cfg.cutoff,
                    classifier=clf, n_repeats=cfg.n_repeats, seed=cfg.seed,
                    policy=cfg.policy, jobs=cfg.jobs,
                )
                write_grid(cfg.out_dir / f"hdp_grid_{clf}.csv", grid, config_hash, cfg.seed)
                pair_rows = []
                for t in grid.targets:
                    for s in grid.sources:
                        if s == t:
                            continue
                        ps = grid.pair_summary(s, t, cfg.nan_threshold)
                        pair_rows.append([
                            s, t, ps.n_feasible, ps.n_total,
                            ps.mean_auc if ps.mean_auc is not None else float("nan"),
                            int(ps.feasible_under_threshold),
                        ])
                write_table(
                    cfg.out_dir / f"hdp_pairs_{clf}.csv",
                    ["train", "test", "n_feasible", "n_total", "mean_auc", "feasible_at_threshold"],
                    pair_rows, config_hash, cfg.seed,
                )
                thresholds = [round(0.01 * i, 2) for i in range(101)]
                curve = feasibility_curve(grid, thresholds)
                n_pairs = len(grid.cells)
                write_table(
                    cfg.out_dir / f"feasibility_{clf}.csv",
                    ["nan_threshold", "feasible_pairs", "total_pairs", "percent"],
                    [[t, c, n_pairs, 100.0 * c / n_pairs] for t, c in curve],
                    config_hash, cfg.seed,
                )
            grids[clf] = grid

        if "ensemble" in wants:
            log.info("ensemble (%s): %d targets", clf, len(datasets))
            rows = []
            for t in datasets:
                sources = [d for d in datasets if d.project_name != t.project_name]
                res = ensemble_hdp(
                    sources, t, fraction=cfg.fraction, cutoff=cfg.cutoff,
                    classifier=clf, seed=cfg.seed, policy=cfg.policy,
                )
                rows.append([
                    t.project_name,
                    ";".join(res.feasible_sources),
                    len(res.feasible_sources),
                    res.ensemble_auc,
                    res.pairwise_mean_auc,
                ])
            write_table(
                cfg.out_dir / f"ensemble_{clf}.csv",
                ["target", "sources", "n_sources", "ensemble_auc", "pairwise_mean_auc"],
                rows, config_hash, cfg.seed,
            )

        if "coverage" in wants:
            cov = coverage_report(
                grids[clf], groups, wpdp_cells[clf], nan_threshold=cfg.nan_threshold
            )
            rows = []
            for sg in cov.group_names:
                row = [sg]
                for tg in cov.group_names:
                    count, total = cov.pair_counts[(sg, tg)]
                    row.append(count)
                    row.append(total)
                row.extend([
                    cov.wpdp_median[sg],
                    cov.hdp_median[sg],
                    cov.coverage_pct[sg],
                ])
                rows.append(row)
            header = ["source_group"]
            for tg in cov.group_names:
                header += [f"{tg}_feasible", f"{tg}_total"]
            header += ["wpdp_median", "hdp_median", "target_coverage_pct"]
            write_table(cfg.out_dir / f"coverage_{clf}.csv", header, rows, config_hash, cfg.seed)

    if "similarity" in wants:
        log.info("similarity: %d x %d distance matrix", len(datasets), len(datasets))
        by_name = {d.project_name: d for d in datasets}
        dist_rows = []
        for train in datasets:
            row = [train.project_name]
            for test in datasets:
                if train.project_name == test.project_name:
                    row.append(0.0)
                else:
                    row.append(experiment.domain_agnostic_distance(train, test))
            dist_rows.append(row)
        write_table(
            cfg.out_dir / "similarity.csv",
            ["train"] + [d.project_name for d in datasets],
            dist_rows, config_hash, cfg.seed,
        )
        for clf in cfg.classifiers:
            rows = []
            for t in datasets:
                cands = [d for d in datasets if d.project_name != t.project_name]
                chosen, dists = domain_agnostic_select(cands, t)
                if chosen is None:
                    rows.append([t.project_name, None, None, None])
                    continue
                auc = cpdp(chosen, t, classifier=clf, seed=cfg.seed)
                rows.append([
                    t.project_name, chosen.project_name,
                    dists[chosen.project_name], auc,
                ])
            write_table(
                cfg.out_dir / f"similarity_choice_{clf}.csv",
                ["target", "chosen", "distance", "auc"],
                rows, config_hash, cfg.seed,
            )
    log.info("outputs written to %s", cfg.out_dir)
    return 0


# ---------------------------------------------------------------------------
# report

def _check_hash(expected: str | None, got: str, path) -> str:
    if expected is not None and got != expected:
        raise ConfigError(
            f"{path}: config hash {got} does not match {expected}; refusing to "
            "mix results from different runs"
        )
    return got


def _wpdp_means(cells: dict) -> dict:
    out = {}
    for name, arr in cells.items():
        ok = arr[~np.isnan(arr)]
        out[name] = float(ok.mean()) if ok.size else float("nan")
    return out


def cmd_report(out_dir, classifiers=(CLASSIFIER_LR, CLASSIFIER_RF), out=None) -> int:
    out = out if out is not None else sys.stdout
    out_dir = Path(out_dir)
    meta_path = out_dir / "run_meta.json"
    if not meta_path.exists():
        print(f"error: no run_meta.json in {out_dir}", file=sys.stderr)
        return 2
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    expected_hash = meta["config_hash"]
    config = meta["config"]
    alpha = 0.05
    nan_threshold = float(config["nan_threshold"])
    seed = int(config["seed"])
    wrote_any = False

    try:
        for clf in classifiers:
            wpdp10 = out_dir / f"wpdp_10x10_{clf}.csv"
            cpdp_path = out_dir / f"cpdp_{clf}.csv"
            if wpdp10.exists() and cpdp_path.exists():
                h, _, tens = read_wpdp(wpdp10)
                _check_hash(expected_hash, h, wpdp10)
                h, _, header, rows = read_table(cpdp_path)
                _check_hash(expected_hash, h, cpdp_path)
                names = list(tens)
                auc_of = {(r[0], r[1]): r[2] for r in rows}
                text_rows = []
                for s in names:
                    row = [s]
                    for t in names:
                        if s == t:
                            arr = tens[s]
                            row.append(_f3(np.nanmean(arr)))
                        else:
                            cell = auc_of.get((s, t), "NA")
                            row.append(_f3(float(cell)) if cell not in ("NA", "") else "")
                    text_rows.append(row)
                _emit_report(
                    out_dir, f"report_wpdp_cpdp_{clf}",
                    ["train\\test"] + names, text_rows, out,
                    title=f"Within-project (diagonal, 10x10-fold mean) and same-schema "
                          f"cross-project AUC, classifier={clf}",
                    config_hash=expected_hash, seed=seed,
                )
                wrote_any = True

            grid_path = out_dir / f"hdp_grid_{clf}.csv"
            wpdp_path = out_dir / f"wpdp_100x2_{clf}.csv"
            if grid_path.exists() and wpdp_path.exists():
                h, _, grid = read_grid(grid_path, config)
                _check_hash(expected_hash, h, grid_path)
                h, _, cells = read_wpdp(wpdp_path)
                _check_hash(expected_hash, h, wpdp_path)
                records = compare_wpdp_hdp(grid, cells, alpha=alpha, nan_threshold=nan_threshold)
                text_rows = []
                for r in records:
                    text_rows.append([
                        r.target,
                        _f3(r.wpdp_mean),
                        f"{r.cliffs.delta:.3f} ({r.cliffs.magnitude[0]})" if r.cliffs else "",
                        _f3(r.hdp_mean),
                        r.n_feasible_cells,
                        f"{100.0 * r.n_feasible_cells / r.n_possible_cells:.1f}%",
                        r.win, r.tie, r.loss,
                    ])
                total_w = sum(r.win for r in records)
                total_t = sum(r.tie for r in records)
                total_l = sum(r.loss for r in records)
                wp_all = np.concatenate([c[~np.isnan(c)] for c in cells.values()])
                hdp_all = np.concatenate(
                    [a[~np.isnan(a)] for a in grid.cells.values()]
                ) if grid.cells else np.empty(0)
                text_rows.append([
                    "Total",
                    _f3(wp_all.mean()) if wp_all.size else "",
                    "",
                    _f3(hdp_all.mean()) if hdp_all.size else "",
                    sum(r.n_feasible_cells for r in records),
                    "",
                    total_w, total_t, total_l,
                ])
                _emit_report(
                    out_dir, f"report_hdp_vs_wpdp_{clf}",
                    ["target", "wpdp_mean", "cliffs_delta", "hdp_mean",
                     "feasible_cells", "predictability", "win", "tie", "loss"],
                    text_rows, out,
                    title=f"Heterogeneous vs within-project prediction, classifier={clf} "
                          f"(NaN threshold {nan_threshold:g}, alpha {alpha:g})",
                    config_hash=expected_hash, seed=seed,
                )
                wrote_any = True

            feas_path = out_dir / f"feasibility_{clf}.csv"
            if feas_path.exists():
                h, _, header, rows = read_table(feas_path)
                _check_hash(expected_hash, h, feas_path)
                keep = [r for r in rows if r[0] in ("0.01", "0.25", "0.5", "0.75", "0.99", "1.0")]
                _emit_report(
                    out_dir, f"report_feasibility_{clf}",
                    ["nan_threshold", "feasible_pairs", "total_pairs", "percent"],
                    [[r[0], r[1], r[2], f"{float(r[3]):.1f}%"] for r in keep], out,
                    title=f"Feasible pairs by acceptable-NaN threshold, classifier={clf}",
                    config_hash=expected_hash, seed=seed,
                )
                wrote_any = True

            ens_path = out_dir / f"ensemble_{clf}.csv"
            if ens_path.exists():
                h, _, header, rows = read_table(ens_path)
                _check_hash(expected_hash, h, ens_path)
                text_rows = []
                ens_vals, pair_vals = [], []
                for r in rows:
                    target, srcs, n_src, e_auc, p_auc = r
                    if e_auc not in ("NA", "NaN"):
                        ens_vals.append(float(e_auc))
                        pair_vals.append(float(p_auc))
                    text_rows.append([
                        target, srcs.replace(";", ", "),
                        _f3(float(e_auc)) if e_auc not in ("NA",) else "",
                        _f3(float(p_auc)) if p_auc not in ("NA",) else "",
                    ])
                footer = ""
                if len(ens_vals) >= 2:
                    res = wilcoxon_signed_rank(ens_vals, pair_vals)
                    footer = (
                        f"mean ensemble {np.mean(ens_vals):.3f} vs pairwise "
                        f"{np.mean(pair_vals):.3f}, Wilcoxon p={res.p_value:.4f}\n"
                    )
                _emit_report(
                    out_dir, f"report_ensemble_{clf}",
                    ["target", "feasible sources", "ensemble_auc", "pairwise_mean_auc"],
                    text_rows, out,
                    title=f"Ensemble voting over feasible sources, classifier={clf}",
                    footer=footer,
                    config_hash=expected_hash, seed=seed,
                )
                wrote_any = True

            cov_path = out_dir / f"coverage_{clf}.csv"
            if cov_path.exists():
                h, _, header, rows = read_table(cov_path)
                _check_hash(expected_hash, h, cov_path)
                group_names = [c[: -len("_feasible")] for c in header[1:-3] if c.endswith("_feasible")]
                text_rows = []
                for r in rows:
                    row = [r[0]]
                    for gi in range(len(group_names)):
                        count = int(r[1 + 2 * gi])
                        total = int(r[2 + 2 * gi])
                        pct = 100.0 * count / total if total else 0.0
                        row.append(f"{count} ({pct:.0f}%)")
                    wpdp_med, hdp_med, cov_pct = r[-3], r[-2], r[-1]
                    row.append(_f3(float(wpdp_med)) if wpdp_med != "NA" else "")
                    row.append(_f3(float(hdp_med)) if hdp_med != "NA" else "")
                    row.append(f"{float(cov_pct):.1f}%")
                    text_rows.append(row)
                _emit_report(
                    out_dir, f"report_coverage_{clf}",
                    ["source_group"] + group_names + ["wpdp_median", "hdp_median", "coverage"],
                    text_rows, out,
                    title=f"Target prediction coverage by group, classifier={clf}",
                    config_hash=expected_hash, seed=seed,
                )
                wrote_any = True

            sim_choice = out_dir / f"similarity_choice_{clf}.csv"
            if sim_choice.exists():
                h, _, header, rows = read_table(sim_choice)
                _check_hash(expected_hash, h, sim_choice)
                means = {}
                if wpdp_path.exists():
                    _, _, cells = read_wpdp(wpdp_path)
                    means = _wpdp_means(cells)
                text_rows = []
                normalized = []
                for r in rows:
                    target, chosen, dist, auc = r
                    norm = ""
                    if auc not in ("NA", "") and target in means and means[target] > 0:
                        ratio = float(auc) / means[target]
                        normalized.append(ratio)
                        norm = f"{ratio:.3f}"
                    text_rows.append([
                        target, chosen if chosen != "NA" else "",
                        _f3(float(dist)) if dist not in ("NA", "") else "",
                        _f3(float(auc)) if auc not in ("NA", "") else "",
                        norm,
                    ])
                footer = ""
                if len(normalized) >= 2:
                    t_stat, p = t_test_one_sample(normalized, mu=1.0)
                    footer = (
                        f"normalized AUC mean {np.mean(normalized):.3f}; one-sample "
                        f"t-test vs 1: t={t_stat:.3f}, p={p:.3f}\n"
                    )
                _emit_report(
                    out_dir, f"report_similarity_{clf}",
                    ["target", "chosen", "distance", "auc", "auc/wpdp"],
                    text_rows, out,
                    title=f"Domain-agnostic model selection, classifier={clf}",
                    footer=footer,
                    config_hash=expected_hash, seed=seed,
                )
                wrote_any = True
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    sim_path = out_dir / "similarity.csv"
    if sim_path.exists():
        h, _, header, rows = read_table(sim_path)
        try:
            _check_hash(expected_hash, h, sim_path)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        text_rows = [
            [r[0]] + [(_f3(float(c)) if c not in ("NA", "") else "") for c in r[1:]]
            for r in rows
        ]
        _emit_report(
            out_dir, "report_similarity_matrix",
            ["train\\test"] + header[1:], text_rows, out,
            title="Domain-agnostic distance (rows train, columns test)",
            config_hash=expected_hash, seed=seed,
        )
        wrote_any = True

    if not wrote_any:
        print(f"error: no result files found in {out_dir}", file=sys.stderr)
        return 2
    return 0


def _emit_report(out_dir, stem, headers, rows, out, title="", footer="",
                 config_hash="", seed=0):
    text = format_text_table(headers, rows)
    if title:
        text = title + "\n" + text
    if footer:
        text = text + footer
    out.write(text + "\n")
    meta = f"# config_hash={config_hash} seed={seed}\n"
    with open(out_dir / f"{stem}.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(meta)
        fh.write(text)
    with open(out_dir / f"{stem}.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(meta)
        fh.write(",".join(str(h) for h in headers) + "\n")
        for r in rows:
            fh.write(",".join(str(c) for c in r) + "\n")


# ---------------------------------------------------------------------------
# entry point

def _add_run_args(p):
    p.add_argument("--manifest", required=True, help="dataset manifest CSV")
    p.add_argument("--classifier", choices=["lr", "rf", "both"], default="lr")
    p.add_argument("--fraction", type=float, default=0.15,
                   help="fraction of source metrics kept by gain ratio")
    p.add_argument("--cutoff", type=float, default=0.05,
                   help="minimum KS p-value for a matching edge")
    p.add_argument("--repeats", type=int, default=100,
                   help="2-fold CV repetitions per target")
    p.add_argument("--nan-threshold", type=float, default=0.99,
                   help="max NaN fraction for a pair to count as feasible")
    p.add_argument("--policy", choices=[POLICY_ALL_SOURCE, POLICY_ANY],
                   default=POLICY_ALL_SOURCE,
                   help="feasibility: every selected source metric matched, or any")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="hdp-out", help="output directory")
    p.add_argument("--jobs", type=int, default=0,
                   help="worker processes (0 = all cores; HDP_JOBS overrides)")
    p.add_argument("--only", default=None,
                   help=f"comma-separated subset of {','.join(ANALYSES)}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hdp-bench",
        description="Heterogeneous defect prediction benchmark harness",
    )
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check datasets against the inclusion criteria")
    p_val.add_argument("--manifest", required=True)
    p_val.add_argument("--min-epv", type=float, default=10.0)
    p_val.add_argument("--max-buggy-ratio", type=float, default=0.5)

    p_run = sub.add_parser("run", help="run analyses and write result files")
    _add_run_args(p_run)

    p_rep = sub.add_parser("report", help="render tables from result files")
    p_rep.add_argument("--out", default="hdp-out", help="directory holding run outputs")
    p_rep.add_argument("--classifier", choices=["lr", "rf", "both"], default="both")

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )

    if args.command == "validate":
        return cmd_validate(args.manifest, args.min_epv, args.max_buggy_ratio)

    if args.command == "run":
        classifiers = ("lr", "rf") if args.classifier == "both" else (args.classifier,)
        analyses = ANALYSES
        if args.only:
            analyses = tuple(a.strip() for a in args.only.split(",") if a.strip())
        jobs = args.jobs
        env_jobs = os.environ.get("HDP_JOBS")
        if env_jobs:
            jobs = int(env_jobs)
        if jobs <= 0:
            jobs = os.cpu_count() or 1
        try:
            cfg = RunConfig(
                manifest_path=args.manifest,
                classifiers=classifiers,
                fraction=args.fraction,
                cutoff=args.cutoff,
                n_repeats=args.repeats,
                nan_threshold=args.nan_threshold,
                policy=args.policy,
                seed=args.seed,
                out_dir=args.out,
                jobs=jobs,
                analyses=analyses,
            )
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return cmd_run(cfg)

    if args.command == "report":
        classifiers = ("lr", "rf") if args.classifier == "both" else (args.classifier,)
        return cmd_report(args.out, classifiers)

    return 2


if __name__ == "__main__":
    sys.exit(main())
