"""Shared test fixtures: synthetic dataset generators with a known latent
structure, corpus writers, and discovery of the optional real-data corpus."""

import os
from pathlib import Path

import numpy as np
import pytest

from hdp.dataset import DefectDataset

# Monotone transforms with pairwise-distinct output distributions; metrics
# built from the same transform of the same latent are distribution-identical
# across datasets, everything else is far apart.
TRANSFORMS = (
    lambda z: np.exp(0.8 * z),
    lambda z: 20.0 + 4.0 * z,
    lambda z: z ** 3,
    lambda z: 1.0 / (1.0 + np.exp(-z)),
    lambda z: 10.0 * np.log1p(np.exp(z)),
    lambda z: -5.0 + 0.5 * z + 0.1 * z ** 3,
    lambda z: 3.0 * np.expm1(0.4 * z),
    lambda z: 100.0 + 15.0 * z,
)


def latent_dataset(
    name,
    group,
    rng,
    n_rows=200,
    metric_ids=(0, 1, 2, 3, 4),
    metric_names=None,
    noise=0.5,
    threshold=0.5,
):
    """Dataset whose column i is TRANSFORMS[metric_ids[i]] of latent
    metric_ids[i]; the defect label is driven by latents 0 and 1."""
    latents = rng.normal(size=(n_rows, len(TRANSFORMS)))
    y = latents[:, 0] + latents[:, 1] + noise * rng.normal(size=n_rows) > threshold
    if not y.any():
        y[0] = True
    if y.all():
        y[0] = False
    cols = [TRANSFORMS[i](latents[:, i]) for i in metric_ids]
    if metric_names is None:
        metric_names = tuple(f"m{i}" for i in metric_ids)
    return DefectDataset(name, group, tuple(metric_names), np.column_stack(cols), y)


def make_hdp_pair(seed, n_rows=280, n_metrics=5, noise=0.5):
    """Source/target pair with identical latent structure but renamed,
    permuted, per-metric-transformed columns. Returns (source, target,
    truth) where truth maps source metric name -> target metric name."""
    rng = np.random.default_rng(seed)
    ids = tuple(range(n_metrics))
    src = latent_dataset(
        f"src{seed}", "g", rng, n_rows, ids,
        tuple(f"s{i}" for i in ids), noise=noise,
    )
    perm = rng.permutation(n_metrics)
    tgt = latent_dataset(
        f"tgt{seed}", "g", rng, n_rows, tuple(int(p) for p in perm),
        tuple(f"t{i}" for i in range(n_metrics)), noise=noise,
    )
    truth = {f"s{perm[pos]}": f"t{pos}" for pos in range(n_metrics)}
    return src, tgt, truth


def make_corpus(seed=0, n_rows=200):
    """Six datasets in two groups; groups share latent structure (so
    cross-schema matching is possible) but not metric names."""
    rng = np.random.default_rng(seed)
    datasets = []
    for i in range(3):
        datasets.append(
            latent_dataset(
                f"A{i + 1}", "alpha", rng, n_rows + 17 * i,
                metric_ids=(0, 1, 2, 3, 4),
                metric_names=("m1", "m2", "m3", "m4", "m5"),
            )
        )
    for i in range(3):
        datasets.append(
            latent_dataset(
                f"B{i + 1}", "beta", rng, n_rows + 11 * i,
                metric_ids=(0, 1, 2, 3, 4),
                metric_names=("q1", "q2", "q3", "q4", "q5"),
            )
        )
    return datasets


_ENCODINGS = [
    ("bug", "auto", "Y", "N"),
    ("defects", "auto", "1", "0"),
    ("label", "auto", "true", "false"),
    ("state", "auto", "buggy", "clean"),
    ("verdict", "pos:neg", "pos", "neg"),
    ("bug", "auto", "Y", "N"),
]


def write_corpus(dir_path, datasets):
    """Write datasets as CSV files plus a manifest; rotates label encodings."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    lines = ["path,project,group,label_column,label_encoding"]
    for i, d in enumerate(datasets):
        label_col, encoding, buggy, clean = _ENCODINGS[i % len(_ENCODINGS)]
        fname = f"{d.project_name}.csv"
        with open(dir_path / fname, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(list(d.metric_names) + [label_col]) + "\n")
            for row, lab in zip(d.instances, d.labels):
                cells = [repr(float(v)) for v in row] + [buggy if lab else clean]
                fh.write(",".join(cells) + "\n")
        lines.append(f"{fname},{d.project_name},{d.group_name},{label_col},{encoding}")
    manifest = dir_path / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def real_corpus_manifest():
    """Manifest of the real 17-dataset corpus, if the user provided it."""
    root = os.environ.get("HDP_DATA_DIR")
    candidates = []
    if root:
        candidates.append(Path(root) / "manifest.csv")
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "manifest.csv")
    for c in candidates:
        if c.exists():
            return c
    return None


@pytest.fixture(scope="session")
def corpus_manifest():
    manifest = real_corpus_manifest()
    if manifest is None:
        pytest.skip(
            "real dataset corpus not available: place the public datasets and a "
            "manifest.csv under ./data or set HDP_DATA_DIR (see README)"
        )
    return manifest


@pytest.fixture(scope="session")
def full_scale_enabled():
    if os.environ.get("HDP_FULL_SCALE") != "1":
        pytest.skip("full-scale run disabled; set HDP_FULL_SCALE=1 (hours of runtime)")
    return True
