#!/usr/bin/env python3
"""Generate a small synthetic corpus for trying out the CLI.

Writes CSV dataset files plus manifest.csv into the chosen directory. The two
groups use disjoint metric names but share latent structure, so cross-schema
matching finds real correspondences while plain cross-project prediction only
works within a group.

Usage: python scripts/make_demo_corpus.py [--out demo-data] [--rows 300] [--seed 0]
"""

import argparse
from pathlib import Path

import numpy as np

TRANSFORMS = (
    lambda z: np.exp(0.8 * z),
    lambda z: 20.0 + 4.0 * z,
    lambda z: z ** 3,
    lambda z: 1.0 / (1.0 + np.exp(-z)),
    lambda z: 10.0 * np.log1p(np.exp(z)),
)


def make_dataset(rng, n_rows):
    latents = rng.normal(size=(n_rows, len(TRANSFORMS)))
    y = latents[:, 0] + latents[:, 1] + 0.5 * rng.normal(size=n_rows) > 0.5
    if not y.any():
        y[0] = True
    if y.all():
        y[0] = False
    X = np.column_stack([t(latents[:, i]) for i, t in enumerate(TRANSFORMS)])
    return X, y


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="demo-data")
    parser.add_argument("--rows", type=int, default=300)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    plan = [
        ("A1", "alpha", ("m1", "m2", "m3", "m4", "m5")),
        ("A2", "alpha", ("m1", "m2", "m3", "m4", "m5")),
        ("A3", "alpha", ("m1", "m2", "m3", "m4", "m5")),
        ("B1", "beta", ("q1", "q2", "q3", "q4", "q5")),
        ("B2", "beta", ("q1", "q2", "q3", "q4", "q5")),
        ("B3", "beta", ("q1", "q2", "q3", "q4", "q5")),
    ]
    manifest = ["path,project,group,label_column"]
    for i, (project, group, names) in enumerate(plan):
        X, y = make_dataset(rng, args.rows + 13 * i)
        path = out / f"{project}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(list(names) + ["bug"]) + "\n")
            for row, lab in zip(X, y):
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write(",Y\n" if lab else ",N\n")
        manifest.append(f"{project}.csv,{project},{group},bug")
    (out / "manifest.csv").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    print(f"wrote {len(plan)} datasets and manifest.csv to {out}/")


if __name__ == "__main__":
    main()
