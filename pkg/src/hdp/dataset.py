"""Defect dataset loading, validation, and inclusion filtering.

A dataset is a numeric instance-by-metric matrix plus one boolean label per
instance (True = buggy). Datasets arrive as comma-delimited text files with a
header row; a manifest file lists which files to load and how to decode their
label columns.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DatasetError",
    "DefectDataset",
    "DatasetStats",
    "ManifestEntry",
    "Manifest",
    "load_dataset",
    "load_manifest",
    "compute_stats",
    "apply_inclusion_criteria",
    "REJECT_EPV",
    "REJECT_DEFECT_RATIO",
]

# Label spellings accepted under the "auto" encoding, case-insensitive.
_BUGGY_VALUES = {"1", "y", "true", "buggy"}
_CLEAN_VALUES = {"0", "n", "false", "clean"}

REJECT_EPV = "epv"
REJECT_DEFECT_RATIO = "defect_ratio"


class DatasetError(ValueError):
    """Raised for malformed dataset or manifest files."""


@dataclass(frozen=True)
class DefectDataset:
    """Immutable numeric metric matrix with per-instance defect labels."""

    project_name: str
    group_name: str
    metric_names: tuple[str, ...]
    instances: np.ndarray  # (n_instances, n_metrics) float64
    labels: np.ndarray  # (n_instances,) bool

    def __post_init__(self):
        inst = np.ascontiguousarray(np.asarray(self.instances, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=bool)
        if inst.ndim != 2:
            raise DatasetError(f"{self.project_name}: instance matrix must be 2-D")
        if inst.shape[0] != labels.shape[0]:
            raise DatasetError(
                f"{self.project_name}: {inst.shape[0]} rows but {labels.shape[0]} labels"
            )
        if inst.shape[1] != len(self.metric_names):
            raise DatasetError(
                f"{self.project_name}: {inst.shape[1]} columns but "
                f"{len(self.metric_names)} metric names"
            )
        if len(set(self.metric_names)) != len(self.metric_names):
            raise DatasetError(f"{self.project_name}: duplicate metric names")
        if not np.isfinite(inst).all():
            raise DatasetError(f"{self.project_name}: non-finite metric values")
        if labels.all() or not labels.any():
            raise DatasetError(
                f"{self.project_name}: needs at least one buggy and one clean instance"
            )
        inst.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "instances", inst)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "metric_names", tuple(self.metric_names))

    @property
    def n_instances(self) -> int:
        return self.instances.shape[0]

    @property
    def n_metrics(self) -> int:
        return self.instances.shape[1]

    @property
    def n_buggy(self) -> int:
        return int(self.labels.sum())

    def column(self, name: str) -> np.ndarray:
        return self.instances[:, self.metric_names.index(name)]


@dataclass(frozen=True)
class DatasetStats:
    n_instances: int
    n_buggy: int
    buggy_ratio: float
    n_metrics: int
    epv: float


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    project_name: str
    group_name: str
    label_column: str
    label_encoding: str = "auto"  # "auto" or "<buggy_value>:<clean_value>"


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def __post_init__(self):
        names = [e.project_name for e in self.entries]
        if len(set(names)) != len(names):
            raise DatasetError("manifest: project names must be unique")

    def load_all(self) -> list[DefectDataset]:
        return [
            load_dataset(
                e.path,
                e.project_name,
                e.group_name,
                e.label_column,
                label_encoding=e.label_encoding,
            )
            for e in self.entries
        ]


def _decode_label(raw: str, encoding: str, where: str) -> bool:
    value = raw.strip().lower()
    if encoding == "auto":
        if value in _BUGGY_VALUES:
            return True
        if value in _CLEAN_VALUES:
            return False
    else:
        buggy, _, clean = encoding.partition(":")
        if value == buggy.strip().lower():
            return True
        if value == clean.strip().lower():
            return False
    raise DatasetError(f"{where}: unknown label value {raw!r}")


def load_dataset(
    path,
    project_name: str,
    group_name: str,
    label_column: str,
    label_encoding: str = "auto",
) -> DefectDataset:
    """Load one delimited dataset file, splitting off and decoding its label column.

    Metric column order is preserved from the file. Every metric cell must
    parse as a finite number; missing values are a hard error rather than
    being imputed, since downstream distribution matching would silently
    absorb any fill-in.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{project_name}: no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
        metric_names = [h for i, h in enumerate(header) if i != label_idx]

        rows: list[list[float]] = []
        labels: list[bool] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # stray blank line
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            labels.append(
                _decode_label(row[label_idx], label_encoding, f"{path}:{lineno}")
            )
            values = []
            for i, cell in enumerate(row):
                if i == label_idx:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}:{lineno}: non-numeric value {cell!r} in column "
                        f"{header[i]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DatasetError(
                        f"{path}:{lineno}: non-finite value in column {header[i]!r}"
                    )
                values.append(v)
            rows.append(values)

    if not rows:
        raise DatasetError(f"{path}: no data rows")
    instances = np.array(rows, dtype=np.float64)
    label_arr = np.array(labels, dtype=bool)
    if label_arr.all() or not label_arr.any():
        raise DatasetError(f"{path}: all instances share one label class")
    return DefectDataset(project_name, group_name, tuple(metric_names), instances, label_arr)


def load_manifest(path) -> Manifest:
    """Read a manifest: CSV with header path,project,group,label_column[,label_encoding].

    Relative dataset paths are resolved against the manifest's directory.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"no such manifest: {path}")
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"path", "project", "group", "label_column"}
        if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
            raise DatasetError(
                f"{path}: manifest header must contain {sorted(required)}"
            )
        for row in reader:
            raw = Path(row["path"].strip())
            entries.append(
                ManifestEntry(
                    path=raw if raw.is_absolute() else path.parent / raw,
                    project_name=row["project"].strip(),
                    group_name=row["group"].strip(),
                    label_column=row["label_column"].strip(),
                    label_encoding=(row.get("label_encoding") or "auto").strip(),
                )
            )
    return Manifest(entries)


def compute_stats(d: DefectDataset) -> DatasetStats:
    return DatasetStats(
        n_instances=d.n_instances,
        n_buggy=d.n_buggy,
        buggy_ratio=d.n_buggy / d.n_instances,
        n_metrics=d.n_metrics,
        epv=d.n_buggy / d.n_metrics,
    )


def apply_inclusion_criteria(
    datasets: list[DefectDataset],
    min_epv: float = 10.0,
    max_buggy_ratio: float = 0.5,
) -> tuple[list[DefectDataset], list[tuple[DefectDataset, str]]]:
    """Partition datasets into accepted and rejected-with-reason.

    A dataset is kept when its events-per-variable ratio is at least
    ``min_epv`` (inclusive) and its buggy ratio does not exceed
    ``max_buggy_ratio`` ("more than half" is the rejection, so exactly half
    passes). The reported reason is the first violated criterion, EPV first.
    """
    accepted: list[DefectDataset] = []
    rejected: list[tuple[DefectDataset, str]] = []
    for d in datasets:
        s = compute_stats(d)
        if s.epv < min_epv:
            rejected.append((d, REJECT_EPV))
        elif s.buggy_ratio > max_buggy_ratio:
            rejected.append((d, REJECT_DEFECT_RATIO))
        else:
            accepted.append(d)
    return accepted, rejected
