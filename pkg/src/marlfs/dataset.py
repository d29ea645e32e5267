"""Labelled tabular data: ingestion, preprocessing, splitting and synthetic generation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Binary-labelled data stored column-major: ``features[j]`` is feature j over all rows."""

    features: np.ndarray  # shape (f, m)
    labels: np.ndarray  # shape (m,), values in {0, 1}
    feature_names: tuple[str, ...]
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels).astype(np.int64)
        if x.ndim != 2:
            raise DatasetError("features must be a 2-D (f, m) array")
        f, m = x.shape
        if f < 1:
            raise DatasetError("dataset needs at least one feature")
        if m < 2:
            raise DatasetError("dataset needs at least two rows")
        if y.shape != (m,):
            raise DatasetError(f"labels length {y.shape} does not match {m} rows")
        if not np.isin(y, (0, 1)).all():
            raise DatasetError("labels must be 0 or 1")
        if y.min() == y.max():
            raise DatasetError("both classes must be present")
        if len(self.feature_names) != f:
            raise DatasetError("one feature name per column required")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_features(self) -> int:
        return self.features.shape[0]

    @property
    def n_rows(self) -> int:
        return self.features.shape[1]

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    def with_features(self, features: np.ndarray, **provenance) -> "Dataset":
        return Dataset(features, self.labels, self.feature_names,
                       {**self.provenance, **provenance})

    def take_rows(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.features[:, rows], self.labels[rows],
                       self.feature_names, self.provenance)

    def take_features(self, cols) -> "Dataset":
        cols = np.asarray(cols, dtype=np.int64)
        return Dataset(self.features[cols], self.labels,
                       tuple(self.feature_names[j] for j in cols), self.provenance)


@dataclass(frozen=True)
class SplitSpec:
    lam: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise DatasetError(f"test fraction must lie in (0, 1), got {self.lam}")


@dataclass(frozen=True)
class FoldPartition:
    assignments: np.ndarray  # fold index per row
    k: int

    def fold_rows(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == j)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def load_csv(path, label_column: str | int) -> Dataset:
    """Read a headed CSV; the label column must hold exactly two distinct values.

    Label values are mapped to 0/1 in sorted order; the mapping is kept in
    ``provenance["label_map"]``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path} is empty") from None
        rows = [r for r in reader if r]

    if isinstance(label_column, int) or (isinstance(label_column, str) and label_column not in header
                                         and label_column.lstrip("-").isdigit()):
        idx = int(label_column)
        if not -len(header) <= idx < len(header):
            raise DatasetError(f"label column index {idx} out of range")
        label_idx = idx % len(header)
    elif label_column in header:
        label_idx = header.index(label_column)
    else:
        raise DatasetError(f"label column {label_column!r} not found")

    if len(rows) < 2:
        raise DatasetError("need at least 2 data rows")

    raw_labels = [r[label_idx].strip() for r in rows]
    classes = sorted(set(raw_labels))
    if len(classes) != 2:
        raise DatasetError(f"label column must be binary, found {len(classes)} distinct values")
    label_map = {c: i for i, c in enumerate(classes)}

    feat_idx = [i for i in range(len(header)) if i != label_idx]
    x = np.empty((len(feat_idx), len(rows)))
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise DatasetError(f"row {i + 2} has {len(r)} cells, header has {len(header)}")
        for jj, j in enumerate(feat_idx):
            try:
                v = float(r[j])
            except ValueError:
                raise DatasetError(f"non-numeric feature at row {i + 2}, column {header[j]!r}") from None
            if not math.isfinite(v):
                raise DatasetError(f"non-numeric feature at row {i + 2}, column {header[j]!r}")
            x[jj, i] = v

    return Dataset(x, np.array([label_map[v] for v in raw_labels]),
                   tuple(header[j] for j in feat_idx),
                   {"source": str(path), "label_column": header[label_idx], "label_map": label_map})


def write_csv(d: Dataset, path, label_name: str = "label", sidecar: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*d.feature_names, label_name])
        for i in range(d.n_rows):
            w.writerow([repr(float(v)) for v in d.features[:, i]] + [int(d.labels[i])])
    if sidecar is not None:
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def mean_normalize(d: Dataset) -> Dataset:
    # sample standard deviation; flat columns go to zero
    x = d.features
    mu = x.mean(axis=1, keepdims=True)
    centred = x - mu
    if d.n_rows > 1:
        sd = x.std(axis=1, ddof=1, keepdims=True)
    else:
        sd = np.zeros_like(mu)
    flat = (sd == 0) | ~np.isfinite(sd) | np.all(x == x[:, :1], axis=1, keepdims=True)
    out = np.where(flat, 0.0, centred / np.where(flat, 1.0, sd))
    return d.with_features(out, normalized=True)


def discretize_bins(d: Dataset, bins: int = 3) -> Dataset:
    """Equal-width binning per column over [min, max].

    Bins are closed on the right, (lo + i*w, lo + (i+1)*w], with the column
    minimum included in the first bin.
    """
    if bins < 2:
        raise DatasetError("bins must be >= 2")
    x = d.features
    lo = x.min(axis=1, keepdims=True)
    hi = x.max(axis=1, keepdims=True)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    idx = np.ceil((x - lo) / safe * bins) - 1
    idx = np.clip(idx, 0, bins - 1)
    idx = np.where(span > 0, idx, 0.0)
    return d.with_features(idx, bins=bins)


def _class_rows(labels: np.ndarray) -> list[np.ndarray]:
    return [np.flatnonzero(labels == c) for c in (0, 1)]


def train_test_split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Stratified split holding out round-half-up(lam * m) rows as the test set."""
    per_class = _class_rows(d.labels)
    if min(len(r) for r in per_class) < 2:
        raise DatasetError("each class needs at least 2 rows to stratify")
    m = d.n_rows
    n_test = int(math.floor(spec.lam * m + 0.5))
    n_test = min(max(n_test, 1), m - 2)

    # largest-remainder allocation of test rows to classes
    quotas = [len(r) * n_test / m for r in per_class]
    alloc = [int(math.floor(q)) for q in quotas]
    order = sorted(range(2), key=lambda c: (-(quotas[c] - alloc[c]), c))
    for c in order[: n_test - sum(alloc)]:
        alloc[c] += 1
    # both sides keep both classes; may move the test size by one row
    for c in range(2):
        alloc[c] = min(max(alloc[c], 1), len(per_class[c]) - 1)

    rng = np.random.default_rng(spec.seed)
    test = []
    for c in range(2):
        test.extend(rng.permutation(per_class[c])[: alloc[c]].tolist())
    test_mask = np.zeros(m, dtype=bool)
    test_mask[test] = True
    return d.take_rows(np.flatnonzero(~test_mask)), d.take_rows(np.flatnonzero(test_mask))


def make_folds(d: Dataset, k: int, seed: int) -> FoldPartition:
    """Stratified k-fold assignment; fold sizes and per-fold positive counts differ by at most one."""
    if k < 2:
        raise DatasetError("k must be >= 2")
    per_class = _class_rows(d.labels)
    if k > min(len(r) for r in per_class):
        raise DatasetError(f"k={k} exceeds the smallest class size")
    rng = np.random.default_rng(seed)
    assign = np.empty(d.n_rows, dtype=np.int64)
    # deal rows round-robin, continuing the rotation across classes so totals stay balanced
    offset = 0
    for rows in per_class:
        rows = rng.permutation(rows)
        assign[rows] = (offset + np.arange(len(rows))) % k
        offset = (offset + len(rows)) % k
    return FoldPartition(assign, k)


def make_synthetic(f: int, m: int, informative: Sequence[int], noise: float, seed: int) -> Dataset:
    """Planted-feature data: informative columns are 2y-1 plus N(0, noise^2), the rest N(0, 1)."""
    informative = sorted({int(i) for i in informative})
    if any(i < 0 or i >= f for i in informative):
        raise DatasetError(f"informative indices must lie in [0, {f})")
    if m < 4:
        raise DatasetError("m must be >= 4")
    if noise < 0:
        raise DatasetError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    y = np.zeros(m, dtype=np.int64)
    y[: m // 2] = 1
    y = rng.permutation(y)
    x = rng.standard_normal((f, m))
    if informative:
        signal = (2.0 * y - 1.0)[None, :]
        x[informative] = signal + noise * rng.standard_normal((len(informative), m))
    width = len(str(f - 1))
    names = tuple(f"f{j:0{width}d}" for j in range(f))
    return Dataset(x, y, names, {"generator": "planted", "seed": seed, "informative": informative,
                                 "noise": noise, "f": f, "m": m})
