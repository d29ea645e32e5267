"""Filter rankings: squared Pearson correlation (uCFS) and greedy mRMR (MID criterion)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dataset import Dataset

# scores closer than this count as tied, resolved toward the lower feature index
TIE_TOL = 1e-12


def squared_correlations(d: Dataset) -> np.ndarray:
    """Squared Pearson correlation of each feature with the labels; flat columns score 0."""
    x = d.features - d.features.mean(axis=1, keepdims=True)
    y = d.labels - d.labels.mean()
    sxx = np.einsum("ij,ij->i", x, x)
    syy = float(y @ y)
    sxy = x @ y
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = (sxy * sxy) / (sxx * syy)
    r2 = np.where(sxx > 0, r2, 0.0)
    return np.clip(r2, 0.0, 1.0)


def _rank_desc(scores: np.ndarray) -> np.ndarray:
    return np.argsort(-scores, kind="stable")


def ucfs(train: Dataset, n_select: int) -> np.ndarray:
    """Indices of the ``n_select`` features with the largest squared correlation."""
    if not 1 <= n_select <= train.n_features:
        raise ValueError(f"n_select must lie in [1, {train.n_features}]")
    return np.sort(_rank_desc(squared_correlations(train))[:n_select])


def _codes(col: np.ndarray) -> tuple[np.ndarray, int]:
    uniq, inv = np.unique(col, return_inverse=True)
    return inv.ravel(), uniq.size


def mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    """Plug-in mutual information (nats) between two discrete vectors."""
    ca, na = _codes(np.asarray(a))
    cb, nb = _codes(np.asarray(b))
    joint = np.bincount(ca * nb + cb, minlength=na * nb).reshape(na, nb) / ca.size
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(max(np.sum(joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])), 0.0))


def _check_discrete(d: Dataset) -> None:
    if not np.all(d.features == np.round(d.features)):
        raise ValueError("mRMR needs discretised (integer-valued) features")


def _argmax_low(values: np.ndarray, candidates: np.ndarray) -> int:
    v = values[candidates]
    best = v.max()
    return int(candidates[np.flatnonzero(v >= best - TIE_TOL)[0]])


def mrmr(train_discrete: Dataset, n_select: int) -> np.ndarray:
    """Greedy mRMR: relevance I(F;C) minus mean redundancy with the already selected features.

    Returns indices in selection order.
    """
    d = train_discrete
    _check_discrete(d)
    f = d.n_features
    if not 1 <= n_select <= f:
        raise ValueError(f"n_select must lie in [1, {f}]")
    relevance = np.array([mutual_information(d.features[j], d.labels) for j in range(f)])
    redundancy = np.zeros(f)
    remaining = np.ones(f, dtype=bool)
    chosen: list[int] = []
    while len(chosen) < n_select:
        if chosen:
            score = relevance - redundancy / len(chosen)
        else:
            score = relevance
        j = _argmax_low(score, np.flatnonzero(remaining))
        chosen.append(j)
        remaining[j] = False
        for i in np.flatnonzero(remaining):
            redundancy[i] += mutual_information(d.features[i], d.features[j])
    return np.array(chosen, dtype=np.int64)


def write_scores(d: Dataset, scores: np.ndarray, path) -> None:
    """feature_name, score, rank (1 = best) as CSV."""
    order = _rank_desc(np.asarray(scores))
    rank = np.empty_like(order)
    rank[order] = np.arange(1, order.size + 1)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature_name", "score", "rank"])
        for j in order:
            w.writerow([d.feature_names[j], repr(float(scores[j])), int(rank[j])])
