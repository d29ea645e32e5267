"""k-nearest-neighbours over feature subsets, with an incremental squared-distance cache."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_mask(subset, n_features: int) -> np.ndarray:
    """Normalise a boolean mask or an iterable of indices to a boolean mask of length f."""
    arr = np.asarray(subset)
    if arr.dtype == bool:
        if arr.shape != (n_features,):
            raise ValueError(f"mask has shape {arr.shape}, expected ({n_features},)")
        return arr.copy()
    mask = np.zeros(n_features, dtype=bool)
    idx = arr.astype(np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= n_features):
        raise IndexError("feature index out of range")
    mask[idx] = True
    return mask


GRAM_THRESHOLD = 32


def squared_distances(query: np.ndarray, train: np.ndarray, subset) -> np.ndarray:
    """Squared Euclidean distances over ``subset``; inputs are column-major (f, n).

    Small subsets are accumulated feature by feature; larger ones use the
    |q|^2 + |t|^2 - 2 q.t expansion, clamped at zero.
    """
    idx = np.flatnonzero(as_mask(subset, query.shape[0]))
    out = np.zeros((query.shape[1], train.shape[1]))
    if idx.size > GRAM_THRESHOLD:
        q, t = query[idx], train[idx]
        out += np.einsum("ji,ji->i", q, q)[:, None]
        out += np.einsum("ji,ji->i", t, t)[None, :]
        out -= 2.0 * (q.T @ t)
        return np.maximum(out, 0.0, out=out)
    for j in idx:
        diff = query[j][:, None] - train[j][None, :]
        out += diff * diff
    return out


class DistanceCache:
    """Query x train squared distances over an active feature set, updated one feature at a time."""

    def __init__(self, query: np.ndarray, train: np.ndarray, active=None):
        self.query = query
        self.train = train
        n_features = query.shape[0]
        if train.shape[0] != n_features:
            raise ValueError("query and train rows must have the same number of features")
        self.active = np.zeros(n_features, dtype=bool) if active is None else as_mask(active, n_features)
        self.sq_dists = squared_distances(query, train, self.active)

    def clone(self) -> "DistanceCache":
        new = object.__new__(DistanceCache)
        new.query = self.query
        new.train = self.train
        new.active = self.active.copy()
        new.sq_dists = self.sq_dists.copy()
        return new

    def _contribution(self, j: int) -> np.ndarray:
        diff = self.query[j][:, None] - self.train[j][None, :]
        return diff * diff

    def toggle(self, j: int, on: bool) -> "DistanceCache":
        if bool(self.active[j]) == bool(on):
            raise ValueError(f"feature {j} is already {'on' if on else 'off'}")
        if on:
            self.sq_dists += self._contribution(j)
        else:
            self.sq_dists -= self._contribution(j)
            # cancellation can leave tiny negatives
            np.maximum(self.sq_dists, 0.0, out=self.sq_dists)
        self.active[j] = on
        if not self.active.any():
            self.sq_dists.fill(0.0)
        return self

    def move_to(self, target) -> "DistanceCache":
        """Toggle every feature that differs from ``target``."""
        target = as_mask(target, self.active.size)
        for j in np.flatnonzero(self.active != target):
            self.toggle(int(j), bool(target[j]))
        return self


def vote(neighbour_labels: np.ndarray) -> np.ndarray:
    k = neighbour_labels.shape[-1]
    return (2 * neighbour_labels.sum(axis=-1) > k).astype(np.int64)


def nearest(sq_dists: np.ndarray, k: int) -> np.ndarray:
    # stable sort: equal distances resolve to the lower training-row index
    return np.argsort(sq_dists, axis=1, kind="stable")[:, :k]


@dataclass(frozen=True)
class KnnModel:
    train_x: np.ndarray  # (f, n) column-major
    train_y: np.ndarray
    k_neighbors: int = 3

    def __post_init__(self):
        if self.k_neighbors < 1 or self.k_neighbors % 2 == 0:
            raise ValueError(f"k_neighbors must be a positive odd number, got {self.k_neighbors}")
        if self.k_neighbors > self.train_x.shape[1]:
            raise ValueError(f"k_neighbors={self.k_neighbors} exceeds {self.train_x.shape[1]} training rows")

    @classmethod
    def from_dataset(cls, d, k_neighbors: int = 3) -> "KnnModel":
        return cls(d.features, d.labels, k_neighbors)

    def predict_from_distances(self, sq_dists: np.ndarray) -> np.ndarray:
        return vote(self.train_y[nearest(sq_dists, self.k_neighbors)])

    def predict(self, subset, query_x: np.ndarray) -> np.ndarray:
        query_x = np.asarray(query_x, dtype=np.float64)
        if query_x.ndim == 1:
            query_x = query_x[:, None]
        if query_x.shape[0] != self.train_x.shape[0]:
            raise ValueError("query rows have a different number of features")
        mask = as_mask(subset, self.train_x.shape[0])
        if not mask.any():
            raise ValueError("cannot classify with an empty feature subset")
        return self.predict_from_distances(squared_distances(query_x, self.train_x, mask))


def predict(model: KnnModel, subset, query_x: np.ndarray) -> np.ndarray:
    return model.predict(subset, query_x)
