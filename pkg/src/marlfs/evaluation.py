"""Cross-validated subset performance, the size-penalised reward and a shared evaluation cache."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import DistanceCache, as_mask, nearest, squared_distances, vote
from .dataset import Dataset, FoldPartition
from .metrics import METRICS


@dataclass(frozen=True)
class RewardSpec:
    boundary: int = 30
    optimize_metric: str = "f_score"

    def __post_init__(self):
        if int(self.boundary) < 1:
            raise ValueError("boundary must be >= 1")
        if self.optimize_metric not in METRICS:
            raise ValueError(f"unknown metric {self.optimize_metric!r}; expected one of {METRICS}")


@dataclass(frozen=True)
class RewardOutcome:
    performance: float
    subset_size: int
    cost: float | None
    reward: float
    fold_metrics: np.ndarray | None = field(default=None, compare=False, repr=False)


def size_penalised(performance: float, subset_size: int, boundary: int) -> RewardOutcome:
    """Reward is P while |S| <= b, otherwise P / (|S| / b)."""
    if subset_size <= boundary:
        return RewardOutcome(performance, subset_size, None, performance)
    cost = subset_size / boundary
    return RewardOutcome(performance, subset_size, cost, performance / cost)


def fold_metric_table(pred: np.ndarray, actual: np.ndarray, assignments: np.ndarray, k: int) -> np.ndarray:
    """Per-fold (accuracy, precision, recall, f_score) as a (k, 4) array."""
    codes = assignments * 4 + pred * 2 + actual
    counts = np.bincount(codes, minlength=4 * k).reshape(k, 4).astype(np.float64)
    tn, fn, fp, tp = counts.T
    total = counts.sum(axis=1)

    def ratio(num, den):
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0)

    precision = ratio(tp, tp + fp)
    recall = ratio(tp, tp + fn)
    return np.column_stack([
        ratio(tp + tn, total), precision, recall,
        ratio(2 * precision * recall, precision + recall),
    ])


class FoldScorer:
    """Scores a train x train distance matrix under a fixed fold partition.

    Every row is classified by its nearest neighbours among rows of the
    other folds, which is the k-fold loop done in one vectorised pass.
    """

    def __init__(self, labels: np.ndarray, folds: FoldPartition, k_neighbors: int = 3,
                 metric: str = "f_score"):
        if k_neighbors < 1 or k_neighbors % 2 == 0:
            raise ValueError(f"k_neighbors must be a positive odd number, got {k_neighbors}")
        self.labels = np.asarray(labels, dtype=np.int64)
        self.folds = folds
        self.k_neighbors = k_neighbors
        self.metric_col = METRICS.index(metric)
        a = folds.assignments
        if a.shape != self.labels.shape:
            raise ValueError("fold assignment does not match the number of rows")
        smallest_train = a.size - folds.sizes().max()
        if k_neighbors > smallest_train:
            raise ValueError(f"k_neighbors={k_neighbors} exceeds the {smallest_train} rows outside a fold")
        self._same_fold = a[:, None] == a[None, :]

    def fold_metrics(self, sq_dists: np.ndarray) -> np.ndarray:
        d = np.where(self._same_fold, np.inf, sq_dists)
        pred = vote(self.labels[nearest(d, self.k_neighbors)])
        return fold_metric_table(pred, self.labels, self.folds.assignments, self.folds.k)

    def performance(self, sq_dists: np.ndarray) -> float:
        return float(self.fold_metrics(sq_dists)[:, self.metric_col].mean())


def cv_performance(subset, folds: FoldPartition, train: Dataset, k_neighbors: int = 3,
                   metric: str = "f_score") -> float:
    """Mean of ``metric`` over the k validation folds; an empty subset scores 0."""
    mask = as_mask(subset, train.n_features)
    if not mask.any():
        return 0.0
    scorer = FoldScorer(train.labels, folds, k_neighbors, metric)
    return scorer.performance(squared_distances(train.features, train.features, mask))


def reward(subset, folds: FoldPartition, train: Dataset, spec: RewardSpec, k_neighbors: int = 3) -> RewardOutcome:
    mask = as_mask(subset, train.n_features)
    p = cv_performance(mask, folds, train, k_neighbors, spec.optimize_metric)
    return size_penalised(p, int(mask.sum()), spec.boundary)


@dataclass
class EvalStats:
    requests: int = 0
    hits: int = 0
    computed: int = 0
    toggles: int = 0
    fresh: int = 0

    @property
    def hit_rate(self) -> float:
        return self.hits / self.requests if self.requests else 0.0


class SubsetEvaluator:
    """Reward oracle for one (training set, folds, spec) triple.

    Outcomes are memoised by subset bitmask. Distances for a new subset are
    derived from an anchor :class:`DistanceCache` by toggling the differing
    features when that is cheaper than recomputing over the whole subset.
    """

    refresh_every = 4096  # toggles before the anchor is rebuilt from scratch
    max_toggle = 16  # beyond this many differing features, recompute instead

    def __init__(self, train: Dataset, folds: FoldPartition, spec: RewardSpec, k_neighbors: int = 3):
        self.train = train
        self.folds = folds
        self.spec = spec
        self.n_features = train.n_features
        self.scorer = FoldScorer(train.labels, folds, k_neighbors, spec.optimize_metric)
        self.anchor = DistanceCache(train.features, train.features)
        self._anchor_toggles = 0
        self.cache: dict[bytes, RewardOutcome] = {}
        self.stats = EvalStats()

    @staticmethod
    def key(mask: np.ndarray) -> bytes:
        return np.packbits(mask).tobytes()

    def _distances(self, mask: np.ndarray) -> DistanceCache:
        diff = int(np.count_nonzero(self.anchor.active != mask))
        if diff <= min(self.max_toggle, int(mask.sum())):
            self.stats.toggles += diff
            return self.anchor.clone().move_to(mask)
        self.stats.fresh += 1
        return DistanceCache(self.train.features, self.train.features, mask)

    def focus(self, subset) -> DistanceCache:
        """Move the anchor onto ``subset`` (used before a batch of one-bit neighbours)."""
        mask = as_mask(subset, self.n_features)
        diff = int(np.count_nonzero(self.anchor.active != mask))
        if diff > self.max_toggle or self._anchor_toggles + diff > self.refresh_every:
            self.anchor = DistanceCache(self.train.features, self.train.features, mask)
            self._anchor_toggles = 0
            self.stats.fresh += 1
        else:
            self.anchor.move_to(mask)
            self._anchor_toggles += diff
            self.stats.toggles += diff
        return self.anchor

    def _outcome(self, mask: np.ndarray, dist: DistanceCache | None) -> RewardOutcome:
        size = int(mask.sum())
        if size == 0:
            return size_penalised(0.0, 0, self.spec.boundary)
        if dist is None:
            dist = self._distances(mask)
        table = self.scorer.fold_metrics(dist.sq_dists)
        p = float(table[:, self.scorer.metric_col].mean())
        out = size_penalised(p, size, self.spec.boundary)
        return RewardOutcome(out.performance, out.subset_size, out.cost, out.reward, table)

    def reward(self, subset, anchor: bool = False) -> RewardOutcome:
        """Reward of ``subset``; with ``anchor=True`` the anchor also moves onto it."""
        mask = as_mask(subset, self.n_features)
        self.stats.requests += 1
        if anchor:
            self.focus(mask)
        k = self.key(mask)
        hit = self.cache.get(k)
        if hit is not None:
            self.stats.hits += 1
            return hit
        self.stats.computed += 1
        out = self._outcome(mask, self.anchor if anchor else None)
        self.cache[k] = out
        return out

    def flip_reward(self, j: int) -> RewardOutcome:
        """Reward of the anchor subset with feature ``j`` flipped (one toggle on a clone)."""
        mask = self.anchor.active.copy()
        mask[j] = not mask[j]
        self.stats.requests += 1
        k = self.key(mask)
        hit = self.cache.get(k)
        if hit is not None:
            self.stats.hits += 1
            return hit
        self.stats.computed += 1
        self.stats.toggles += 1
        out = self._outcome(mask, self.anchor.clone().toggle(j, bool(mask[j])) if mask.any() else None)
        self.cache[k] = out
        return out
