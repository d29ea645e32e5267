"""Wrapper searches over feature subsets: MARL (global reward), CLEAN (counterfactual reward) and a GA."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import AgentTable, LearningSchedule, decay
from .dataset import Dataset, FoldPartition
from .evaluation import RewardSpec, SubsetEvaluator

log = logging.getLogger(__name__)

WRAPPERS = ("MARL", "CLEAN", "GA")
DEFAULT_EPISODES = {"MARL": 5000, "CLEAN": 3000}


@dataclass(frozen=True)
class GaParams:
    population_size: int = 50
    num_generations: int = 100
    tournament_size: int = 3
    prob_crossover: float = 0.7
    prob_mutation: float = 1.0
    mutation_rate: float | None = None  # None means 1/f
    init_density: float = 0.5

    def __post_init__(self):
        for name in ("prob_crossover", "prob_mutation", "init_density"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ValueError("tournament_size must lie in [1, population_size]")
        if self.num_generations < 1:
            raise ValueError("num_generations must be >= 1")


@dataclass(frozen=True)
class WrapperConfig:
    method: str = "CLEAN"
    num_episodes: int | None = None
    schedule: LearningSchedule = field(default_factory=LearningSchedule)
    reward_spec: RewardSpec = field(default_factory=RewardSpec)
    ga: GaParams = field(default_factory=GaParams)
    knn_k: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.method not in WRAPPERS:
            raise ValueError(f"unknown wrapper {self.method!r}; expected one of {WRAPPERS}")
        if self.num_episodes is not None and self.num_episodes < 1:
            raise ValueError("num_episodes must be >= 1")

    @property
    def episodes(self) -> int:
        if self.method == "GA":
            return self.ga.num_generations
        return self.num_episodes if self.num_episodes is not None else DEFAULT_EPISODES[self.method]


@dataclass
class LearningCurve:
    """One record per episode (or generation)."""

    global_reward: list[float] = field(default_factory=list)
    subset_size: list[int] = field(default_factory=list)
    epsilon: list[float | None] = field(default_factory=list)
    alpha: list[float | None] = field(default_factory=list)
    # diagnostics, not serialised
    evaluations: list[int] = field(default_factory=list)
    counterfactuals: list[int] = field(default_factory=list)
    max_abs_clean: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.global_reward)

    def append(self, g, size, epsilon=None, alpha=None, evaluations=0):
        self.global_reward.append(float(g))
        self.subset_size.append(int(size))
        self.epsilon.append(epsilon)
        self.alpha.append(alpha)
        self.evaluations.append(int(evaluations))

    def rows(self):
        for i in range(len(self)):
            yield (i + 1, self.global_reward[i], self.subset_size[i],
                   "" if self.epsilon[i] is None else self.epsilon[i],
                   "" if self.alpha[i] is None else self.alpha[i])

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["episode", "global_reward", "subset_size", "epsilon", "alpha"])
            for r in self.rows():
                w.writerow([r[0], repr(r[1]), r[2], *(repr(v) if v != "" else v for v in r[3:])])


def _evaluator(train, folds, cfg, evaluator):
    if evaluator is not None:
        return evaluator
    return SubsetEvaluator(train, folds, cfg.reward_spec, cfg.knn_k)


def run_marl(train: Dataset, folds: FoldPartition, cfg: WrapperConfig,
             evaluator: SubsetEvaluator | None = None) -> tuple[np.ndarray, LearningCurve]:
    """Every agent acts epsilon-greedily and learns from the shared global reward."""
    ev = _evaluator(train, folds, cfg, evaluator)
    rng = np.random.default_rng(cfg.seed)
    table = AgentTable(train.n_features)
    sched = cfg.schedule
    curve = LearningCurve()
    for _ in range(cfg.episodes):
        before = ev.stats.requests
        actions = table.epsilon_greedy_actions(sched.epsilon, rng)
        g = ev.reward(actions.astype(bool), anchor=True).reward
        table.update_many(actions, g, sched.alpha)
        curve.append(g, actions.sum(), sched.epsilon, sched.alpha, ev.stats.requests - before)
        sched = decay(sched)
    return table.greedy_actions().astype(bool), curve


def counterfactual_reward(g_counterfactual: float, g_global: float) -> float:
    """C_i = G(a - a_i + c_i) - G(a)."""
    return g_counterfactual - g_global


def run_clean(train: Dataset, folds: FoldPartition, cfg: WrapperConfig,
              evaluator: SubsetEvaluator | None = None) -> tuple[np.ndarray, LearningCurve]:
    """Agents act greedily online; each explores privately through a one-bit counterfactual.

    C_i = G(a with bit i set to c_i) - G(a). When c_i equals a_i the
    difference is zero and no evaluation is made.
    """
    ev = _evaluator(train, folds, cfg, evaluator)
    rng = np.random.default_rng(cfg.seed)
    table = AgentTable(train.n_features)
    sched = cfg.schedule
    curve = LearningCurve()
    for _ in range(cfg.episodes):
        before = ev.stats.requests
        greedy = table.greedy_actions()
        g = ev.reward(greedy.astype(bool), anchor=True).reward
        cf = table.epsilon_greedy_actions(sched.epsilon, rng)
        clean = np.zeros(train.n_features)
        flipped = np.flatnonzero(cf != greedy)
        for i in flipped:
            clean[i] = counterfactual_reward(ev.flip_reward(int(i)).reward, g)
        table.update_many(cf, clean, sched.alpha)
        curve.append(g, greedy.sum(), sched.epsilon, sched.alpha, ev.stats.requests - before)
        curve.counterfactuals.append(len(flipped))
        curve.max_abs_clean.append(float(np.abs(clean).max()))
        sched = decay(sched)
    return table.greedy_actions().astype(bool), curve


def two_point_crossover(p1: np.ndarray, p2: np.ndarray, cuts: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = sorted(cuts)
    c1, c2 = p1.copy(), p2.copy()
    c1[lo:hi], c2[lo:hi] = p2[lo:hi], p1[lo:hi]
    return c1, c2


def draw_cuts(n: int, rng: np.random.Generator) -> tuple[int, int] | None:
    """Two distinct interior cut points in [1, n-1], ordered; one cut when n == 2."""
    if n < 2:
        return None
    if n == 2:
        return (1, 2)
    lo, hi = sorted(int(c) for c in rng.choice(np.arange(1, n), size=2, replace=False))
    return lo, hi


def mutate(individual: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    return individual ^ (rng.random(individual.size) < rate)


def tournament_select(fitness: np.ndarray, size: int, rng: np.random.Generator) -> int:
    entrants = rng.choice(fitness.size, size=size, replace=False)
    return int(entrants[np.argmax(fitness[entrants])])


def run_ga(train: Dataset, folds: FoldPartition, cfg: WrapperConfig,
           evaluator: SubsetEvaluator | None = None) -> tuple[np.ndarray, LearningCurve]:
    """Generational GA with one elite; fitness is the subset reward. Returns the best individual seen."""
    ev = _evaluator(train, folds, cfg, evaluator)
    rng = np.random.default_rng(cfg.seed)
    ga = cfg.ga
    f = train.n_features
    rate = ga.mutation_rate if ga.mutation_rate is not None else 1.0 / f

    pop = rng.random((ga.population_size, f)) < ga.init_density
    fitness = np.array([ev.reward(ind).reward for ind in pop])
    best_i = int(np.argmax(fitness))
    best, best_fit = pop[best_i].copy(), float(fitness[best_i])
    curve = LearningCurve()

    for _ in range(ga.num_generations):
        before = ev.stats.requests
        children = [pop[int(np.argmax(fitness))].copy()]
        while len(children) < ga.population_size:
            a = pop[tournament_select(fitness, ga.tournament_size, rng)]
            b = pop[tournament_select(fitness, ga.tournament_size, rng)]
            if rng.random() < ga.prob_crossover and (cuts := draw_cuts(f, rng)) is not None:
                kids = two_point_crossover(a, b, cuts)
            else:
                kids = (a.copy(), b.copy())
            for kid in kids:
                if rng.random() < ga.prob_mutation:
                    kid = mutate(kid, rate, rng)
                children.append(kid)
        pop = np.array(children[: ga.population_size])
        fitness = np.array([ev.reward(ind).reward for ind in pop])
        gen_best = int(np.argmax(fitness))
        if fitness[gen_best] > best_fit:
            best, best_fit = pop[gen_best].copy(), float(fitness[gen_best])
        curve.append(best_fit, best.sum(), evaluations=ev.stats.requests - before)
    return best, curve


def run_wrapper(train: Dataset, folds: FoldPartition, cfg: WrapperConfig,
                evaluator: SubsetEvaluator | None = None) -> tuple[np.ndarray, LearningCurve]:
    runner = {"MARL": run_marl, "CLEAN": run_clean, "GA": run_ga}[cfg.method]
    return runner(train, folds, cfg, evaluator)
