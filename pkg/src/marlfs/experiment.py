"""End-to-end experiment runner: split, select, evaluate on held-out data, aggregate and rank."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .agents import LearningSchedule
from .classifier import KnnModel
from .dataset import (Dataset, SplitSpec, discretize_bins, load_csv, make_folds, make_synthetic,
                      mean_normalize, train_test_split)
from .evaluation import RewardSpec, SubsetEvaluator
from .filters import mrmr, ucfs
from .metrics import METRICS, PerformanceReport, score
from .wrappers import GaParams, LearningCurve, WrapperConfig, run_wrapper

log = logging.getLogger(__name__)

METHODS = ("Baseline", "uCFS", "mRMR", "GA", "MARL", "CLEAN", "GA+uCFS", "MARL+uCFS", "CLEAN+uCFS")
ALIASES = {"Without FS": "Baseline", "GA + uCFS": "GA+uCFS", "MARL + uCFS": "MARL+uCFS",
           "CLEAN + uCFS": "CLEAN+uCFS"}
RANK_METRICS = ("accuracy", "precision", "recall")
RESULT_COLUMNS = ("method", "rep", "subset_size", *METRICS)


def canonical_method(name: str) -> str:
    name = ALIASES.get(name.strip(), name.strip())
    if name not in METHODS:
        raise ValueError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")
    return name


@dataclass(frozen=True)
class MethodSpec:
    method: str
    boundary: int = 30
    hybrid_prefilter_size: int | None = None  # None means 10 * boundary
    prefilter_cap: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", canonical_method(self.method))
        if self.boundary < 1:
            raise ValueError("boundary must be >= 1")
        if self.hybrid and self.hybrid_prefilter_size is not None and self.hybrid_prefilter_size < self.boundary:
            raise ValueError("hybrid_prefilter_size must be >= boundary")
        if self.prefilter_cap is not None and self.prefilter_cap < 1:
            raise ValueError("prefilter_cap must be >= 1")

    @property
    def hybrid(self) -> bool:
        return self.method.endswith("+uCFS")

    @property
    def wrapper(self) -> str | None:
        base = self.method.split("+")[0]
        return base if base in ("GA", "MARL", "CLEAN") else None

    @property
    def prefilter_size(self) -> int:
        return self.hybrid_prefilter_size if self.hybrid_prefilter_size is not None else 10 * self.boundary


@dataclass(frozen=True)
class Settings:
    """Everything besides the method that a single run depends on."""

    lam: float = 0.2
    folds: int = 10
    knn_k: int = 3
    bins: int = 3
    optimize_metric: str = "f_score"
    schedule: LearningSchedule = field(default_factory=LearningSchedule)
    episodes: Mapping[str, int] = field(default_factory=lambda: {"MARL": 5000, "CLEAN": 3000})
    ga: GaParams = field(default_factory=GaParams)
    master_seed: int = 0


def rep_seeds(master: int, rep: int) -> dict[str, int]:
    """Independent split / fold / search seeds for one repetition."""
    state = np.random.SeedSequence([int(master), int(rep)]).generate_state(3, dtype=np.uint32)
    return {"split": int(state[0]), "folds": int(state[1]), "search": int(state[2])}


@dataclass
class RunRecord:
    method: str
    boundary: int
    rep: int
    subset: list[int]
    test: PerformanceReport
    seeds: dict[str, int]
    curve: LearningCurve | None = None
    eval_stats: dict | None = None

    @property
    def subset_size(self) -> int:
        return len(self.subset)

    def row(self) -> dict:
        return {"method": self.method, "rep": self.rep, "subset_size": self.subset_size, **self.test.as_dict()}


def evaluate_on_test(train: Dataset, test: Dataset, subset: Sequence[int], knn_k: int) -> PerformanceReport:
    """Train on the full training set restricted to ``subset`` and score the held-out rows."""
    subset = np.asarray(subset, dtype=np.int64)
    if subset.size == 0:
        # no features: fall back to the training majority class
        majority = int(2 * train.labels.sum() > train.n_rows)
        return score(np.full(test.n_rows, majority), test.labels)
    model = KnnModel.from_dataset(train, knn_k)
    return score(model.predict(subset, test.features), test.labels)


def select_features(train: Dataset, folds, spec: MethodSpec, settings: Settings,
                    seed: int) -> tuple[np.ndarray, LearningCurve | None, dict | None]:
    """Run one selection method on the training partition only; returns original feature indices."""
    cols = np.arange(train.n_features)
    if spec.prefilter_cap is not None and train.n_features > spec.prefilter_cap:
        cols = ucfs(train, spec.prefilter_cap)
    work = train.take_features(cols)
    b = min(spec.boundary, work.n_features)

    if spec.method == "Baseline":
        return cols, None, None
    if spec.method == "uCFS":
        return cols[ucfs(work, b)], None, None
    if spec.method == "mRMR":
        return np.sort(cols[mrmr(discretize_bins(work, settings.bins), b)]), None, None

    if spec.hybrid:
        keep = ucfs(work, min(spec.prefilter_size, work.n_features))
        cols, work = cols[keep], work.take_features(keep)
    cfg = WrapperConfig(
        method=spec.wrapper,
        num_episodes=settings.episodes.get(spec.wrapper),
        schedule=settings.schedule,
        reward_spec=RewardSpec(spec.boundary, settings.optimize_metric),
        ga=settings.ga,
        knn_k=settings.knn_k,
        seed=seed,
    )
    ev = SubsetEvaluator(work, folds, cfg.reward_spec, cfg.knn_k)
    mask, curve = run_wrapper(work, folds, cfg, ev)
    stats = dataclasses.asdict(ev.stats) | {"hit_rate": ev.stats.hit_rate}
    return cols[mask], curve, stats


def run_single(d: Dataset, spec: MethodSpec, settings: Settings, rep: int) -> RunRecord:
    seeds = rep_seeds(settings.master_seed, rep)
    train, test = train_test_split(d, SplitSpec(settings.lam, seeds["split"]))
    folds = make_folds(train, settings.folds, seeds["folds"])
    subset, curve, stats = select_features(train, folds, spec, settings, seeds["search"])
    subset = sorted(int(j) for j in subset)
    perf = evaluate_on_test(train, test, subset, settings.knn_k)
    return RunRecord(spec.method, spec.boundary, rep, subset, perf, seeds, curve, stats)


def run_method(d: Dataset, spec: MethodSpec, settings: Settings, reps: int) -> list[RunRecord]:
    return [run_single(d, spec, settings, rep) for rep in range(reps)]


def _job(args):
    d, spec, settings, rep = args
    return run_single(d, spec, settings, rep)


def run_jobs(d: Dataset, specs: Sequence[MethodSpec], settings: Settings, reps: int,
             workers: int = 1) -> list[RunRecord]:
    jobs = [(d, s, settings, r) for s in specs for r in range(reps)]
    if workers <= 1:
        out = []
        for job in jobs:
            rec = _job(job)
            log.info("%s b=%d rep=%d |S|=%d f=%.3f", rec.method, rec.boundary, rec.rep,
                     rec.subset_size, rec.test.f_score)
            out.append(rec)
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs))


def _sd(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    return float(values.std(ddof=1)) if values.size > 1 else 0.0


def aggregate(records: Iterable[RunRecord]) -> dict[str, dict[str, dict[str, float]]]:
    """method -> column -> {"mean", "sd"} (sample SD), in METHODS order."""
    by_method: dict[str, list[RunRecord]] = {}
    for r in records:
        by_method.setdefault(r.method, []).append(r)
    out = {}
    for m in sorted(by_method, key=METHODS.index):
        rows = [r.row() for r in by_method[m]]
        out[m] = {c: {"mean": float(np.mean([row[c] for row in rows])), "sd": _sd([row[c] for row in rows])}
                  for c in ("subset_size", *METRICS)}
    return out


def means_table(agg: Mapping[str, Mapping[str, Mapping[str, float]]]) -> dict[str, dict[str, float]]:
    return {m: {c: v["mean"] for c, v in cols.items()} for m, cols in agg.items()}


def score_rank(tables: Mapping[str, Mapping[str, float]] | Sequence[Mapping[str, Mapping[str, float]]]) -> dict[str, dict]:
    """Score-based comparison across one or more result tables.

    Each table maps method -> column means. Within a table, the method with
    the fewest features scores 1, the next 2, and so on; for accuracy,
    precision and recall the lowest value scores 1 so better performance
    earns more. Tied methods share the lowest score of their block. Scores
    are summed over tables, then ranked (1 = best): ascending for features,
    descending for performance.
    """
    if isinstance(tables, Mapping):
        tables = [tables]
    methods = list(tables[0])
    if len(methods) < 2:
        raise ValueError("need at least two methods to rank")
    feat = np.zeros(len(methods))
    perf = np.zeros(len(methods))
    for t in tables:
        if set(t) != set(methods):
            raise ValueError("every table must cover the same methods")
        feat += rankdata([t[m]["subset_size"] for m in methods], method="min")
        for metric in RANK_METRICS:
            perf += rankdata([t[m][metric] for m in methods], method="min")
    feat_rank = rankdata(feat, method="min")
    perf_rank = rankdata(-perf, method="min")
    return {m: {"features_score": int(feat[i]), "features_rank": int(feat_rank[i]),
                "performance_score": int(perf[i]), "performance_rank": int(perf_rank[i])}
            for i, m in enumerate(methods)}


# --- run configuration -------------------------------------------------------

@dataclass
class RunConfig:
    data: dict | None = None
    synthetic: dict | None = None
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    boundaries: list[int] = field(default_factory=lambda: [10, 30, 50])
    lam: float = 0.2
    folds: int = 10
    repetitions: int = 10
    knn_k: int = 3
    seed: int = 0
    bins: int = 3
    optimize_metric: str = "f_score"
    normalize: bool = True
    prefilter_cap: int | None = None
    hybrid_prefilter_size: int | None = None
    alpha: float = 0.2
    epsilon: float = 0.15
    alpha_decay: float = 0.9995
    epsilon_decay: float = 0.9995
    marl_episodes: int = 5000
    clean_episodes: int = 3000
    population_size: int = 50
    num_generations: int = 100
    tournament_size: int = 3
    prob_crossover: float = 0.7
    prob_mutation: float = 1.0
    mutation_rate: float | None = None
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: Mapping) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(unknown)}")
        cfg = cls(**dict(raw))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if (self.data is None) == (self.synthetic is None):
            raise ValueError("config: exactly one of 'data' or 'synthetic' is required")
        if self.data is not None and "path" not in self.data:
            raise ValueError("config field 'data.path' is required")
        if self.synthetic is not None:
            syn = self.synthetic
            for key in ("f", "m"):
                if key not in syn:
                    raise ValueError(f"config field 'synthetic.{key}' is required")
            bad = [i for i in syn.get("informative", []) if not 0 <= int(i) < int(syn["f"])]
            if bad:
                raise ValueError(f"config field 'synthetic.informative' has out-of-range indices {bad}")
        if not isinstance(self.methods, list) or not self.methods:
            raise ValueError("config field 'methods' must be a non-empty list")
        for m in self.methods:
            try:
                canonical_method(str(m))
            except ValueError as exc:
                raise ValueError(f"config field 'methods': {exc}") from None
        if not self.boundaries or any(int(b) < 1 for b in self.boundaries):
            raise ValueError("config field 'boundaries' must list positive integers")
        checks = [
            ("lam", 0 < self.lam < 1), ("folds", self.folds >= 2), ("repetitions", self.repetitions >= 1),
            ("knn_k", self.knn_k >= 1 and self.knn_k % 2 == 1), ("bins", self.bins >= 2),
            ("optimize_metric", self.optimize_metric in METRICS),
            ("marl_episodes", self.marl_episodes >= 1), ("clean_episodes", self.clean_episodes >= 1),
            ("workers", self.workers >= 1),
            ("hybrid_prefilter_size", self.hybrid_prefilter_size is None
             or self.hybrid_prefilter_size >= max(self.boundaries)),
            ("prefilter_cap", self.prefilter_cap is None or self.prefilter_cap >= 1),
        ]
        for name, ok in checks:
            if not ok:
                raise ValueError(f"config field {name!r} is invalid: {getattr(self, name)!r}")
        try:
            self.settings()
        except ValueError as exc:
            raise ValueError(f"config: {exc}") from None

    def settings(self) -> Settings:
        return Settings(
            lam=self.lam, folds=self.folds, knn_k=self.knn_k, bins=self.bins,
            optimize_metric=self.optimize_metric,
            schedule=LearningSchedule(self.alpha, self.epsilon, self.alpha_decay, self.epsilon_decay),
            episodes={"MARL": self.marl_episodes, "CLEAN": self.clean_episodes},
            ga=GaParams(self.population_size, self.num_generations, self.tournament_size,
                        self.prob_crossover, self.prob_mutation, self.mutation_rate),
            master_seed=self.seed,
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.as_dict(), sort_keys=True).encode()).hexdigest()

    def load_dataset(self) -> Dataset:
        if self.data is not None:
            d = load_csv(self.data["path"], self.data.get("label_column", -1))
        else:
            s = self.synthetic
            d = make_synthetic(int(s["f"]), int(s["m"]), s.get("informative", []),
                               float(s.get("noise", 0.5)), int(s.get("seed", 0)))
        return mean_normalize(d) if self.normalize else d


def run_experiment(cfg: RunConfig, out_dir) -> dict:
    """Run every (boundary, method, repetition) job and write all artefacts under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = cfg.load_dataset()
    settings = cfg.settings()
    methods = [canonical_method(m) for m in cfg.methods]
    tables = {}
    written = []
    for b in cfg.boundaries:
        specs = [MethodSpec(m, int(b), cfg.hybrid_prefilter_size, cfg.prefilter_cap) for m in methods]
        records = run_jobs(d, specs, settings, cfg.repetitions, cfg.workers)
        written += write_results(records, out, f"b{b}")
        tables[f"b{b}"] = means_table(aggregate(records))
    if len(methods) >= 2:
        ranks = score_rank(list(tables.values()))
        write_rank_table(ranks, out / "rank.csv")
        written.append("rank.csv")
    manifest = {
        "config": cfg.as_dict(),
        "config_sha256": cfg.digest(),
        "dataset": {"n_features": d.n_features, "n_rows": d.n_rows, "n_positive": d.n_positive,
                    "provenance": d.provenance},
        "rep_seeds": {r: rep_seeds(cfg.seed, r) for r in range(cfg.repetitions)},
        "artifacts": sorted(written) + ["manifest.json"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_results(records: Sequence[RunRecord], out: Path, tag: str) -> list[str]:
    names = [f"results_{tag}.csv", f"results_{tag}.json"]
    with (out / names[0]).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in records:
            row = r.row()
            w.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])
    agg = aggregate(records)
    payload = {
        "table": [{"method": m, **{c: [round(100 * v["mean"], 1) if c in METRICS else round(v["mean"], 1),
                                       round(100 * v["sd"], 1) if c in METRICS else round(v["sd"], 1)]
                                   for c, v in cols.items()}} for m, cols in agg.items()],
        "aggregate": agg,
        "runs": [{"method": r.method, "boundary": r.boundary, "rep": r.rep, "subset": r.subset,
                  "seeds": r.seeds, "eval_stats": r.eval_stats, **r.test.as_dict()} for r in records],
    }
    (out / names[1]).write_text(json.dumps(payload, indent=2) + "\n")
    curve_dir = out / "curves"
    for r in records:
        if r.curve is not None:
            name = f"curves/{tag}_{r.method}_rep{r.rep}.csv"
            curve_dir.mkdir(exist_ok=True)
            r.curve.to_csv(out / name)
            names.append(name)
    return names


def read_results(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["rep"] = int(row["rep"])
        row["subset_size"] = int(row["subset_size"])
        for c in METRICS:
            row[c] = float(row[c])
    return rows


def means_from_rows(rows: Sequence[Mapping]) -> dict[str, dict[str, float]]:
    by: dict[str, list[Mapping]] = {}
    for r in rows:
        by.setdefault(r["method"], []).append(r)
    return {m: {c: float(np.mean([float(r[c]) for r in rs])) for c in ("subset_size", *METRICS)}
            for m, rs in by.items()}


def write_rank_table(ranks: Mapping[str, Mapping], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = ["features_score", "features_rank", "performance_score", "performance_rank"]
        w.writerow(["method", *cols])
        for m, v in ranks.items():
            w.writerow([m, *(v[c] for c in cols)])
