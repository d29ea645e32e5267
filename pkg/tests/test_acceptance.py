"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line in the summary."""

import math

import numpy as np
import pytest

from marlfs.agents import AgentTable, LearningSchedule, q_update
from marlfs.classifier import DistanceCache, squared_distances
from marlfs.dataset import Dataset, make_folds, make_synthetic, mean_normalize, train_test_split, SplitSpec
from marlfs.evaluation import RewardSpec, SubsetEvaluator, cv_performance, size_penalised
from marlfs.experiment import MethodSpec, RunConfig, Settings, run_experiment, run_single, score_rank
from marlfs.filters import mrmr, ucfs
from marlfs.metrics import ConfusionCounts, compute_metrics, score
from marlfs.wrappers import WrapperConfig, counterfactual_reward, run_clean

import oracles
from test_experiment import LEUKEMIA_B10, as_table

pytestmark = pytest.mark.slow

SEEDS = range(10)
PLANTED = range(10)
DATA_SEED = 2024
TOL = 1e-12


@pytest.fixture(scope="module")
def planted():
    return mean_normalize(make_synthetic(500, 100, PLANTED, 0.5, DATA_SEED))


@pytest.fixture(scope="module")
def clean_runs(planted):
    return {(b, s): run_single(planted, MethodSpec("CLEAN", b), Settings(master_seed=s), 0)
            for b in (10, 30, 50) for s in SEEDS}


def test_generator_bayes_optimal(criterion):
    # the Bayes rule on this generator is the sign of the summed informative columns
    d = make_synthetic(20, 20000, PLANTED, 0.5, 7)
    pred = (d.features[list(PLANTED)].sum(axis=0) > 0).astype(int)
    f = score(pred, d.labels).f_score
    criterion(0, "generator Bayes-optimal F-score ~ 1 at noise 0.5", f >= 0.99, f"F={f:.4f}")


def test_1_boundary_compliance(clean_runs, criterion):
    over = [(b, s, r.subset_size) for (b, s), r in clean_runs.items() if r.subset_size > b]
    ok_count = len(clean_runs) - len(over)
    criterion(1, "CLEAN final |S| <= b", not over, f"{ok_count}/{len(clean_runs)} within b; violations {over}")


def test_2_scalability_contrast(planted, clean_runs, criterion):
    b = 30
    marl = [run_single(planted, MethodSpec("MARL", b), Settings(master_seed=s), 0).subset_size for s in SEEDS]
    ga = [run_single(planted, MethodSpec("GA", b), Settings(master_seed=s), 0).subset_size for s in SEEDS]
    clean_ok = all(clean_runs[(bb, s)].subset_size <= bb for bb in (10, 30, 50) for s in SEEDS)
    ok = np.mean(marl) > 5 * b and np.mean(ga) > 5 * b and clean_ok
    criterion(2, "MARL and GA mean |S| > 5b at b=30", ok,
              f"MARL mean {np.mean(marl):.1f} {marl}; GA mean {np.mean(ga):.1f} {ga}; threshold {5 * b}")


def test_3_planted_recovery(planted, criterion):
    hits = []
    for s in SEEDS:
        r = run_single(planted, MethodSpec("CLEAN+uCFS", 10), Settings(master_seed=s), 0)
        found = len(set(r.subset) & set(PLANTED))
        hits.append((found, round(r.test.f_score, 3), found >= 4 and r.test.f_score >= 0.85))
    good = sum(h[2] for h in hits)
    criterion(3, "CLEAN+uCFS recovers >= 4 planted and F >= 0.85", good >= 8,
              f"{good}/10 seeds; (recovered, F) per seed {[h[:2] for h in hits]}")


def test_4_small_instance_optimality(criterion):
    b = 2
    gaps = []
    for s in SEEDS:
        d = mean_normalize(make_synthetic(4, 40, [0, 1], 1.0, 100 + s))
        folds = make_folds(d, 5, s)
        rows = d.features.T.tolist()
        labels = d.labels.tolist()
        fa = folds.assignments.tolist()

        def brute(subset):
            return oracles.penalised(oracles.kfold_performance(rows, labels, fa, subset), len(subset), b)

        best = max(brute(sub) for sub in oracles.all_subsets(4))
        mask, _ = run_clean(d, folds, WrapperConfig("CLEAN", reward_spec=RewardSpec(b), seed=s))
        gaps.append(best - brute(np.flatnonzero(mask).tolist()))
    good = sum(g <= 0.05 for g in gaps)
    criterion(4, "CLEAN within 0.05 of brute-force optimum at f=4", good >= 8,
              f"{good}/10 seeds; gaps {[round(g, 3) for g in gaps]}")


def test_5_exact_formulas(criterion):
    checks = []
    t = AgentTable(1)
    q_update(t, 0, 1, 0.5, LearningSchedule(alpha=0.2))
    checks.append(("Q update", t.q[0, 1], -0.7))
    checks.append(("counterfactual", counterfactual_reward(0.75, 0.6), 0.15))
    checks.append(("reward |S|<=b", size_penalised(0.9, 25, 30).reward, 0.9))
    checks.append(("reward |S|>b", size_penalised(0.8, 60, 30).reward, 0.4))
    checks.append(("cost", size_penalised(0.8, 60, 30).cost, 2.0))
    checks.append(("reward |S|=b", size_penalised(0.37, 30, 30).reward, 0.37))
    rep = compute_metrics(ConfusionCounts(tp=3, fp=1, tn=4, fn=2))
    checks += [("accuracy", rep.accuracy, 0.7), ("precision", rep.precision, 0.75),
               ("recall", rep.recall, 0.6), ("f_score", rep.f_score, 2 / 3)]
    rep = compute_metrics(ConfusionCounts(tp=0, fp=0, tn=5, fn=5))
    checks += [("zero precision", rep.precision, 0.0), ("zero recall", rep.recall, 0.0),
               ("zero f_score", rep.f_score, 0.0), ("half accuracy", rep.accuracy, 0.5)]
    rep = compute_metrics(ConfusionCounts(tp=10, fp=0, tn=10, fn=0))
    checks += [(f"perfect {k}", v, 1.0) for k, v in rep.as_dict().items()]
    bad = [(n, got, want) for n, got, want in checks if abs(got - want) > TOL]
    criterion(5, "exact formulas at 1e-12", not bad, f"{len(checks) - len(bad)}/{len(checks)} match; {bad}")


def test_6_oracle_equivalence(criterion):
    rng = np.random.default_rng(6)
    problems = []
    for trial in range(20):
        m, f = 30, 10
        labels = np.zeros(m, dtype=np.int64)
        labels[rng.permutation(m)[: int(rng.integers(8, 23))]] = 1
        x = rng.normal(size=(f, m))
        d = Dataset(x, labels, tuple(f"g{j}" for j in range(f)))
        cols, ys = x.tolist(), labels.tolist()

        want, _ = oracles.ucfs_select(cols, ys, 4)
        if list(ucfs(d, 4)) != want:
            problems.append(("uCFS", trial))

        disc = rng.integers(0, 3, size=(8, m)).astype(float)
        dd = Dataset(disc, labels, tuple(f"g{j}" for j in range(8)))
        if list(mrmr(dd, 4)) != oracles.greedy_mrmr(disc.astype(int).tolist(), ys, 4):
            problems.append(("mRMR", trial))

        folds = make_folds(d, 5, trial)
        subset = sorted(rng.choice(f, size=int(rng.integers(1, f + 1)), replace=False).tolist())
        got = cv_performance(subset, folds, d)
        ref = oracles.kfold_performance(x.T.tolist(), ys, folds.assignments.tolist(), subset)
        if abs(got - ref) > TOL:
            problems.append(("k-fold P", trial, got, ref))

        cache = DistanceCache(x, x)
        for _ in range(50):
            j = int(rng.integers(f))
            cache.toggle(j, not cache.active[j])
            rows = x.T.tolist()
            act = np.flatnonzero(cache.active).tolist()
            ref = np.array([[oracles.sq_dist(a, c, act) for c in rows] for a in rows])
            if np.abs(cache.sq_dists - ref).max() > 1e-9:
                problems.append(("DistanceCache", trial))
                break
    criterion(6, "uCFS, mRMR, k-fold P and DistanceCache match oracles", not problems,
              f"20 random instances; mismatches {problems}")


def test_7_zero_epsilon(planted, criterion):
    train, _ = train_test_split(planted, SplitSpec(0.2, 1))
    folds = make_folds(train, 10, 2)
    sched = LearningSchedule(epsilon=0.0)
    _, curve = run_clean(train, folds, WrapperConfig("CLEAN", schedule=sched, reward_spec=RewardSpec(30), seed=3))
    worst = max(curve.max_abs_clean)
    ok = worst == 0.0 and sum(curve.counterfactuals) == 0 and len(curve) == 3000
    criterion(7, "epsilon = 0 gives every C_i = 0", ok,
              f"{len(curve)} episodes, max |C_i| = {worst}, counterfactual evaluations {sum(curve.counterfactuals)}")


def test_8_counterfactual_work(planted, criterion):
    train, _ = train_test_split(planted, SplitSpec(0.2, 1))
    folds = make_folds(train, 10, 2)
    cfg = WrapperConfig("CLEAN", num_episodes=100, reward_spec=RewardSpec(30), seed=4)
    ev = SubsetEvaluator(train, folds, cfg.reward_spec)
    _, curve = run_clean(train, folds, cfg, ev)
    exact = all(e == 1 + c for e, c in zip(curve.evaluations, curve.counterfactuals))
    f = train.n_features
    p = np.array(curve.epsilon) / 2
    expected = float(np.sum(1 + f * p))
    sigma = math.sqrt(float(np.sum(f * p * (1 - p))))
    total = sum(curve.evaluations)
    ok = exact and abs(total - expected) <= 3 * sigma
    criterion(8, "evaluations per episode = 1 + flips, total within 3 sigma", ok,
              f"per-episode identity {exact}; total {total} vs expected {expected:.1f} +/- {3 * sigma:.1f}")


def test_9_ranking_fixture(criterion):
    ranks = score_rank(as_table(LEUKEMIA_B10))
    feat = {m: r["features_score"] for m, r in ranks.items()}
    ok = feat["Without FS"] == max(feat.values()) and feat["CLEAN + uCFS"] == min(feat.values())
    ok = ok and ranks["CLEAN + uCFS"]["features_score"] == 1 and ranks["Without FS"]["features_score"] == 9
    criterion(9, "leukemia b=10 ranking: Without FS max, CLEAN+uCFS min", ok,
              f"Without FS {feat['Without FS']}, CLEAN + uCFS {feat['CLEAN + uCFS']}")


def test_10_determinism(tmp_path, criterion):
    cfg = RunConfig.from_dict({
        "synthetic": {"f": 60, "m": 50, "informative": [0, 1, 2, 3], "noise": 0.5, "seed": 5},
        "boundaries": [5], "repetitions": 2, "folds": 5, "seed": 9,
        "marl_episodes": 60, "clean_episodes": 80, "population_size": 10, "num_generations": 6,
    })
    first = run_experiment(cfg, tmp_path / "a")
    # rerun from the manifest alone, with a different worker count
    again = RunConfig.from_dict(first["config"] | {"workers": 2})
    run_experiment(again, tmp_path / "b")
    csvs = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    diff = [str(p) for p in csvs if (tmp_path / "a" / p).read_bytes() != (tmp_path / "b" / p).read_bytes()]
    criterion(10, "rerun from manifest gives byte-identical CSVs", csvs and not diff,
              f"{len(csvs)} CSVs compared; differing {diff}")
