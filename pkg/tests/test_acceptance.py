"""End-to-end acceptance gates.

Each test prints one PASS/FAIL line and asserts.  The heavy simulation
batches are shared through module-scoped fixtures; the full file is the
slow part of the suite (tens of minutes at desk scale).
"""

import time

import numpy as np
import pytest

from satbandit.core import RSPolicy
from satbandit.envs import (ArtificialConfig, generate_artificial,
                            make_shuttle_like_file)
from satbandit.harness import (ExperimentConfig, build_dataset, run_batch,
                               run_simulation, write_results)
from satbandit.linear import EpisodicMemory, LinGreedy
from satbandit.numeric import gradient_check, mlp_init
from satbandit.reliability import (CentroidBank, KmeansEstimator, KnnEstimator,
                                   TrialRatioEstimator, XeEstimator,
                                   centroid_commit)

BASELINES = ("neuralucb", "neuralts", "linucb", "lints", "lingreedy")


def report(tag, ok, detail):
    print(f"[{tag}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{tag}: {detail}"


@pytest.fixture(scope="module")
def artificial_suite():
    cfg = ExperimentConfig(policies=["neuralrs", "reglinrs", "lingreedy",
                                     "linucb", "lints", "neuralucb",
                                     "neuralts"])
    start = time.time()
    results = run_batch(cfg)
    return cfg, results, time.time() - start


@pytest.fixture(scope="module")
def artificial_estimators(artificial_suite):
    cfg0, results, _ = artificial_suite
    cfg = ExperimentConfig(policies=[
        {"name": "neuralrs", "reliability": "kmeans", "label": "kmeans"},
        {"name": "neuralrs", "reliability": "xe", "label": "xe"},
        {"name": "neuralrs", "reliability": "trial_ratio", "label": "trial_ratio"},
    ])
    out = run_batch(cfg)
    out["knn"] = results["neuralrs"]
    return out


@pytest.fixture(scope="module")
def shuttle_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("shuttle") / "shuttle.trn"
    return make_shuttle_like_file(str(path), rows=20000, seed=0)


@pytest.fixture(scope="module")
def shuttle_suite(shuttle_path):
    cfg = ExperimentConfig(env="shuttle", shuttle_path=shuttle_path,
                           policies=["neuralrs", "reglinrs"])
    return cfg, run_batch(cfg)


@pytest.fixture(scope="module")
def shuttle_estimators(shuttle_path, shuttle_suite):
    _, results = shuttle_suite
    cfg = ExperimentConfig(env="shuttle", shuttle_path=shuttle_path, policies=[
        {"name": "neuralrs", "reliability": "kmeans", "label": "kmeans"},
        {"name": "neuralrs", "reliability": "xe", "label": "xe"},
        {"name": "neuralrs", "reliability": "trial_ratio", "label": "trial_ratio"},
    ])
    out = run_batch(cfg)
    out["knn"] = results["neuralrs"]
    return out


def test_a1_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    start = time.time()
    worst = 0.0
    for _ in range(100):
        g = int(rng.choice([8, 16, 128]))
        d = int(rng.choice([8, 64]))
        K = int(rng.choice([2, 4, 7]))
        params = mlp_init(d, K, g, 2, rng)
        X = rng.normal(size=(4, d))
        actions = rng.integers(0, K, size=4)
        rewards = rng.random(4)
        worst = max(worst, gradient_check(params, X, actions, rewards, rng=rng))
    elapsed = time.time() - start
    report("A1 gradient check", worst < 1e-4 and elapsed < 60,
           f"max_rel_err={worst:.3g} elapsed={elapsed:.1f}s over 100 configs")


def test_a2_ridge_matches_batch_regression():
    rng = np.random.default_rng(1)
    ds = generate_artificial(ArtificialConfig(num_points=200, seed=2))
    pol = LinGreedy(ds.num_actions, ds.dim, solve_every=20)
    log = []
    for t in range(200):
        x, _ = ds.row(t)
        a = int(rng.integers(ds.num_actions))
        r = float(rng.random() < ds.expected_rewards[t][a])
        pol.update(x, a, r)
        log.append((x, a, r))
    pol.refresh()
    worst = 0.0
    for a in range(ds.num_actions):
        rows = [(x, r) for x, ai, r in log if ai == a]
        A = np.eye(ds.dim) + sum(np.outer(x, x) for x, _ in rows)
        b = sum(r * x for x, r in rows)
        worst = max(worst, np.abs(pol.stats.theta[a] - np.linalg.solve(A, b)).max())
    report("A2 regression oracle", worst < 1e-9,
           f"max_theta_deviation={worst:.3g} after 200 steps")


def test_a3_estimators_return_probability_vectors():
    rng = np.random.default_rng(2)
    K, dim, latent = 4, 8, 16
    bank = CentroidBank(K, latent, 2 * K, rng)
    mem = EpisodicMemory(500, dim, K)
    for _ in range(200):
        mem.append(rng.normal(size=dim), int(rng.integers(K)))
    estimators = [KmeansEstimator(bank), KnnEstimator(mem, k=50),
                  XeEstimator(), TrialRatioEstimator()]
    worst_sum, worst_neg, n = 0.0, 0.0, 0
    for _ in range(2500):
        x = rng.normal(size=dim) * rng.uniform(0.1, 10)
        z = np.abs(rng.normal(size=latent)) * rng.uniform(0.1, 10)
        outputs = rng.normal(size=K) * rng.uniform(0.1, 10)
        counts = rng.integers(1, 1000, size=K).astype(float)
        for est in estimators:
            rho = np.asarray(est.rho(x, z, outputs, counts))
            worst_sum = max(worst_sum, abs(rho.sum() - 1.0))
            worst_neg = min(worst_neg, rho.min())
            n += 1
        bank.counts = rng.integers(0, 50, size=K).astype(float)
        bank.weights = rng.random((K, 2 * K)) * 10
    report("A3 reliability normalization",
           worst_sum < 1e-9 and worst_neg >= 0 and n == 10000,
           f"{n} fuzzed inputs, max_sum_dev={worst_sum:.3g}, min_entry={worst_neg:.3g}")


def test_a4_centroid_update_convexity():
    rng = np.random.default_rng(3)
    violations = 0
    for _ in range(10000):
        K, M, L = 2, 3, 4
        bank = CentroidBank(K, L, M, rng)
        bank.centroids = rng.normal(size=(K, M, L)) * rng.uniform(0.1, 10)
        bank.weights = rng.random((K, M)) * rng.uniform(0, 100)
        z = rng.normal(size=L) * rng.uniform(0.1, 10)
        w = rng.random((K, M)) * rng.uniform(1e-6, 10)
        a = int(rng.integers(K))
        before = bank.centroids[a].copy()
        centroid_commit(bank, a, z, w)
        lo = np.minimum(before, z) - 1e-9
        hi = np.maximum(before, z) + 1e-9
        if not (np.all(bank.centroids[a] >= lo) and np.all(bank.centroids[a] <= hi)):
            violations += 1
    report("A4 centroid convexity", violations == 0,
           f"{violations} violations over 10000 fuzzed tuples")


def test_a5_rs_regret_flattens():
    start = time.time()
    growths = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        pol = RSPolicy(2, aleph=0.6)
        means = (0.7, 0.5)
        cum = 0.0
        at5000 = None
        for t in range(10000):
            a = t % 2 if t < 20 else pol.select(None)
            pol.update(None, a, float(rng.random() < means[a]))
            cum += 0.7 - means[a]
            if t == 4999:
                at5000 = cum
        growths.append((cum - at5000) / at5000)
    elapsed = time.time() - start
    mean_growth = float(np.mean(growths))
    report("A5 finite regret", mean_growth < 0.05 and elapsed < 10,
           f"mean growth 5k->10k = {mean_growth:.2%}, elapsed={elapsed:.1f}s")


def test_a6_artificial_regret_ordering(artificial_suite):
    _, results, elapsed = artificial_suite
    ours = results["neuralrs"].final_regret
    lines = [f"neuralrs={ours:.1f}"]
    ok = elapsed < 1800
    for name in BASELINES:
        other = results[name].final_regret
        lines.append(f"{name}={other:.1f}")
        ok = ok and ours < other
    reg = results["reglinrs"].final_regret
    lines.append(f"reglinrs={reg:.1f}")
    ok = ok and ours < reg
    report("A6 artificial ordering", ok,
           " ".join(lines) + f" elapsed={elapsed:.0f}s")


def trailing_accuracy(res, window=1000):
    A = res.mean_accuracy
    n = len(A)
    correct_n = A[-1] * n
    correct_before = A[n - window - 1] * (n - window)
    return (correct_n - correct_before) / window


def test_a7_shuttle_margin_and_accuracy(shuttle_suite):
    _, results = shuttle_suite
    ours = results["neuralrs"].final_regret
    theirs = results["reglinrs"].final_regret
    tail_acc = trailing_accuracy(results["neuralrs"])
    ok = ours < 0.7 * theirs and tail_acc > 0.95
    report("A7 shuttle margin", ok,
           f"neuralrs={ours:.1f} reglinrs={theirs:.1f} "
           f"(ratio {ours / theirs:.2f}, need <0.70) tail_acc={tail_acc:.4f}")


def test_a8_reliability_candidate_ordering(artificial_estimators,
                                           shuttle_estimators):
    ok = True
    details = []
    for env, res in (("artificial", artificial_estimators),
                     ("shuttle", shuttle_estimators)):
        finals = {k: res[k].final_regret
                  for k in ("knn", "kmeans", "xe", "trial_ratio")}
        order = sorted(finals, key=finals.get)
        ok = ok and order[0] == "knn" and order[-1] == "xe"
        details.append(env + ": " + " ".join(f"{k}={v:.1f}"
                                             for k, v in finals.items()))
    report("A8 reliability ordering", ok, "; ".join(details))


def test_a9_deterministic_output(tmp_path):
    cfg = ExperimentConfig(policies=["reglinrs", "lints"], steps=400, runs=2,
                           art_points=800)
    blobs = []
    for d in ("one", "two"):
        out = tmp_path / d
        write_results(run_batch(cfg, build_dataset(cfg)), cfg, str(out))
        blobs.append(b"".join(sorted(p.read_bytes()
                                     for p in out.glob("*.csv"))))
    report("A9 determinism", blobs[0] == blobs[1],
           "CSV outputs byte-identical across two invocations")
