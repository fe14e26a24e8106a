"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete. The trend criteria train 5 seeds per arm at the
default configuration and take a few minutes on one CPU core; everything
else finishes in seconds.
"""

import itertools
import json
import math
from pathlib import Path

import numpy as np
import pytest

from distreward import io
from distreward.cli import main
from distreward.evaluate import calibration_from_policy, evaluate_policy
from distreward.policy import GridPolicy, format_prediction, parse_prediction
from distreward.rewards import RolloutSet, dar_rewards, mse_reward
from distreward.scoring import crps_empirical, crps_integral_oracle
from distreward.synthetic import MixtureTaskSpec, mixture_cdf, sample_target
from distreward.trainer import (TrainConfig, sft_fit, sft_gradient, sft_loss,
                                surrogate_gradient, surrogate_objective, train)

from test_policy import MALFORMED_TEXTS

TREND_SEEDS = (1, 2, 3, 4, 5)


def _report(criterion: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {criterion} failed: {detail}"


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory) -> Path:
    """Default benchmark data: 1080/120/600 records from the echoed defaults."""
    out = tmp_path_factory.mktemp("acceptance") / "data"
    assert main(["gen-data", "--out-dir", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def splits(data_dir):
    return (io.read_dataset_jsonl(data_dir / "train.jsonl"),
            io.read_dataset_jsonl(data_dir / "val.jsonl"),
            io.read_dataset_jsonl(data_dir / "test.jsonl"))


@pytest.fixture(scope="module")
def trend_runs(splits):
    """Five seeds per arm at the default configuration."""
    train_set, val_set, test_set = splits
    arms: dict[str, dict[str, list[float]]] = {}
    for arm in ("dar", "mse", "sft"):
        arms[arm] = {"spearman": [], "crps": [], "bracket_f100": [], "entropy_f100": [],
                     "calib": []}
    for seed in TREND_SEEDS:
        for mode in ("dar", "mse"):
            config = TrainConfig(reward_mode=mode, seed=seed)
            result = train(config, train_set, val_set)
            last100 = result.log.records[-100:]
            arms[mode]["bracket_f100"].append(
                float(np.mean([r.bracket_rate for r in last100])))
            arms[mode]["entropy_f100"].append(
                float(np.mean([r.entropy for r in last100])))
            report = evaluate_policy(result.best_policy, test_set, seed=seed)
            arms[mode]["spearman"].append(report.spearman)
            arms[mode]["crps"].append(report.mean_crps)
            arms[mode]["calib"].append(
                calibration_from_policy(result.best_policy, test_set, seed=seed).log_pearson)
        sft_policy = sft_fit(train_set, TrainConfig(seed=seed))
        report = evaluate_policy(sft_policy, test_set, seed=seed)
        arms["sft"]["spearman"].append(report.spearman)
        arms["sft"]["crps"].append(report.mean_crps)
    return {arm: {key: float(np.mean(vals)) if vals else math.nan
                  for key, vals in stats.items()}
            for arm, stats in arms.items()}


def test_criterion_1_running_example_fidelity():
    rollouts = RolloutSet("fig", np.array([3.0, 4.0, 8.0]), np.ones(3, bool), 5.0)
    rewards = dar_rewards(rollouts).rewards
    expected = np.array([0.111111, 0.361111, 0.361111])
    ok = bool(np.all(np.abs(rewards - expected) <= 1e-6)) and rewards[2] > rewards[0]
    mse = [mse_reward(p, 5.0) for p in (3.0, 4.0, 8.0)]
    ok = ok and mse == [-4.0, -1.0, -9.0]
    _report("1 running-example", ok,
            f"loo rewards {np.round(rewards, 6).tolist()}, mse {mse}")


def test_criterion_2_crps_oracle_equivalence():
    rng = np.random.default_rng(20240817)
    worst = 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 17))
        values = rng.uniform(-10, 10, size=k)
        target = rng.uniform(-12, 12)
        diff = abs(crps_empirical(values, target) - crps_integral_oracle(values, target))
        worst = max(worst, diff)
    _report("2 crps-oracle-equivalence", worst <= 1e-9,
            f"max |closed-form - integral| = {worst:.3e} over 1000 instances")


def test_criterion_3_mean_and_distribution_seeking_oracles():
    rng = np.random.default_rng(31)
    # (a) squared loss is minimized at the mean, by grid search
    mean_ok = True
    for _ in range(50):
        n = int(rng.integers(2, 7))
        support = rng.uniform(-5, 5, size=n)
        w = rng.uniform(0.1, 1.0, size=n)
        probs = w / w.sum()
        grid = np.linspace(support.min() - 1, support.max() + 1, 2001)
        losses = [sum(p * (a - y) ** 2 for y, p in zip(support, probs)) for a in grid]
        best = grid[int(np.argmin(losses))]
        mean_ok = mean_ok and abs(best - float(np.dot(probs, support))) <= grid[1] - grid[0]

    # (b) expected CRPS: no point mass wins on non-degenerate laws, and a
    # representable law is never beaten, by exhaustive enumeration
    def expected_crps(candidate, support, probs):
        return sum(p * crps_empirical(candidate, y) for y, p in zip(support, probs))

    def candidates(support):
        for size in range(1, 5):
            yield from itertools.combinations_with_replacement(support, size)

    dist_ok = True
    for _ in range(10):
        n = int(rng.integers(2, 6))
        support = np.sort(rng.uniform(-5, 5, size=n))
        w = rng.uniform(0.2, 1.0, size=n)
        probs = w / w.sum()
        scores = {cand: expected_crps(cand, support, probs) for cand in candidates(support)}
        best = min(scores.values())
        for cand, score in scores.items():
            if abs(score - best) <= 1e-12 and len(set(cand)) == 1:
                dist_ok = False
    for _ in range(10):
        n = int(rng.integers(2, 5))
        support = np.sort(rng.choice(np.arange(-4, 5), size=n, replace=False))
        multiset = support[rng.integers(0, n, size=int(rng.integers(2, 5)))]
        values, counts = np.unique(multiset, return_counts=True)
        probs = np.zeros(n)
        for v, c in zip(values, counts):
            probs[np.where(support == v)[0][0]] = c / len(multiset)
        best = min(expected_crps(c, support, probs) for c in candidates(support))
        dist_ok = dist_ok and expected_crps(multiset, support, probs) <= best + 1e-12
    _report("3 appendix-oracles", mean_ok and dist_ok,
            f"mean-seeking {mean_ok}, distribution-seeking {dist_ok}")


def test_criterion_4_gradient_checks():
    rng = np.random.default_rng(4)

    def random_policy(n_bins=5, n_basis=3, temperature=1.0):
        pol = GridPolicy.uniform(bin_range=(-2, 2), n_bins=n_bins,
                                 basis_range=(-3, 3), n_basis=n_basis,
                                 bandwidth=0.8, temperature=temperature)
        pol.weights = rng.normal(scale=0.7, size=pol.weights.shape)
        return pol

    def fd(fn, pol, h=1e-4):
        grad = np.zeros_like(pol.weights)
        for b in range(grad.shape[0]):
            for m in range(grad.shape[1]):
                up = pol.copy(); up.weights[b, m] += h
                down = pol.copy(); down.weights[b, m] -= h
                grad[b, m] = (fn(up) - fn(down)) / (2 * h)
        return grad

    worst = 0.0
    for trial in range(20):
        temp = float(rng.uniform(0.5, 2.0))
        pol = random_policy(temperature=temp)
        if trial % 2 == 0:
            ref = random_policy(temperature=temp).snapshot()
            xs = rng.uniform(-2, 2, size=2)
            bins = rng.integers(0, pol.n_bins, size=(2, 2))
            adv = rng.normal(size=(2, 2))
            kl_coef = float(rng.uniform(0.0, 2.0))
            analytic = surrogate_gradient(pol, ref, xs, bins, adv, kl_coef)
            numeric = fd(lambda p: surrogate_objective(p, ref, xs, bins, adv, kl_coef), pol)
        else:
            xs = rng.uniform(-2, 2, size=3)
            bins = rng.integers(0, pol.n_bins, size=3)
            analytic = sft_gradient(pol, xs, bins)
            numeric = fd(lambda p: sft_loss(p, xs, bins), pol)
        rel = np.abs(analytic - numeric).max() / max(np.abs(numeric).max(), 1e-8)
        worst = max(worst, rel)
    _report("4 gradient-checks", worst < 1e-5,
            f"worst relative error {worst:.3e} over 20 instances")


def test_criterion_5_synthetic_trend_reproduction(trend_runs):
    dar, mse, sft = trend_runs["dar"], trend_runs["mse"], trend_runs["sft"]
    ok_a = dar["spearman"] >= mse["spearman"] and dar["spearman"] >= sft["spearman"]
    ok_b = dar["bracket_f100"] - mse["bracket_f100"] >= 0.05
    ok_c = dar["entropy_f100"] > mse["entropy_f100"]
    ok_d = dar["crps"] <= mse["crps"]
    detail = (f"spearman dar={dar['spearman']:.4f} mse={mse['spearman']:.4f} "
              f"sft={sft['spearman']:.4f}; bracket dar={dar['bracket_f100']:.3f} "
              f"mse={mse['bracket_f100']:.3f}; entropy dar={dar['entropy_f100']:.3f} "
              f"mse={mse['entropy_f100']:.3f}; crps dar={dar['crps']:.4f} "
              f"mse={mse['crps']:.4f}")
    _report("5 trend-reproduction", ok_a and ok_b and ok_c and ok_d, detail)


def test_criterion_6_calibration_direction(trend_runs):
    dar, mse = trend_runs["dar"], trend_runs["mse"]
    ok = dar["calib"] > 0.0 and dar["calib"] > mse["calib"]
    _report("6 calibration-direction", ok,
            f"log-pearson dar={dar['calib']:.4f} mse={mse['calib']:.4f}")


def test_criterion_7_generator_statistics():
    spec = MixtureTaskSpec()
    rng = np.random.default_rng(123)
    draws = np.array([sample_target(spec, 0.0, rng) for _ in range(100_000)])
    mean_ok = abs(draws.mean() - (-0.6)) <= 0.02
    var_ok = abs(draws.var() - 0.3961) <= 0.02

    from scipy.stats import kstest
    ks_ok = True
    xs = np.random.default_rng(2718).uniform(-10, 10, size=5)
    pvals = []
    for i, x in enumerate(xs):
        gen = np.random.default_rng(1000 + i)
        sample = np.array([sample_target(spec, x, gen) for _ in range(10_000)])
        res = kstest(sample, lambda y: np.array(
            [mixture_cdf(spec, x, v) for v in np.atleast_1d(y)]))
        pvals.append(res.pvalue)
        ks_ok = ks_ok and res.pvalue > 0.01
    _report("7 generator-statistics", mean_ok and var_ok and ks_ok,
            f"mean={draws.mean():.4f} var={draws.var():.4f} "
            f"ks p-values={np.round(pvals, 3).tolist()}")


def test_criterion_8_byte_for_byte_determinism(tmp_path):
    def snapshot(directory: Path) -> dict[str, bytes]:
        return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}

    small = ["--n-train", "60", "--n-test", "12", "--seed", "3"]
    train_flags = ["--max-steps", "4", "--batch-size", "8", "--k-rollouts", "4",
                   "--eval-every", "2", "--eval-samples", "8", "--n-bins", "15",
                   "--n-basis", "6"]
    data = tmp_path / "data"
    assert main(["gen-data", "--out-dir", str(data), *small]) == 0
    run = tmp_path / "run"
    assert main(["train", "--data-dir", str(data), "--out-dir", str(run), "--seed", "1",
                 *train_flags]) == 0
    evald = tmp_path / "eval"
    assert main(["eval", "--checkpoint", str(run / "checkpoint_best.json"),
                 "--data-dir", str(data), "--out-dir", str(evald),
                 "--eval-repeats", "2", "--eval-samples", "8"]) == 0
    rollouts = tmp_path / "rollouts.jsonl"
    rollouts.write_text(json.dumps({"id": "a", "target": 5, "samples": [3, 4, 8]}) + "\n")
    score = tmp_path / "score"
    assert main(["score", "--rollout-file", str(rollouts), "--out-dir", str(score)]) == 0
    calib = tmp_path / "calib"
    assert main(["calib", "--checkpoint", str(run / "checkpoint_best.json"),
                 "--data-dir", str(data), "--out-dir", str(calib),
                 "--eval-samples", "8"]) == 0

    ok = True
    for out in (data, run, evald, score, calib):
        before = snapshot(out)
        echoed = io.read_json(out / "config.json")
        assert main([echoed["command"], "--config", str(out / "config.json")]) == 0
        ok = ok and snapshot(out) == before
    _report("8 determinism", ok, "gen-data/train/eval/score/calib re-runs byte-identical")


def test_criterion_9_format_robustness(tmp_path):
    rng = np.random.default_rng(13)
    mantissas = rng.uniform(1.0, 10.0, size=10_000)
    exponents = rng.integers(-6, 7, size=10_000)
    signs = rng.choice([-1.0, 1.0], size=10_000)
    round_trip_ok = True
    for m, e, s in zip(mantissas, exponents, signs):
        value = float(np.format_float_scientific(s * m * 10.0 ** int(e), precision=8))
        round_trip_ok = round_trip_ok and parse_prediction(format_prediction(value)) == value

    corpus_ok = len(MALFORMED_TEXTS) >= 50 and all(
        parse_prediction(t) is None for t in MALFORMED_TEXTS)

    rollouts = tmp_path / "rollouts.jsonl"
    rows = [{"id": 0, "target": 5.0,
             "texts": ["\\boxed{3}", "\\boxed{4}", "junk", "\\boxed{8}"]}]
    rollouts.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    out = tmp_path / "score"
    assert main(["score", "--rollout-file", str(rollouts), "--out-dir", str(out)]) == 0
    summary = io.read_json(out / "summary.json")
    rewards = [json.loads(line) for line in (out / "rewards.jsonl").read_text().splitlines()]
    vec = rewards[0]["rewards"]
    penalty_ok = (summary["total_invalid_rollouts"] == 1
                  and vec[2] == pytest.approx(min(vec[0], vec[1], vec[3])))
    _report("9 format-robustness", round_trip_ok and corpus_ok and penalty_ok,
            f"10^4 round-trips, {len(MALFORMED_TEXTS)} malformed cases invalid, "
            f"min-batch penalty applied with invalid counts reported")
