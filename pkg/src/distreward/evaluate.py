"""Evaluation protocols and metrics for numeric predictive distributions.

Point predictions average 32 sampled values per input. Pointwise quality is
reported as RMSE, MAE, and Spearman rank correlation; distributional quality
as the bracket rate, mean CRPS, and mean WIS; and uncertainty quality as the
log-scale Pearson correlation between per-example sample spread and realized
error. Policy evaluation repeats with derived seeds and reports the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import rankdata

from .policy import GridPolicy, batched_probs, sample_bins_from_probs
from .rewards import RolloutSet
from .scoring import DEFAULT_ALPHA_LEVELS, crps_empirical, wis
from .synthetic import Dataset

__all__ = [
    "CalibrationReport",
    "MetricsReport",
    "PointPrediction",
    "RegressionMetrics",
    "bracket_rate",
    "calibration_fit",
    "calibration_from_policy",
    "distribution_scores",
    "evaluate_policy",
    "point_prediction",
    "regression_metrics",
    "sample_matrix",
]

DEFAULT_EVAL_SAMPLES = 32
DEFAULT_EVAL_REPEATS = 5

_EVAL_STREAM = 104729   # keys evaluation substreams apart from training ones
_CALIB_STREAM = 104730  # keys the calibration pass apart from metric repeats


class PointPrediction(NamedTuple):
    mean: float
    std: float
    samples: np.ndarray


class RegressionMetrics(NamedTuple):
    rmse: float
    mae: float
    spearman: float  # NaN flags an undefined value (zero rank variance)


@dataclass
class MetricsReport:
    """Aggregate metrics for one evaluated split, plus per-region breakdown."""

    rmse: float
    mae: float
    spearman: float
    bracket_rate: float
    mean_crps: float
    mean_wis: float
    n_examples: int
    n_samples_per_example: int
    regions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "rmse": self.rmse,
            "mae": self.mae,
            "spearman": self.spearman,
            "bracket_rate": self.bracket_rate,
            "mean_crps": self.mean_crps,
            "mean_wis": self.mean_wis,
            "n_examples": self.n_examples,
            "n_samples_per_example": self.n_samples_per_example,
            "regions": {k: dict(v) for k, v in self.regions.items()},
        }
        return out


@dataclass
class CalibrationReport:
    """Spread-versus-error diagnostic on a log-log scale.

    ``points`` holds the normalized (std, abs error) pairs that survived the
    positivity filter; pairs with zero spread or zero error are excluded
    before the log transform and counted in ``n_excluded``. ``degenerate``
    is set when fewer than 3 usable points remain or either log coordinate
    has zero variance, in which case ``log_pearson`` is NaN.
    """

    log_pearson: float
    n_points: int
    points: np.ndarray
    degenerate: bool
    n_excluded: int = 0


def sample_matrix(policy: GridPolicy, xs, n_samples: int,
                  seed_seq: np.random.SeedSequence) -> np.ndarray:
    """Sampled predictions for each input, shape (N, n_samples).

    Each input draws from its own child stream of ``seed_seq``, so results
    do not depend on evaluation order.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    q = batched_probs(policy, xs)
    children = seed_seq.spawn(len(xs))
    out = np.empty((len(xs), n_samples))
    for i in range(len(xs)):
        rng = np.random.default_rng(children[i])
        bins = sample_bins_from_probs(q[i], n_samples, rng)
        out[i] = policy.bin_centers[bins]
    return out


def point_prediction(policy: GridPolicy, x, n_samples: int = DEFAULT_EVAL_SAMPLES,
                     rng: np.random.Generator | None = None) -> PointPrediction:
    """Mean and population std of n_samples sampled predictions at one input."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if rng is None:
        rng = np.random.default_rng()
    q = batched_probs(policy, float(x))[0]
    bins = sample_bins_from_probs(q, n_samples, rng)
    samples = policy.bin_centers[bins]
    return PointPrediction(float(samples.mean()), float(samples.std()), samples)


def regression_metrics(predictions, targets) -> RegressionMetrics:
    """RMSE, MAE, and Spearman correlation of point predictions.

    Spearman is the Pearson correlation of average ranks, so tied values
    receive the mean of their rank positions. When either side has zero
    rank variance the correlation is undefined and reported as NaN.
    """
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if p.size != t.size:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} targets")
    if p.size == 0:
        raise ValueError("metrics need at least one example")
    err = p - t
    rmse = float(np.sqrt(np.mean(err * err)))
    mae = float(np.mean(np.abs(err)))
    rp = rankdata(p, method="average")
    rt = rankdata(t, method="average")
    if np.ptp(rp) == 0 or np.ptp(rt) == 0 or p.size < 2:
        return RegressionMetrics(rmse, mae, math.nan)
    spearman = float(np.corrcoef(rp, rt)[0, 1])
    return RegressionMetrics(rmse, mae, spearman)


def bracket_rate(sets: Sequence[RolloutSet]) -> float:
    """Fraction of rollout sets whose valid predictions span the target.

    The comparison is inclusive at both ends: a rollout exactly equal to the
    target counts as bracketing. Sets with no valid rollout are excluded
    from the denominator.
    """
    if len(sets) == 0:
        raise ValueError("bracket_rate needs at least one rollout set")
    usable = [s for s in sets if s.n_valid > 0]
    if not usable:
        raise ValueError("bracket_rate needs at least one set with a valid rollout")
    return float(np.mean([s.brackets_target() for s in usable]))


def distribution_scores(pairs, alpha_levels: Sequence[float] = DEFAULT_ALPHA_LEVELS
                        ) -> tuple[float, float]:
    """Unweighted mean CRPS and mean WIS over (samples, target) pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("distribution_scores needs at least one example")
    crps_vals = [crps_empirical(samples, target) for samples, target in pairs]
    wis_vals = [wis(samples, target, alpha_levels) for samples, target in pairs]
    return float(np.mean(crps_vals)), float(np.mean(wis_vals))


def calibration_fit(points, target_scale: float) -> CalibrationReport:
    """Pearson correlation of log spread versus log error.

    Both coordinates are normalized by ``target_scale`` before the log
    transform; the correlation itself is invariant to that choice, but the
    stored points follow the pinned convention so plots are comparable.
    Degenerate inputs are flagged rather than raised.
    """
    scale = float(target_scale)
    if scale <= 0:
        raise ValueError("target_scale must be positive")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    norm = pts / scale
    usable = (norm[:, 0] > 0) & (norm[:, 1] > 0) & np.all(np.isfinite(norm), axis=1)
    kept = norm[usable]
    n_excluded = int(norm.shape[0] - kept.shape[0])
    if kept.shape[0] < 3:
        return CalibrationReport(math.nan, int(kept.shape[0]), kept, True, n_excluded)
    lx = np.log(kept[:, 0])
    ly = np.log(kept[:, 1])
    if np.ptp(lx) == 0 or np.ptp(ly) == 0:
        return CalibrationReport(math.nan, int(kept.shape[0]), kept, True, n_excluded)
    r = float(np.corrcoef(lx, ly)[0, 1])
    return CalibrationReport(r, int(kept.shape[0]), kept, False, n_excluded)


def _split_metrics(samples: np.ndarray, targets: np.ndarray,
                   alpha_levels: Sequence[float]) -> dict:
    means = samples.mean(axis=1)
    reg = regression_metrics(means, targets)
    bracketed = (samples.min(axis=1) <= targets) & (targets <= samples.max(axis=1))
    mean_crps, mean_wis = distribution_scores(
        [(samples[i], targets[i]) for i in range(len(targets))], alpha_levels)
    return {
        "rmse": reg.rmse,
        "mae": reg.mae,
        "spearman": reg.spearman,
        "bracket_rate": float(bracketed.mean()),
        "mean_crps": mean_crps,
        "mean_wis": mean_wis,
        "n_examples": int(len(targets)),
    }


_METRIC_KEYS = ("rmse", "mae", "spearman", "bracket_rate", "mean_crps", "mean_wis")


def evaluate_policy(policy: GridPolicy, data: Dataset, *,
                    n_samples: int = DEFAULT_EVAL_SAMPLES,
                    repeats: int = DEFAULT_EVAL_REPEATS,
                    seed: int = 0,
                    alpha_levels: Sequence[float] = DEFAULT_ALPHA_LEVELS) -> MetricsReport:
    """Evaluate a policy on a dataset with the sampled-prediction protocol.

    Each repeat draws ``n_samples`` predictions per example from a repeat-
    and example-specific substream, computes all metrics overall and per
    region, and the report carries the mean across repeats.
    """
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    region_names = [str(r) for r in dict.fromkeys(data.region)]
    overall_acc: list[dict] = []
    region_acc: dict[str, list[dict]] = {name: [] for name in region_names}
    for r in range(repeats):
        seq = np.random.SeedSequence([seed, _EVAL_STREAM, r])
        samples = sample_matrix(policy, data.x, n_samples, seq)
        overall_acc.append(_split_metrics(samples, data.y, alpha_levels))
        for name in region_names:
            mask = data.region == name
            region_acc[name].append(_split_metrics(samples[mask], data.y[mask], alpha_levels))

    def _mean_over(dicts: list[dict]) -> dict:
        out = {key: float(np.mean([d[key] for d in dicts])) for key in _METRIC_KEYS}
        out["n_examples"] = dicts[0]["n_examples"]
        return out

    overall = _mean_over(overall_acc)
    return MetricsReport(
        rmse=overall["rmse"],
        mae=overall["mae"],
        spearman=overall["spearman"],
        bracket_rate=overall["bracket_rate"],
        mean_crps=overall["mean_crps"],
        mean_wis=overall["mean_wis"],
        n_examples=len(data),
        n_samples_per_example=n_samples,
        regions={name: _mean_over(acc) for name, acc in region_acc.items()},
    )


def calibration_from_policy(policy: GridPolicy, data: Dataset, *,
                            n_samples: int = DEFAULT_EVAL_SAMPLES,
                            seed: int = 0) -> CalibrationReport:
    """Spread-versus-error calibration of a policy on a dataset.

    One sampled-prediction pass: each example contributes its sample std and
    the absolute error of its sample mean. The normalizer is the standard
    deviation of the targets on the evaluated split.
    """
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    seq = np.random.SeedSequence([seed, _CALIB_STREAM])
    samples = sample_matrix(policy, data.x, n_samples, seq)
    stds = samples.std(axis=1)
    errs = np.abs(samples.mean(axis=1) - data.y)
    scale = float(data.y.std())
    if scale <= 0:
        scale = 1.0
    return calibration_fit(np.column_stack([stds, errs]), scale)
