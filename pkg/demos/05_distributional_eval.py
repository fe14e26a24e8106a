"""Distributional evaluation of a trained policy.

Trains a short leave-one-out-credit run, then walks the evaluation suite:
sampled point predictions, pointwise and rank metrics per region, mean
CRPS/WIS of the 32-sample predictive sets, and the spread-versus-error
calibration diagnostic on a log-log scale.
"""

import numpy as np

from distreward import (MixtureTaskSpec, TrainConfig, calibration_from_policy,
                        evaluate_policy, make_dataset, train)

spec = MixtureTaskSpec()
full, test = make_dataset(spec, n_train=400, n_test=300, seed=7)
carve = np.random.default_rng(41).permutation(len(full))
val = full.select(np.sort(carve[:40]))
train_set = full.select(np.sort(carve[40:]))

config = TrainConfig(reward_mode="dar", max_steps=150, batch_size=64, seed=11,
                     eval_every=25)
result = train(config, train_set, val)
print(f"trained {config.max_steps} steps; best validation checkpoint at step "
      f"{result.best_step}\n")

report = evaluate_policy(result.best_policy, test, n_samples=32, repeats=5, seed=11)
print("=== 32-sample evaluation, mean of 5 repeats ===\n")
print(f"{'scope':>13} {'n':>4} {'rmse':>7} {'mae':>7} {'spearman':>9} "
      f"{'bracket':>8} {'crps':>7} {'wis':>7}")
overall = dict(n_examples=report.n_examples, rmse=report.rmse, mae=report.mae,
               spearman=report.spearman, bracket_rate=report.bracket_rate,
               mean_crps=report.mean_crps, mean_wis=report.mean_wis)
for name, stats in [("overall", overall)] + sorted(report.regions.items()):
    print(f"{name:>13} {stats['n_examples']:4d} {stats['rmse']:7.3f} "
          f"{stats['mae']:7.3f} {stats['spearman']:9.3f} {stats['bracket_rate']:8.3f} "
          f"{stats['mean_crps']:7.3f} {stats['mean_wis']:7.3f}")

print("""
Interpolation metrics are far stronger than extrapolation ones: the feature
basis extends past the training interval, but no gradient ever reached it
out there.
""")

calib = calibration_from_policy(result.best_policy, test, n_samples=32, seed=11)
print("=== spread versus error ===\n")
print(f"usable points: {calib.n_points} (excluded {calib.n_excluded})")
print(f"log-scale Pearson correlation: {calib.log_pearson:.4f}")
print("\nPositive correlation means the policy's sample spread is an honest "
      "signal of how wrong its mean prediction tends to be.")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not available; skipping the figure")
else:
    from pathlib import Path
    out = Path(__file__).parent / "output"
    out.mkdir(exist_ok=True)
    pts = calib.points
    fig, ax = plt.subplots(figsize=(5, 4.5))
    ax.scatter(pts[:, 0], pts[:, 1], s=10, alpha=0.5)
    lims = (min(pts.min(), 1e-3), pts.max() * 1.5)
    ax.plot(lims, lims, ls="--", color="gray", lw=1, label="ideal diagonal")
    ax.set_xscale("log"); ax.set_yscale("log")
    ax.set_xlabel("normalized sample std")
    ax.set_ylabel("normalized |error|")
    ax.set_title(f"spread vs error (log-Pearson {calib.log_pearson:.3f})")
    ax.legend()
    fig.tight_layout()
    path = out / "calibration.png"
    fig.savefig(path, dpi=130)
    print(f"\nwrote {path}")
