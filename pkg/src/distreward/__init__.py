"""CRPS-scored rollout rewards with leave-one-out credit assignment.

A numpy/scipy library for training and evaluating stochastic numeric
predictors through the quality of their sampled predictive distributions:

- ``scoring``: CRPS (closed form plus an exact-integral cross-check),
  interpolated quantiles, and the weighted interval score.
- ``rewards``: pointwise negative-squared-error rewards and leave-one-out
  CRPS credit assignment over rollout groups, with invalid-rollout
  penalty policies.
- ``synthetic``: a heteroscedastic two-component Gaussian-mixture
  regression benchmark with interpolation and extrapolation test regions.
- ``policy``: a softmax policy over a discretized value grid with exact
  log-probabilities, entropy, KL, and strict ``\\boxed{}`` text round-trip.
- ``trainer``: on-policy training with group-standardized advantages and a
  KL anchor, plus a supervised cross-entropy baseline.
- ``evaluate``: sampled point predictions, RMSE/MAE/Spearman, bracket rate,
  aggregate CRPS/WIS, and the spread-versus-error calibration diagnostic.
- ``cli`` and ``io``: a reproducible command-line surface and the file
  formats it reads and writes.
"""

from .evaluate import (CalibrationReport, MetricsReport, bracket_rate, calibration_fit,
                       calibration_from_policy, distribution_scores, evaluate_policy,
                       point_prediction, regression_metrics)
from .policy import (GridPolicy, ReferencePolicy, features, format_prediction,
                     kl_to_reference, parse_prediction, policy_entropy, probs,
                     sample_rollouts)
from .rewards import (DegenerateRolloutError, RewardVector, RolloutSet,
                      apply_invalid_policy, compute_rewards, dar_rewards, mse_reward,
                      mse_rewards)
from .scoring import (DEFAULT_ALPHA_LEVELS, EmpiricalDistribution, crps_empirical,
                      crps_integral_oracle, neg_crps_score, quantile, wis)
from .synthetic import (Dataset, MixturePoint, MixtureTaskSpec, make_dataset,
                        mixture_cdf, mixture_params, sample_target, true_mean)
from .trainer import (NumericFailureError, TrainConfig, TrainLog, TrainResult,
                      grpo_advantages, sft_fit, train, train_step)

__version__ = "0.1.0"

__all__ = [
    "CalibrationReport",
    "DEFAULT_ALPHA_LEVELS",
    "Dataset",
    "DegenerateRolloutError",
    "EmpiricalDistribution",
    "GridPolicy",
    "MetricsReport",
    "MixturePoint",
    "MixtureTaskSpec",
    "NumericFailureError",
    "ReferencePolicy",
    "RewardVector",
    "RolloutSet",
    "TrainConfig",
    "TrainLog",
    "TrainResult",
    "apply_invalid_policy",
    "bracket_rate",
    "calibration_fit",
    "calibration_from_policy",
    "compute_rewards",
    "crps_empirical",
    "crps_integral_oracle",
    "dar_rewards",
    "distribution_scores",
    "evaluate_policy",
    "features",
    "format_prediction",
    "grpo_advantages",
    "kl_to_reference",
    "make_dataset",
    "mixture_cdf",
    "mixture_params",
    "mse_reward",
    "mse_rewards",
    "neg_crps_score",
    "parse_prediction",
    "point_prediction",
    "policy_entropy",
    "probs",
    "quantile",
    "regression_metrics",
    "sample_rollouts",
    "sample_target",
    "sft_fit",
    "train",
    "train_step",
    "true_mean",
    "wis",
]
