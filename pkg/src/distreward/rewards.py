"""Rollout-level reward assignment for groups of sampled numeric predictions.

Two reward families: a pointwise negative-squared-error reward that scores
each rollout in isolation, and a distribution-level reward that scores the
whole rollout group with negated CRPS and distributes credit to individual
rollouts by their leave-one-out marginal contribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scoring import neg_crps_score

__all__ = [
    "FIXED_FALLBACK_PENALTY",
    "DegenerateRolloutError",
    "RewardVector",
    "RolloutSet",
    "apply_invalid_policy",
    "compute_rewards",
    "dar_rewards",
    "mse_reward",
    "mse_rewards",
]

# Penalty assigned when a group has no valid rollout to take a minimum over.
FIXED_FALLBACK_PENALTY = -1.0


class DegenerateRolloutError(ValueError):
    """Raised when a rollout group has too few valid members to score."""


@dataclass
class RolloutSet:
    """One input's K sampled predictions, validity flags, and target.

    Invalid entries carry a NaN placeholder that is never read by scoring;
    only ``valid_predictions`` feeds the empirical distribution.
    """

    example_id: object
    predictions: np.ndarray
    valid: np.ndarray
    target: float

    def __post_init__(self) -> None:
        preds = np.asarray(self.predictions, dtype=float).ravel()
        valid = np.asarray(self.valid, dtype=bool).ravel()
        if preds.size == 0:
            raise ValueError("rollout set must contain at least one rollout")
        if preds.size != valid.size:
            raise ValueError(
                f"predictions and valid flags disagree in length: {preds.size} vs {valid.size}"
            )
        target = float(self.target)
        if not np.isfinite(target):
            raise ValueError(f"target must be finite, got {self.target!r}")
        if not np.all(np.isfinite(preds[valid])):
            raise ValueError("valid predictions must be finite")
        self.predictions = preds
        self.valid = valid
        self.target = target

    @property
    def k(self) -> int:
        return int(self.predictions.size)

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    @property
    def valid_predictions(self) -> np.ndarray:
        return self.predictions[self.valid]

    def brackets_target(self) -> bool:
        """True when the valid predictions span the target, inclusively."""
        p = self.valid_predictions
        if p.size == 0:
            return False
        return bool(p.min() <= self.target <= p.max())


@dataclass(frozen=True)
class RewardVector:
    """Per-rollout rewards for one group.

    ``usable`` is False when every rollout was invalid, in which case the
    rewards are fallback penalties and the group must not feed advantage
    computation.
    """

    rewards: np.ndarray
    source: str
    usable: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "rewards", np.asarray(self.rewards, dtype=float).ravel())


def mse_reward(prediction, target) -> float:
    """Pointwise reward ``-(prediction - target)^2``; zero iff exact hit."""
    p = float(prediction)
    y = float(target)
    if not (np.isfinite(p) and np.isfinite(y)):
        raise ValueError(f"prediction and target must be finite, got {prediction!r}, {target!r}")
    return -((p - y) ** 2)


def dar_rewards(rollouts: RolloutSet, mode: str = "min_batch",
                fixed_penalty: float = FIXED_FALLBACK_PENALTY) -> RewardVector:
    """Leave-one-out credit against the group's negated CRPS.

    Let ``S`` be the negated CRPS of all valid predictions and ``S_minus_k``
    the negated CRPS with rollout k removed. Rollout k earns ``S - S_minus_k``:
    positive when removing it would worsen the score, i.e. when it improves
    the predictive distribution, negative when it is harmful or redundant.
    The leave-one-out scores recompute the closed form on the reduced set;
    at K <= 16 the cubic cost is negligible and the literal recomputation
    avoids incremental-update bookkeeping.

    Invalid rollouts are excluded from every distribution and then assigned
    the penalty policy's value (by default the minimum reward among the
    group's valid rollouts).
    """
    valid_p = rollouts.valid_predictions
    if valid_p.size < 2:
        raise DegenerateRolloutError(
            f"leave-one-out rewards need at least 2 valid rollouts, got {valid_p.size}"
        )
    y = rollouts.target
    s_full = neg_crps_score(valid_p, y)
    rewards = np.zeros(rollouts.k)
    for j, k in enumerate(np.flatnonzero(rollouts.valid)):
        reduced = np.delete(valid_p, j)
        rewards[k] = s_full - neg_crps_score(reduced, y)
    raw = RewardVector(rewards, source="dar")
    return apply_invalid_policy(raw, rollouts.valid, mode=mode, fixed_penalty=fixed_penalty)


def mse_rewards(rollouts: RolloutSet, mode: str = "min_batch",
                fixed_penalty: float = FIXED_FALLBACK_PENALTY) -> RewardVector:
    """Pointwise rewards for a whole group, with invalid entries penalized."""
    if rollouts.n_valid == 0:
        raw = RewardVector(np.zeros(rollouts.k), source="mse")
        return apply_invalid_policy(raw, rollouts.valid, mode=mode, fixed_penalty=fixed_penalty)
    rewards = np.zeros(rollouts.k)
    for k in np.flatnonzero(rollouts.valid):
        rewards[k] = mse_reward(rollouts.predictions[k], rollouts.target)
    raw = RewardVector(rewards, source="mse")
    return apply_invalid_policy(raw, rollouts.valid, mode=mode, fixed_penalty=fixed_penalty)


def apply_invalid_policy(raw: RewardVector, valid, mode: str = "min_batch",
                         fixed_penalty: float = FIXED_FALLBACK_PENALTY) -> RewardVector:
    """Replace rewards of invalid rollouts according to the penalty policy.

    ``min_batch`` assigns each invalid rollout the minimum reward among the
    group's valid rollouts; ``fixed`` assigns the constant ``fixed_penalty``.
    Valid entries pass through unchanged. When every rollout is invalid, all
    entries receive the fixed fallback penalty and the vector is flagged
    unusable for advantage computation.
    """
    if mode not in ("min_batch", "fixed"):
        raise ValueError(f"unknown invalid-rollout policy {mode!r}")
    valid = np.asarray(valid, dtype=bool).ravel()
    if valid.size != raw.rewards.size:
        raise ValueError(
            f"valid flags and rewards disagree in length: {valid.size} vs {raw.rewards.size}"
        )
    if valid.all():
        return raw
    rewards = raw.rewards.copy()
    if not valid.any():
        rewards[:] = fixed_penalty
        return RewardVector(rewards, source=raw.source, usable=False)
    penalty = fixed_penalty if mode == "fixed" else rewards[valid].min()
    rewards[~valid] = penalty
    return RewardVector(rewards, source=raw.source, usable=raw.usable)


def compute_rewards(rollouts: RolloutSet, reward_mode: str,
                    invalid_mode: str = "min_batch",
                    fixed_penalty: float = FIXED_FALLBACK_PENALTY) -> RewardVector:
    """Dispatch to the configured reward family for one rollout group."""
    if reward_mode == "dar":
        if rollouts.n_valid == 0:
            raw = RewardVector(np.zeros(rollouts.k), source="dar")
            return apply_invalid_policy(raw, rollouts.valid, mode=invalid_mode,
                                        fixed_penalty=fixed_penalty)
        return dar_rewards(rollouts, mode=invalid_mode, fixed_penalty=fixed_penalty)
    if reward_mode == "mse":
        return mse_rewards(rollouts, mode=invalid_mode, fixed_penalty=fixed_penalty)
    raise ValueError(f"unknown reward mode {reward_mode!r}")
