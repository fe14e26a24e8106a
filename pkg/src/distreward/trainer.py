"""On-policy trainer with group-standardized advantages and a KL anchor.

Each step samples K rollouts per example from the current policy, scores
them with the configured reward family, standardizes rewards within each
group, and ascends the surrogate

    sum_{i,k} A_ik log pi(bin_ik | x_i)  -  kl_coef * sum_i KL(pi(.|x_i) || ref(.|x_i))

averaged over the batch, with plain fixed-step gradient ascent. A
supervised analog fits the policy by cross-entropy on the bin containing
each target. All randomness is drawn from streams keyed by (seed, stream,
step), so runs are reproducible and resumable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .evaluate import regression_metrics, sample_matrix
from .policy import GridPolicy, batched_features, batched_probs, sample_bins_from_probs
from .rewards import RewardVector, RolloutSet, compute_rewards
from .synthetic import Dataset

__all__ = [
    "NumericFailureError",
    "ResumeState",
    "StepRecord",
    "TrainConfig",
    "TrainLog",
    "TrainResult",
    "grpo_advantages",
    "resume_state_of",
    "sft_fit",
    "sft_gradient",
    "sft_loss",
    "surrogate_gradient",
    "surrogate_objective",
    "target_bins",
    "train",
    "train_step",
]

REWARD_MODES = ("mse", "dar")

# Stream tags keeping the trainer's per-step substreams disjoint.
_STREAM_BATCH = 11
_STREAM_ROLLOUT = 22
_STREAM_VAL = 33


class NumericFailureError(RuntimeError):
    """Raised when training produces a non-finite gradient or update."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class TrainConfig:
    """Hyperparameters for on-policy training and the policy geometry."""

    reward_mode: str = "dar"
    k_rollouts: int = 12
    batch_size: int = 256
    learning_rate: float = 0.5
    kl_coef: float = 0.001
    max_steps: int = 300
    temperature: float = 1.0
    advantage_epsilon: float = 1e-8
    seed: int = 0
    eval_every: int = 10
    eval_samples: int = 32
    n_bins: int = 81
    bin_range: tuple[float, float] = (-6.0, 6.0)
    n_basis: int = 32
    basis_range: tuple[float, float] = (-12.0, 12.0)
    bandwidth: float = 0.75

    def __post_init__(self) -> None:
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"reward_mode must be one of {REWARD_MODES}, got {self.reward_mode!r}")
        if self.reward_mode == "dar" and self.k_rollouts < 2:
            raise ValueError("leave-one-out rewards need at least 2 rollouts per example")
        if self.k_rollouts < 1:
            raise ValueError("k_rollouts must be at least 1")
        for name in ("batch_size", "eval_every", "eval_samples", "n_bins", "n_basis"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("temperature", "advantage_epsilon", "bandwidth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        # learning_rate 0 is a legal no-op configuration: steps run and log
        # without changing the weights.
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.kl_coef < 0:
            raise ValueError("kl_coef must be nonnegative")
        if self.max_steps < 0:
            raise ValueError("max_steps must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def make_policy(self) -> GridPolicy:
        return GridPolicy.uniform(
            bin_range=tuple(self.bin_range), n_bins=self.n_bins,
            basis_range=tuple(self.basis_range), n_basis=self.n_basis,
            bandwidth=self.bandwidth, temperature=self.temperature,
        )


@dataclass
class StepRecord:
    step: int
    mean_reward: float
    bracket_rate: float
    entropy: float
    kl: float
    val_spearman: float | None = None
    val_rmse: float | None = None


@dataclass
class TrainLog:
    """Per-step training dynamics; one record per completed step."""

    records: list[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class ResumeState:
    """Snapshot of an in-progress run, sufficient to continue it exactly.

    Streams are keyed by (seed, stream, step), so the random state reduces
    to the next step index; the best-checkpoint tracker must ride along for
    the final selection to match an uninterrupted run.
    """

    policy: GridPolicy
    next_step: int
    best_weights: np.ndarray | None = None
    best_step: int | None = None
    best_spearman: float = -math.inf
    best_rmse: float = math.inf


@dataclass
class TrainResult:
    best_policy: GridPolicy
    best_step: int
    final_policy: GridPolicy
    log: TrainLog


def grpo_advantages(rewards, epsilon: float = 1e-8) -> np.ndarray:
    """Standardize one group's rewards: subtract mean, divide by population std.

    A group whose reward spread is below ``epsilon`` gets all-zero
    advantages instead of amplifying numerical noise.
    """
    if isinstance(rewards, RewardVector):
        r = rewards.rewards
    else:
        r = np.asarray(rewards, dtype=float).ravel()
    if r.size < 2:
        raise ValueError("advantages need at least 2 rewards")
    if not np.all(np.isfinite(r)):
        raise ValueError("rewards must be finite")
    std = float(r.std())
    if std < epsilon:
        return np.zeros_like(r)
    return (r - r.mean()) / (std + epsilon)


def _as_xy(batch) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(batch, Dataset):
        return batch.x, batch.y
    if isinstance(batch, tuple) and len(batch) == 2:
        return (np.asarray(batch[0], dtype=float).ravel(),
                np.asarray(batch[1], dtype=float).ravel())
    pairs = list(batch)
    xs = np.asarray([p[0] for p in pairs], dtype=float)
    ys = np.asarray([p[1] for p in pairs], dtype=float)
    return xs, ys


def _entropy_rows(q: np.ndarray) -> np.ndarray:
    safe = np.where(q > 0, q, 1.0)
    return -(q * np.log(safe)).sum(axis=1)


def _kl_rows(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    safe_q = np.where(q > 0, q, 1.0)
    ratio = np.where(q > 0, np.log(safe_q) - np.log(np.where(q > 0, r, 1.0)), 0.0)
    return (q * ratio).sum(axis=1)


def surrogate_objective(policy: GridPolicy, ref: GridPolicy, xs,
                        bins: np.ndarray, advantages: np.ndarray,
                        kl_coef: float) -> float:
    """Batch-mean value of the surrogate ascended by ``train_step``.

    ``bins`` and ``advantages`` have shape (N, K) and are treated as
    constants of the sampled batch.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    q = batched_probs(policy, xs)
    r = batched_probs(ref, xs)
    logq = np.log(q)
    n = len(xs)
    total = 0.0
    for i in range(n):
        total += float((advantages[i] * logq[i, bins[i]]).sum())
    total -= kl_coef * float(_kl_rows(q, r).sum())
    return total / n


def surrogate_gradient(policy: GridPolicy, ref: GridPolicy, xs,
                       bins: np.ndarray, advantages: np.ndarray,
                       kl_coef: float) -> np.ndarray:
    """Analytic gradient of :func:`surrogate_objective` in the weights.

    With z = W phi / T and q = softmax(z): the log-probability term
    contributes (scatter(A over bins) - sum(A) q) phi^T / T per example, and
    the KL term contributes q (log(q/r) - KL) phi^T / T.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    phi = batched_features(policy, xs)
    q = batched_probs(policy, xs)
    r = batched_probs(ref, xs)
    n, n_bins = q.shape

    coeff = np.zeros_like(q)
    for i in range(n):
        c = np.bincount(bins[i], weights=advantages[i], minlength=n_bins)
        coeff[i] = c - advantages[i].sum() * q[i]
    kl = _kl_rows(q, r)
    log_ratio = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)) - np.log(r), 0.0)
    coeff -= kl_coef * q * (log_ratio - kl[:, None])
    return coeff.T @ phi / (n * policy.temperature)


def train_step(policy: GridPolicy, ref: GridPolicy, batch, config: TrainConfig,
               rng: np.random.SeedSequence) -> tuple[GridPolicy, StepRecord]:
    """One on-policy update over a batch of (x, y) examples.

    Samples K rollouts per example from its own child stream of ``rng``,
    converts rewards to group-standardized advantages, and takes one
    fixed-step gradient-ascent update of the surrogate. Returns the updated
    policy and the step's dynamics (mean reward, bracket rate, mean entropy,
    mean KL).
    """
    xs, ys = _as_xy(batch)
    if xs.size == 0:
        raise ValueError("train_step needs a nonempty batch")
    n = xs.size
    k = config.k_rollouts
    q = batched_probs(policy, xs)
    children = rng.spawn(n)

    bins = np.empty((n, k), dtype=int)
    advantages = np.empty((n, k))
    rewards_acc = 0.0
    bracketed = 0
    for i in range(n):
        gen = np.random.default_rng(children[i])
        bins[i] = sample_bins_from_probs(q[i], k, gen)
        preds = policy.bin_centers[bins[i]]
        rollouts = RolloutSet(i, preds, np.ones(k, dtype=bool), ys[i])
        vector = compute_rewards(rollouts, config.reward_mode)
        advantages[i] = (grpo_advantages(vector, config.advantage_epsilon)
                         if vector.usable else np.zeros(k))
        rewards_acc += float(vector.rewards.sum())
        bracketed += int(preds.min() <= ys[i] <= preds.max())

    grad = surrogate_gradient(policy, ref, xs, bins, advantages, config.kl_coef)
    if not np.all(np.isfinite(grad)):
        finite = grad[np.isfinite(grad)]
        diagnostics = {
            "max_abs_weight": float(np.abs(policy.weights).max()),
            "max_abs_finite_grad": float(np.abs(finite).max()) if finite.size else None,
            "batch_x_min": float(xs.min()),
            "batch_x_max": float(xs.max()),
            "n_nonfinite": int((~np.isfinite(grad)).sum()),
        }
        raise NumericFailureError(
            f"non-finite gradient during training step: {diagnostics}", diagnostics)

    updated = policy.copy()
    updated.weights = policy.weights + config.learning_rate * grad

    r = batched_probs(ref, xs)
    record = StepRecord(
        step=0,
        mean_reward=rewards_acc / (n * k),
        bracket_rate=bracketed / n,
        entropy=float(_entropy_rows(q).mean()),
        kl=float(_kl_rows(q, r).mean()),
    )
    return updated, record


def _validation_metrics(policy: GridPolicy, val: Dataset, config: TrainConfig,
                        step: int) -> tuple[float, float]:
    seq = np.random.SeedSequence([config.seed, _STREAM_VAL, step])
    samples = sample_matrix(policy, val.x, config.eval_samples, seq)
    reg = regression_metrics(samples.mean(axis=1), val.y)
    return reg.spearman, reg.rmse


def train(config: TrainConfig, train_set: Dataset, val_set: Dataset,
          resume: ResumeState | None = None) -> TrainResult:
    """Run the training loop and select the best validation checkpoint.

    Validation runs every ``eval_every`` steps and at the final step; the
    best checkpoint maximizes validation Spearman, breaking ties first by
    lower RMSE and then by earlier step. Fully deterministic given the
    config, and resumable from a :class:`ResumeState` with an identical
    trajectory.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("train and validation sets must be nonempty")
    if resume is None:
        policy = config.make_policy()
        state = ResumeState(policy=policy, next_step=1)
    else:
        state = resume
        policy = state.policy
    ref = config.make_policy().snapshot()

    log = TrainLog()
    best_weights = state.best_weights
    best_step = state.best_step
    best_key = (-state.best_spearman, state.best_rmse,
                state.best_step if state.best_step is not None else math.inf)

    for step in range(state.next_step, config.max_steps + 1):
        batch_rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, _STREAM_BATCH, step]))
        idx = batch_rng.integers(0, len(train_set), size=config.batch_size)
        batch = (train_set.x[idx], train_set.y[idx])
        policy, record = train_step(
            policy, ref, batch, config,
            np.random.SeedSequence([config.seed, _STREAM_ROLLOUT, step]))
        record.step = step

        if step % config.eval_every == 0 or step == config.max_steps:
            spearman, rmse = _validation_metrics(policy, val_set, config, step)
            record.val_spearman = spearman
            record.val_rmse = rmse
            key = (-spearman if not math.isnan(spearman) else math.inf, rmse, step)
            if best_weights is None or key < best_key:
                best_key = key
                best_weights = policy.weights.copy()
                best_step = step
        log.records.append(record)

    final_policy = policy
    if best_weights is None:
        best_policy = final_policy.copy()
        best_step = config.max_steps
    else:
        best_policy = final_policy.copy()
        best_policy.weights = best_weights.copy()
    return TrainResult(best_policy=best_policy, best_step=int(best_step),
                       final_policy=final_policy, log=log)


def resume_state_of(result: TrainResult, config: TrainConfig) -> ResumeState:
    """State that continues a finished-or-interrupted run where it left off."""
    spearman = -math.inf
    rmse = math.inf
    for rec in result.log.records:
        if rec.step == result.best_step and rec.val_spearman is not None:
            spearman = rec.val_spearman
            rmse = rec.val_rmse
    last_step = result.log.records[-1].step if result.log.records else 0
    return ResumeState(
        policy=result.final_policy,
        next_step=last_step + 1,
        best_weights=result.best_policy.weights.copy(),
        best_step=result.best_step,
        best_spearman=spearman,
        best_rmse=rmse,
    )


def target_bins(policy: GridPolicy, targets) -> np.ndarray:
    """Index of the bin whose center is nearest each target, after clamping."""
    centers = policy.bin_centers
    y = np.clip(np.asarray(targets, dtype=float).ravel(), centers[0], centers[-1])
    return np.abs(y[:, None] - centers[None, :]).argmin(axis=1)


def sft_loss(policy: GridPolicy, xs, bins: np.ndarray) -> float:
    """Mean cross-entropy of the bins containing the targets."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    q = batched_probs(policy, xs)
    picked = q[np.arange(len(xs)), bins]
    return float(-np.log(picked).mean())


def sft_gradient(policy: GridPolicy, xs, bins: np.ndarray) -> np.ndarray:
    """Analytic gradient of :func:`sft_loss` in the weights."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    phi = batched_features(policy, xs)
    q = batched_probs(policy, xs)
    coeff = q.copy()
    coeff[np.arange(len(xs)), bins] -= 1.0
    return coeff.T @ phi / (len(xs) * policy.temperature)


def sft_fit(train_set: Dataset, config: TrainConfig) -> GridPolicy:
    """Fit the policy by full-batch gradient descent on the bin cross-entropy.

    The objective is convex in the weights (softmax of linear logits), so
    with the small default step size the loss decreases monotonically.
    """
    policy = config.make_policy()
    bins = target_bins(policy, train_set.y)
    xs = train_set.x
    for _ in range(config.max_steps):
        grad = sft_gradient(policy, xs, bins)
        if not np.all(np.isfinite(grad)):
            raise NumericFailureError("non-finite gradient during supervised fit")
        policy.weights = policy.weights - config.learning_rate * grad
    return policy
