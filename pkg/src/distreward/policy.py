"""Stochastic numeric-emitting policy over a discretized value grid.

The policy is a softmax over B bin centers, conditioned on the input x
through a fixed radial-bump feature basis: ``logits(x) = W phi(x) / T``.
Sampling a rollout means drawing a bin and emitting its center, so the
log-probability of every emitted value is exact. A frozen snapshot of the
policy serves as the KL anchor during training.

Also houses the strict text round-trip for predictions: values are emitted
as ``\\boxed{<decimal>}`` and parsed back with an explicit invalid marker
for malformed text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .rewards import RolloutSet

__all__ = [
    "GridPolicy",
    "ReferencePolicy",
    "batched_features",
    "batched_probs",
    "features",
    "format_prediction",
    "kl_to_reference",
    "parse_prediction",
    "policy_entropy",
    "probs",
    "sample_bins",
    "sample_rollouts",
]


@dataclass
class GridPolicy:
    """Softmax policy over numeric bins with a radial feature basis.

    ``weights`` has shape (B, M): one row per bin, one column per basis
    bump. Probabilities at any input are ``softmax(weights @ phi(x) / T)``.
    """

    bin_centers: np.ndarray
    basis_centers: np.ndarray
    bandwidth: float
    weights: np.ndarray
    temperature: float = 1.0

    def __post_init__(self) -> None:
        self.bin_centers = np.asarray(self.bin_centers, dtype=float).ravel()
        self.basis_centers = np.asarray(self.basis_centers, dtype=float).ravel()
        self.weights = np.asarray(self.weights, dtype=float)
        if self.bin_centers.size < 2 or np.any(np.diff(self.bin_centers) <= 0):
            raise ValueError("bin_centers must be strictly increasing with at least 2 bins")
        if self.basis_centers.size < 1:
            raise ValueError("at least one basis bump is required")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        expected = (self.bin_centers.size, self.basis_centers.size)
        if self.weights.shape != expected:
            raise ValueError(f"weights must have shape {expected}, got {self.weights.shape}")

    @classmethod
    def uniform(cls, bin_range=(-6.0, 6.0), n_bins: int = 81,
                basis_range=(-12.0, 12.0), n_basis: int = 32,
                bandwidth: float = 0.75, temperature: float = 1.0) -> "GridPolicy":
        """Zero-weight policy: uniform over bins at every input.

        Defaults: 81 bins over [-6, 6] (bin width 0.15, below the benchmark
        noise floor) and 32 bumps over [-12, 12] so the basis also covers
        extrapolation inputs.
        """
        return cls(
            bin_centers=np.linspace(bin_range[0], bin_range[1], n_bins),
            basis_centers=np.linspace(basis_range[0], basis_range[1], n_basis),
            bandwidth=bandwidth,
            weights=np.zeros((n_bins, n_basis)),
            temperature=temperature,
        )

    @property
    def n_bins(self) -> int:
        return int(self.bin_centers.size)

    @property
    def n_basis(self) -> int:
        return int(self.basis_centers.size)

    def copy(self) -> "GridPolicy":
        return GridPolicy(self.bin_centers.copy(), self.basis_centers.copy(),
                          self.bandwidth, self.weights.copy(), self.temperature)

    def snapshot(self) -> "ReferencePolicy":
        """Frozen copy used as the fixed reference for KL regularization."""
        return ReferencePolicy(self.bin_centers.copy(), self.basis_centers.copy(),
                               self.bandwidth, self.weights.copy(), self.temperature)


@dataclass
class ReferencePolicy(GridPolicy):
    """Immutable snapshot of a :class:`GridPolicy`; never updated."""

    def __post_init__(self) -> None:
        super().__post_init__()
        for arr in (self.bin_centers, self.basis_centers, self.weights):
            arr.setflags(write=False)


def batched_features(policy: GridPolicy, xs) -> np.ndarray:
    """Radial-bump activations for a batch of inputs, shape (N, M)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    d = xs[:, None] - policy.basis_centers[None, :]
    return np.exp(-(d * d) / (2.0 * policy.bandwidth ** 2))


def features(policy: GridPolicy, x) -> np.ndarray:
    """Radial-bump activations at one input; entries lie in (0, 1]."""
    xf = float(x)
    if not np.isfinite(xf):
        raise ValueError(f"x must be finite, got {x!r}")
    return batched_features(policy, xf)[0]


def batched_probs(policy: GridPolicy, xs) -> np.ndarray:
    """Bin probabilities for a batch of inputs, shape (N, B); rows sum to 1."""
    phi = batched_features(policy, xs)
    logits = phi @ policy.weights.T / policy.temperature
    logits -= logits.max(axis=1, keepdims=True)
    q = np.exp(logits)
    q /= q.sum(axis=1, keepdims=True)
    return q


def probs(policy: GridPolicy, x) -> np.ndarray:
    """Bin probabilities at one input."""
    xf = float(x)
    if not np.isfinite(xf):
        raise ValueError(f"x must be finite, got {x!r}")
    return batched_probs(policy, xf)[0]


def sample_bins_from_probs(q: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw k bin indices from one probability row via its inverse CDF."""
    cdf = np.cumsum(q)
    idx = np.searchsorted(cdf, rng.random(k), side="right")
    return np.minimum(idx, q.size - 1)


def sample_bins(policy: GridPolicy, x, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw k independent bin indices from the policy at one input."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return sample_bins_from_probs(probs(policy, x), k, rng)


def sample_rollouts(policy: GridPolicy, x, k: int, rng: np.random.Generator,
                    target: float = 0.0, example_id: object = None) -> RolloutSet:
    """Sample k rollouts: each prediction is the drawn bin's center.

    The grid policy cannot emit malformed output, so every rollout is valid.
    The target is carried through so the set can be scored directly.
    """
    bins = sample_bins(policy, x, k, rng)
    return RolloutSet(
        example_id=example_id,
        predictions=policy.bin_centers[bins],
        valid=np.ones(k, dtype=bool),
        target=target,
    )


def policy_entropy(policy: GridPolicy, x) -> float:
    """Exact entropy (nats) of the bin distribution at one input."""
    q = probs(policy, x)
    return entropy_of(q)


def entropy_of(q: np.ndarray) -> float:
    """Entropy of a probability vector, with 0 log 0 read as 0."""
    nz = q > 0
    return float(-(q[nz] * np.log(q[nz])).sum())


def kl_to_reference(policy: GridPolicy, ref: GridPolicy, x) -> float:
    """Exact categorical KL from the policy to the reference at one input."""
    if not np.array_equal(policy.bin_centers, ref.bin_centers):
        raise ValueError("policy and reference must share the same bin grid")
    q = probs(policy, x)
    r = probs(ref, x)
    return kl_of(q, r)


def kl_of(q: np.ndarray, r: np.ndarray) -> float:
    """KL divergence between probability vectors over the same bins."""
    nz = q > 0
    return float((q[nz] * (np.log(q[nz]) - np.log(r[nz]))).sum())


_BOXED_RE = re.compile(r"\\boxed\{([^{}]*)\}")
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


def format_prediction(value) -> str:
    """Emit a prediction as ``\\boxed{<decimal>}``.

    Uses the shortest decimal representation that round-trips the float
    exactly, so ``parse_prediction(format_prediction(v)) == v``.
    """
    v = float(value)
    if not np.isfinite(v):
        raise ValueError(f"prediction must be finite, got {value!r}")
    return "\\boxed{" + repr(v) + "}"


def parse_prediction(text) -> float | None:
    """Extract a prediction from text, or None when none can be parsed.

    Scans every ``\\boxed{...}`` occurrence and returns the value of the
    last one whose content is a finite decimal or scientific-notation
    number. Returns None for anything else; never raises on malformed text.
    """
    if not isinstance(text, str):
        return None
    result = None
    for match in _BOXED_RE.finditer(text):
        content = match.group(1).strip()
        if _NUMBER_RE.fullmatch(content):
            value = float(content)
            if np.isfinite(value):
                result = value
    return result
