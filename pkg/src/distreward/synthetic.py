"""Heteroscedastic two-component Gaussian-mixture regression benchmark.

The conditional law of the target given a scalar input x is a two-component
Gaussian mixture whose mixing weight, component means, and shared noise
scale all vary with x:

    pi(x)    = 1 / (1 + exp(a x))
    mu1(x)   = s x + A sin(w x)
    mu2(x)   = s x - A cos(w x)
    sigma(x) = b + c (0.5 + 0.5 sin(v x))^2

with defaults a=1.2, s=1/3, A=1.2, w=0.8, b=0.12, c=0.28, v=0.7. Training
inputs are drawn uniformly from an in-domain interval; test inputs also
cover two disjoint extrapolation intervals on either side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import expit, ndtr

__all__ = [
    "REGIONS",
    "Dataset",
    "MixturePoint",
    "MixtureTaskSpec",
    "make_dataset",
    "mixture_cdf",
    "mixture_params",
    "region_of",
    "sample_target",
    "true_mean",
]

REGION_INTERP = "interp"
REGION_EXTRAP_LEFT = "extrap_left"
REGION_EXTRAP_RIGHT = "extrap_right"
REGIONS = (REGION_INTERP, REGION_EXTRAP_LEFT, REGION_EXTRAP_RIGHT)


@dataclass(frozen=True)
class MixtureTaskSpec:
    """Constants of the generating process plus the input regions."""

    logistic_slope: float = 1.2
    mean_slope: float = 1.0 / 3.0
    wave_amp: float = 1.2
    wave_freq: float = 0.8
    noise_base: float = 0.12
    noise_amp: float = 0.28
    noise_freq: float = 0.7
    train_range: tuple[float, float] = (-6.0, 6.0)
    extrap_ranges: tuple[tuple[float, float], tuple[float, float]] = (
        (-10.0, -6.0),
        (6.0, 10.0),
    )

    def __post_init__(self) -> None:
        if self.noise_base <= 0:
            raise ValueError("noise_base must be positive so sigma(x) > 0 everywhere")
        lo, hi = self.train_range
        if not lo < hi:
            raise ValueError(f"train_range must be a nonempty interval, got {self.train_range!r}")
        (l_lo, l_hi), (r_lo, r_hi) = self.extrap_ranges
        if not (l_lo < l_hi <= lo and hi <= r_lo < r_hi):
            raise ValueError("extrapolation ranges must flank the training range disjointly")


@dataclass(frozen=True)
class MixturePoint:
    """Mixture parameters evaluated at one input."""

    pi: float
    mu1: float
    mu2: float
    sigma: float


def mixture_params(spec: MixtureTaskSpec, x) -> MixturePoint:
    """Evaluate the mixing weight, component means, and noise scale at x."""
    xf = float(x)
    if not np.isfinite(xf):
        raise ValueError(f"x must be finite, got {x!r}")
    pi = float(expit(-spec.logistic_slope * xf))
    mu1 = spec.mean_slope * xf + spec.wave_amp * np.sin(spec.wave_freq * xf)
    mu2 = spec.mean_slope * xf - spec.wave_amp * np.cos(spec.wave_freq * xf)
    sigma = spec.noise_base + spec.noise_amp * (0.5 + 0.5 * np.sin(spec.noise_freq * xf)) ** 2
    return MixturePoint(pi=pi, mu1=float(mu1), mu2=float(mu2), sigma=float(sigma))


def sample_target(spec: MixtureTaskSpec, x, rng: np.random.Generator) -> float:
    """Draw one target: pick a component with probability pi(x), add noise."""
    pt = mixture_params(spec, x)
    mu = pt.mu1 if rng.random() < pt.pi else pt.mu2
    return float(mu + pt.sigma * rng.standard_normal())


def true_mean(spec: MixtureTaskSpec, x) -> float:
    """Conditional mean ``pi(x) mu1(x) + (1 - pi(x)) mu2(x)``."""
    pt = mixture_params(spec, x)
    return pt.pi * pt.mu1 + (1.0 - pt.pi) * pt.mu2


def mixture_cdf(spec: MixtureTaskSpec, x, y) -> float:
    """Exact conditional CDF: mixture of the two component normal CDFs."""
    pt = mixture_params(spec, x)
    z1 = (float(y) - pt.mu1) / pt.sigma
    z2 = (float(y) - pt.mu2) / pt.sigma
    return float(pt.pi * ndtr(z1) + (1.0 - pt.pi) * ndtr(z2))


def region_of(spec: MixtureTaskSpec, x) -> str:
    """Region tag for an input: in-domain, or left/right extrapolation."""
    lo, hi = spec.train_range
    if x < lo:
        return REGION_EXTRAP_LEFT
    if x > hi:
        return REGION_EXTRAP_RIGHT
    return REGION_INTERP


_REGION_BOUNDS = {
    REGION_INTERP: lambda spec: spec.train_range,
    REGION_EXTRAP_LEFT: lambda spec: spec.extrap_ranges[0],
    REGION_EXTRAP_RIGHT: lambda spec: spec.extrap_ranges[1],
}


@dataclass
class Dataset:
    """Records of (x, target, region tag), deterministic given the seed."""

    x: np.ndarray
    y: np.ndarray
    region: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.region = np.asarray(self.region, dtype=object).ravel()
        if not (self.x.size == self.y.size == self.region.size):
            raise ValueError("x, y, and region must have equal lengths")

    def __len__(self) -> int:
        return int(self.x.size)

    def __iter__(self) -> Iterator[tuple[float, float, str]]:
        for i in range(len(self)):
            yield float(self.x[i]), float(self.y[i]), str(self.region[i])

    def select(self, indices) -> "Dataset":
        """New dataset restricted to the given indices (order preserved)."""
        return Dataset(self.x[indices], self.y[indices], self.region[indices], seed=self.seed)


def make_dataset(spec: MixtureTaskSpec, n_train: int, n_test: int, seed: int
                 ) -> tuple[Dataset, Dataset]:
    """Generate train and test splits of the benchmark.

    Training inputs are uniform over the in-domain interval. Test inputs
    rotate through the three regions (in-domain, left extrapolation, right
    extrapolation) so each receives one third of the points, uniform within
    its interval.

    Every record draws from its own substream, keyed by the master seed and
    the record index, so the result is independent of generation order.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be at least 1")
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    children = np.random.SeedSequence(seed).spawn(n_train + n_test)

    lo, hi = spec.train_range
    train_x = np.empty(n_train)
    train_y = np.empty(n_train)
    for i in range(n_train):
        rng = np.random.default_rng(children[i])
        train_x[i] = rng.uniform(lo, hi)
        train_y[i] = sample_target(spec, train_x[i], rng)
    train = Dataset(train_x, train_y, np.full(n_train, REGION_INTERP, dtype=object), seed=seed)

    test_x = np.empty(n_test)
    test_y = np.empty(n_test)
    test_region = np.empty(n_test, dtype=object)
    for j in range(n_test):
        rng = np.random.default_rng(children[n_train + j])
        region = REGIONS[j % len(REGIONS)]
        r_lo, r_hi = _REGION_BOUNDS[region](spec)
        test_x[j] = rng.uniform(r_lo, r_hi)
        test_y[j] = sample_target(spec, test_x[j], rng)
        test_region[j] = region
    test = Dataset(test_x, test_y, test_region, seed=seed)
    return train, test
