"""Tests for the Gaussian-mixture regression benchmark."""

import numpy as np
import pytest
from scipy.stats import kstest

from distreward.synthetic import (REGIONS, Dataset, MixtureTaskSpec, make_dataset,
                                  mixture_cdf, mixture_params, region_of,
                                  sample_target, true_mean)

SPEC = MixtureTaskSpec()


class TestMixtureParams:
    def test_origin(self):
        pt = mixture_params(SPEC, 0.0)
        assert pt.pi == pytest.approx(0.5)
        assert pt.mu1 == pytest.approx(0.0)
        assert pt.mu2 == pytest.approx(-1.2)
        assert pt.sigma == pytest.approx(0.19)

    def test_at_one(self):
        # frozen against a 30-digit evaluation of the generating formulas
        pt = mixture_params(SPEC, 1.0)
        assert pt.pi == pytest.approx(0.231475216500982, rel=1e-12)
        assert pt.mu1 == pytest.approx(1.194160642412761, rel=1e-12)
        assert pt.mu2 == pytest.approx(-0.502714717883265, rel=1e-12)
        assert pt.sigma == pytest.approx(0.309241626211768, rel=1e-12)

    def test_logistic_limit(self):
        assert mixture_params(SPEC, 50.0).pi < 1e-20
        assert mixture_params(SPEC, -50.0).pi >= 1 - 1e-15

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            mixture_params(SPEC, np.nan)

    def test_sigma_bounds_on_dense_grid(self):
        xs = np.linspace(-30, 30, 20001)
        sigmas = np.array([mixture_params(SPEC, x).sigma for x in xs])
        assert sigmas.min() >= 0.12 - 1e-12
        assert sigmas.max() <= 0.40 + 1e-12

    def test_pi_strictly_decreasing(self):
        xs = np.linspace(-10, 10, 2001)
        pis = np.array([mixture_params(SPEC, x).pi for x in xs])
        assert np.all(np.diff(pis) < 0)


class TestTrueMean:
    def test_origin(self):
        assert true_mean(SPEC, 0.0) == pytest.approx(-0.6)

    def test_at_one(self):
        # frozen against a 30-digit evaluation of the generating formulas
        assert true_mean(SPEC, 1.0) == pytest.approx(-0.109930126483560, rel=1e-10)

    def test_single_component_limit(self):
        x = -50.0
        pt = mixture_params(SPEC, x)
        assert true_mean(SPEC, x) == pytest.approx(pt.mu1, abs=1e-12)


class TestSampleTarget:
    def test_moments_at_origin(self):
        rng = np.random.default_rng(123)
        draws = np.array([sample_target(SPEC, 0.0, rng) for _ in range(100_000)])
        assert draws.mean() == pytest.approx(-0.6, abs=0.02)
        assert draws.var() == pytest.approx(0.3961, abs=0.02)

    def test_degenerate_mixture_collapses_to_mu1(self):
        spec = MixtureTaskSpec(noise_amp=0.0, noise_base=1e-12)
        x = -30.0  # pi(x) is 1 up to rounding
        rng = np.random.default_rng(0)
        mu1 = mixture_params(spec, x).mu1
        for _ in range(50):
            assert sample_target(spec, x, rng) == pytest.approx(mu1, abs=1e-9)

    def test_kolmogorov_smirnov_against_exact_cdf(self):
        rng = np.random.default_rng(2718)
        xs = rng.uniform(-10, 10, size=5)
        for i, x in enumerate(xs):
            gen = np.random.default_rng(1000 + i)
            draws = np.array([sample_target(SPEC, x, gen) for _ in range(10_000)])
            result = kstest(draws, lambda y: np.array([mixture_cdf(SPEC, x, v) for v in np.atleast_1d(y)]))
            assert result.pvalue > 0.01, f"KS rejected at x={x}: p={result.pvalue}"


class TestTaskSpecValidation:
    def test_rejects_zero_noise_base(self):
        with pytest.raises(ValueError):
            MixtureTaskSpec(noise_base=0.0)

    def test_rejects_overlapping_regions(self):
        with pytest.raises(ValueError):
            MixtureTaskSpec(extrap_ranges=((-10.0, -5.0), (6.0, 10.0)))


class TestMakeDataset:
    def test_default_scale_counts_and_regions(self):
        train, test = make_dataset(SPEC, 1200, 600, seed=7)
        assert len(train) == 1200
        assert len(test) == 600
        assert set(test.region) == set(REGIONS)
        counts = {r: int((test.region == r).sum()) for r in REGIONS}
        assert counts == {r: 200 for r in REGIONS}

    def test_determinism(self):
        a_train, a_test = make_dataset(SPEC, 40, 9, seed=3)
        b_train, b_test = make_dataset(SPEC, 40, 9, seed=3)
        assert np.array_equal(a_train.x, b_train.x)
        assert np.array_equal(a_train.y, b_train.y)
        assert np.array_equal(a_test.x, b_test.x)
        assert np.array_equal(a_test.y, b_test.y)
        c_train, _ = make_dataset(SPEC, 40, 9, seed=4)
        assert not np.array_equal(a_train.x, c_train.x)

    def test_region_tags_consistent_with_x(self):
        train, test = make_dataset(SPEC, 100, 99, seed=5)
        for x, _, region in test:
            assert region == region_of(SPEC, x)
        assert all(r == "interp" for r in train.region)
        assert np.all(np.abs(test.x) <= 10.0)

    def test_tiny_test_split_has_valid_tags(self):
        _, test = make_dataset(SPEC, 1, 3, seed=0)
        assert len(test) == 3
        assert set(test.region) == set(REGIONS)

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            make_dataset(SPEC, 0, 5, seed=0)
        with pytest.raises(ValueError):
            make_dataset(SPEC, 5, 5, seed=-1)


class TestDataset:
    def test_select_preserves_fields(self):
        data = Dataset([0.0, 1.0, 2.0], [1.0, 2.0, 3.0], ["interp"] * 3, seed=1)
        sub = data.select(np.array([2, 0]))
        assert sub.x.tolist() == [2.0, 0.0]
        assert sub.y.tolist() == [3.0, 1.0]
        assert sub.seed == 1

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ValueError):
            Dataset([0.0], [1.0, 2.0], ["interp"])
