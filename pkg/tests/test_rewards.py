"""Tests for rollout-level reward assignment."""

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from distreward.rewards import (FIXED_FALLBACK_PENALTY, DegenerateRolloutError,
                                RewardVector, RolloutSet, apply_invalid_policy,
                                compute_rewards, dar_rewards, mse_reward, mse_rewards)


def _all_valid(predictions, target, example_id="ex"):
    return RolloutSet(example_id, np.asarray(predictions, dtype=float),
                      np.ones(len(predictions), dtype=bool), target)


class TestRolloutSet:
    def test_basic_properties(self):
        rs = RolloutSet("a", [3.0, np.nan, 8.0], [True, False, True], 5.0)
        assert rs.k == 3
        assert rs.n_valid == 2
        assert rs.valid_predictions.tolist() == [3.0, 8.0]

    def test_invalid_placeholder_never_scored(self):
        rs = RolloutSet("a", [1.0, np.nan], [True, False], 1.0)
        assert rs.brackets_target()

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            RolloutSet("a", [1.0, 2.0], [True], 0.0)

    def test_rejects_non_finite_target(self):
        with pytest.raises(ValueError):
            RolloutSet("a", [1.0], [True], np.inf)

    def test_rejects_non_finite_valid_prediction(self):
        with pytest.raises(ValueError):
            RolloutSet("a", [np.nan], [True], 0.0)


class TestMseReward:
    def test_exact_hit(self):
        assert mse_reward(5.0, 5.0) == 0.0

    def test_unit_error(self):
        assert mse_reward(4.0, 5.0) == -1.0

    def test_squared_error(self):
        assert mse_reward(8.0, 5.0) == -9.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            mse_reward(np.nan, 0.0)
        with pytest.raises(ValueError):
            mse_reward(0.0, np.inf)

    def test_mean_seeking_grid_oracle(self):
        # argmin_a E[(a - Y)^2] sits at E[Y], located by brute-force grid search
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            support = rng.uniform(-5, 5, size=n)
            w = rng.uniform(0.1, 1.0, size=n)
            probs = w / w.sum()
            grid = np.linspace(support.min() - 1, support.max() + 1, 2001)
            cell = grid[1] - grid[0]
            losses = [-sum(p * mse_reward(a, y) for y, p in zip(support, probs)) for a in grid]
            best = grid[int(np.argmin(losses))]
            assert abs(best - float(np.dot(probs, support))) <= cell


class TestDarRewards:
    def test_running_example(self):
        rs = _all_valid([3.0, 4.0, 8.0], 5.0)
        rewards = dar_rewards(rs).rewards
        assert rewards == pytest.approx([0.111111, 0.361111, 0.361111], abs=1e-6)
        # the far-side rollout beats the redundant same-side one
        assert rewards[2] > rewards[0]

    def test_running_example_mse_ordering_is_opposite(self):
        rs = _all_valid([3.0, 4.0, 8.0], 5.0)
        mse = mse_rewards(rs).rewards
        assert mse == pytest.approx([-4.0, -1.0, -9.0])
        assert np.argmin(mse) == 2  # pointwise reward dislikes 8 the most

    def test_degenerate_pair(self):
        rewards = dar_rewards(_all_valid([5.0, 5.0], 5.0)).rewards
        assert rewards == pytest.approx([0.0, 0.0])

    def test_symmetric_pair(self):
        rewards = dar_rewards(_all_valid([4.0, 6.0], 5.0)).rewards
        assert rewards == pytest.approx([0.5, 0.5])

    def test_symmetry_about_target(self):
        rewards = dar_rewards(_all_valid([2.0, 4.0, 6.0, 8.0], 5.0)).rewards
        assert rewards[0] == pytest.approx(rewards[3], abs=1e-12)
        assert rewards[1] == pytest.approx(rewards[2], abs=1e-12)

    @given(shift=st.floats(min_value=-50.0, max_value=50.0))
    def test_translation_invariance(self, shift):
        base = dar_rewards(_all_valid([3.0, 4.0, 8.0, -1.0], 5.0)).rewards
        moved = dar_rewards(_all_valid([3 + shift, 4 + shift, 8 + shift, -1 + shift],
                                       5.0 + shift)).rewards
        assert moved == pytest.approx(base, abs=1e-12)

    def test_requires_two_valid(self):
        with pytest.raises(DegenerateRolloutError):
            dar_rewards(RolloutSet("a", [1.0, np.nan], [True, False], 0.0))

    def test_two_valid_uses_single_sample_leave_one_out(self):
        # with K=2 each leave-one-out score is -|other - target|
        rewards = dar_rewards(_all_valid([4.0, 7.0], 5.0)).rewards
        s_full = -(0.5 * (1 + 2) - 3 / 4)  # CRPS([4,7], 5) = 1.5 - 0.75
        assert rewards[0] == pytest.approx(s_full + 2.0)
        assert rewards[1] == pytest.approx(s_full + 1.0)

    def test_invalid_rollouts_get_min_batch_penalty(self):
        rs = RolloutSet("a", [3.0, 4.0, 8.0, np.nan], [True, True, True, False], 5.0)
        rewards = dar_rewards(rs).rewards
        assert rewards[:3] == pytest.approx([0.111111, 0.361111, 0.361111], abs=1e-6)
        assert rewards[3] == pytest.approx(rewards.min())
        assert rewards[3] == pytest.approx(0.111111, abs=1e-6)

    def test_duplication_never_creates_credit(self):
        # Redundant mass is penalized relative to unique coverage: a duplicate
        # never earns more than the original did when the original was
        # beneficial, and never more than max(original, 0) in general. (The
        # unrestricted "never more than the original" claim is false: a
        # duplicated *harmful* value hurts less to remove, e.g. duplicating 1
        # in [0, 1] against target 0 moves its reward from -0.25 to -0.194.)
        grid = range(0, 5)
        for size in (2, 3, 4):
            for preds in itertools.combinations_with_replacement(grid, size):
                for target in grid:
                    base = dar_rewards(_all_valid(list(map(float, preds)), float(target)))
                    for j, v in enumerate(preds):
                        extended = list(map(float, preds)) + [float(v)]
                        dup = dar_rewards(_all_valid(extended, float(target)))
                        assert dup.rewards[-1] <= max(base.rewards[j], 0.0) + 1e-12
                        if base.rewards[j] >= 0.0:
                            assert dup.rewards[-1] <= base.rewards[j] + 1e-12


class TestInvalidPolicy:
    def test_min_batch(self):
        raw = RewardVector(np.array([0.1, 0.3, 0.0]), "dar")
        out = apply_invalid_policy(raw, [True, True, False], mode="min_batch")
        assert out.rewards == pytest.approx([0.1, 0.3, 0.1])
        assert out.usable

    def test_fixed(self):
        raw = RewardVector(np.array([0.1, 0.0]), "mse")
        out = apply_invalid_policy(raw, [True, False], mode="fixed", fixed_penalty=-2.5)
        assert out.rewards == pytest.approx([0.1, -2.5])

    def test_all_invalid_flags_unusable(self):
        raw = RewardVector(np.array([0.0, 0.0]), "mse")
        out = apply_invalid_policy(raw, [False, False], mode="fixed", fixed_penalty=-1.0)
        assert out.rewards == pytest.approx([-1.0, -1.0])
        assert not out.usable

    def test_all_valid_is_noop(self):
        raw = RewardVector(np.array([0.5]), "mse")
        out = apply_invalid_policy(raw, [True], mode="min_batch")
        assert out.rewards == pytest.approx([0.5])
        assert out.usable

    def test_rejects_unknown_mode(self):
        raw = RewardVector(np.array([0.5]), "mse")
        with pytest.raises(ValueError):
            apply_invalid_policy(raw, [True], mode="zero")

    def test_rejects_length_mismatch(self):
        raw = RewardVector(np.array([0.5, 0.2]), "mse")
        with pytest.raises(ValueError):
            apply_invalid_policy(raw, [True], mode="min_batch")


class TestComputeRewards:
    def test_dispatch(self):
        rs = _all_valid([3.0, 4.0, 8.0], 5.0)
        assert compute_rewards(rs, "dar").source == "dar"
        assert compute_rewards(rs, "mse").source == "mse"
        with pytest.raises(ValueError):
            compute_rewards(rs, "rank")

    def test_all_invalid_group_is_unusable(self):
        rs = RolloutSet("a", [np.nan, np.nan], [False, False], 1.0)
        for mode in ("dar", "mse"):
            out = compute_rewards(rs, mode)
            assert not out.usable
            assert out.rewards == pytest.approx([FIXED_FALLBACK_PENALTY] * 2)

    def test_mse_with_invalid_entries(self):
        rs = RolloutSet("a", [4.0, np.nan, 5.0], [True, False, True], 5.0)
        out = compute_rewards(rs, "mse")
        assert out.rewards == pytest.approx([-1.0, -1.0, 0.0])
