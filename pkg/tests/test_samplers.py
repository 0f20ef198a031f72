import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scoretriage.aggregation import AggregationPolicy
from scoretriage.core import AgreementMatrix, ItemResponse, ScoreScale, ValidationError, build_agreement_matrix
from scoretriage.metrics import accuracy
from scoretriage.samplers import (DELTA, Method, SamplePlan, SamplingWeights, apply_human_scores, class_uncertainty,
                                  draw_positions, draw_without_replacement, expected_reward, expected_rewards,
                                  random_weights, reward_of_swap, reward_weights, sample_size, uncertainty_weights)

from .conftest import make_dataset, random_matrix
from .oracles import expected_reward_bruteforce, lower_median, rounded_mean, sequential_inclusion


def matrix_from_probs(probs, scale=None):
    probs = np.asarray(probs, dtype=float)
    scale = scale or ScoreScale.default(probs.shape[0])
    return AgreementMatrix(scale, probs, np.ones(probs.shape[0], dtype=int))


class TestClassUncertainty:
    def test_low_b1_row(self):
        probs = np.eye(6)
        probs[1] = [0.0057, 0.61, 0.27, 0.11, 0.0043, 0.0]
        loss = class_uncertainty(matrix_from_probs(probs))
        assert loss[1] == pytest.approx(0.4943, abs=1e-4)
        assert loss[1] == pytest.approx(-math.log(0.61), abs=1e-12)
        assert loss[0] == 0.0

    def test_identity_is_certain(self):
        np.testing.assert_array_equal(class_uncertainty(matrix_from_probs(np.eye(4))), np.zeros(4))

    def test_zero_diagonal_is_clamped(self):
        probs = np.eye(3)
        probs[2] = [0.5, 0.5, 0.0]
        assert class_uncertainty(matrix_from_probs(probs))[2] == pytest.approx(-math.log(1e-6))
        assert class_uncertainty(matrix_from_probs(probs))[2] == pytest.approx(13.816, abs=1e-3)


class TestUncertaintyWeights:
    def test_zero_loss_class_gives_uniform(self, scale):
        ds = make_dataset(scale, [[2, 2], [2]])
        w = uncertainty_weights(ds, matrix_from_probs(np.eye(6), scale))
        np.testing.assert_allclose(w.probs, 1 / 3)

    def test_two_records(self):
        scale = ScoreScale(("lo", "hi"))
        m = matrix_from_probs([[0.5, 0.5], [0.0, 1.0]], scale)
        w = uncertainty_weights(make_dataset(scale, [[0], [1]]), m)
        a, b = math.log(2) + 0.001, 0.001
        np.testing.assert_allclose(w.probs, [a / (a + b), b / (a + b)], rtol=1e-12)
        np.testing.assert_allclose(w.probs, [0.9986, 0.0014], atol=1e-4)

    def test_single_record(self, scale, low_b1_matrix):
        w = uncertainty_weights(make_dataset(scale, [[1]]), low_b1_matrix)
        np.testing.assert_array_equal(w.probs, [1.0])


class TestRewardOfSwap:
    def test_outlier_swap(self, scale):
        ds = make_dataset(scale, [[1, 1, 1]])
        assert reward_of_swap(ItemResponse("c0", "i0", 1), ds, 4) == 1

    def test_self_swap_is_zero(self, small_dataset):
        for r in small_dataset.responses:
            assert reward_of_swap(r, small_dataset, r.machine_label) == 0

    def test_absorbed_by_rounding(self, scale):
        ds = make_dataset(scale, [[1] * 6])
        assert reward_of_swap(ItemResponse("c0", "i3", 1), ds, 2) == 0

    def test_unknown_record(self, small_dataset):
        with pytest.raises(ValidationError):
            reward_of_swap(ItemResponse("zz", "i0", 1), small_dataset, 2)

    def test_does_not_mutate(self, small_dataset):
        before = small_dataset.machine.copy()
        reward_of_swap(small_dataset.response_at(0), small_dataset, 5)
        np.testing.assert_array_equal(small_dataset.machine, before)


class TestExpectedReward:
    def test_identity_matrix_gives_delta(self, small_dataset, scale):
        m = matrix_from_probs(np.eye(6), scale)
        for r in small_dataset.responses:
            assert expected_reward(r, small_dataset, m) == DELTA

    def test_unmovable_candidate_gives_delta(self, scale):
        # 13 items at class 3: one swap shifts the mean by at most 3/13
        ds = make_dataset(scale, [[3] * 13])
        m = matrix_from_probs(random_matrix(np.random.default_rng(1), 6), scale)
        for c in range(6):
            assert reward_of_swap(ds.response_at(0), ds, c) == 0
        assert expected_reward(ds.response_at(0), ds, m) == DELTA

    def test_low_b1_candidate_matches_bruteforce(self, scale, low_b1_matrix):
        ds = make_dataset(scale, [[1, 1, 1]])
        got = expected_reward(ds.response_at(0), ds, low_b1_matrix)
        assert got == expected_reward_bruteforce([1, 1, 1], 0, low_b1_matrix.probs)
        # A2/Low B1/High B1 keep the global at 1; Low B2, High B2 and C (no mass) move it by 1
        row = low_b1_matrix.probs[1]
        assert got == pytest.approx(row[3] + row[4] + DELTA, abs=1e-15)

    @pytest.mark.parametrize("policy, agg", [(AggregationPolicy.ROUNDED_MEAN, rounded_mean),
                                             (AggregationPolicy.MEDIAN, lower_median)])
    def test_vectorized_path_matches_bruteforce(self, scale, policy, agg):
        rng = np.random.default_rng(5)
        probs = random_matrix(rng, 6)
        m = matrix_from_probs(probs, scale)
        items = [list(rng.integers(0, 6, size=rng.integers(1, 7))) for _ in range(5)]
        ds = make_dataset(scale, items)
        got = expected_rewards(ds, m, policy)
        want = [expected_reward_bruteforce(c, j, m.probs, agg) for c in items for j in range(len(c))]
        assert list(got) == want
        for pos in range(len(ds)):
            assert expected_reward(ds.response_at(pos), ds, m, policy) == want[pos]


class TestRewardWeights:
    def test_normalized_expected_rewards(self, small_dataset, low_b1_matrix):
        w = reward_weights(small_dataset, low_b1_matrix)
        raw = expected_rewards(small_dataset, low_b1_matrix)
        np.testing.assert_allclose(w.probs, raw / raw.sum(), rtol=1e-15)

    def test_all_zero_rewards_uniform(self, small_dataset, scale):
        w = reward_weights(small_dataset, matrix_from_probs(np.eye(6), scale))
        np.testing.assert_allclose(w.probs, 1 / len(small_dataset))

    def test_one_dominant_reward(self):
        w = SamplingWeights.from_raw(["a", "b"], np.array([0.999, 0.0]) + DELTA)
        np.testing.assert_allclose(w.probs, [1.0 / 1.001, 0.001 / 1.001])


def test_random_weights(small_dataset, scale):
    np.testing.assert_allclose(random_weights(small_dataset).probs, 1 / 9)
    assert list(random_weights(make_dataset(scale, [[0]])).probs) == [1.0]
    flipped = small_dataset.replace(machine=5 - small_dataset.machine)
    np.testing.assert_array_equal(random_weights(flipped).probs, random_weights(small_dataset).probs)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 5), min_size=1, max_size=6), min_size=1, max_size=6),
       st.integers(0, 2**32 - 1))
def test_all_weightings_positive_and_normalized(items, seed):
    scale = ScoreScale.default(6)
    ds = make_dataset(scale, items)
    m = matrix_from_probs(random_matrix(np.random.default_rng(seed), 6), scale)
    for w in (random_weights(ds), uncertainty_weights(ds, m), reward_weights(ds, m)):
        assert np.all(w.probs > 0)
        assert abs(w.probs.sum() - 1) < 1e-9
    rewards = expected_rewards(ds, m)
    assert np.all(rewards >= DELTA)


def test_sampling_weights_validation():
    with pytest.raises(ValidationError):
        SamplingWeights(("a", "b"), [1.0, 0.0])
    with pytest.raises(ValidationError):
        SamplingWeights(("a",), [0.5])


class TestSampleSize:
    def test_floor_with_minimum(self):
        assert sample_size(0.3, 6000) == 1800
        assert sample_size(0.29, 100) == 29
        assert sample_size(0.01, 10) == 1
        assert sample_size(1.0, 7) == 7

    @pytest.mark.parametrize("budget", [0.0, -0.1, 1.5])
    def test_out_of_range(self, budget):
        with pytest.raises(ValidationError):
            sample_size(budget, 10)

    def test_plan(self):
        plan = SamplePlan("reward", 0.25, 9)
        assert plan.method is Method.REWARD
        assert plan.size(10) == 2


class TestDraw:
    def test_full_sample(self):
        w = SamplingWeights.from_raw(list("abcde"), [1, 2, 3, 4, 5])
        assert sorted(draw_without_replacement(w, 5, 0)) == list("abcde")

    def test_errors(self):
        w = SamplingWeights.from_raw(list("abc"), [1, 1, 1])
        with pytest.raises(ValidationError):
            draw_without_replacement(w, 4, 0)
        with pytest.raises(ValidationError):
            draw_without_replacement(w, 0, 0)

    def test_deterministic(self):
        w = SamplingWeights.from_raw(range(50), np.arange(1, 51))
        assert draw_without_replacement(w, 10, 123) == draw_without_replacement(w, 10, 123)
        assert draw_without_replacement(w, 10, 123) != draw_without_replacement(w, 10, 124)

    def test_dominant_weight_always_drawn(self):
        w = SamplingWeights.from_raw(range(10), [1e12] + [1.0] * 9)
        assert all(0 in draw_without_replacement(w, 2, s) for s in range(200))

    def test_nested_across_sizes(self):
        probs = np.random.default_rng(0).random(30) + 0.01
        for seed in range(20):
            small = set(draw_positions(probs, 5, seed))
            assert small <= set(draw_positions(probs, 12, seed))

    @given(st.lists(st.floats(0.01, 100), min_size=2, max_size=20), st.floats(0.001, 1000), st.integers(0, 10**9))
    def test_scale_invariant(self, raw, factor, seed):
        raw = np.array(raw)
        k = len(raw) // 2 + 1
        assert list(draw_positions(raw, k, seed)) == list(draw_positions(raw * factor, k, seed))

    def test_uniform_inclusion_frequency(self):
        n, k, reps = 10, 3, 20_000
        counts = np.zeros(n)
        for seed in range(reps):
            counts[draw_positions(np.full(n, 0.1), k, seed)] += 1
        p = k / n
        assert np.all(np.abs(counts / reps - p) <= 3 * math.sqrt(p * (1 - p) / reps) + 1e-12)

    def test_matches_sequential_draws(self):
        weights = [5.0, 1.0, 2.0, 0.5, 3.0]
        exact = np.array(sequential_inclusion(weights, 2))
        probs = np.array(weights) / sum(weights)
        reps = 20_000
        counts = np.zeros(5)
        for seed in range(reps):
            counts[draw_positions(probs, 2, seed)] += 1
        sigma = np.sqrt(exact * (1 - exact) / reps)
        assert np.all(np.abs(counts / reps - exact) <= 3 * sigma)


class TestApplyHumanScores:
    def test_empty_sample_is_identity(self, small_dataset):
        assert apply_human_scores(small_dataset, []) == small_dataset

    def test_full_sample_is_perfect(self, small_dataset):
        fixed = apply_human_scores(small_dataset, small_dataset.keys)
        np.testing.assert_array_equal(fixed.machine, small_dataset.human)
        assert accuracy(fixed.machine, fixed.human) == 1.0

    def test_single_mismatch(self, small_dataset):
        fixed = apply_human_scores(small_dataset, [("c0", "i1")])
        changed = np.flatnonzero(fixed.machine != small_dataset.machine)
        assert list(changed) == [1]
        assert fixed.machine[1] == 2

    def test_unlabeled_record(self, scale):
        ds = make_dataset(scale, [[1, 2]], [[1, None]])
        with pytest.raises(ValidationError, match="unlabeled record in sample"):
            apply_human_scores(ds, [("c0", "i1")])

    def test_item_accuracy_never_drops(self, small_dataset):
        keys = small_dataset.keys
        before = accuracy(small_dataset.machine, small_dataset.human)
        for k in range(len(keys) + 1):
            after = apply_human_scores(small_dataset, keys[:k])
            acc = accuracy(after.machine, after.human)
            assert acc >= before
            before = acc
