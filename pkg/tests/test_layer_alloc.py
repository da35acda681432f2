import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artk.apportion import largest_remainder, round_half_up, water_fill
from artk.errors import InputError
from artk.layer_alloc import (
    accumulate_prompt_attention,
    allocate_layer_budgets,
    count_salient,
    layer_weights,
    significance_scores,
    slot_budget,
    stabilize_weights,
)
from artk.model import AttentionRecord


class TestSignificance:
    def test_uniform(self):
        A = np.full((1, 3, 4), 0.25)
        assert np.allclose(accumulate_prompt_attention(A), 3 / 4)

    def test_head_average(self):
        A = np.array([[[0.2, 0.4]], [[0.6, 0.0]]])
        assert np.allclose(accumulate_prompt_attention(A), [0.4, 0.2])

    def test_hand_sum(self):
        rec = AttentionRecord([np.array([[[0.6, 0.4], [0.2, 0.8]]], np.float32)])
        assert np.allclose(significance_scores(rec)[0], [0.8, 1.2], atol=1e-7)

    def test_bad_shape(self):
        with pytest.raises(InputError):
            accumulate_prompt_attention(np.zeros((2, 2)))


class TestCountSalient:
    def test_example(self):
        a1 = np.array([0.4, 0.3, 0.05, 0.05])
        a2 = np.array([0.1, 0.05, 0.03, 0.02])
        assert count_salient([a1, a2], 0.5).tolist() == [2, 1]

    def test_all_ties(self):
        assert count_salient([np.ones(4), np.ones(4)], 0.5).tolist() == [0, 0]

    def test_full_budget(self):
        a = [np.array([3.0, 1.0]), np.array([1.0, 2.0])]
        assert count_salient(a, 1.0).tolist() == [1, 1]

    def test_out_of_range(self):
        with pytest.raises(InputError):
            count_salient([np.ones(4)], 0.0)


class TestWeights:
    def test_normalize(self):
        assert np.allclose(layer_weights([2, 1]), [2 / 3, 1 / 3])
        assert layer_weights([0, 0]).tolist() == [0.5, 0.5]
        assert layer_weights([5, 0, 0]).tolist() == [1, 0, 0]

    def test_stabilize_fixpoint(self):
        w = np.array([2 / 3, 1 / 3])
        assert stabilize_weights(w, 0.01).tolist() == w.tolist()

    def test_stabilize_floor(self):
        assert stabilize_weights([1.0, 0.0], 0.01).tolist() == [0.99, 0.01]

    def test_stabilize_eps_zero(self):
        w = np.array([0.7, 0.0, 0.3])
        assert np.array_equal(stabilize_weights(w, 0.0), w)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(0, 50), min_size=1, max_size=8), st.floats(0, 0.1))
    def test_stabilized_is_floored_distribution(self, s, eps):
        eps = min(eps, 0.99 / len(s))
        w_hat = stabilize_weights(layer_weights(s), eps)
        assert abs(w_hat.sum() - 1) <= 1e-9
        assert w_hat.min() >= eps - 1e-12


class TestBudgets:
    def test_largest_remainder_example(self):
        b = allocate_layer_budgets([2 / 3, 1 / 3], 0.5, 4)
        assert b.keep_counts.tolist() == [3, 1] and b.slot_budget == 4
        assert b.alphas_layer.tolist() == [0.75, 0.25]

    def test_skewed(self):
        assert allocate_layer_budgets([0.99, 0.01], 0.5, 4).keep_counts.tolist() == [4, 0]

    def test_uniform_symmetric(self):
        k = allocate_layer_budgets(np.full(3, 1 / 3), 0.55, 7).keep_counts
        assert k.max() - k.min() <= 1

    def test_capped_redistribution(self):
        # B=9, layer 0 wants 7.2 > 4; the other two split the leftover 5 as 2.5 each,
        # and the remainder tie goes to the lower index
        b = allocate_layer_budgets([0.8, 0.1, 0.1], 0.75, 4)
        assert b.keep_counts.tolist() == [4, 3, 2]

    def test_mean_ratio_matches_alpha(self):
        b = allocate_layer_budgets([0.5, 0.3, 0.2], 0.4, 10)
        assert abs(b.alphas_layer.mean() - 0.4) <= 1 / (2 * 10)


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.integers(0, 30), min_size=1, max_size=6),
    st.floats(0, 1),
    st.integers(1, 12),
    st.floats(0, 0.15),
)
def test_budget_exact_and_bounded(s, alpha, n, eps):
    L = len(s)
    eps = min(eps, 0.99 / L)
    w_hat = stabilize_weights(layer_weights(s), eps)
    b = allocate_layer_budgets(w_hat, alpha, n)
    assert b.keep_counts.sum() == round_half_up(alpha * n * L) == b.slot_budget
    assert b.keep_counts.min() >= 0 and b.keep_counts.max() <= n
    # the layer with the most salient tokens gets (one of) the largest budgets
    assert b.keep_counts[int(np.argmax(s))] == b.keep_counts.max()


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.5, 2.4999)] == [1, 2, 3, 2]
    assert slot_budget(0.5, 4, 2) == 4


def test_water_fill_infeasible():
    with pytest.raises(InputError):
        water_fill([1, 1], 3.0, 1.0)


def test_largest_remainder_ties_to_lower_index():
    assert largest_remainder([0.5, 0.5, 1.0], 2).tolist() == [1, 0, 1]
