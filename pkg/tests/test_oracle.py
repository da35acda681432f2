import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artk import oracle as o
from artk.errors import InputError
from artk.rng import SplitMix64


class TestRenormalization:
    def test_plain_softmax_when_unmasked(self):
        x = np.array([0.3, -1.0, 2.0])
        e = np.exp(x)
        assert np.allclose(o.masked_softmax_reference(x, [1, 1, 1]), e / e.sum())

    def test_masked_hand_value(self):
        out = o.masked_softmax_reference([1, 2, 3], [1, 0, 1])
        expected = [math.exp(1) / (math.exp(1) + math.exp(3)), 0, math.exp(3) / (math.exp(1) + math.exp(3))]
        assert out.tolist() == pytest.approx(expected, abs=1e-12)
        assert out.tolist() == pytest.approx([0.11920, 0, 0.88080], abs=1e-4)

    def test_single_retained(self):
        assert o.masked_softmax_reference([5, 1, 2], [0, 1, 0]).tolist() == [0, 1, 0]

    def test_all_dropped(self):
        with pytest.raises(InputError):
            o.masked_softmax_reference([1, 2], [0, 0])
        with pytest.raises(InputError):
            o.renormalized_weights([0.5, 0.5], [0, 0])

    def test_renormalize_hand_value(self):
        out = o.renormalized_weights([0.09003, 0.24473, 0.66524], [1, 0, 1])
        assert out.tolist() == pytest.approx([0.11920, 0, 0.88080], abs=1e-4)

    def test_unmasked_unchanged(self):
        A = np.array([0.2, 0.3, 0.5])
        assert np.allclose(o.renormalized_weights(A, [1, 1, 1]), A)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=10), st.data())
    def test_identity(self, logits, data):
        mask = data.draw(st.lists(st.integers(0, 1), min_size=len(logits), max_size=len(logits)))
        if not any(mask):
            mask[0] = 1
        A = o._softmax(np.array(logits))
        assert np.abs(o.masked_softmax_reference(logits, mask) - o.renormalized_weights(A, mask)).max() <= 1e-6

    def test_suite(self):
        reports = o.check_renormalization(50, 3)
        assert len(reports) == 50 and all(r.ok for r in reports)


def small_instance(seed=0, L=2, n=4, d=4):
    return o.random_instance(SplitMix64(seed), L, n, d)


class TestLossBound:
    def test_keep_all_zero_loss(self):
        inst = small_instance()
        ones = [np.ones(4, int)] * 2
        assert o.compression_loss(inst, ones) == 0.0
        assert o.loss_upper_bound(o.attention_rows(inst), ones, [1.0, 1.0]) == 0.0

    def test_identical_values_lose_nothing(self):
        inst = small_instance(L=1)
        inst.V[0][:] = inst.V[0][0]
        # every convex combination of identical rows is that row
        D = o.compression_loss(inst, [np.array([1, 0, 1, 0])])
        assert D == pytest.approx(0.0, abs=1e-12)

    def test_random_instance_positive_loss(self):
        inst = small_instance(seed=4)
        D = o.compression_loss(inst, [np.array([1, 0, 1, 1]), np.array([0, 1, 1, 1])])
        bound = o.loss_upper_bound(o.attention_rows(inst), [np.array([1, 0, 1, 1]), np.array([0, 1, 1, 1])], inst.constants())
        assert 0 < D <= bound

    def test_bound_formula(self):
        rows = [np.array([0.5, 0.4, 0.1])]
        assert o.loss_upper_bound(rows, [np.array([1, 1, 0])], [1.0]) == pytest.approx(0.2)
        C = 1.7
        assert o.loss_upper_bound(rows, [np.array([1, 0, 1])], [C]) == pytest.approx(2 * C * 0.4)

    def test_assumption_violation(self):
        with pytest.raises(InputError):
            o.loss_upper_bound([np.array([1.0])], [np.array([1])], [0.2])

    def test_assumptions_on_generated_instances(self):
        for r in o.verify_bound(30, 9):
            assert r.key_inf_ok and r.four_c_ok and all(4 * c > 1 for c in r.C)

    def test_single_layer_matches_first_layer_bound(self):
        for r in o.verify_bound(40, 2, L_choices=(1,)):
            assert r.L == 1 and r.D <= r.bound

    def test_keep_all_slack_exactly_zero(self):
        assert all(r.slack == 0.0 and r.D == 0.0 for r in o.verify_bound(40, 5, keep_all=True))

    def test_violation_dump(self):
        reports = o.verify_bound(20, 11)
        assert all((r.instance is None) == r.ok for r in reports)

    def test_constants_use_row_sums(self):
        inst = small_instance(seed=1, L=1)
        M = inst.V[0] @ inst.W_O[0]
        assert inst.constants()[0] == pytest.approx(np.abs(M).sum(axis=1).max())

    def test_workers_do_not_change_results(self):
        a = o.as_dicts(o.verify_bound(12, 4, workers=1))
        b = o.as_dicts(o.verify_bound(12, 4, workers=3))
        assert a == b


def enumerate_F(A, K):
    """Independent exhaustive search with plain Python sets."""
    ground = [(l, i) for l, a in enumerate(A) for i in range(len(a))]
    best = -1.0
    for combo in itertools.combinations(ground, K):
        F = 1.0
        for l, a in enumerate(A):
            F *= sum(a[i] for ll, i in combo if ll == l)
        best = max(best, F)
    return best


class TestGreedy:
    def test_brute_force_hand(self):
        F, sets = o.brute_force_best_F([[0.6, 0.4], [0.7, 0.3]], 2)
        assert F == pytest.approx(0.42) and sets == [[0], [0]]

    def test_brute_force_keep_all(self):
        A = [[0.6, 0.4], [0.7, 0.3]]
        assert o.brute_force_best_F(A, 4)[0] == pytest.approx(1.0)

    def test_pigeonhole(self):
        assert o.brute_force_best_F([[0.6, 0.4], [0.7, 0.3], [0.5, 0.5]], 2)[0] == 0.0

    def test_too_large(self):
        with pytest.raises(InputError):
            o.brute_force_best_F([np.ones(12) / 12, np.ones(12) / 12], 3)

    def test_both_strategies_hand(self):
        A = [[0.6, 0.4], [0.7, 0.3]]
        for s in ("global-topk", "marginal-gain-seeded"):
            assert o.greedy_F(A, 2, s)[0] == pytest.approx(0.42)

    def test_topk_gap_counterexample(self):
        A = [[0.5, 0.5], [0.4, 0.3, 0.3]]
        assert o.greedy_F(A, 2, "global-topk") == (0.0, [[0, 1], []])
        F, sets = o.greedy_F(A, 2, "marginal-gain-seeded")
        assert F == pytest.approx(0.2) and sets == [[0], [0]]
        assert o.brute_force_best_F(A, 2)[0] == pytest.approx(0.2)

    def test_keep_all(self):
        A = [[0.6, 0.4], [0.7, 0.3]]
        for s in ("global-topk", "marginal-gain-seeded"):
            assert o.greedy_F(A, 4, s)[1] == [[0, 1], [0, 1]]

    def test_seeded_needs_k_ge_l(self):
        with pytest.raises(InputError):
            o.greedy_F([[0.5, 0.5], [0.5, 0.5], [1.0]], 2)

    def test_single_layer_modular(self):
        rng = SplitMix64(8)
        for _ in range(20):
            A = o.random_score_rows(rng, 1, 5)
            for K in range(1, 6):
                opt = o.brute_force_best_F(A, K)[0]
                assert o.greedy_F(A, K, "global-topk")[0] == pytest.approx(opt)
                assert o.greedy_F(A, K, "marginal-gain-seeded")[0] == pytest.approx(opt)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32), st.integers(2, 3), st.integers(2, 4), st.data())
    def test_brute_force_matches_enumeration(self, seed, L, n, data):
        A = o.random_score_rows(SplitMix64(seed), L, n)
        K = data.draw(st.integers(0, L * n))
        assert o.brute_force_best_F(A, K)[0] == pytest.approx(enumerate_F(A, K), abs=1e-15)

    def test_opt_dominates(self):
        for r in o.check_near_optimality(200, 1):
            assert r.F_opt >= max(r.F_topk, r.F_greedy)

    def test_corrected_ratio_holds(self):
        assert all(r.log_ratio_ok for r in o.check_near_optimality(300, 2))

    def test_stated_ratio_only_holds_at_extremes(self):
        # for 0 < F_opt < 1, F_opt**(1-1/e) > F_opt >= F_greedy, so the stated form must fail;
        # a keep-all F_opt can round to 1 - 2**-53, where both sides agree to rounding
        for r in o.check_near_optimality(200, 3):
            if 1e-12 < r.F_opt < 1 - 1e-12:
                assert not r.ratio_ok

    def test_reports_are_deterministic(self):
        assert o.as_dicts(o.check_near_optimality(30, 4)) == o.as_dicts(o.check_near_optimality(30, 4, workers=4))


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("ARTK_THREADS", "3")
    assert o.default_workers() == 3
    monkeypatch.setenv("ARTK_THREADS", "x")
    with pytest.raises(InputError):
        o.default_workers()
