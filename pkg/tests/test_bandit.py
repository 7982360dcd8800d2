import numpy as np
import pytest

from rbindex import (MarginalMeasures, ModelError, RestlessBandit,
                     check_active_set, evaluate_policy, marginal_measures,
                     partition_states, resolve_max_states)
from conftest import random_restless


def two_state(beta=0.9):
    return RestlessBandit([0.0, 0.0], [1.0, 0.5], [0.0, 0.0], [1.0, 1.0],
                          [[1.0, 0.0], [0.0, 1.0]],
                          [[0.0, 1.0], [1.0, 0.0]], beta)


class TestValidation:
    def test_row_sum_violation_names_the_row(self):
        with pytest.raises(ModelError, match="trans1 row 2"):
            RestlessBandit([0, 0], [1, 1], [0, 0], [1, 1],
                           [[1, 0], [0, 1]], [[1, 0], [0.3, 0.3]], 0.9)

    def test_negative_transition_entry(self):
        with pytest.raises(ModelError, match="negative"):
            RestlessBandit([0, 0], [1, 1], [0, 0], [1, 1],
                           [[1, 0], [0, 1]], [[1.5, -0.5], [0, 1]], 0.9)

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.7])
    def test_discount_outside_open_interval(self, beta):
        with pytest.raises(ModelError, match="beta"):
            two_state(beta=beta)

    def test_work_ordering_enforced(self):
        with pytest.raises(ModelError, match="work"):
            RestlessBandit([0, 0], [1, 1], [0.5, 0.5], [0.2, 1.0],
                           [[1, 0], [0, 1]], [[0, 1], [1, 0]], 0.9)
        with pytest.raises(ModelError, match="work"):
            RestlessBandit([0, 0], [1, 1], [-0.1, 0.0], [1.0, 1.0],
                           [[1, 0], [0, 1]], [[0, 1], [1, 0]], 0.9)

    def test_shape_mismatch(self):
        with pytest.raises(ModelError, match="reward1"):
            RestlessBandit([0, 0], [1, 1, 1], [0, 0], [1, 1],
                           [[1, 0], [0, 1]], [[0, 1], [1, 0]], 0.9)

    def test_init_dist_must_be_positive_and_normalized(self):
        with pytest.raises(ModelError, match="positive"):
            RestlessBandit([0, 0], [1, 1], [0, 0], [1, 1],
                           [[1, 0], [0, 1]], [[0, 1], [1, 0]], 0.9,
                           init_dist=[1.0, 0.0])
        with pytest.raises(ModelError, match="sums"):
            RestlessBandit([0, 0], [1, 1], [0, 0], [1, 1],
                           [[1, 0], [0, 1]], [[0, 1], [1, 0]], 0.9,
                           init_dist=[0.6, 0.6])

    def test_default_init_dist_uniform(self):
        b = two_state()
        np.testing.assert_array_equal(b.init_dist, [0.5, 0.5])

    def test_arrays_frozen(self):
        b = two_state()
        with pytest.raises(ValueError):
            b.trans1[0, 0] = 5.0


class TestPartition:
    def test_identical_action_state_is_uncontrollable(self):
        b = RestlessBandit([0, 0], [1, 0], [0, 0], [1, 0],
                           [[1, 0], [0, 1]], [[0, 1], [0, 1]], 0.9)
        part = partition_states(b)
        assert part.uncontrollable == frozenset({1})
        assert part.controllable == (0,)
        assert part.n_controllable == 1

    def test_tolerance_absorbs_tiny_differences(self):
        eps = 5e-10
        b = RestlessBandit([0.0], [eps], [0.0], [eps],
                           [[1.0]], [[1.0]], 0.9)
        assert partition_states(b).uncontrollable == frozenset({0})

    def test_active_set_may_not_touch_uncontrollable_states(self):
        b = RestlessBandit([0, 0], [1, 0], [0, 0], [1, 0],
                           [[1, 0], [0, 1]], [[0, 1], [0, 1]], 0.9)
        with pytest.raises(ModelError, match="uncontrollable state"):
            check_active_set(b, {1})
        with pytest.raises(ModelError, match="out of range"):
            check_active_set(b, {5})
        assert check_active_set(b, [0]) == frozenset({0})


class TestEvaluatePolicy:
    def test_passive_identity_chain_is_geometric(self):
        b = RestlessBandit([2.0, 1.0], [9.0, 9.0], [0.0, 0.0], [1.0, 1.0],
                           [[1, 0], [0, 1]], [[0, 1], [1, 0]], 0.5)
        pv = evaluate_policy(b, frozenset())
        np.testing.assert_allclose(pv.f_per_state, [4.0, 2.0], rtol=1e-12)
        np.testing.assert_allclose(pv.g_per_state, [0.0, 0.0], atol=1e-15)
        assert pv.f_agg == pytest.approx(3.0, rel=1e-12)

    def test_fixed_point_identity_on_random_models(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            b = random_restless(rng, n, float(rng.uniform(0.2, 0.95)))
            s = frozenset(int(i) for i in np.flatnonzero(rng.random(n) < 0.5))
            pv = evaluate_policy(b, s)
            sel = np.zeros(n, dtype=bool)
            sel[list(s)] = True
            p_pol = np.where(sel[:, None], b.trans1, b.trans0)
            r_pol = np.where(sel, b.reward1, b.reward0)
            q_pol = np.where(sel, b.work1, b.work0)
            np.testing.assert_allclose(
                pv.f_per_state, r_pol + b.beta * p_pol @ pv.f_per_state,
                rtol=0, atol=1e-10)
            np.testing.assert_allclose(
                pv.g_per_state, q_pol + b.beta * p_pol @ pv.g_per_state,
                rtol=0, atol=1e-10)
            assert pv.f_agg == pytest.approx(
                float(b.init_dist @ pv.f_per_state), abs=1e-12)

    def test_aggregate_follows_init_dist(self):
        spec = dict(reward0=[0, 0], reward1=[1.0, 0.5], work0=[0, 0],
                    work1=[1, 1], trans0=[[1, 0], [0, 1]],
                    trans1=[[0, 1], [1, 0]], beta=0.9)
        b1 = RestlessBandit(**spec)
        b2 = RestlessBandit(**spec, init_dist=[0.9, 0.1])
        pv1 = evaluate_policy(b1, {0, 1})
        pv2 = evaluate_policy(b2, {0, 1})
        np.testing.assert_array_equal(pv1.f_per_state, pv2.f_per_state)
        assert pv1.f_agg != pv2.f_agg


class TestMarginalMeasures:
    def test_empty_set_ratios_reduce_to_active_rewards(self, inst_pcl_pass):
        # zero passive reward and work make f and g vanish under never-act
        mm = marginal_measures(inst_pcl_pass, frozenset())
        np.testing.assert_allclose(mm.w, np.ones(3), rtol=1e-12)
        np.testing.assert_allclose(mm.nu, inst_pcl_pass.reward1, rtol=1e-12)

    def test_uncontrollable_states_carry_exact_zeros(self):
        b = RestlessBandit([0, 0.3], [1, 0.3], [0, 0.7], [1, 0.7],
                           [[1, 0], [0.2, 0.8]], [[0, 1], [0.2, 0.8]], 0.9)
        mm = marginal_measures(b, frozenset())
        assert mm.w[1] == 0.0 and mm.r[1] == 0.0
        assert np.isnan(mm.nu[1])

    def test_zero_marginal_work_yields_nan_ratio(self):
        # equal work rates plus a flat committed-work vector cancel exactly
        b = RestlessBandit([0, 0], [1, 0], [1, 1], [1, 1],
                           [[1, 0], [0, 1]], [[0, 1], [0, 1]], 0.9)
        mm = marginal_measures(b, frozenset())
        assert mm.w[0] == pytest.approx(0.0, abs=1e-12)
        assert np.isnan(mm.nu[0])

    def test_definition_recovered_from_policy_values(self):
        rng = np.random.default_rng(3)
        b = random_restless(rng, 4, 0.8)
        s = frozenset({1, 3})
        pv = evaluate_policy(b, s)
        mm = marginal_measures(b, s)
        for i in range(4):
            dp = b.trans1[i] - b.trans0[i]
            assert mm.w[i] == pytest.approx(
                b.work1[i] - b.work0[i] + b.beta * dp @ pv.g_per_state,
                rel=1e-12)
            assert mm.r[i] == pytest.approx(
                b.reward1[i] - b.reward0[i] + b.beta * dp @ pv.f_per_state,
                rel=1e-12)
        ok = np.abs(mm.w) > 1e-12
        np.testing.assert_allclose(mm.nu[ok], mm.r[ok] / mm.w[ok], rtol=1e-15)


def test_resolve_max_states_env_override(monkeypatch):
    monkeypatch.delenv("RB_MPI_MAX_STATES", raising=False)
    assert resolve_max_states() == 20
    monkeypatch.setenv("RB_MPI_MAX_STATES", "11")
    assert resolve_max_states() == 11
    assert resolve_max_states(4) == 4
