import numpy as np
import pytest

from crosswalk_sim.core import PedestrianState, VehicleState
from crosswalk_sim.pomdp import (
    ConvergenceError,
    DiscretizedState,
    PomdpController,
    PomdpModel,
    RewardWeights,
    build_model,
    greedy_action_table,
    load_policy,
    pomdp_step,
    qmdp_solve,
    save_policy,
)


def small_model(params, geometry, gap_model, **kwargs):
    defaults = dict(n_v_bins=5, n_d_bins=11, discount=0.9)
    defaults.update(kwargs)
    return PomdpModel(params, geometry, gap_model, **defaults)


class TestModelConstruction:
    def test_transition_rows_sum_to_one(self, pomdp_model):
        p1 = pomdp_model._p_c1
        assert np.all(p1 >= 0.0) and np.all(p1 <= 1.0)
        row_sums = (1.0 - p1) + p1
        assert np.allclose(row_sums, 1.0, atol=1e-9)

    def test_stationary_fixed_point(self, pomdp_model):
        m = pomdp_model
        v0 = m.v_bin(0.0)
        a0 = m.a_bin(0.0)
        for d_bin in range(len(m.d_grid)):
            assert m._v_next_idx[v0, 0, a0] == v0
            assert m._d_next_idx[v0, d_bin, a0] == d_bin

    def test_entry_prob_peaks_near_mean_gap(self, pomdp_model):
        m = pomdp_model
        v_bin = m.v_bin(4.5)
        at_mean = m.crossing_entry_prob(m.d_bin(4.0 * 4.5 - 5.0), v_bin)
        at_eight = m.crossing_entry_prob(m.d_bin(8.0 * 4.5 - 5.0), v_bin)
        assert at_mean > at_eight

    def test_exit_prob_matches_crossing_time(self, pomdp_model, geometry, gap_model):
        expected = pomdp_model.dt / (geometry.roadway_width / gap_model.walk_speed)
        assert pomdp_model.crossing_exit_prob == pytest.approx(expected)

    def test_grid_validation(self, params, geometry, gap_model):
        with pytest.raises(ValueError):
            PomdpModel(params, geometry, gap_model, dt=0.0)
        with pytest.raises(ValueError):
            PomdpModel(params, geometry, gap_model, discount=1.0)
        with pytest.raises(ValueError):
            PomdpModel(params, geometry, gap_model, n_d_bins=1)
        with pytest.raises(ValueError):
            PomdpModel(params, geometry, gap_model, d_range=(10.0, -10.0))
        with pytest.raises(ValueError):
            PomdpModel(params, geometry, gap_model, actions=(-20.0, 0.0))

    def test_build_model_passes_overrides(self, params, geometry, gap_model):
        m = build_model(params, geometry, gap_model, n_v_bins=7, discount=0.8)
        assert len(m.v_grid) == 7 and m.discount == 0.8

    def test_state_index_bijection(self, pomdp_model):
        m = pomdp_model
        seen = set()
        for i in range(m.n_states):
            s = DiscretizedState.from_index(i, m)
            assert s.index(m) == i
            seen.add((s.v_bin, s.c, s.d_bin, s.a_prev_bin))
        assert len(seen) == m.n_states


class TestRewardShape:
    def test_no_penalty_at_cruise(self, pomdp_model):
        m = pomdp_model
        s = DiscretizedState(m.v_bin(4.5), False, m.d_bin(30.0), m.a_bin(0.0))
        assert m.reward(s, m.a_bin(0.0)) == 0.0

    def test_crossing_at_speed_is_penalized(self, pomdp_model):
        m = pomdp_model
        s = DiscretizedState(m.v_bin(4.5), True, m.d_bin(3.0), m.a_bin(0.0))
        assert m.reward(s, m.a_bin(0.0)) < -50.0

    def test_smoothness_monotone_in_accel_change(self, pomdp_model):
        m = pomdp_model
        s = DiscretizedState(m.v_bin(4.5), False, m.d_bin(30.0), m.a_bin(0.0))
        r_small = m.reward(s, m.a_bin(-1.0))
        r_large = m.reward(s, m.a_bin(-4.0))
        assert r_large < r_small < 0.0


class TestSolver:
    def test_converges_below_tol(self, solved_policy):
        assert solved_policy.residuals[-1] < 1e-6
        assert np.all(np.isfinite(solved_policy.q))

    def test_residuals_non_increasing_after_first(self, solved_policy):
        res = solved_policy.residuals
        assert all(res[i + 1] <= res[i] + 1e-12 for i in range(1, len(res) - 1))

    def test_zero_discount_gives_reward(self, params, geometry, gap_model):
        m = small_model(params, geometry, gap_model, discount=0.0)
        table = qmdp_solve(m, tol=1e-9)
        assert np.array_equal(table.q, m.reward_table)

    def test_zero_reward_gives_zero_q(self, params, geometry, gap_model):
        m = small_model(params, geometry, gap_model, weights=RewardWeights(0, 0, 0, 0))
        table = qmdp_solve(m)
        assert np.all(table.q == 0.0)

    def test_non_convergence_raises(self, params, geometry, gap_model):
        m = small_model(params, geometry, gap_model, discount=0.99)
        with pytest.raises(ConvergenceError) as err:
            qmdp_solve(m, tol=1e-12, max_iters=3)
        assert err.value.residual > 0.0

    def test_weight_rescaling_preserves_policy(self, params, geometry, gap_model):
        m1 = small_model(params, geometry, gap_model)
        m2 = small_model(
            params, geometry, gap_model, weights=RewardWeights().scaled(3.7)
        )
        g1 = greedy_action_table(m1, qmdp_solve(m1))
        g2 = greedy_action_table(m2, qmdp_solve(m2))
        assert np.array_equal(g1, g2)

    def test_actions_within_limits(self, pomdp_model, params):
        assert pomdp_model.a_grid.min() >= -params.a_max
        assert pomdp_model.a_grid.max() <= params.a_cmf


class TestPolicy:
    def test_cruise_far_from_crosswalk(self, pomdp_model, solved_policy):
        v = VehicleState(d=44.0, v=4.5, x_v=1.75)
        p = PedestrianState(x_p=-2.5, xdot_p=0.0)
        a, _ = pomdp_step(solved_policy, pomdp_model, v, p, pomdp_model.a_bin(0.0))
        assert a == 0.0

    def test_brakes_for_crossing_pedestrian(self, pomdp_model, solved_policy):
        v = VehicleState(d=15.0, v=4.5, x_v=1.75)
        p = PedestrianState(x_p=2.0, xdot_p=1.2)
        a, _ = pomdp_step(solved_policy, pomdp_model, v, p, pomdp_model.a_bin(0.0))
        assert a < 0.0

    def test_lookup_is_pure(self, pomdp_model, solved_policy):
        v = VehicleState(d=12.0, v=3.0, x_v=1.75)
        p = PedestrianState(x_p=1.0, xdot_p=1.2)
        first = pomdp_step(solved_policy, pomdp_model, v, p, 2)
        assert all(
            pomdp_step(solved_policy, pomdp_model, v, p, 2) == first for _ in range(5)
        )

    def test_out_of_grid_clamps(self, pomdp_model, solved_policy):
        v = VehicleState(d=500.0, v=20.0, x_v=1.75)
        p = PedestrianState(x_p=-2.5, xdot_p=0.0)
        a, idx = pomdp_step(solved_policy, pomdp_model, v, p, 0)
        assert a in pomdp_model.a_grid

    def test_controller_holds_between_decisions(self, pomdp_model, solved_policy):
        ctrl = PomdpController(pomdp_model, solved_policy, sim_dt=0.05)
        assert ctrl.hold_ticks == 5
        v = VehicleState(d=30.0, v=4.5, x_v=1.75)
        p = PedestrianState(x_p=-2.5, xdot_p=0.0)
        commands = [ctrl.step(v, p) for _ in range(10)]
        assert len(set(commands[:5])) == 1
        ctrl.reset()
        assert ctrl._tick == 0

    def test_tie_break_prefers_small_accel(self, pomdp_model, solved_policy):
        q = np.zeros_like(solved_policy.q)
        from crosswalk_sim.pomdp import QTable

        flat = QTable(q=q)
        greedy = greedy_action_table(pomdp_model, flat)
        zero_idx = pomdp_model.a_bin(0.0)
        assert np.all(greedy == zero_idx)


class TestSerialization:
    def test_roundtrip(self, tmp_path, pomdp_model, solved_policy):
        path = tmp_path / "policy.npz"
        save_policy(path, pomdp_model, solved_policy)
        loaded = load_policy(path, pomdp_model)
        assert loaded is not None
        assert np.array_equal(loaded.q, solved_policy.q)

    def test_key_mismatch_rejected(self, tmp_path, params, geometry, gap_model, pomdp_model, solved_policy):
        path = tmp_path / "policy.npz"
        save_policy(path, pomdp_model, solved_policy)
        other = PomdpModel(
            params, geometry, gap_model, weights=RewardWeights(w_safety=99.0)
        )
        assert load_policy(path, other) is None

    def test_missing_file(self, tmp_path, pomdp_model):
        assert load_policy(tmp_path / "nope.npz", pomdp_model) is None
