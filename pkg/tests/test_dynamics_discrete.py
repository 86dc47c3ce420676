import math

import numpy as np
import pytest

from core.dynamics_discrete import (
    InitialCondition,
    RngStream,
    RunConfig,
    dfp_regret_floor,
    initial_state,
    orthogonality_residuals,
    q2_constancy_drift,
    run,
    run_batch,
    sample_action,
    schedule_periods,
    sign_persistence_violations,
    step_dfp,
    step_expected,
    step_no_regret,
)
from core.strategies import BestReply, ConstantAction, parse_strategy
from modules.YA_Common.utils.errors import UsageException

ETA = math.sqrt(2) / (1 + math.sqrt(2))


def _final_regret(traj):
    return max(traj.final.regret_max)


def test_schedule_periods():
    assert schedule_periods(1, 10, "every").tolist() == list(range(1, 11))
    assert schedule_periods(1, 10, 2.0).tolist() == [1, 2, 4, 8, 10]
    assert schedule_periods(1, 10, [0, 3, 5, 20]).tolist() == [1, 3, 5, 10]
    assert schedule_periods(5, 5, 1.1).tolist() == [5]
    with pytest.raises(UsageException):
        schedule_periods(1, 10, 1.0)
    with pytest.raises(UsageException):
        schedule_periods(10, 5, 1.1)


def test_sample_action_inverse_cdf():
    q = np.array([0.2, 0.5, 0.3])
    assert sample_action(q, 0.0) == 0
    assert sample_action(q, 0.19) == 0
    assert sample_action(q, 0.25) == 1
    assert sample_action(q, 0.999999) == 2


def test_rng_stream_is_reproducible():
    a = RngStream(7, 3).uniforms(block=16)
    b = RngStream(7, 3).uniforms(block=4)
    assert [a.next() for _ in range(20)] == [b.next() for _ in range(20)]
    assert RngStream(7, 4).uniforms().next() != RngStream(7, 3).uniforms().next()


def test_initial_conditions(fig1):
    ic = InitialCondition.from_history([(0, 1), (1, 0), (0, 1)], fig1.shape)
    state = initial_state(fig1, ic)
    assert state.t == 3
    np.testing.assert_allclose(state.z.weights, [[0.0, 2 / 3], [1 / 3, 0.0]])
    with pytest.raises(UsageException):
        initial_state(fig1, InitialCondition())
    with pytest.raises(UsageException):
        InitialCondition.from_counts(np.zeros((2, 2)))
    dist = initial_state(fig1, InitialCondition.from_distribution(np.full((2, 2), 0.25), 10))
    assert dist.t == 10


def test_single_steps_keep_state_consistent(matching_pennies):
    specs = (parse_strategy("rm"), parse_strategy("rm"))
    fallbacks = (ConstantAction(0), ConstantAction(0))
    state = initial_state(matching_pennies, InitialCondition.at_profile(0, 1, (2, 2)))
    nxt = step_no_regret(matching_pennies, specs, fallbacks, state, RngStream(1))
    assert nxt.t == 2
    assert nxt.z.weights.sum() == pytest.approx(1.0)
    expected = step_expected(matching_pennies, specs, fallbacks, state)
    assert expected.t == 2
    dfp = step_dfp(matching_pennies, state)
    # 玩家 1 对 T 的最优反应为 T，玩家 2 对 H 的最优反应为 T
    assert dfp.last_realized == (1, 1)


def test_run_is_deterministic(matching_pennies):
    config = RunConfig.from_descriptors("rm", horizon=2000, seed=3)
    a = run(matching_pennies, config)
    b = run(matching_pennies, config)
    np.testing.assert_array_equal(a.actions, b.actions)
    np.testing.assert_array_equal(a.final.z, b.final.z)
    other = run(matching_pennies, RunConfig.from_descriptors("rm", horizon=2000, seed=3, stream=1))
    assert not np.array_equal(a.actions, other.actions)


def test_snapshots_follow_schedule(shapley):
    config = RunConfig.from_descriptors("rm", horizon=500, seed=0, schedule=1.5)
    traj = run(shapley, config)
    expected = schedule_periods(traj.t0, 500, 1.5)
    assert [s.t for s in traj.snapshots] == expected.tolist()
    assert traj.actions.shape == (500 - traj.t0, 2)


def test_regret_matching_converges_on_matching_pennies(matching_pennies):
    traj = run(matching_pennies, RunConfig.from_descriptors("rm", horizon=20000, seed=0))
    assert _final_regret(traj) <= 0.1


def test_belief_path_matches_snapshots(shapley):
    traj = run(shapley, RunConfig.from_descriptors("lp:3", horizon=300, seed=2))
    periods, b1, b2 = traj.belief_path()
    assert periods[-1] == 300
    np.testing.assert_allclose(b1[-1], traj.final.beliefs[0], atol=1e-12)
    np.testing.assert_allclose(b2[-1], traj.final.beliefs[1], atol=1e-12)


def test_step_level_identities(shapley):
    traj = run(
        shapley,
        RunConfig.from_descriptors("rm", horizon=3000, seed=5, debug_checks=True, recompute_every=500),
    )
    assert orthogonality_residuals(shapley, traj).max() <= 1e-12
    assert sign_persistence_violations(traj) == (0, 0)
    assert q2_constancy_drift(shapley, traj, 1, 0) <= 1e-10
    assert traj.diagnostics["recompute_drift_max"] <= 1e-9


def test_expected_dynamics_has_no_realized_actions(fig3i):
    traj = run(fig3i, RunConfig.from_descriptors("rm", horizon=200, dynamics="expected", seed=0))
    assert not traj.has_actions
    assert np.all(traj.actions == -1)
    periods, b1, _ = traj.belief_path()
    assert b1.shape == (periods.size, 3)


def test_dfp_regret_lock_in(fig1):
    config = RunConfig.from_descriptors(
        "fp",
        horizon=2000,
        dynamics="dfp",
        initial=InitialCondition.at_profile(0, 1, fig1.shape),
        record_mixed=False,
    )
    traj = run(fig1, config)
    assert dfp_regret_floor(traj) >= ETA - 1e-6


def test_exponential_weights_and_best_reply_fallback(rps):
    config = RunConfig.from_descriptors(
        "expw:0.5", horizon=500, seed=1, fallbacks=(BestReply(), BestReply())
    )
    traj = run(rps, config)
    assert traj.descriptors == ("expw:0.5", "expw:0.5")
    assert not traj.fallback_used.any()


def test_run_validation(fig1):
    with pytest.raises(UsageException):
        run(fig1, RunConfig.from_descriptors("rm", horizon=10, dynamics="bogus"))
    with pytest.raises(UsageException):
        run(fig1, RunConfig.from_descriptors("rm", horizon=10, tie_rule="coin"))
    with pytest.raises(UsageException):
        run(fig1, RunConfig.from_descriptors("rm", horizon=0))


def test_run_batch_sequential_with_reducer(matching_pennies):
    config = RunConfig.from_descriptors("rm", horizon=300, seed=9, record_mixed=False)
    values = run_batch(matching_pennies, config, runs=3, reducer=_final_regret, workers=1)
    assert len(values) == 3
    single = run(matching_pennies, RunConfig.from_descriptors("rm", horizon=300, seed=9, stream=2, record_mixed=False))
    assert values[2] == _final_regret(single)
    with pytest.raises(UsageException):
        run_batch(matching_pennies, config, runs=0)
