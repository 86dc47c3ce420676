import numpy as np
import pytest

import core.dynamics_continuous as dc
from core.dynamics_continuous import (
    accumulation_remainder,
    cfp_integrate,
    cfp_state_at,
    cont_no_regret_integrate,
    potential_conservation_residual,
    regret_conservation_residual,
    rescale_to_br_dynamics,
    unrescale_from_br_dynamics,
)
from core.game_core import MixedProfile
from core.strategies import LpNorm, parse_strategy
from modules.YA_Common.utils.errors import (
    PreconditionViolatedException,
    TrajectoryException,
    UsageException,
)

MP_START = ((0.7, 0.3), (0.3, 0.7))


def _within(traj, player):
    residual = regret_conservation_residual(traj)[player]
    return residual <= 1e-6 * max(1.0, float(traj.regret_max[0, player]))


def test_cfp_conserves_scaled_regret(matching_pennies):
    traj = cfp_integrate(matching_pennies, MixedProfile(*MP_START), 500.0)
    assert traj.pieces >= 2
    assert traj.horizon == pytest.approx(500.0)
    assert _within(traj, 0) and _within(traj, 1)
    np.testing.assert_allclose(traj.regret_max[-1], traj.regret_max[0] / 500.0, rtol=1e-5)


def test_cfp_on_shapley_from_random_start(shapley):
    rng = np.random.default_rng(11)
    x0 = MixedProfile(rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3)))
    traj = cfp_integrate(shapley, x0, 200.0)
    assert _within(traj, 0) and _within(traj, 1)
    assert traj.q1.shape == (traj.pieces, 3)


def test_cfp_against_scripted_opponent(matching_pennies):
    traj = cfp_integrate(
        matching_pennies,
        MixedProfile(*MP_START),
        100.0,
        opponent_path=lambda t: (0.5 + 0.4 * np.sin(t), 0.5 - 0.4 * np.sin(t)),
    )
    assert traj.diagnostics["scripted_opponent"]
    assert _within(traj, 0)


def test_cfp_state_at_breakpoints(matching_pennies):
    traj = cfp_integrate(matching_pennies, MixedProfile(*MP_START), 50.0)
    x, _ = cfp_state_at(traj, float(traj.times[1]))
    np.testing.assert_allclose(x.x1.weights, traj.x1[1], atol=1e-12)
    with pytest.raises(UsageException):
        cfp_state_at(traj, 51.0)


def test_time_rescaling(matching_pennies):
    traj = cfp_integrate(matching_pennies, MixedProfile(*MP_START), 20.0)
    tau = rescale_to_br_dynamics(traj)
    assert tau.time_scale == "tau"
    assert tau.times[0] == 0.0
    np.testing.assert_allclose(tau.original_times(), traj.times)
    assert unrescale_from_br_dynamics(tau).time_scale == "t"


def test_cfp_argument_validation(matching_pennies):
    x0 = MixedProfile(*MP_START)
    with pytest.raises(UsageException):
        cfp_integrate(matching_pennies, x0, 1.0)
    with pytest.raises(UsageException):
        cfp_integrate(matching_pennies, x0, 10.0, tie_policy="random")


def test_continuous_no_regret_decays(matching_pennies):
    spec = LpNorm(2.0)
    traj = cont_no_regret_integrate(matching_pennies, (spec, spec), np.outer(*MP_START), 1000.0)
    assert traj.diagnostics["positive_throughout"]
    assert float(traj.regret_max[-1].max()) <= 0.01
    assert max(potential_conservation_residual(traj)) <= 1e-4


def test_continuous_no_regret_preconditions(matching_pennies):
    rm = parse_strategy("rm")
    with pytest.raises(UsageException):
        cont_no_regret_integrate(matching_pennies, (rm, rm), np.outer(*MP_START), 1.0)
    with pytest.raises(UsageException):
        expw = parse_strategy("expw:0.5")
        cont_no_regret_integrate(matching_pennies, (expw, expw), np.outer(*MP_START), 10.0)
    with pytest.raises(PreconditionViolatedException):
        cont_no_regret_integrate(matching_pennies, (rm, rm), np.full((2, 2), 0.25), 10.0)


def test_potential_residual_requires_no_regret_trajectory(matching_pennies):
    traj = cfp_integrate(matching_pennies, MixedProfile(*MP_START), 5.0)
    with pytest.raises(TrajectoryException):
        potential_conservation_residual(traj)


def test_continuous_no_regret_keeps_scaled_potential_on_fig3i(fig3i):
    spec = LpNorm(2.0)
    z1 = np.outer((0.2, 0.3, 0.5), (0.2, 0.3, 0.5))
    traj = cont_no_regret_integrate(fig3i, (spec, spec), z1, 500.0)
    assert max(potential_conservation_residual(traj)) <= 1e-4
    np.testing.assert_allclose(traj.z.sum(axis=(1, 2)), 1.0, atol=1e-12)
    assert np.all(traj.x1 >= -1e-12)


def test_nonpositive_steps_are_reported(matching_pennies):
    times = np.array([1.0, 2.0, 3.0, 4.0])
    rmax = np.array([[0.1, 0.2], [0.0, 0.1], [0.05, 0.05], [0.02, -0.01]])
    report = dc._nonpositive_steps(times, rmax)
    assert report == {"count": 2, "times": [2.0, 4.0]}

    spec = LpNorm(2.0)
    traj = cont_no_regret_integrate(matching_pennies, (spec, spec), np.outer(*MP_START), 20.0)
    summary = traj.summary()
    assert summary["diagnostics"]["nonpositive_steps"] == {"count": 0, "times": []}
    assert summary["diagnostics"]["positive_throughout"]


def test_accumulation_remainder_is_geometric_tail():
    lengths = [0.5 * 0.05**k for k in range(6)]
    remaining = accumulation_remainder(lengths, window=5, ratio=0.1)
    assert sum(lengths) + remaining == pytest.approx(0.5 / 0.95, abs=1e-15)
    assert accumulation_remainder(lengths[:5], window=5, ratio=0.1) is None
    assert accumulation_remainder([1.0, 0.5, 0.25, 0.125, 0.06, 0.03], window=5, ratio=0.1) is None
    assert accumulation_remainder([1.0, 0.05, 0.0], window=1, ratio=0.1) == 0.0


def test_cfp_jumps_over_accumulating_switches(matching_pennies, monkeypatch):
    # 前六段长度按 1/20 收缩，之后一段走到终点
    seen = []

    def shrinking(m, q_own, x_opp, q_opp, t_a, t_end, root_tol):
        if t_a not in seen:
            seen.append(t_a)
        k = seen.index(t_a)
        if k < 6:
            return t_a + 0.5 * 0.05**k, True
        return t_end, False

    monkeypatch.setattr(dc, "_next_switch", shrinking)
    traj = cfp_integrate(matching_pennies, MixedProfile(*MP_START), 3.0)
    assert traj.diagnostics["accumulations"] == 1
    limit = traj.diagnostics["accumulation_times"][0]
    assert limit == pytest.approx(1.0 + 0.5 / 0.95, abs=1e-12)
    assert traj.times.size == 9
    assert traj.horizon == pytest.approx(3.0)
    np.testing.assert_allclose(traj.x1.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(traj.z.sum(axis=(1, 2)), 1.0, atol=1e-12)


def test_cfp_without_accumulation_on_shapley(shapley):
    x0 = MixedProfile((0.5, 0.3, 0.2), (0.2, 0.5, 0.3))
    traj = cfp_integrate(shapley, x0, 1000.0)
    assert traj.diagnostics["accumulations"] == 0
    assert traj.diagnostics["accumulation_times"] == []
