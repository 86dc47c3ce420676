import itertools

import numpy as np
import pytest

from core.catalog import build
from core.dynamics_continuous import cont_no_regret_integrate
from core.dynamics_discrete import RunConfig, run
from core.game_core import MixedProfile, reply_payoffs
from core.perturbation_analysis import (
    graph_br_distance,
    graph_inclusion_epsilon,
    interpolate,
    limit_set_estimate,
    nash_set_distance,
    payoff_perturbation_series,
    perturbation_bound_violations,
)
from core.strategies import LpNorm
from modules.YA_Common.utils.errors import TrajectoryException, UsageException


@pytest.fixture
def mp_run(matching_pennies):
    return run(matching_pennies, RunConfig.from_descriptors("rm", horizon=3000, seed=4, record_mixed=False))


def test_perturbation_bounded_by_regret(matching_pennies, mp_run):
    report = perturbation_bound_violations(matching_pennies, mp_run)
    assert report["checked"] > 0
    assert report["violations"] == 0
    assert report["first_violation"] is None


def test_perturbation_series_shape(matching_pennies, mp_run):
    series = payoff_perturbation_series(matching_pennies, mp_run)
    assert series.per_player.shape == (mp_run.periods.size, 2)
    assert np.all(series.epsilon >= 0.0)
    assert series.tail_max(10**9) == 0.0


def test_perturbation_needs_realized_actions(matching_pennies):
    traj = run(matching_pennies, RunConfig.from_descriptors("rm", horizon=50, dynamics="expected"))
    with pytest.raises(TrajectoryException):
        payoff_perturbation_series(matching_pennies, traj)


def test_graph_distance(matching_pennies):
    heads = [1.0, 0.0]
    assert graph_br_distance(matching_pennies, 1, heads, [1.0, 0.0]) == pytest.approx(0.0, abs=1e-9)
    # H 是最优反应的区域为 y_H ≥ 1/2
    assert graph_br_distance(matching_pennies, 1, heads, [0.0, 1.0]) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(UsageException):
        graph_br_distance(matching_pennies, 1, [1.0, 0.0, 0.0], [0.5, 0.5])


def test_graph_inclusion_epsilon(matching_pennies):
    eps = graph_inclusion_epsilon(matching_pennies, 1, 0.1, denominator=10)
    assert 0.0 < eps <= 2.0 * matching_pennies.payoff_bound
    with pytest.raises(UsageException):
        graph_inclusion_epsilon(matching_pennies, 1, 0.0)


def test_interpolation_of_empirical_beliefs(mp_run):
    path = interpolate(mp_run)
    assert path.max_bound_ratio <= 1.0 + 1e-9
    periods, b1, _ = mp_run.belief_path()
    x1, _ = path.at(float(periods[5]))
    np.testing.assert_allclose(x1, b1[5], atol=1e-12)
    with pytest.raises(UsageException):
        path.at(0.5)


def test_interpolation_rejects_non_averages():
    ok = interpolate(([[1.0, 0.0], [0.5, 0.5]], [[1.0, 0.0], [1.0, 0.0]]))
    assert ok.max_bound_ratio == pytest.approx(1.0)
    with pytest.raises(TrajectoryException):
        interpolate(([[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 0.0]]))


def test_limit_set_near_equilibrium(matching_pennies):
    traj = run(matching_pennies, RunConfig.from_descriptors("rm", horizon=30000, seed=0, record_mixed=False))
    report = limit_set_estimate(matching_pennies, traj)
    assert report.classification == "ne_proximal"
    assert report.ne_distances[0]["final"] <= 0.05
    assert report.hannan_distance <= 0.05
    assert report.to_dict()["distances"]["hannan"] == report.hannan_distance


def test_limit_set_of_continuous_trajectory(matching_pennies):
    rm = LpNorm(2.0)
    traj = cont_no_regret_integrate(matching_pennies, (rm, rm), np.outer((0.7, 0.3), (0.3, 0.7)), 1000.0)
    report = limit_set_estimate(matching_pennies, traj, tail_fraction=0.5)
    assert report.samples >= 20


def test_limit_set_argument_checks(matching_pennies):
    short = run(matching_pennies, RunConfig.from_descriptors("rm", horizon=10, seed=0))
    with pytest.raises(TrajectoryException):
        limit_set_estimate(matching_pennies, short)
    with pytest.raises(UsageException):
        limit_set_estimate(matching_pennies, short, tail_fraction=1.5)


def test_nash_set_distance():
    mp = build("matching_pennies")
    assert nash_set_distance(mp, MixedProfile((0.6, 0.4), (0.5, 0.5))) == pytest.approx(0.1)
    a2ex2 = build("a2ex2")
    assert nash_set_distance(a2ex2, MixedProfile((0.7, 0.3), (0.9, 0.1))) == pytest.approx(0.1)


def _beliefs(n, denominator):
    for parts in itertools.product(range(denominator + 1), repeat=n):
        if sum(parts) == denominator:
            yield np.array(parts, dtype=float) / denominator


def _best_replies(game, player, y, tol=1e-12):
    payoffs = reply_payoffs(game, player, y)
    return set(np.flatnonzero(payoffs >= payoffs.max() - tol))


@pytest.mark.parametrize("name", ["matching_pennies", "shapley", "fig1", "fig2", "rps", "fig3i"])
def test_graph_distance_below_nearest_supporting_belief(name):
    game = build(name)
    rng = np.random.default_rng(17)
    for _ in range(12):
        player = int(rng.integers(1, 3))
        n_own, n_opp = game.own_payoffs(player).shape
        support = rng.choice(n_own, size=int(rng.integers(1, n_own + 1)), replace=False)
        x = np.zeros(n_own)
        x[support] = rng.dirichlet(np.ones(support.size))
        y = rng.dirichlet(np.ones(n_opp))
        witness = min(
            (
                float(np.abs(b - y).max())
                for b in _beliefs(n_opp, 20)
                if set(support) <= _best_replies(game, player, b)
            ),
            default=1.0,
        )
        assert graph_br_distance(game, player, x, y) <= witness + 1e-9


@pytest.mark.parametrize("name", ["matching_pennies", "shapley", "rps", "fig3i", "coordination2"])
def test_graph_distance_vanishes_exactly_on_best_replies(name):
    game = build(name)
    for player in (1, 2):
        n_own, n_opp = game.own_payoffs(player).shape
        for y in _beliefs(n_opp, 10):
            replies = _best_replies(game, player, y)
            for k in range(n_own):
                d = graph_br_distance(game, player, np.eye(n_own)[k], y)
                if k in replies:
                    assert d <= 1e-10
                else:
                    assert d > 1e-10
            mixed = np.zeros(n_own)
            mixed[sorted(replies)] = 1.0 / len(replies)
            assert graph_br_distance(game, player, mixed, y) <= 1e-10
            if len(replies) < n_own:
                outside = min(set(range(n_own)) - replies)
                mixed[outside] = 1.0
                assert graph_br_distance(game, player, mixed / mixed.sum(), y) > 1e-10


@pytest.mark.parametrize("name", ["matching_pennies", "fig1", "fig2", "shapley", "fig5"])
def test_graph_inclusion_holds_on_grid(name):
    game = build(name)
    for player in (1, 2):
        n_own, n_opp = game.own_payoffs(player).shape
        previous = 0.0
        for delta in (0.01, 0.05, 0.1):
            eps = graph_inclusion_epsilon(game, player, delta, denominator=10)
            assert 0.0 < eps <= 2.0 * game.payoff_bound
            assert eps >= previous
            previous = eps
            for y in _beliefs(n_opp, 10):
                payoffs = reply_payoffs(game, player, y)
                for k in np.flatnonzero(payoffs >= payoffs.max() - eps):
                    assert graph_br_distance(game, player, np.eye(n_own)[k], y) <= delta + 1e-9
