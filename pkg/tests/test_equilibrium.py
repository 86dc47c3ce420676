import math

import numpy as np
import pytest

from core.catalog import build, list_entries
from core.equilibrium import (
    CurbSet,
    curb_attraction_experiment,
    curb_constants,
    curb_enumerate,
    delta_B,
    delta_B_grid,
    distance_to_H_B,
    distance_to_hannan,
    gamma_B,
    hannan_face_point,
    in_U_gamma,
    is_curb,
    nash_support_enumeration,
    positive_regret_support_check,
    rho_of_gamma,
    strict_dominance_eliminate,
    wilson_interval,
)
from core.game_core import Game, reply_payoffs
from core.strategies import LpNorm, parse_strategy
from modules.YA_Common.utils.errors import (
    OversizedGameException,
    PreconditionViolatedException,
    UsageException,
)

RM = LpNorm(2.0)
TOP = CurbSet((0,), (0,))


def test_matching_pennies_has_uniform_equilibrium(matching_pennies):
    eqs = nash_support_enumeration(matching_pennies)
    assert len(eqs) == 1
    np.testing.assert_allclose(eqs[0].as_vector(), [0.5, 0.5, 0.5, 0.5], atol=1e-9)


def test_fig1_has_two_pure_and_one_mixed_equilibrium(fig1):
    eqs = nash_support_enumeration(fig1)
    assert len(eqs) == 3
    np.testing.assert_allclose(eqs[0].as_vector(), [1, 0, 1, 0], atol=1e-9)
    np.testing.assert_allclose(eqs[1].as_vector(), [0, 1, 0, 1], atol=1e-9)
    eta = math.sqrt(2) / (1 + math.sqrt(2))
    np.testing.assert_allclose(eqs[2].x1.weights, [1 - eta, eta], atol=1e-9)
    np.testing.assert_allclose(eqs[2].x2.weights, [eta, 1 - eta], atol=1e-9)


def test_shapley_equilibrium_is_uniform(shapley):
    eqs = nash_support_enumeration(shapley)
    assert len(eqs) == 1
    np.testing.assert_allclose(eqs[0].as_vector(), np.full(6, 1 / 3), atol=1e-9)


def test_oversized_game_is_rejected():
    big = Game(np.zeros((13, 2)), np.zeros((13, 2)))
    with pytest.raises(OversizedGameException):
        nash_support_enumeration(big)


def test_dominance_elimination_on_fig3i(fig3i):
    result = strict_dominance_eliminate(fig3i)
    assert result.survivors == ((0,), (0,))
    assert len(result.order) == 4
    assert result.order[0] == {"player": 1, "action": "C", "kind": "pure", "by": "B"}
    assert result.game.shape == (1, 1)
    assert result.to_dict(fig3i)["survivors"] == [["A"], ["A"]]


def test_mixed_dominance():
    # 第三行不被任何纯行占优，但被前两行的 (1/2, 1/2) 混合严格占优
    u1 = np.array([[3.0, 0.0], [0.0, 3.0], [1.0, 1.0]])
    game = Game(u1, np.zeros_like(u1))
    result = strict_dominance_eliminate(game)
    assert result.order[0]["kind"] == "mixed"
    assert result.survivors[0] == (0, 1)
    pure_only = strict_dominance_eliminate(game, allow_mixed=False)
    assert pure_only.survivors[0] == (0, 1, 2)


def test_curb_enumeration(fig3i):
    sym = curb_enumerate(fig3i, symmetric=True)
    assert [(c.B1, c.B2) for c in sym] == [((0,), (0,)), ((0, 1), (0, 1)), ((0, 1, 2), (0, 1, 2))]
    assert sym[-1].is_full(fig3i)
    assert all(v > 0 for v in sym[0].certificate[1].values())
    everything = curb_enumerate(fig3i)
    assert len(everything) > len(sym)
    assert is_curb(fig3i, (0,), (0,)) is not None
    assert is_curb(fig3i, (1,), (1,)) is None


def test_curb_rejects_empty_part():
    with pytest.raises(UsageException):
        CurbSet((), (0,))


def test_delta_and_gamma(fig3i):
    assert delta_B(fig3i, TOP) == pytest.approx(1.0, abs=1e-9)
    # l_2 下 ρ(γ) = γ，根为 δ/(2Ū + δ + 1)，Ū = 4
    assert gamma_B(fig3i, TOP, RM) == pytest.approx(0.1, abs=1e-10)
    constants = curb_constants(fig3i, TOP, RM)
    assert constants.U_bound == 4.0
    assert constants.rho(0.05, RM) == 0.05
    with pytest.raises(PreconditionViolatedException):
        gamma_B(fig3i, ((0, 1, 2), (0, 1, 2)), RM)


def test_rho_of_gamma():
    assert rho_of_gamma(RM, 0.0) == 0.0
    assert rho_of_gamma(LpNorm(3.0), 0.2) == 0.2
    with pytest.raises(UsageException):
        rho_of_gamma(RM, -0.1)


def test_hannan_face_and_distances(fig3i, matching_pennies):
    w = hannan_face_point(fig3i, TOP).weights
    assert w[0, 0] == pytest.approx(1.0)
    assert distance_to_H_B(fig3i, TOP, w) == pytest.approx(0.0, abs=1e-9)
    assert distance_to_hannan(matching_pennies, np.full((2, 2), 0.25)) == pytest.approx(0.0, abs=1e-9)
    assert distance_to_hannan(matching_pennies, [[1.0, 0.0], [0.0, 0.0]]) > 0.1


def test_u_gamma_membership(fig3i):
    point = np.zeros((3, 3))
    point[0, 0] = 1.0
    assert in_U_gamma(fig3i, TOP, RM, point, 0.05)
    assert not in_U_gamma(fig3i, TOP, RM, np.full((3, 3), 1 / 9), 0.05)
    with pytest.raises(UsageException):
        in_U_gamma(fig3i, TOP, RM, point, 0.0)


def test_positive_regret_stays_inside_curb(fig3i):
    report = positive_regret_support_check(fig3i, ((0, 1), (0, 1)), RM, samples=100, seed=3)
    assert report["accepted"] > 0
    assert report["violations"] == []


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 10)[0] == 0.0
    with pytest.raises(UsageException):
        wilson_interval(0, 0)


CATALOG = [entry["name"] for entry in list_entries()]


def _catalog_curbs():
    for name in CATALOG:
        game = build(name)
        for curb in curb_enumerate(game):
            if not curb.is_full(game):
                yield game, curb


@pytest.mark.parametrize("name", CATALOG)
def test_dominance_elimination_ignores_player_order(name):
    game = build(name)
    forward = strict_dominance_eliminate(game, player_order=(1, 2))
    backward = strict_dominance_eliminate(game, player_order=(2, 1))
    assert forward.survivors == backward.survivors


@pytest.mark.parametrize("name", CATALOG)
def test_every_equilibrium_has_no_positive_regret(name):
    game = build(name)
    for profile in nash_support_enumeration(game):
        for player in (1, 2):
            own = profile.player(player).weights
            payoffs = reply_payoffs(game, player, profile.player(3 - player).weights)
            assert payoffs.max() - own @ payoffs <= 1e-9


def test_curb_vertices_only_reply_inside():
    for game, curb in _catalog_curbs():
        for player in (1, 2):
            m = game.own_payoffs(player)
            for b in curb.part(3 - player):
                column = m[:, b]
                replies = np.flatnonzero(column >= column.max() - 1e-12)
                assert set(replies) <= set(curb.part(player)), (game.name, curb.B1, curb.B2)


def test_delta_lp_agrees_with_grid():
    for game, curb in _catalog_curbs():
        lp = delta_B(game, curb)
        grid = delta_B_grid(game, curb, denominator=64)
        slack = 4.0 * game.payoff_bound / 64
        assert grid - slack - 1e-9 <= lp <= grid + 1e-9, (game.name, curb.B1, curb.B2)


@pytest.mark.parametrize("spec", [RM, LpNorm(3.0)])
def test_gamma_below_simple_bound(spec):
    for game, curb in _catalog_curbs():
        delta = delta_B(game, curb)
        assert delta > 0
        gamma = gamma_B(game, curb, spec, delta)
        assert 0 < gamma < delta / (2.0 * game.payoff_bound + delta)


def test_coordination_constants():
    game = build("coordination2")
    assert delta_B(game, TOP) == pytest.approx(1.0, abs=1e-9)
    assert gamma_B(game, TOP, RM) == pytest.approx(0.25, abs=1e-10)


def test_attraction_stays_in_strict_equilibrium():
    game = build("coordination2")
    rm = parse_strategy("rm")
    report = curb_attraction_experiment(game, TOP, (rm, rm), t0=50, T=200, runs=4, gamma=0.2, workers=1)
    assert report["stay_frequency"] == 1.0
    assert report["construction_failures"] == 0
    assert report["runs_completed"] == 4
    assert report["parameters"]["gamma_B"] == pytest.approx(0.25, abs=1e-10)
    assert report["ci_low"] < 1.0
    assert report["ci_high"] == pytest.approx(1.0)


def test_attraction_full_set_always_stays():
    game = build("coordination2")
    rm = parse_strategy("rm")
    full = CurbSet((0, 1), (0, 1))
    report = curb_attraction_experiment(game, full, (rm, rm), t0=20, T=60, runs=3, gamma=5.0, workers=1)
    assert report["stay_frequency"] == 1.0
    assert report["parameters"]["gamma_B"] is None


def test_attraction_requires_gamma_below_threshold():
    game = build("coordination2")
    rm = parse_strategy("rm")
    with pytest.raises(PreconditionViolatedException):
        curb_attraction_experiment(game, TOP, (rm, rm), t0=50, T=200, runs=2, gamma=0.25, workers=1)
    with pytest.raises(UsageException):
        curb_attraction_experiment(game, TOP, (rm, rm), t0=200, T=200, runs=2, gamma=0.2, workers=1)


def test_attraction_counts_construction_failures(matching_pennies):
    # 单步历史总有一方的遗憾为 2，不在 U_γ 中
    rm = parse_strategy("rm")
    full = CurbSet((0, 1), (0, 1))
    report = curb_attraction_experiment(
        matching_pennies, full, (rm, rm), t0=1, T=5, runs=3, gamma=0.5, kappa=1.0, workers=1
    )
    assert report["construction_failures"] == 3
    assert report["runs_completed"] == 0
    assert report["stay_frequency"] is None
