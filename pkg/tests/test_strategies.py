import math

import numpy as np
import pytest

from core.game_core import Game
from core.strategies import (
    BestReply,
    ConstantAction,
    CustomPotential,
    LpNorm,
    exp_weights_action,
    mixed_action,
    next_action,
    orthogonality_residual,
    parse_fallback,
    parse_strategy,
    potential_gradient,
    potential_value,
    q1_action,
    regret_matching,
    validate_potential,
)
from modules.YA_Common.utils.errors import UsageException, ZeroGradientException


def test_lp_potential_value_and_gradient():
    x = np.array([0.3, 0.1, -0.2])
    assert potential_value(LpNorm(2), x) == pytest.approx(math.sqrt(0.1))
    assert potential_value(LpNorm(3), -np.abs(x)) == 0.0
    g = potential_gradient(LpNorm(2), x)
    np.testing.assert_allclose(g, np.array([0.3, 0.1, 0.0]) / np.sqrt(0.1))


def test_lp_norm_range():
    with pytest.raises(UsageException):
        LpNorm(1.0)
    with pytest.raises(UsageException):
        LpNorm(math.inf)


def test_regret_matching_proportional():
    q = regret_matching(np.array([0.3, 0.1, -0.2]))
    np.testing.assert_allclose(q.weights, [0.75, 0.25, 0.0])


def test_lp_q1_weights():
    q = q1_action(LpNorm(3), np.array([0.2, 0.1]))
    np.testing.assert_allclose(q.weights, [0.8, 0.2])


def test_q1_zero_gradient():
    with pytest.raises(ZeroGradientException):
        q1_action(LpNorm(2), np.array([-1.0, -2.0]))


def test_next_action_fallbacks(matching_pennies):
    r = np.array([-0.1, 0.0])
    const = next_action(LpNorm(2), ConstantAction(1), r, [0.5, 0.5], matching_pennies, 1)
    np.testing.assert_allclose(const.weights, [0.0, 1.0])
    br = next_action(LpNorm(2), BestReply(), r, [0.2, 0.8], matching_pennies, 1)
    np.testing.assert_allclose(br.weights, [0.0, 1.0])


def test_mixed_action_dispatch(matching_pennies):
    rm = parse_strategy("rm")
    w, used = mixed_action(rm, ConstantAction(0), matching_pennies, 1, np.array([0.2, 0.2]), np.array([0.5, 0.5]), 5)
    np.testing.assert_allclose(w, [0.5, 0.5])
    assert not used
    w, used = mixed_action(rm, ConstantAction(1), matching_pennies, 2, np.array([-0.2, 0.0]), np.array([0.5, 0.5]), 5)
    np.testing.assert_allclose(w, [0.0, 1.0])
    assert used
    fp = parse_strategy("fp")
    w, _ = mixed_action(fp, ConstantAction(0), matching_pennies, 1, np.zeros(2), np.array([0.3, 0.7]), 5)
    np.testing.assert_allclose(w, [0.0, 1.0])


def test_exp_weights(matching_pennies):
    q = exp_weights_action(matching_pennies, 1, [0.5, 0.5], beta=10.0)
    np.testing.assert_allclose(q.weights, [0.5, 0.5])
    sharp = exp_weights_action(matching_pennies, 1, [1.0, 0.0], beta=50.0)
    assert sharp.weights[0] > 0.999
    with pytest.raises(UsageException):
        exp_weights_action(matching_pennies, 1, [0.5, 0.5], beta=-1.0)


def test_validate_lp_potentials():
    for p in (1.5, 2.0, 4.0):
        report = validate_potential(LpNorm(p), dims=3, samples=400, seed=1)
        assert report.passed
        assert report.rho2 == 1.0
        assert report.checked > 0


def test_validate_rejects_bad_custom_potential():
    # 梯度在负坐标上不为零，违反 R3
    bad = CustomPotential(
        value=lambda x: float(np.sum(np.maximum(x, 0.0) ** 2)),
        gradient=lambda x: np.full_like(x, 1.0) * (x.max() > 0),
        name="bad",
    )
    report = validate_potential(bad, dims=2, samples=200, seed=0)
    assert not report.passed
    assert report.counterexample["condition"] in ("R2", "R3")


def test_orthogonality_residual_for_any_mixture(rps):
    for q in ([1.0, 0.0, 0.0], [0.2, 0.3, 0.5]):
        assert orthogonality_residual(rps, 1, np.array(q)) <= 1e-14


def test_descriptors():
    assert parse_strategy("rm").potential == LpNorm(2.0)
    assert parse_strategy("lp:3").potential == LpNorm(3.0)
    assert parse_strategy("expw:0.5").alpha == 0.5
    assert parse_fallback("br") == BestReply()
    assert parse_fallback("const:2") == ConstantAction(2)
    for bad in ("lp:1", "expw:1.5", "foo", "lp:x"):
        with pytest.raises(UsageException):
            parse_strategy(bad)
    with pytest.raises(UsageException):
        parse_fallback("const:-1")


def _random_regrets(rng, samples):
    for _ in range(samples):
        r = rng.uniform(-2.0, 2.0, size=int(rng.integers(2, 7)))
        if r.max() > 0.0:
            yield r


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 7.0])
def test_q1_is_simplex_point_on_positive_support(p):
    rng = np.random.default_rng(20240)
    spec = LpNorm(p)
    for r in _random_regrets(rng, 10_000):
        q = q1_action(spec, r).weights
        assert q.min() >= 0.0
        assert q.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(q[r <= 0.0] == 0.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0, 100.0])
def test_q1_ignores_positive_scaling(p):
    rng = np.random.default_rng(7)
    spec = LpNorm(p)
    for r in _random_regrets(rng, 2_000):
        lam = float(10.0 ** rng.uniform(-3.0, 3.0))
        np.testing.assert_allclose(
            q1_action(spec, lam * r).weights, q1_action(spec, r).weights, rtol=0, atol=1e-12
        )


def test_regret_matching_is_normalized_positive_part():
    rng = np.random.default_rng(11)
    for r in _random_regrets(rng, 2_000):
        pos = np.maximum(r, 0.0)
        np.testing.assert_array_equal(regret_matching(r).weights, pos / pos.sum())


@pytest.mark.parametrize("shift", [-5.0, 0.25, 40.0])
def test_exp_weights_ignores_payoff_shift(shift):
    rng = np.random.default_rng(3)
    for _ in range(200):
        u1 = rng.uniform(-1.0, 1.0, size=(3, 4))
        u2 = rng.uniform(-1.0, 1.0, size=(3, 4))
        base = Game(u1, u2)
        moved = Game(u1 + shift, u2 + shift)
        beta = float(rng.uniform(0.0, 30.0))
        for player, n_opp in ((1, 4), (2, 3)):
            opp = rng.dirichlet(np.ones(n_opp))
            np.testing.assert_allclose(
                exp_weights_action(moved, player, opp, beta).weights,
                exp_weights_action(base, player, opp, beta).weights,
                rtol=0,
                atol=1e-12,
            )
