import numpy as np
import pytest

from core.game_core import (
    Game,
    HannanClass,
    JointDistribution,
    MixedAction,
    MixedProfile,
    best_replies,
    duality_gap,
    expected_payoff,
    hannan_status,
    marginals,
    product_distribution,
    pure_profile_index,
    regret_vector,
    sup_distance,
    update_average,
)
from core.catalog import build
from modules.YA_Common.utils.errors import (
    DimensionMismatchException,
    InvalidDistributionException,
    UsageException,
)


def test_game_rejects_mismatched_tables():
    with pytest.raises(DimensionMismatchException):
        Game(np.zeros((2, 2)), np.zeros((2, 3)))


def test_default_labels_and_bound(fig3i):
    g = Game([[1.0, -3.0]], [[0.5, 2.0]])
    assert g.labels_1 == ("0",)
    assert g.labels_2 == ("0", "1")
    assert g.payoff_bound == 3.0
    assert fig3i.payoff_bound == 4.0


def test_payoff_arrays_are_read_only(fig3i):
    with pytest.raises(ValueError):
        fig3i.payoff_1[0, 0] = 5.0


def test_distribution_validation():
    with pytest.raises(InvalidDistributionException):
        MixedAction(np.array([0.5, 0.6]))
    with pytest.raises(InvalidDistributionException):
        JointDistribution(np.array([[1.5, -0.5], [0.0, 0.0]]))


def test_expected_payoff_uniform_matching_pennies(matching_pennies, uniform_z):
    assert expected_payoff(matching_pennies, uniform_z((2, 2))) == (0.0, 0.0)


def test_expected_payoff_dimension_check(matching_pennies):
    with pytest.raises(DimensionMismatchException):
        expected_payoff(matching_pennies, np.full((3, 3), 1 / 9))


def test_marginals_and_product():
    z = np.array([[0.1, 0.2], [0.3, 0.4]])
    m = marginals(z)
    np.testing.assert_allclose(m.x1.weights, [0.3, 0.7])
    np.testing.assert_allclose(m.x2.weights, [0.4, 0.6])
    prod = product_distribution(MixedProfile([0.5, 0.5], [0.25, 0.75]))
    np.testing.assert_allclose(prod.weights, [[0.125, 0.375], [0.125, 0.375]])


def test_regret_vector_diagonal_thirds(fig3i):
    z = np.eye(3) / 3.0
    r1 = regret_vector(fig3i, 1, z)
    np.testing.assert_allclose(r1.values, [-1 / 3, 0.0, -7 / 3], atol=1e-15)
    assert r1.max == pytest.approx(0.0, abs=1e-15)


def test_regret_is_zero_at_pure_nash(fig3i):
    z = np.zeros((3, 3))
    z[0, 0] = 1.0
    for player in (1, 2):
        r = regret_vector(fig3i, player, z)
        assert r.max == 0.0
        assert np.all(r.values <= 0.0)


def test_hannan_classification(fig3i):
    assert hannan_status(fig3i, np.eye(3) / 3.0).classification == HannanClass.REDUCED_HR

    game = build("fig3ii", {"eps": 0.6})
    z = np.zeros((4, 4))
    z[1, 1] = z[3, 3] = 0.5
    status = hannan_status(game, z)
    assert status.classification == HannanClass.OUTSIDE
    assert status.margin == pytest.approx(0.1, abs=1e-12)

    inside = hannan_status(build("fig3ii", {"eps": 0.25}), z)
    assert inside.in_hannan_set
    assert inside.classification == HannanClass.INTERIOR_H


def test_hannan_tolerance_must_be_positive(fig3i):
    with pytest.raises(UsageException):
        hannan_status(fig3i, np.eye(3) / 3.0, tol=0.0)


def test_best_replies_with_ties(matching_pennies):
    br = best_replies(matching_pennies, 1, [0.5, 0.5])
    assert br.actions == (0, 1)
    assert 0 in br
    eps = best_replies(matching_pennies, 1, [0.6, 0.4], epsilon=0.5)
    assert eps.actions == (0, 1)
    strict = best_replies(matching_pennies, 1, [0.6, 0.4])
    assert strict.actions == (0,)


def test_update_average_point_mass():
    z1 = JointDistribution.point_mass(0, 0, (2, 2))
    inc = JointDistribution.point_mass(1, 1, (2, 2))
    z2 = update_average(z1, inc, 2)
    np.testing.assert_allclose(z2.weights, [[0.5, 0.0], [0.0, 0.5]])
    with pytest.raises(UsageException):
        update_average(z1, inc, 1)


def test_duality_gap_zero_at_equilibrium(matching_pennies, fig3i):
    half = MixedProfile([0.5, 0.5], [0.5, 0.5])
    assert duality_gap(matching_pennies, half) == pytest.approx(0.0)
    assert duality_gap(matching_pennies, MixedProfile([1.0, 0.0], [1.0, 0.0])) == pytest.approx(2.0)
    with pytest.raises(UsageException):
        duality_gap(fig3i, MixedProfile([1, 0, 0], [1, 0, 0]))


def test_sup_distance_and_labels(fig1):
    assert sup_distance([0.2, 0.8], [0.5, 0.5]) == pytest.approx(0.3)
    assert pure_profile_index(fig1, "L", "R") == (0, 1)
    with pytest.raises(UsageException):
        pure_profile_index(fig1, "X", "R")
