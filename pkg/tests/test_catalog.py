import math

import numpy as np
import pytest

from core.catalog import build, entry_for, generate, get_entry, list_entries, resolve
from core.game_core import MixedProfile
from modules.YA_Common.utils.errors import CatalogException, GameFileException


def test_every_entry_builds():
    names = [e["name"] for e in list_entries()]
    assert {"fig1", "fig2", "fig3i", "fig3ii", "shapley", "fig5", "a2ex1", "a2ex2"} <= set(names)
    for name in names:
        game = build(name)
        assert game.payoff_1.shape == game.payoff_2.shape


def test_exact_payoffs(fig3i, matching_pennies):
    np.testing.assert_array_equal(fig3i.payoff_1, [[2, 1, -4], [1, 0, -1], [-4, -1, -2]])
    np.testing.assert_array_equal(fig3i.payoff_2, fig3i.payoff_1.T)
    assert matching_pennies.is_zero_sum()
    assert build("fig1").payoff_1[1, 1] == math.sqrt(2.0)


def test_parameters():
    g = build("fig3ii", {"eps": 0.25})
    assert g.payoff_1[1, 0] == 0.75
    assert g.name == "fig3ii:0.25"
    with pytest.raises(CatalogException):
        build("fig3ii", {"eps": -0.1})
    with pytest.raises(CatalogException):
        build("fig5", {"eta": 0.5})
    with pytest.raises(CatalogException):
        build("shapley", {"eps": 1.0})


def test_resolve_forms(tmp_path):
    assert resolve("fig5:0.2").payoff_1[2, 0] == pytest.approx(0.3)
    g = resolve("generate:zero_sum:3x4:7")
    assert g.shape == (3, 4) and g.is_zero_sum()
    assert resolve("generate:zero_sum:3x4:7").payoff_1.tolist() == g.payoff_1.tolist()
    path = tmp_path / "g.txt"
    path.write_text("1 1\n5\n6\n", encoding="utf-8")
    assert resolve(str(path)).payoff_2[0, 0] == 6.0
    with pytest.raises(CatalogException):
        resolve("nope")
    with pytest.raises(GameFileException):
        resolve(str(tmp_path / "absent.txt"))


def test_generators():
    ii = generate("identical_interest", (3, 3), 1)
    np.testing.assert_array_equal(ii.payoff_1, ii.payoff_2)
    with pytest.raises(CatalogException):
        generate("unknown", (2, 2), 0)
    with pytest.raises(CatalogException):
        generate("zero_sum", (0, 2), 0)


def test_continuum_nash_distances():
    a2ex2 = get_entry("a2ex2")
    assert a2ex2.nash_distance(MixedProfile([1.0, 0.0], [0.3, 0.7])) == 0.0
    assert a2ex2.nash_distance(MixedProfile([0.6, 0.4], [0.8, 0.2])) == pytest.approx(0.2)
    assert entry_for(build("fig3ii", {"eps": 0.3})).name == "fig3ii"
    assert entry_for(generate("zero_sum", (2, 2), 0)) is None


def test_special_points(fig3i):
    points = get_entry("fig3i").special_points
    np.testing.assert_allclose(points["diagonal_thirds"], np.eye(3) / 3.0)
    assert points["nash_payoff"] == 2.0
