import math

import pytest

from core.game_file import load_game_file, parse_game_text, parse_payoff_expression
from modules.YA_Common.utils.errors import GameFileException


def test_expressions():
    assert parse_payoff_expression("3/4") == 0.75
    assert parse_payoff_expression("-2") == -2.0
    assert parse_payoff_expression("sqrt(2)/(1+sqrt(2))") == pytest.approx(
        math.sqrt(2) / (1 + math.sqrt(2)), abs=1e-15
    )


@pytest.mark.parametrize("token", ["__import__('os')", "x+1", "1/0", "abs(2)"])
def test_rejects_unsafe_or_invalid(token):
    with pytest.raises(GameFileException):
        parse_payoff_expression(token)


def test_parse_fig1_text():
    text = """
    # fig1
    2 2
    1 0
    0 sqrt(2)
    sqrt(2) 0
    0 1
    labels1: L R
    labels2: L R
    """
    game = parse_game_text(text, name="fig1_file")
    assert game.shape == (2, 2)
    assert game.payoff_1[1, 1] == pytest.approx(math.sqrt(2))
    assert game.labels_1 == ("L", "R")
    assert game.name == "fig1_file"


def test_wrong_entry_count():
    with pytest.raises(GameFileException):
        parse_game_text("2 2\n1 2 3 4\n5 6 7")


def test_load_file(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text("1 2\n1, -1\n-1, 1\n", encoding="utf-8")
    game = load_game_file(path)
    assert game.name == "tiny"
    assert game.payoff_2.tolist() == [[-1.0, 1.0]]
    with pytest.raises(GameFileException):
        load_game_file(tmp_path / "missing.txt")
