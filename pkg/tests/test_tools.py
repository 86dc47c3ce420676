import asyncio

from mcp.server.fastmcp import FastMCP

from modules.YA_Common.utils.middleware import async_exception_handler
from prompts import register_prompts
from resources import register_resources
from tools import register_tools, registered_tools
from tools.dynamics_tool import simulate_dynamics
from tools.equilibrium_tool import curb_constants, graph_br_distance_tool
from tools.game_tool import best_reply_sets, hannan_check, regret_report


def test_all_tools_register():
    app = FastMCP("regretlab-test")
    count = register_tools(app)
    names = registered_tools()
    assert count == len(names)
    for expected in ("game_info", "simulate_dynamics", "curb_constants", "verify_claims"):
        assert expected in names
    assert register_prompts(app) >= 2
    assert register_resources(app) >= 3


def test_regret_report():
    out = asyncio.run(regret_report("matching_pennies", [[0.25, 0.25], [0.25, 0.25]]))
    assert out["player_1"]["max"] == 0.0
    assert set(out["player_2"]["regrets"]) == {"H", "T"}


def test_hannan_check_on_fig3ii():
    z = [[0.0] * 4 for _ in range(4)]
    z[1][1] = z[3][3] = 0.5
    out = asyncio.run(hannan_check("fig3ii:0.6", z))
    assert out["classification"] == "Outside"
    assert abs(out["margin"] - 0.1) <= 1e-12


def test_best_reply_sets():
    out = asyncio.run(best_reply_sets("matching_pennies", 1, [0.5, 0.5]))
    assert out["best_replies"] == ["H", "T"]


def test_curb_constants_by_label():
    out = asyncio.run(curb_constants("fig3i", ["A"], ["A"]))
    assert abs(out["delta_B"] - 1.0) <= 1e-9
    assert abs(out["gamma_B"] - 0.1) <= 1e-9


def test_graph_distance_tool():
    out = asyncio.run(graph_br_distance_tool("fig5:0.1", 1, [0.0, 1.0, 0.0], [0.8, 0.2]))
    assert abs(out["distance"] - 0.3) <= 1e-9


def test_simulate_dynamics_summary():
    out = asyncio.run(simulate_dynamics("shapley", horizon=500, seed=2))
    assert out["final"]["t"] == 500
    assert out["regret_path"][-1]["t"] <= 500


def test_errors_become_records():
    wrapped = async_exception_handler(curb_constants)
    out = asyncio.run(wrapped("fig3i", ["Z"], ["A"]))
    assert out["error"]["code"] == "USAGE_ERROR"
    out = asyncio.run(async_exception_handler(regret_report)("no_such_game", [[1.0]]))
    assert out["error"]["code"] == "CATALOG_ERROR"
