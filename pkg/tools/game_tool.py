"""
博弈查询工具，包括：
- game_info: 收益表、纳什均衡、严格占优消去与 curb 集合
- regret_report: 相关行动下两个玩家的遗憾向量
- hannan_check: Hannan 集合分类与边距
- best_reply_sets: 对给定信念的 ε-最优反应集合
"""

from typing import Any, Dict, List, Optional

from tools import RegretLab_Tool


def _joint(z: List[List[float]]):
    from core.game_core import JointDistribution

    return JointDistribution(z).weights


@RegretLab_Tool(
    name="game_info",
    title="Game Info",
    description="显示目录博弈（如 fig3i、fig3ii:0.25、shapley）或博弈文件的收益、纳什均衡、劣势消去与 curb 集合",
)
async def game_info(game: str) -> Dict[str, Any]:
    """
    Args:
        game (str): 目录名（可带参数）、generate:<class>:<NxM>:<seed> 或博弈文件路径。
    """
    try:
        from core.experiments import game_info as _info
        from core.trajectory_io import to_jsonable
    except ImportError as e:
        raise RuntimeError(f"无法导入实验模块: {e}")

    return to_jsonable(_info(game))


@RegretLab_Tool(
    name="regret_report",
    title="Regret Report",
    description="计算相关行动 z（行为玩家 1 的行动、列为玩家 2 的行动）下每个行动的遗憾与 R_max",
)
async def regret_report(game: str, z: List[List[float]]) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.game_core import regret_vector
    except ImportError as e:
        raise RuntimeError(f"无法导入博弈模块: {e}")

    g = resolve(game)
    w = _joint(z)
    out: Dict[str, Any] = {"game": g.name}
    for player, labels in ((1, g.labels_1), (2, g.labels_2)):
        r = regret_vector(g, player, w)
        out[f"player_{player}"] = {
            "regrets": dict(zip(labels, r.values.tolist())),
            "max": r.max,
        }
    return out


@RegretLab_Tool(
    name="hannan_check",
    title="Hannan Check",
    description="判定相关行动 z 属于 Hannan 集合的内部、约化 Hannan 集合还是集合外，并给出到 Hannan 集合的距离",
)
async def hannan_check(game: str, z: List[List[float]], tol: float = 1e-9) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.equilibrium import distance_to_hannan
        from core.game_core import hannan_status
    except ImportError as e:
        raise RuntimeError(f"无法导入博弈模块: {e}")

    g = resolve(game)
    w = _joint(z)
    status = hannan_status(g, w, tol)
    return {
        "classification": status.classification.value,
        "margin": status.margin,
        "regret_max": list(status.maxima),
        "distance_to_hannan": distance_to_hannan(g, w),
    }


@RegretLab_Tool(
    name="best_reply_sets",
    title="Best Reply Sets",
    description="给定对手的混合行动，返回玩家的 ε-最优反应集合与各行动的期望收益",
)
async def best_reply_sets(
    game: str, player: int, opponent: List[float], epsilon: float = 0.0
) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.game_core import best_replies
    except ImportError as e:
        raise RuntimeError(f"无法导入博弈模块: {e}")

    g = resolve(game)
    br = best_replies(g, player, opponent, epsilon)
    labels = g.labels(player)
    return {
        "player": player,
        "epsilon": epsilon,
        "best_replies": [labels[k] for k in br.actions],
        "payoffs": dict(zip(labels, br.payoffs.tolist())),
        "best_value": br.best_value,
    }
