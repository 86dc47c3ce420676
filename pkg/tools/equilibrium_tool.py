"""
均衡与 curb 工具，包括：
- nash_equilibria: 支撑枚举
- eliminate_dominated: 迭代剔除严格劣势行动
- curb_sets / curb_constants: curb 集合枚举与 δ_B、γ_B
- graph_br_distance_tool: 到最优反应图的 sup 范数距离
"""

from typing import Any, Dict, List

from tools import RegretLab_Tool


def _indices(labels, names: List[str]) -> List[int]:
    from modules.YA_Common.utils.errors import UsageException

    try:
        return [labels.index(n) for n in names]
    except ValueError:
        raise UsageException(f"未知的行动标签: {names}", {"labels": list(labels)})


@RegretLab_Tool(
    name="nash_equilibria",
    title="Nash Equilibria",
    description="用支撑枚举求小型双矩阵博弈的全部（非退化）纳什均衡",
)
async def nash_equilibria(game: str) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.equilibrium import nash_support_enumeration
        from core.game_core import expected_payoff, product_distribution
    except ImportError as e:
        raise RuntimeError(f"无法导入均衡模块: {e}")

    g = resolve(game)
    rows = []
    for eq in nash_support_enumeration(g):
        rows.append(
            {
                "x1": dict(zip(g.labels_1, eq.x1.weights.tolist())),
                "x2": dict(zip(g.labels_2, eq.x2.weights.tolist())),
                "payoffs": list(expected_payoff(g, product_distribution(eq))),
            }
        )
    return {"game": g.name, "equilibria": rows}


@RegretLab_Tool(
    name="eliminate_dominated",
    title="Eliminate Dominated",
    description="迭代剔除严格劣势行动（可选是否检查混合策略占优），返回幸存行动与剔除顺序",
)
async def eliminate_dominated(game: str, allow_mixed: bool = True) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.equilibrium import strict_dominance_eliminate
        from core.trajectory_io import to_jsonable
    except ImportError as e:
        raise RuntimeError(f"无法导入均衡模块: {e}")

    g = resolve(game)
    return to_jsonable(strict_dominance_eliminate(g, allow_mixed=allow_mixed).to_dict(g))


@RegretLab_Tool(
    name="curb_sets",
    title="Curb Sets",
    description="枚举对最优反应封闭的乘积集合；symmetric=True 只返回两个玩家下标相同的集合",
)
async def curb_sets(game: str, symmetric: bool = False) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.equilibrium import curb_enumerate
        from core.trajectory_io import to_jsonable
    except ImportError as e:
        raise RuntimeError(f"无法导入均衡模块: {e}")

    g = resolve(game)
    return {"game": g.name, "curb_sets": to_jsonable([c.to_dict(g) for c in curb_enumerate(g, symmetric)])}


@RegretLab_Tool(
    name="curb_constants",
    title="Curb Constants",
    description="计算 curb 集合 B 的 δ_B 与给定势函数（如 rm、lp:3）下的 γ_B",
)
async def curb_constants(
    game: str, B1: List[str], B2: List[str], strategy: str = "rm", grid: bool = False
) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.equilibrium import curb_constants as _constants
        from core.strategies import parse_strategy
        from core.trajectory_io import to_jsonable
    except ImportError as e:
        raise RuntimeError(f"无法导入均衡模块: {e}")

    g = resolve(game)
    spec = parse_strategy(strategy)
    if spec.potential is None:
        from modules.YA_Common.utils.errors import UsageException

        raise UsageException(f"γ_B 需要势函数策略，当前: {strategy}")
    B = (_indices(g.labels_1, B1), _indices(g.labels_2, B2))
    return to_jsonable(_constants(g, B, spec.potential, grid=grid).to_dict())


@RegretLab_Tool(
    name="graph_br_distance_tool",
    title="Graph Best-Reply Distance",
    description="(x_i, x_-i) 到玩家最优反应对应的图的 sup 范数距离（图扰动最优反应的最小扰动）",
)
async def graph_br_distance_tool(
    game: str, player: int, x_own: List[float], x_opponent: List[float]
) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.perturbation_analysis import graph_br_distance
    except ImportError as e:
        raise RuntimeError(f"无法导入扰动分析模块: {e}")

    g = resolve(game)
    return {"player": player, "distance": graph_br_distance(g, player, x_own, x_opponent)}
