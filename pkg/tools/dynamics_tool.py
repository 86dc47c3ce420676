"""
动力学模拟工具，包括：
- simulate_dynamics: 离散时间无悔动力学 / 期望动力学 / 离散虚拟博弈
- integrate_cfp: 连续虚拟博弈的分段精确解
- integrate_no_regret: 连续时间类 R 无悔动力学

返回最终状态与按记录计划抽取的 R_max 路径，不返回逐期数组。
"""

from typing import Any, Dict, List, Optional

from tools import RegretLab_Tool


def _regret_path(periods, rmax, limit: int = 60) -> List[Dict[str, Any]]:
    step = max(1, len(periods) // limit)
    return [
        {"t": float(periods[k]), "r1max": float(rmax[k][0]), "r2max": float(rmax[k][1])}
        for k in range(0, len(periods), step)
    ]


@RegretLab_Tool(
    name="simulate_dynamics",
    title="Simulate Dynamics",
    description=(
        "在目录博弈上运行离散时间动力学。dynamics: stochastic | expected | dfp；"
        "strategy: rm、lp:<p>、expw:<alpha>、fp；fallback: const:<c> 或 br"
    ),
)
async def simulate_dynamics(
    game: str,
    horizon: int = 10000,
    dynamics: str = "stochastic",
    strategy_1: str = "rm",
    strategy_2: Optional[str] = None,
    fallback: str = "const:0",
    seed: int = 0,
    limit_set: bool = False,
) -> Dict[str, Any]:
    try:
        from core.catalog import entry_for, resolve
        from core.dynamics_discrete import RunConfig, run
        from core.perturbation_analysis import limit_set_estimate
        from core.strategies import parse_fallback
        from core.trajectory_io import to_jsonable
    except ImportError as e:
        raise RuntimeError(f"无法导入动力学模块: {e}")

    g = resolve(game)
    fb = parse_fallback(fallback)
    config = RunConfig.from_descriptors(
        strategy_1,
        strategy_2,
        horizon=horizon,
        dynamics=dynamics,
        fallbacks=(fb, fb),
        seed=seed,
        record_mixed=False,
    )
    traj = run(g, config)
    out = traj.summary()
    periods = [s.t for s in traj.snapshots]
    out["regret_path"] = _regret_path(periods, [s.regret_max for s in traj.snapshots])
    if limit_set:
        entry = entry_for(g)
        out["limit_set"] = limit_set_estimate(
            g, traj, nash_distance=entry.nash_distance if entry is not None else None
        ).to_dict()
    return to_jsonable(out)


@RegretLab_Tool(
    name="integrate_cfp",
    title="Integrate Continuous Fictitious Play",
    description="从混合策略组合 (x1, x2) 出发积分连续虚拟博弈到 T，返回断点数、守恒残差与最终状态",
)
async def integrate_cfp(
    game: str,
    x1: List[float],
    x2: List[float],
    horizon: float = 1000.0,
    tie_policy: str = "restricted",
) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.dynamics_continuous import cfp_integrate, piece_cycle, regret_conservation_residual
        from core.game_core import MixedProfile
        from core.trajectory_io import to_jsonable
    except ImportError as e:
        raise RuntimeError(f"无法导入连续动力学模块: {e}")

    g = resolve(game)
    traj = cfp_integrate(g, MixedProfile(x1, x2).check(g), horizon, tie_policy=tie_policy)
    out = traj.summary()
    out["conservation_residual"] = list(regret_conservation_residual(traj))
    out["cycle"] = piece_cycle(traj)
    out["regret_path"] = _regret_path(traj.original_times(), traj.regret_max)
    return to_jsonable(out)


@RegretLab_Tool(
    name="integrate_no_regret",
    title="Integrate Continuous No-Regret",
    description="从正遗憾的相关行动 z 出发积分连续时间无悔动力学（势函数策略，如 rm、lp:3）到 T",
)
async def integrate_no_regret(
    game: str,
    z: List[List[float]],
    horizon: float = 10000.0,
    strategy: str = "rm",
) -> Dict[str, Any]:
    try:
        from core.catalog import resolve
        from core.dynamics_continuous import cont_no_regret_integrate, potential_conservation_residual
        from core.strategies import parse_strategy
        from core.trajectory_io import to_jsonable
    except ImportError as e:
        raise RuntimeError(f"无法导入连续动力学模块: {e}")

    g = resolve(game)
    spec = parse_strategy(strategy)
    traj = cont_no_regret_integrate(g, (spec, spec), z, horizon)
    out = traj.summary()
    out["potential_residual"] = list(potential_conservation_residual(traj))
    out["regret_path"] = _regret_path(traj.original_times(), traj.regret_max)
    return to_jsonable(out)
