"""
验收检查套件

提供以下功能：
- ClaimResult: 一条检查的结果（声明、测得值、阈值、是否通过、耗时）
- STATIC_CHECKS / DYNAMICS_CHECKS: 精确计算类与蒙特卡洛类检查的登记表
- verify_suite: 按套件名（static / dynamics / all）执行检查，返回结果表

quick=True 时蒙特卡洛规模缩小到冒烟测试量级，阈值不变。
"""

import math
import time
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from core.catalog import build, get_entry, resolve
from core.dynamics_continuous import (
    cfp_integrate,
    cont_no_regret_integrate,
    regret_conservation_residual,
)
from core.dynamics_discrete import (
    InitialCondition,
    RunConfig,
    dfp_regret_floor,
    orthogonality_residuals,
    q2_constancy_drift,
    run,
    run_batch,
    sign_persistence_violations,
)
from core.equilibrium import curb_attraction_experiment, curb_enumerate, delta_B, gamma_B
from core.game_core import Game, MixedProfile, average_payoff, hannan_status
from core.perturbation_analysis import (
    graph_br_distance,
    limit_set_estimate,
    nash_set_distance,
    perturbation_bound_violations,
)
from core.strategies import LpNorm, parse_strategy
from modules.YA_Common.utils.errors import UsageException
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("verification")

SUITES = ("static", "dynamics", "all")
REGRET_BOUND = 0.05


@dataclass
class ClaimResult:
    claim_id: int
    claim: str
    measured: str
    threshold: str
    passed: bool
    seconds: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.claim_id,
            "claim": self.claim,
            "measured": self.measured,
            "threshold": self.threshold,
            "pass": self.passed,
            "seconds": round(self.seconds, 3),
        }


@dataclass(frozen=True)
class Scale:
    """蒙特卡洛规模；quick 模式把运行次数与时程都缩小"""

    quick: bool

    def runs(self, n: int) -> int:
        return max(3, n // 10) if self.quick else n

    def horizon(self, T: int) -> int:
        return max(1000, T // 100) if self.quick else T


def _fraction(flags) -> float:
    flags = list(flags)
    return float(sum(bool(f) for f in flags)) / len(flags)


def _rm_config(T: int, seed: int, record_mixed: bool = False) -> RunConfig:
    return RunConfig.from_descriptors("rm", horizon=T, seed=seed, record_mixed=record_mixed)


# -------------------------------
# 在工作进程中求值的轨迹摘要
# -------------------------------
def _final_stats(traj) -> Dict[str, Any]:
    b1, b2 = traj.final.beliefs
    return {
        "regret_max": tuple(traj.final.regret_max),
        "x1": b1,
        "x2": b2,
        "z": traj.final.z,
    }


def _identity_stats(game: Game, traj) -> Dict[str, Any]:
    stats = _final_stats(traj)
    stats["orthogonality"] = float(orthogonality_residuals(game, traj).max(initial=0.0))
    stats["sign_violations"] = sum(sign_persistence_violations(traj))
    stats["q2_drift"] = max(q2_constancy_drift(game, traj, p, 0) for p in (1, 2))
    return stats


def _limit_stats(game: Game, traj) -> Dict[str, Any]:
    stats = _final_stats(traj)
    stats["classification"] = limit_set_estimate(game, traj).classification
    return stats


def _bound_stats(game: Game, traj) -> Dict[str, Any]:
    return perturbation_bound_violations(game, traj)


# -------------------------------
# 精确检查
# -------------------------------
def check_dfp_lock_in(scale: Scale) -> ClaimResult:
    game = build("fig1")
    a1, a2 = get_entry("fig1").special_points["dfp_start"]
    config = RunConfig.from_descriptors(
        "fp",
        horizon=10_000,
        dynamics="dfp",
        initial=InitialCondition.at_profile(a1, a2, game.shape),
        record_mixed=False,
    )
    floor = dfp_regret_floor(run(game, config))
    bound = math.sqrt(2) / (1 + math.sqrt(2)) - 1e-6
    return ClaimResult(1, "fig1 离散虚拟博弈遗憾下界", f"{floor:.9f}", f"≥ {bound:.9f}", floor >= bound)


def check_hannan_pathologies(scale: Scale) -> ClaimResult:
    fig3i = build("fig3i")
    thirds = hannan_status(fig3i, get_entry("fig3i").special_points["diagonal_thirds"])
    z = np.zeros((4, 4))
    z[1, 1] = z[3, 3] = 0.5
    inside = hannan_status(build("fig3ii", {"eps": 0.5}), z)
    outside = hannan_status(build("fig3ii", {"eps": 0.6}), z)
    ok = (
        thirds.classification.value == "ReducedHR"
        and abs(thirds.margin) <= 1e-12
        and inside.in_hannan_set
        and inside.margin <= 1e-12
        and outside.classification.value == "Outside"
        and abs(outside.margin - 0.1) <= 1e-12
    )
    measured = (
        f"{thirds.classification.value}/{thirds.margin:.2e}; "
        f"{inside.classification.value}/{inside.margin:.2e}; "
        f"{outside.classification.value}/{outside.margin:.12f}"
    )
    return ClaimResult(
        8, "Hannan 集合的病态点", measured, "ReducedHR/0; ∈H/≤0; Outside/0.1 (±1e-12)", ok
    )


def check_graph_perturbation(scale: Scale) -> ClaimResult:
    game = build("fig5", {"eta": 0.1})
    belief = (0.8, 0.2)
    d_c = graph_br_distance(game, 1, (0.0, 1.0, 0.0), belief)
    d_b = graph_br_distance(game, 1, (0.0, 0.0, 1.0), belief)
    ok = abs(d_c - 0.3) <= 1e-9 and abs(d_b - 1.0) <= 1e-9
    return ClaimResult(
        9, "fig5 图扰动最优反应距离", f"C={d_c:.10f}, B={d_b:.10f}", "C=0.3, B=1 (±1e-9)", ok
    )


def check_curb_machinery(scale: Scale) -> ClaimResult:
    game = build("fig3i")
    B = ((0,), (0,))
    d = delta_B(game, B)
    g = gamma_B(game, B, LpNorm(2.0))
    listing = sorted(c.B1 for c in curb_enumerate(game, symmetric=True))
    mp = curb_enumerate(build("matching_pennies"))
    ok = (
        abs(d - 1.0) <= 1e-10
        and abs(g - 0.1) <= 1e-10
        and listing == [(0,), (0, 1), (0, 1, 2)]
        and len(mp) == 1
        and mp[0].is_full(build("matching_pennies"))
    )
    return ClaimResult(
        11,
        "curb 常数与枚举",
        f"δ_B={d:.12f}, γ_B={g:.12f}, fig3i={listing}, mp={len(mp)}",
        "δ_B=1, γ_B=0.1, {A}²,{A,B}²,全集; mp 仅全集",
        ok,
    )


# -------------------------------
# 蒙特卡洛与积分检查
# -------------------------------
def _cfp_residual_ok(traj, player: int) -> Tuple[bool, float]:
    residual = regret_conservation_residual(traj)[player]
    r1 = float(traj.regret_max[0, player])
    return residual <= 1e-6 * max(1.0, r1), residual


def check_cfp_conservation(scale: Scale) -> ClaimResult:
    worst = 0.0
    ok = True
    for name in ("matching_pennies", "shapley", "fig3i"):
        game = build(name)
        for k in range(3 if scale.quick else 5):
            rng = np.random.default_rng(np.random.SeedSequence(2024, spawn_key=(k,)))
            x0 = MixedProfile(rng.dirichlet(np.ones(game.actions_1)), rng.dirichlet(np.ones(game.actions_2)))
            traj = cfp_integrate(game, x0, 1000.0)
            for player in (0, 1):
                good, residual = _cfp_residual_ok(traj, player)
                ok &= good
                worst = max(worst, residual)
    return ClaimResult(2, "连续虚拟博弈 t·R_max 守恒", f"{worst:.3e}", "≤ 1e-6·max(1, R_max(1))", ok)


def _oscillating_opponent(t: float) -> np.ndarray:
    p = 0.5 + 0.4 * math.sin(t)
    return np.array([p, 1.0 - p])


def check_unilateral_no_regret(scale: Scale) -> ClaimResult:
    game = build("matching_pennies")
    x0 = MixedProfile((0.7, 0.3), (0.3, 0.7))
    traj = cfp_integrate(game, x0, 200.0 if scale.quick else 1000.0, opponent_path=_oscillating_opponent)
    ok, residual = _cfp_residual_ok(traj, 0)
    return ClaimResult(3, "对脚本对手的单边无悔", f"{residual:.3e}", "≤ 1e-6·max(1, R_max(1))", ok)


def _batch(name: str, scale: Scale, runs: int, T: int, reducer, record_mixed: bool = False):
    game = resolve(name)
    config = _rm_config(scale.horizon(T), seed=7, record_mixed=record_mixed)
    return game, run_batch(game, config, scale.runs(runs), reducer=partial(reducer, game))


def check_reduced_hannan_and_identities(scale: Scale) -> List[ClaimResult]:
    """同一组运行同时给出遗憾收敛、零和纳什收敛与逐期恒等式三项检查"""
    regret_rows = []
    identities = {"orthogonality": 0.0, "sign_violations": 0, "q2_drift": 0.0}
    mp_close = None
    ok4 = True
    for name in ("matching_pennies", "shapley", "fig3i"):
        _, stats = _batch(name, scale, 50, 100_000, _identity_stats, record_mixed=True)
        frac = _fraction(max(s["regret_max"]) <= REGRET_BOUND for s in stats)
        ok4 &= frac >= 0.95
        regret_rows.append(f"{name}={frac:.2f}")
        identities["orthogonality"] = max(identities["orthogonality"], max(s["orthogonality"] for s in stats))
        identities["sign_violations"] += sum(s["sign_violations"] for s in stats)
        identities["q2_drift"] = max(identities["q2_drift"], max(s["q2_drift"] for s in stats))
        if name == "matching_pennies":
            half = np.array([0.5, 0.5])
            mp_close = _fraction(
                max(np.abs(s["x1"] - half).max(), np.abs(s["x2"] - half).max()) <= 0.05 for s in stats
            )
    ok15 = (
        identities["orthogonality"] <= 1e-12
        and identities["sign_violations"] == 0
        and identities["q2_drift"] <= 1e-10
    )
    return [
        ClaimResult(4, "遗憾匹配收敛到约化 Hannan 集合", ", ".join(regret_rows), "≥ 0.95 的运行 R_max ≤ 0.05", ok4),
        ClaimResult(5, "零和博弈信念收敛到纳什均衡", f"{mp_close:.2f}", "≥ 0.90 的运行在 0.05 以内", mp_close >= 0.90),
        ClaimResult(
            15,
            "逐期恒等式",
            f"正交={identities['orthogonality']:.1e}, 符号违反={identities['sign_violations']}, "
            f"Q2 漂移={identities['q2_drift']:.1e}",
            "≤1e-12, 0, ≤1e-10",
            ok15,
        ),
    ]


def check_dominated_elimination(scale: Scale) -> ClaimResult:
    _, stats = _batch("fig3ii:0.25", scale, 50, 100_000, _final_stats)
    frac = _fraction(max(s["x1"][[1, 3]].sum(), s["x2"][[1, 3]].sum()) <= 0.05 for s in stats)
    return ClaimResult(6, "被严格占优的行动消失", f"{frac:.2f}", "≥ 0.90 的运行权重 ≤ 0.05", frac >= 0.90)


def check_potential_convergence(scale: Scale) -> ClaimResult:
    game, stats = _batch("fig3i", scale, 50, 100_000, _final_stats)
    target = get_entry("fig3i").special_points["nash_payoff"]
    frac = _fraction(
        min(s["x1"][0], s["x2"][0]) >= 0.9
        and max(abs(v - target) for v in average_payoff(game, s["z"])) <= 0.1
        for s in stats
    )
    return ClaimResult(7, "势博弈收敛到纳什均衡及其收益", f"{frac:.2f}", "≥ 0.90 的运行", frac >= 0.90)


def check_perturbation_bound(scale: Scale) -> ClaimResult:
    _, stats = _batch("shapley", scale, 20, 10_000 if scale.quick else 100_000, _bound_stats)
    violations = sum(s["violations"] for s in stats)
    checked = sum(s["checked"] for s in stats)
    return ClaimResult(
        10, "正遗憾行动是 ε-最优反应", f"{violations}/{checked}", "0 次违反", violations == 0
    )


def check_curb_attraction(scale: Scale) -> ClaimResult:
    game = build("fig3i")
    spec = parse_strategy("rm")
    t0 = 1000
    report = curb_attraction_experiment(
        game,
        ((0,), (0,)),
        (spec, spec),
        t0=t0,
        T=max(scale.horizon(100_000), 10 * t0),
        runs=scale.runs(200),
        gamma=0.05,
        seed=11,
    )
    stay = report["stay_frequency"] or 0.0
    p90 = report["terminal_H_B_distances"].get("p90", math.inf)
    ok = stay >= 0.95 and p90 <= 0.05
    return ClaimResult(
        12,
        "curb 集合的吸引性",
        f"停留={stay:.3f} (构造失败 {report['construction_failures']}), p90={p90:.4f}",
        "停留 ≥ 0.95, p90 ≤ 0.05",
        ok,
    )


def check_shapley_dichotomy(scale: Scale) -> ClaimResult:
    _, stats = _batch("shapley", scale, 20, 1_000_000, _limit_stats)
    classes = [s["classification"] for s in stats]
    regret = _fraction(max(s["regret_max"]) <= REGRET_BOUND for s in stats)
    ok = all(c in ("ne_proximal", "cycling") for c in classes) and regret >= 0.95
    counts = {c: classes.count(c) for c in sorted(set(classes))}
    return ClaimResult(13, "Shapley 博弈的二分", f"{counts}, R_max={regret:.2f}", "无 unclassified", ok)


def check_continuum_nash(scale: Scale) -> ClaimResult:
    game, stats = _batch("a2ex2", scale, 50, 100_000, _final_stats)
    frac = _fraction(nash_set_distance(game, MixedProfile(s["x1"], s["x2"])) <= 0.05 for s in stats)
    return ClaimResult(14, "连续纳什集合的收敛", f"{frac:.2f}", "≥ 0.90 的运行在 0.05 以内", frac >= 0.90)


def check_continuous_no_regret(scale: Scale) -> ClaimResult:
    starts = {
        "matching_pennies": ((0.7, 0.3), (0.3, 0.7)),
        "fig3i": ((0.2, 0.3, 0.5), (0.2, 0.3, 0.5)),
    }
    spec = LpNorm(2.0)
    measured = []
    ok = True
    for name, (x1, x2) in starts.items():
        game = build(name)
        traj = cont_no_regret_integrate(game, (spec, spec), np.outer(x1, x2), 10_000.0)
        final = float(traj.regret_max[-1].max())
        positive = bool(traj.diagnostics.get("positive_throughout", False))
        ok &= final <= 0.02 and positive
        measured.append(f"{name}={final:.2e}{'' if positive else '(非正)'}")
    return ClaimResult(16, "连续时间无悔动力学", ", ".join(measured), "R_max(T) ≤ 0.02 且始终为正", ok)


Check = Callable[[Scale], Any]

STATIC_CHECKS: Tuple[Check, ...] = (
    check_dfp_lock_in,
    check_hannan_pathologies,
    check_graph_perturbation,
    check_curb_machinery,
)

DYNAMICS_CHECKS: Tuple[Check, ...] = (
    check_cfp_conservation,
    check_unilateral_no_regret,
    check_reduced_hannan_and_identities,
    check_dominated_elimination,
    check_potential_convergence,
    check_perturbation_bound,
    check_curb_attraction,
    check_shapley_dichotomy,
    check_continuum_nash,
    check_continuous_no_regret,
)


def verify_suite(suite: str = "static", quick: bool = False) -> List[ClaimResult]:
    """
    执行一个检查套件。

    Args:
        suite (str): "static"、"dynamics" 或 "all"。
        quick (bool): 缩小蒙特卡洛规模。

    Returns:
        List[ClaimResult]: 按检查编号排序的结果；任何一项失败都应使命令行以 1 退出。

    Raises:
        UsageException: 未知的套件名。
    """
    if suite not in SUITES:
        raise UsageException(f"未知的检查套件: {suite}", {"suites": list(SUITES)})
    checks: Tuple[Check, ...] = ()
    if suite in ("static", "all"):
        checks += STATIC_CHECKS
    if suite in ("dynamics", "all"):
        checks += DYNAMICS_CHECKS
    scale = Scale(quick)
    results: List[ClaimResult] = []
    for check in checks:
        start = time.perf_counter()
        out = check(scale)
        elapsed = time.perf_counter() - start
        rows = out if isinstance(out, list) else [out]
        for row in rows:
            row.seconds = elapsed / len(rows)
            level = "info" if row.passed else "warning"
            getattr(logger, level)(f"[{row.claim_id}] {row.claim}: {row.measured} ({'通过' if row.passed else '失败'})")
        results.extend(rows)
    results.sort(key=lambda r: r.claim_id)
    return results
