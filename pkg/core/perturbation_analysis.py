"""
扰动分析与极限集估计

提供以下功能：
- payoff_perturbation_series: 每期的收益扰动水平 ε_t（以及可选的图扰动 δ_t）
- perturbation_bound_violations: 检查 ε_t ≤ max_i R_{i,max}(t-1)（两个最大遗憾都为正的时期）
- graph_br_distance: 到最优反应对应图的 sup 范数距离（逐最优反应区域 LP，精确）
- graph_inclusion_epsilon: 在信念网格上求使 BR^ε ⊆ 图的 δ 邻域成立的 ε
- interpolate: 离散信念序列的插值过程，检查区间内位移 ≤ 1/(n+1)
- limit_set_estimate: 尾部信念的聚类、到纳什均衡与 Hannan 集合的距离、循环检测
- nash_set_distance: 到纳什集合的距离（连续纳什集合使用目录条目提供的距离函数）
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import cdist

from core.dynamics_continuous import ContinuousTrajectory
from core.dynamics_discrete import Trajectory
from core.equilibrium import distance_to_hannan, nash_support_enumeration
from core.game_core import Game, MixedAction, MixedProfile, as_weights, profile_distance
from core.lp_solver import LpProblem, lp_solve
from modules.YA_Common.utils.config import get_config
from modules.YA_Common.utils.errors import TrajectoryException, UsageException
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("perturbation_analysis")

MAX_LOG_SAMPLES = 400
MIN_RETURNS = 5


# -------------------------------
# 收益扰动
# -------------------------------
@dataclass
class PerturbationSeries:
    periods: np.ndarray
    per_player: np.ndarray
    graph: Optional[np.ndarray] = None

    @property
    def epsilon(self) -> np.ndarray:
        return self.per_player.max(axis=1)

    def tail_max(self, since: int) -> float:
        mask = self.periods >= since
        return float(self.epsilon[mask].max()) if mask.any() else 0.0


def payoff_perturbation_series(
    game: Game, traj: Trajectory, graph: bool = False
) -> PerturbationSeries:
    """
    ε_t = max_i [max_k u_i(k, x_{-i}(t-1)) - u_i(a_i(t), x_{-i}(t-1))]_+，t = t0+1..T。

    graph=True 时同时计算 δ_t = max_i graph_br_distance(δ_{a_i(t)}, x_{-i}(t-1))（每期一次 LP，较慢）。

    Raises:
        TrajectoryException: 轨迹没有逐期的实现行动。
    """
    if not traj.has_actions:
        raise TrajectoryException("收益扰动序列需要逐期记录的实现行动")
    _, b1, b2 = traj.belief_path()
    prev1, prev2 = b1[:-1], b2[:-1]
    a1, a2 = traj.actions[:, 0], traj.actions[:, 1]
    pay1 = prev2 @ game.payoff_1.T
    pay2 = prev1 @ game.payoff_2
    rows = np.arange(a1.size)
    eps1 = pay1.max(axis=1) - pay1[rows, a1]
    eps2 = pay2.max(axis=1) - pay2[rows, a2]
    per_player = np.maximum(np.column_stack([eps1, eps2]), 0.0)
    graph_series = None
    if graph:
        n1, n2 = game.shape
        graph_series = np.array(
            [
                max(
                    graph_br_distance(game, 1, np.eye(n1)[a1[s]], prev2[s]),
                    graph_br_distance(game, 2, np.eye(n2)[a2[s]], prev1[s]),
                )
                for s in rows
            ]
        )
    return PerturbationSeries(traj.periods, per_player, graph_series)


def perturbation_bound_violations(game: Game, traj: Trajectory, tol: float = 1e-12) -> Dict[str, Any]:
    """在两个 R_max(t-1) 都为正的时期检查 ε_t ≤ max_i R_{i,max}(t-1) + tol"""
    series = payoff_perturbation_series(game, traj)
    _, rmax = traj.regret_max_path()
    prev = rmax[:-1]
    active = np.all(prev > 0.0, axis=1)
    excess = series.epsilon - prev.max(axis=1)
    bad = active & (excess > tol)
    return {
        "checked": int(active.sum()),
        "violations": int(bad.sum()),
        "worst_excess": float(excess[active].max()) if active.any() else None,
        "first_violation": int(traj.periods[bad][0]) if bad.any() else None,
    }


# -------------------------------
# 图扰动
# -------------------------------
def _region_distance(
    m: np.ndarray, support: Sequence[int], x_own: np.ndarray, y: np.ndarray
) -> Optional[float]:
    """
    min d s.t. x' ∈ Δ(support)，y' ∈ Δ，support 中行动都是 y' 的最优反应，
    |x' - x_own|_∞ ≤ d，|y' - y|_∞ ≤ d。变量 (x'_S, y', d)。
    """
    n_own, n_opp = m.shape
    s = len(support)
    nv = s + n_opp + 1
    rows: List[np.ndarray] = []
    rhs: List[float] = []
    for k in support:
        for j in range(n_own):
            if j == k:
                continue
            row = np.zeros(nv)
            row[s : s + n_opp] = m[j] - m[k]
            rows.append(row)
            rhs.append(0.0)
    for k in range(n_own):
        # x'_k 在支撑外为 0
        row = np.zeros(nv)
        if k in support:
            row[support.index(k)] = 1.0
        row[-1] = -1.0
        rows.append(row)
        rhs.append(x_own[k])
        row = -row
        row[-1] = -1.0
        rows.append(row)
        rhs.append(-x_own[k])
    for b in range(n_opp):
        row = np.zeros(nv)
        row[s + b] = 1.0
        row[-1] = -1.0
        rows.append(row)
        rhs.append(y[b])
        row = -row
        row[-1] = -1.0
        rows.append(row)
        rhs.append(-y[b])
    A_eq = np.zeros((2, nv))
    A_eq[0, :s] = 1.0
    A_eq[1, s : s + n_opp] = 1.0
    cost = np.zeros(nv)
    cost[-1] = 1.0
    res = lp_solve(LpProblem(cost, np.array(rows), np.array(rhs), A_eq, np.ones(2)))
    return float(res.fun) if res.success else None


def graph_br_distance(game: Game, player: int, x_i: Any, x_opp: Any) -> float:
    """
    最小的 δ 使 (x_i, x_opp) 与 BR_i 的图的 sup 范数距离不超过 δ。

    x_i 为纯行动 k 时只需一个 LP：k 为最优反应的区域到 x_opp 的距离（超过 1 时取 1）；
    混合 x_i 时枚举最优反应集合 S，每个区域-面乘积上解一个 LP。
    """
    m = game.own_payoffs(player)
    x = MixedAction(as_weights(x_i)).weights
    y = MixedAction(as_weights(x_opp)).weights
    if x.size != m.shape[0] or y.size != m.shape[1]:
        raise UsageException("混合行动维度与博弈不符")
    support = np.flatnonzero(x > 0.0)
    if support.size == 1:
        candidates: Sequence[Tuple[int, ...]] = [(int(support[0]),)]
    else:
        candidates = [
            c for r in range(1, m.shape[0] + 1) for c in itertools.combinations(range(m.shape[0]), r)
        ]
    best = 1.0
    for S in candidates:
        d = _region_distance(m, list(S), x, y)
        if d is not None:
            best = min(best, d)
    return max(0.0, best)


def _belief_grid(n: int, denominator: int):
    for combo in itertools.combinations(range(denominator + n - 1), n - 1):
        parts = np.diff(np.concatenate([[-1], combo, [denominator + n - 1]])) - 1
        yield parts / denominator


def graph_inclusion_epsilon(
    game: Game, player: int, delta: float, denominator: int = 20
) -> float:
    """
    在步长 1/denominator 的对手信念网格上，使 BR_i^ε(y) 中每个纯行动 k
    都满足 graph_br_distance(k, y) ≤ δ 的 ε。

    记 ε* = min{ gap(k, y) : distance(k, y) > δ }（gap 为 k 相对最优收益的差距），
    包含关系对所有 ε < ε* 成立；返回 ε*/2（无违反点时返回 2Ū）。
    """
    if delta <= 0:
        raise UsageException(f"delta 必须为正，当前: {delta}")
    m = game.own_payoffs(player)
    n_own, n_opp = m.shape
    eye = np.eye(n_own)
    threshold = math.inf
    for y in _belief_grid(n_opp, denominator):
        payoffs = m @ y
        gaps = payoffs.max() - payoffs
        for k in np.argsort(gaps, kind="stable"):
            if gaps[k] >= threshold:
                break
            if graph_br_distance(game, player, eye[k], y) > delta:
                threshold = float(gaps[k])
                break
    cap = 2.0 * game.payoff_bound
    return cap if math.isinf(threshold) else min(0.5 * threshold, cap)


# -------------------------------
# 插值过程
# -------------------------------
@dataclass
class InterpolatedPath:
    """t·x(t) = n·x(n) + (t - n)·inc(n+1)，n ≤ t ≤ n+1"""

    periods: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    inc1: np.ndarray
    inc2: np.ndarray
    max_bound_ratio: float = 0.0

    def at(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        if not self.periods[0] <= t <= self.periods[-1]:
            raise UsageException(f"t={t} 超出插值区间 [{self.periods[0]}, {self.periods[-1]}]")
        j = min(int(np.searchsorted(self.periods, t, side="right")) - 1, self.periods.size - 2)
        if j < 0 or self.periods.size == 1:
            return self.x1[0], self.x2[0]
        n = self.periods[j]
        return (
            (n * self.x1[j] + (t - n) * self.inc1[j]) / t,
            (n * self.x2[j] + (t - n) * self.inc2[j]) / t,
        )

    def displacements(self) -> np.ndarray:
        """每个区间内 sup_t |x(t) - x(n)|_∞，在 t = n+1 处取到"""
        n = self.periods[:-1].astype(float)
        d1 = np.abs(self.inc1 - self.x1[:-1]).max(axis=1)
        d2 = np.abs(self.inc2 - self.x2[:-1]).max(axis=1)
        return np.maximum(d1, d2) / (n + 1.0)


def interpolate(source: Union[Trajectory, Tuple[np.ndarray, np.ndarray]], t0: int = 1) -> InterpolatedPath:
    """
    由离散信念序列构造插值过程。source 可以是 Trajectory，
    也可以是 (x1 序列, x2 序列)，此时第 n 行为 x(t0 + n)，增量由 (n+1)x(n+1) - n·x(n) 还原。

    Raises:
        TrajectoryException: 某个区间的位移超过 1/(n+1)。
    """
    if isinstance(source, Trajectory):
        periods, x1, x2 = source.belief_path()
    else:
        x1 = np.atleast_2d(np.asarray(source[0], dtype=float))
        x2 = np.atleast_2d(np.asarray(source[1], dtype=float))
        if x1.shape[0] != x2.shape[0]:
            raise UsageException("两个玩家的信念序列长度不同")
        periods = np.arange(t0, t0 + x1.shape[0])
    p = periods[:, None].astype(float)
    inc1 = p[1:] * x1[1:] - p[:-1] * x1[:-1]
    inc2 = p[1:] * x2[1:] - p[:-1] * x2[:-1]
    path = InterpolatedPath(periods, x1, x2, inc1, inc2)
    if periods.size > 1:
        ratio = float((path.displacements() * (periods[:-1] + 1.0)).max())
        path.max_bound_ratio = ratio
        if ratio > 1.0 + 1e-9:
            raise TrajectoryException(
                "插值过程的区间位移超过 1/(n+1)，信念序列不是经验平均", {"ratio": ratio}
            )
    return path


# -------------------------------
# 极限集
# -------------------------------
@dataclass
class LimitSetReport:
    clusters: List[Dict[str, Any]]
    ne_distances: List[Dict[str, Any]]
    hannan_distance: float
    cycle: Dict[str, Any]
    classification: str
    tail_fraction: float
    samples: int
    nash_set_distance: Optional[float] = None
    parameters: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "clusters": self.clusters,
            "distances": {
                "nash": self.ne_distances,
                "nash_set": self.nash_set_distance,
                "hannan": self.hannan_distance,
            },
            "cycle": self.cycle,
            "classification": self.classification,
            "tail_fraction": self.tail_fraction,
            "samples": self.samples,
            "parameters": self.parameters,
        }


def _beliefs_and_final_z(traj: Union[Trajectory, ContinuousTrajectory]):
    if isinstance(traj, Trajectory):
        times, b1, b2 = traj.belief_path()
        return times.astype(float), b1, b2, traj.final.z
    if isinstance(traj, ContinuousTrajectory):
        return traj.original_times(), traj.x1, traj.x2, traj.z[-1]
    raise UsageException(f"不支持的轨迹类型: {type(traj).__name__}")


def _cycle_analysis(samples: np.ndarray, taus: np.ndarray, radius: float, cv_limit: float) -> Dict[str, Any]:
    """首次回返：离开 2r 之后第一次回到 r 以内所用的 log 时间"""
    dist = cdist(samples, samples, metric="chebyshev")
    returns = []
    for i in range(samples.shape[0] - 1):
        row = dist[i, i + 1 :]
        away = np.flatnonzero(row > 2.0 * radius)
        if away.size == 0:
            continue
        back = np.flatnonzero(row[away[0] :] <= radius)
        if back.size == 0:
            continue
        j = i + 1 + away[0] + back[0]
        returns.append(taus[j] - taus[i])
    out: Dict[str, Any] = {"returns": len(returns), "cycling": False, "period": None, "cv": None}
    if len(returns) >= MIN_RETURNS:
        r = np.array(returns)
        cv = float(r.std() / r.mean()) if r.mean() > 0 else math.inf
        out["cv"] = cv
        out["period"] = float(r.mean())
        out["cycling"] = cv < cv_limit
    out["heuristic"] = "first-return coefficient of variation in log time"
    return out


def limit_set_estimate(
    game: Game,
    traj: Union[Trajectory, ContinuousTrajectory],
    tail_fraction: Optional[float] = None,
    equilibria: Optional[List[MixedProfile]] = None,
    radius: Optional[float] = None,
    nash_distance: Optional[Callable[[MixedProfile], float]] = None,
) -> LimitSetReport:
    """
    估计信念的极限集。

    尾部取 log 时间区间的最后 tail_fraction 部分，并在 log 时间上均匀抽取至多 400 个样本；
    单链接层次聚类（sup 范数，半径 radius）给出聚点，首次回返时间的变异系数给出循环标记。

    分类：最后四分之一样本都在某个纳什均衡 0.05 以内为 "ne_proximal"，
    否则循环标记成立为 "cycling"，其余为 "unclassified"。

    Raises:
        UsageException: tail_fraction 不在 (0, 1) 内。
        TrajectoryException: 尾部样本少于 analysis.min_snapshots（缺省 20）。
    """
    fraction = float(tail_fraction if tail_fraction is not None else get_config("analysis.tail_fraction", 0.5))
    if not 0.0 < fraction < 1.0:
        raise UsageException(f"tail_fraction 必须在 (0, 1) 内，当前: {fraction}")
    r = float(radius if radius is not None else get_config("analysis.cluster_radius", 0.02))
    cv_limit = float(get_config("analysis.cycle_cv", 0.2))
    ne_radius = float(get_config("analysis.ne_radius", 0.05))
    min_snapshots = int(get_config("analysis.min_snapshots", 20))

    times, b1, b2, z_final = _beliefs_and_final_z(traj)
    taus = np.log(times)
    start = taus[-1] - fraction * (taus[-1] - taus[0])
    targets = np.linspace(start, taus[-1], MAX_LOG_SAMPLES)
    idx = np.unique(np.clip(np.searchsorted(taus, targets, side="left"), 0, taus.size - 1))
    if idx.size < min_snapshots:
        raise TrajectoryException(
            f"尾部样本只有 {idx.size} 个，至少需要 {min_snapshots} 个", {"tail_fraction": fraction}
        )
    samples = np.hstack([b1[idx], b2[idx]])
    n1 = b1.shape[1]

    labels = fcluster(linkage(samples, method="single", metric="chebyshev"), t=r, criterion="distance")
    clusters = []
    for label in np.unique(labels):
        members = samples[labels == label]
        center = members.mean(axis=0)
        clusters.append(
            {"center": [center[:n1].tolist(), center[n1:].tolist()], "size": int(members.shape[0])}
        )
    clusters.sort(key=lambda c: -c["size"])

    if equilibria is None:
        equilibria = nash_support_enumeration(game)
    quarter = samples[-max(1, samples.shape[0] // 4) :]
    ne_distances = []
    proximal = False
    for eq in equilibria:
        vec = eq.as_vector()
        d = np.abs(samples - vec).max(axis=1)
        late = float(np.abs(quarter - vec).max(axis=1).max())
        ne_distances.append(
            {
                "equilibrium": [eq.x1.weights.tolist(), eq.x2.weights.tolist()],
                "final": float(d[-1]),
                "tail_min": float(d.min()),
                "last_quarter_max": late,
            }
        )
        proximal = proximal or late <= ne_radius

    set_distance = None
    if nash_distance is not None:
        set_distance = float(nash_distance(MixedProfile(b1[-1], b2[-1])))
        proximal = proximal or all(
            nash_distance(MixedProfile(s[:n1], s[n1:])) <= ne_radius for s in quarter
        )

    cycle = _cycle_analysis(samples, taus[idx], r, cv_limit)
    if proximal:
        classification = "ne_proximal"
    elif cycle["cycling"]:
        classification = "cycling"
    else:
        classification = "unclassified"
    logger.debug(f"极限集估计: {len(clusters)} 个聚点, 分类 {classification}")
    return LimitSetReport(
        clusters=clusters,
        ne_distances=ne_distances,
        hannan_distance=distance_to_hannan(game, z_final),
        cycle=cycle,
        classification=classification,
        tail_fraction=fraction,
        samples=int(idx.size),
        nash_set_distance=set_distance,
        parameters={"radius": r, "cycle_cv": cv_limit, "ne_radius": ne_radius},
    )


def nash_set_distance(
    game: Game, profile: MixedProfile, equilibria: Optional[List[MixedProfile]] = None
) -> float:
    """到纳什集合的 sup 范数距离；目录条目提供连续纳什集合的距离函数时优先使用"""
    from core.catalog import entry_for

    entry = entry_for(game)
    if entry is not None and entry.nash_distance is not None:
        return float(entry.nash_distance(profile))
    equilibria = equilibria if equilibria is not None else nash_support_enumeration(game)
    if not equilibria:
        raise TrajectoryException("没有找到纳什均衡")
    return min(profile_distance(profile, eq) for eq in equilibria)
