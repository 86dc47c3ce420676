"""
连续时间动力学

提供以下功能：
- cfp_integrate: 事件驱动的连续虚拟博弈（分段仿射精确积分，切换时刻由二分求根）
- cont_no_regret_integrate: 连续时间无悔动力学 ż = (q̄(z) - z)/t，在 τ = ln t 下用 RK45 积分
- cfp_state_at: 分段内任意时刻的 x(t), z(t)
- regret_conservation_residual: t·R_max(t) 守恒的数值残差
- potential_conservation_residual: 连续无悔动力学中 t·P(R(t)) 守恒的数值残差
- rescale_to_br_dynamics / unrescale_from_br_dynamics: t ↔ τ = ln t
- piece_cycle: 由分段上的纯反应序列检测循环（Shapley 多边形为六段）

在每一段 [t_a, t_b] 上 q 固定，t·x_i(t) = t_a·x_i(t_a) + (t - t_a)·q_i，
t·z(t) 同理；因此行动收益差的分子是 t 的仿射函数。
"""

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Deque, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import bisect

from core.game_core import (
    Game,
    JointDistribution,
    MixedProfile,
    as_weights,
    regret_values,
)
from core.strategies import (
    LpNorm,
    PotentialSpec,
    StrategySpec,
    best_reply_weights,
    potential_value,
    q1_weights,
)
from modules.YA_Common.utils.config import get_config
from modules.YA_Common.utils.errors import (
    PreconditionViolatedException,
    StalledIntegrationException,
    TrajectoryException,
    UsageException,
)
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("dynamics_continuous")

TIE_POLICIES = ("restricted", "lowest")
BR_TIE_TOL = 1e-9
SLOPE_TOL = 1e-12
MAX_PIECES = 2_000_000
STALL_LIMIT = 1000

OpponentPath = Callable[[float], Any]


@dataclass(eq=False)
class ContinuousTrajectory:
    """
    连续时间解。kind = "cfp" 时 times 为分段断点，q_1/q_2[j] 是第 j 段上的常值混合行动；
    kind = "cont_noregret" 时 times 为 RK 接受步，q 为该点的意图行动。
    time_scale 为 "t"（原始时间）或 "tau"（τ = ln t）。
    """

    game_name: str
    kind: str
    times: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    z: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    regret_max: np.ndarray
    time_scale: str = "t"
    tie_policy: str = ""
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def pieces(self) -> int:
        return max(0, self.times.size - 1)

    def original_times(self) -> np.ndarray:
        return np.exp(self.times) if self.time_scale == "tau" else self.times

    def final_profile(self) -> MixedProfile:
        return MixedProfile(self.x1[-1], self.x2[-1])

    def summary(self) -> Dict[str, Any]:
        return {
            "game": self.game_name,
            "dynamics": self.kind,
            "time_scale": self.time_scale,
            "tie_policy": self.tie_policy,
            "breakpoints": int(self.times.size),
            "final": {
                "t": self.horizon,
                "regret_max": self.regret_max[-1].tolist(),
                "beliefs": [self.x1[-1].tolist(), self.x2[-1].tolist()],
                "z": self.z[-1].tolist(),
            },
            "diagnostics": self.diagnostics,
        }


# -------------------------------
# 连续虚拟博弈
# -------------------------------
def _tied(payoffs: np.ndarray) -> np.ndarray:
    return np.flatnonzero(payoffs >= payoffs.max() - BR_TIE_TOL * max(1.0, abs(payoffs.max())))


def _restricted_equilibrium(
    game: Game, rows: np.ndarray, cols: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """最优反应集合张成的约化博弈中的一个纳什均衡（取支撑枚举的第一个）"""
    from core.equilibrium import nash_support_enumeration

    n1, n2 = game.shape
    q1 = np.zeros(n1)
    q2 = np.zeros(n2)
    if rows.size == 1 and cols.size == 1:
        q1[rows[0]] = 1.0
        q2[cols[0]] = 1.0
        return q1, q2
    reduced = Game(
        game.payoff_1[np.ix_(rows, cols)],
        game.payoff_2[np.ix_(rows, cols)],
        name="reduced",
    )
    eq = nash_support_enumeration(reduced)[0]
    q1[rows] = eq.x1.weights
    q2[cols] = eq.x2.weights
    return q1, q2


def _select(
    game: Game,
    x1: np.ndarray,
    x2: np.ndarray,
    policy: str,
    scripted_q2: Optional[np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    u1, u2 = game.payoff_1, game.payoff_2
    rows = _tied(u1 @ x2)
    if scripted_q2 is not None:
        # 玩家 2 按脚本行动；玩家 1 在最优反应集合内选对脚本行动最有利的一个
        q1 = np.zeros(game.actions_1)
        sub = u1[rows] @ scripted_q2
        q1[rows[int(np.argmax(sub >= sub.max() - SLOPE_TOL))]] = 1.0
        return q1, scripted_q2
    cols = _tied(x1 @ u2)
    if policy == "lowest":
        q1 = np.zeros(game.actions_1)
        q2 = np.zeros(game.actions_2)
        q1[rows[0]] = 1.0
        q2[cols[0]] = 1.0
        return q1, q2
    return _restricted_equilibrium(game, rows, cols)


def _next_switch(
    m: np.ndarray,
    q_own: np.ndarray,
    x_opp: np.ndarray,
    q_opp: np.ndarray,
    t_a: float,
    t_end: float,
    root_tol: float,
) -> Tuple[float, bool]:
    """
    在 (t_a, t_end] 内第一个使某个行动的收益超过当前反应的时刻。
    分子 N_k(t) = t_a·d_k + (t - t_a)·e_k，d_k ≤ 0 为段首差值，e_k 为对 q_opp 的收益差。
    返回 (时刻, 是否在 t_end 之前切换)。
    """
    base_a = q_own @ m @ x_opp
    base_q = q_own @ m @ q_opp
    d = m @ x_opp - base_a
    e = m @ q_opp - base_q
    best = t_end
    switched = False
    for k in range(m.shape[0]):
        if q_own[k] > 0.0 or e[k] <= SLOPE_TOL:
            continue
        dk, ek = float(d[k]), float(e[k])

        def numerator(t: float, dk=dk, ek=ek) -> float:
            return t_a * dk + (t - t_a) * ek

        if numerator(best) <= 0.0:
            continue
        if numerator(t_a) >= 0.0:
            return t_a, True
        best = bisect(numerator, t_a, best, xtol=root_tol)
        switched = True
    return best, switched


def accumulation_remainder(lengths: Sequence[float], window: int, ratio: float) -> Optional[float]:
    """
    最近 window 个相邻分段长度之比都不超过 ratio 时，切换时刻按几何级数聚积，
    返回到极限时刻的剩余时长 ℓ·r/(1 - r)（ℓ 为最后一段，r 为观测到的最大比值）；否则返回 None。
    """
    if window < 1 or len(lengths) < window + 1:
        return None
    tail = [float(v) for v in lengths[-(window + 1) :]]
    if min(tail[:-1]) <= 0.0:
        return None
    r = max(b / a for a, b in zip(tail[:-1], tail[1:]))
    if r > ratio:
        return None
    return tail[-1] * r / (1.0 - r)


def cfp_integrate(
    game: Game,
    x0: Union[MixedProfile, Sequence[Any]],
    T: float,
    z0: Optional[Any] = None,
    tie_policy: str = "restricted",
    root_tol: Optional[float] = None,
    opponent_path: Optional[OpponentPath] = None,
    script_step: float = 0.05,
) -> ContinuousTrajectory:
    """
    连续虚拟博弈 ẋ ∈ (BR(x) - x)/t 在 [1, T] 上的一个分段解。

    Args:
        game (Game): 博弈。
        x0 (MixedProfile): 初始信念 x(1)。
        T (float): 终止时刻，> 1。
        z0 (JointDistribution, optional): 初始相关行动，缺省为 x0 的乘积分布。
        tie_policy (str): "restricted"（约化博弈的纳什均衡）或 "lowest"（最低下标）。
        root_tol (float, optional): 切换时刻二分精度，缺省取 continuous.root_tol。
        opponent_path (callable, optional): 给定时玩家 2 不再最优反应，
            而是在长度为 script_step 的时间格上分段常值地执行 opponent_path(t)。

    Returns:
        ContinuousTrajectory: 断点处的 x、z、R_max 与每段的 q。

    Raises:
        StalledIntegrationException: 切换时刻聚积且无法越过。
    """
    if T <= 1.0:
        raise UsageException(f"T 必须大于 1，当前: {T}")
    if tie_policy not in TIE_POLICIES:
        raise UsageException(f"未知的平局策略: {tie_policy}", {"known": list(TIE_POLICIES)})
    root_tol = float(root_tol or get_config("continuous.root_tol", 1e-10))
    if root_tol <= 0:
        raise UsageException(f"root_tol 必须为正，当前: {root_tol}")
    piece_floor = float(get_config("continuous.piece_floor", 1e-14))
    window = int(get_config("continuous.accumulation_window", 5))
    ratio = float(get_config("continuous.accumulation_ratio", 0.1))
    if not 0.0 < ratio < 1.0:
        raise UsageException(f"continuous.accumulation_ratio 必须在 (0, 1) 内，当前: {ratio}")

    profile = x0 if isinstance(x0, MixedProfile) else MixedProfile(x0[0], x0[1])
    profile = profile.check(game)
    x1 = profile.x1.weights.copy()
    x2 = profile.x2.weights.copy()
    z = np.outer(x1, x2) if z0 is None else JointDistribution(as_weights(z0)).check(game).weights
    if not (np.allclose(z.sum(axis=1), x1, atol=1e-12) and np.allclose(z.sum(axis=0), x2, atol=1e-12)):
        logger.warning("初始 z 的边缘分布与 x0 不一致，守恒律只对 z 的边缘成立")

    u1, u2 = game.payoff_1, game.payoff_2
    m2 = game.own_payoffs(2)
    times: List[float] = [1.0]
    xs1, xs2, zs = [x1.copy()], [x2.copy()], [z.copy()]
    rmax = [_regret_max(game, z)]
    qs1: List[np.ndarray] = []
    qs2: List[np.ndarray] = []

    t = 1.0
    tz = z.copy()
    tx1, tx2 = x1.copy(), x2.copy()
    recent: Deque[Tuple[float, np.ndarray, np.ndarray]] = deque(maxlen=window + 1)
    jumps: List[float] = []
    stalls = 0
    force_restricted = False
    logger.info(f"开始 CFP 积分 {game.name or 'game'}: T={T}, 平局策略={tie_policy}")

    while t < T:
        if len(times) > MAX_PIECES:
            raise StalledIntegrationException(
                "CFP 分段数超过上限", {"t": t, "pieces": len(times) - 1}
            )
        policy = "restricted" if force_restricted else tie_policy
        cur1, cur2 = tx1 / t, tx2 / t
        t_end = T
        scripted = None
        if opponent_path is not None:
            scripted = np.asarray(as_weights(opponent_path(t)), dtype=float)
            t_end = min(T, t + script_step)
        q1, q2 = _select(game, cur1, cur2, policy, scripted)

        s1, _ = _next_switch(u1, q1, cur2, q2, t, t_end, root_tol)
        s2 = t_end
        if scripted is None:
            s2, _ = _next_switch(m2, q2, cur1, q1, t, t_end, root_tol)
        t_next = min(s1, s2)

        if t_next - t < piece_floor:
            stalls += 1
            if policy == "lowest":
                # 最低下标选择在平局处立即被打破，这一段改用约化博弈均衡
                force_restricted = True
                continue
            if stalls > STALL_LIMIT:
                raise StalledIntegrationException(
                    "分段长度持续低于下限且没有进展",
                    {"t": t, "piece_floor": piece_floor, "stalls": stalls},
                )
            t_next = min(T, t + max(piece_floor, 8.0 * float(np.spacing(t))))
        else:
            stalls = 0
            force_restricted = False

        length = t_next - t
        tx1 = tx1 + length * q1
        tx2 = tx2 + length * q2
        tz = tz + length * np.outer(q1, q2)
        t = t_next
        qs1.append(q1)
        qs2.append(q2)
        times.append(t)
        xs1.append(tx1 / t)
        xs2.append(tx2 / t)
        zs.append(tz / t)
        rmax.append(_regret_max(game, tz / t))

        recent.append((length, q1, q2))
        remaining = accumulation_remainder([r[0] for r in recent], window, ratio)
        if remaining is not None and t < T:
            # 几何收缩的切换时刻：直接跳到外推的极限时刻 t* 并在那里重新进入
            remaining = min(remaining, T - t)
            weights = np.array([r[0] for r in recent])
            weights = weights / weights.sum()
            qa1 = sum(w * r[1] for w, r in zip(weights, recent))
            qa2 = sum(w * r[2] for w, r in zip(weights, recent))
            tz = tz + remaining * sum(w * np.outer(r[1], r[2]) for w, r in zip(weights, recent))
            tx1 = tx1 + remaining * qa1
            tx2 = tx2 + remaining * qa2
            t = t + remaining
            qs1.append(qa1)
            qs2.append(qa2)
            times.append(t)
            xs1.append(tx1 / t)
            xs2.append(tx2 / t)
            zs.append(tz / t)
            rmax.append(_regret_max(game, tz / t))
            jumps.append(t)
            logger.debug(f"切换时刻在 t={t:.12g} 处聚积，跳到极限点后按约化博弈均衡重新进入")
            force_restricted = True
            recent.clear()

    logger.info(f"CFP 积分结束: {len(times) - 1} 段, R_max(T)={rmax[-1]}")
    return ContinuousTrajectory(
        game_name=game.name,
        kind="cfp",
        times=np.array(times),
        x1=np.array(xs1),
        x2=np.array(xs2),
        z=np.array(zs),
        q1=np.array(qs1).reshape(-1, game.actions_1),
        q2=np.array(qs2).reshape(-1, game.actions_2),
        regret_max=np.array(rmax),
        tie_policy=tie_policy,
        diagnostics={
            "pieces": len(times) - 1,
            "accumulations": len(jumps),
            "accumulation_times": jumps,
            "root_tol": root_tol,
            "scripted_opponent": opponent_path is not None,
        },
    )


def _regret_max(game: Game, z: np.ndarray) -> Tuple[float, float]:
    return float(regret_values(game, 1, z).max()), float(regret_values(game, 2, z).max())


def cfp_state_at(traj: ContinuousTrajectory, t: float) -> Tuple[MixedProfile, JointDistribution]:
    """分段内的精确求值：t·x(t) = t_j·x(t_j) + (t - t_j)·q_j"""
    if traj.kind != "cfp":
        raise TrajectoryException("cfp_state_at 只适用于 CFP 轨迹")
    times = traj.original_times()
    if not times[0] <= t <= times[-1]:
        raise UsageException(f"t={t} 不在 [{times[0]}, {times[-1]}] 内")
    j = int(np.searchsorted(times, t, side="right")) - 1
    if j >= traj.pieces:
        return MixedProfile(traj.x1[-1], traj.x2[-1]), JointDistribution(traj.z[-1])
    t_j = times[j]
    x1 = (t_j * traj.x1[j] + (t - t_j) * traj.q1[j]) / t
    x2 = (t_j * traj.x2[j] + (t - t_j) * traj.q2[j]) / t
    z = (t_j * traj.z[j] + (t - t_j) * np.outer(traj.q1[j], traj.q2[j])) / t
    return MixedProfile(x1, x2), JointDistribution(z / z.sum())


def regret_conservation_residual(traj: ContinuousTrajectory) -> Tuple[float, float]:
    """每个玩家在所有断点上 |t·R_max(t) - t_0·R_max(t_0)| 的最大值"""
    times = traj.original_times()
    r0 = traj.regret_max[0]
    if np.any(r0 <= 0.0):
        logger.warning(f"初始 R_max 非正 {r0.tolist()}，守恒残差只在 R_max 达到最优反应时有意义")
    scaled = times[:, None] * traj.regret_max
    residual = np.max(np.abs(scaled - times[0] * r0[None, :]), axis=0)
    return float(residual[0]), float(residual[1])


def piece_cycle(traj: ContinuousTrajectory, window: int = 60, max_period: int = 30) -> Optional[Dict]:
    """
    在最后 window 段上寻找纯反应组合序列的最小周期。
    返回 {"period": p, "profiles": [...]}；没有周期时返回 None。
    """
    if traj.kind != "cfp" or traj.pieces < 2:
        return None
    seq = [(int(np.argmax(a)), int(np.argmax(b))) for a, b in zip(traj.q1, traj.q2)]
    # 合并相邻相同的组合（平局处可能被拆成多段）
    merged = [seq[0]]
    for s in seq[1:]:
        if s != merged[-1]:
            merged.append(s)
    tail = merged[-window:]
    for p in range(1, min(max_period, len(tail) // 2) + 1):
        if all(tail[i] == tail[i + p] for i in range(len(tail) - p)):
            return {"period": p, "profiles": tail[-p:]}
    return None


# -------------------------------
# 连续时间无悔动力学
# -------------------------------
def _potential(spec: Union[PotentialSpec, StrategySpec]) -> PotentialSpec:
    if isinstance(spec, StrategySpec):
        if spec.kind != "potential":
            raise UsageException(f"连续无悔动力学需要势函数策略，当前: {spec.descriptor}")
        return spec.potential
    return spec


def _nonpositive_steps(times: np.ndarray, rmax: np.ndarray, limit: int = 20) -> Dict[str, Any]:
    """R_max ≤ 0 的接受步：总数与前 limit 个时刻"""
    bad = np.flatnonzero(np.any(rmax <= 0.0, axis=1))
    return {"count": int(bad.size), "times": [float(times[k]) for k in bad[:limit]]}


def cont_no_regret_integrate(
    game: Game,
    specs: Tuple[Any, Any],
    z1: Any,
    T: float,
    rtol: Optional[float] = None,
    max_step_fraction: Optional[float] = None,
) -> ContinuousTrajectory:
    """
    积分 ż = (q̄(z) - z)/t，q̄ = q_1 ⊗ q_2，q_i 为对 R_i(z) 使用规则 Q1 得到的混合行动。

    状态取缩放遗憾 S_i = t·R_i 与质量 M = t·z。遗憾对 z 线性，所以
    dS_i/dt = R_i(q̄)，dM/dt = q̄；S 保持在遗憾本身的量级上，
    守恒量 t·P(R) = P(S) 不受 z 各分量相减的舍入影响。
    在 τ = ln t 下用 RK45 自适应积分，步长上限 ln(1 + max_step_fraction)
    等价于 Δt ≤ max_step_fraction·t。

    Raises:
        PreconditionViolatedException: 初始 R_{i,max} ≤ 0。
        StalledIntegrationException: 积分器失败。
    """
    if T <= 1.0:
        raise UsageException(f"T 必须大于 1，当前: {T}")
    p1, p2 = _potential(specs[0]), _potential(specs[1])
    z_init = JointDistribution(as_weights(z1)).check(game).weights
    r_init = _regret_max(game, z_init)
    if min(r_init) <= 0.0:
        raise PreconditionViolatedException(
            "连续无悔动力学要求两个玩家的初始最大遗憾都为正", {"regret_max": list(r_init)}
        )
    rtol = float(rtol or get_config("continuous.rtol", 1e-8))
    fraction = float(max_step_fraction or get_config("continuous.max_step_fraction", 0.01))
    shape = game.shape
    n1, n2 = shape

    def play(spec: PotentialSpec, s: np.ndarray, t: float, player: int, m: np.ndarray) -> np.ndarray:
        if s.max() <= 0.0:
            opp = m.sum(axis=0) if player == 1 else m.sum(axis=1)
            return best_reply_weights(game, player, opp / opp.sum())
        # l_p 势函数的 Q1 方向与遗憾的正缩放无关
        return q1_weights(spec, s if isinstance(spec, LpNorm) else s / t)

    def unpack(tau: float, y: np.ndarray):
        t = math.exp(tau)
        s1, s2, m = y[:n1], y[n1 : n1 + n2], y[n1 + n2 :].reshape(shape)
        return t, s1, s2, m, play(p1, s1, t, 1, m), play(p2, s2, t, 2, m)

    def rhs(tau: float, y: np.ndarray) -> np.ndarray:
        t, _, _, _, q1, q2 = unpack(tau, y)
        qbar = np.outer(q1, q2)
        return t * np.concatenate(
            [regret_values(game, 1, qbar), regret_values(game, 2, qbar), qbar.ravel()]
        )

    y0 = np.concatenate(
        [regret_values(game, 1, z_init), regret_values(game, 2, z_init), z_init.ravel()]
    )
    logger.info(f"开始连续无悔积分 {game.name or 'game'}: T={T}, rtol={rtol}")
    sol = solve_ivp(
        rhs,
        (0.0, math.log(T)),
        y0,
        method="RK45",
        rtol=rtol,
        atol=1e-12,
        max_step=math.log1p(fraction),
    )
    if sol.status < 0:
        raise StalledIntegrationException(f"RK 积分失败: {sol.message}", {"tau": float(sol.t[-1])})

    taus = sol.t
    times = np.exp(taus)
    states = [unpack(tau, y) for tau, y in zip(taus, sol.y.T)]
    r1 = np.array([st[1] for st in states]) / times[:, None]
    r2 = np.array([st[2] for st in states]) / times[:, None]
    zs = np.array([st[3] for st in states])
    zs = zs / zs.sum(axis=(1, 2))[:, None, None]
    rmax = np.column_stack([r1.max(axis=1), r2.max(axis=1)])
    scaled_p = times[:, None] * np.array(
        [(potential_value(p1, a), potential_value(p2, b)) for a, b in zip(r1, r2)]
    )
    nonpositive = _nonpositive_steps(times, rmax)
    if nonpositive["count"]:
        logger.warning(
            f"{nonpositive['count']} 个接受步出现 R_max ≤ 0，最早在 t={nonpositive['times'][0]:.6g}"
        )
    traj = ContinuousTrajectory(
        game_name=game.name,
        kind="cont_noregret",
        times=times,
        x1=zs.sum(axis=2),
        x2=zs.sum(axis=1),
        z=zs,
        q1=np.array([st[4] for st in states]),
        q2=np.array([st[5] for st in states]),
        regret_max=rmax,
        diagnostics={
            "steps": int(taus.size),
            "rtol": rtol,
            "positive_throughout": nonpositive["count"] == 0,
            "nonpositive_steps": nonpositive,
            "potential_residual": np.max(np.abs(scaled_p - scaled_p[0]), axis=0).tolist(),
        },
    )
    logger.info(f"连续无悔积分结束: {taus.size} 步, R_max(T)={rmax[-1].tolist()}")
    return traj


def potential_conservation_residual(traj: ContinuousTrajectory) -> Tuple[float, float]:
    """l_p 势函数一阶齐次，因此 t·P(R(t)) 沿连续无悔解守恒"""
    if traj.kind != "cont_noregret":
        raise TrajectoryException("只适用于连续无悔动力学轨迹")
    r = traj.diagnostics["potential_residual"]
    return float(r[0]), float(r[1])


# -------------------------------
# 时间尺度变换
# -------------------------------
def rescale_to_br_dynamics(traj: ContinuousTrajectory) -> ContinuousTrajectory:
    """τ = ln t：CFP 化为最优反应动力学 ẏ ∈ BR(y) - y"""
    if traj.time_scale == "tau":
        return traj
    return replace(traj, times=np.log(traj.times), time_scale="tau")


def unrescale_from_br_dynamics(traj: ContinuousTrajectory) -> ContinuousTrajectory:
    if traj.time_scale == "t":
        return traj
    return replace(traj, times=np.exp(traj.times), time_scale="t")
