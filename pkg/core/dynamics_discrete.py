"""
离散时间动力学引擎

提供以下功能：
- step_no_regret: 类 R 随机无悔动力学的一步（按 q_i(t+1) 抽样实现行动）
- step_expected: 期望无悔动力学的一步（增量为乘积分布 q_1 ⊗ q_2）
- step_dfp: 离散虚拟博弈的一步（对对手信念的纯最优反应，平局规则可选）
- run: 从初始状态迭代到 T，按记录计划保存快照，并记录每一期的 (a(t), q(t), R_max)
- run_batch: 多个独立运行（随机流由 (主种子, 运行编号) 派生），进程池并行
- schedule_periods: 记录计划（几何比例 / 每期 / 显式列表）
- 轨迹级检查：orthogonality_residuals, sign_persistence_violations, q2_constancy_drift

遗憾以 S_i = t·R_i(t) 的形式增量维护，使用 Kahan 补偿求和；平均博弈以 t·z(t) 的形式累积，
实现行动时为精确的整数计数。
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.game_core import (
    Game,
    JointDistribution,
    MixedAction,
    MixedProfile,
    RegretVector,
    TIE_ATOL,
    as_weights,
    regret_values,
)
from core.strategies import (
    ConstantAction,
    FallbackPolicy,
    StrategySpec,
    fallback_weights,
    mixed_action,
    orthogonality_residual,
    parse_strategy,
)
from modules.YA_Common.utils.config import get_config
from modules.YA_Common.utils.errors import (
    TrajectoryException,
    UsageException,
)
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("dynamics_discrete")

DYNAMICS = ("stochastic", "expected", "dfp")
TIE_RULES = ("lowest", "stay", "random")
RECOMPUTE_TOL = 1e-9


# -------------------------------
# 随机数
# -------------------------------
@dataclass(frozen=True)
class RngStream:
    """(seed, stream) 唯一确定一条随机流"""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.default_rng(seq)

    def uniforms(self, block: int = 4096) -> "UniformSource":
        return UniformSource(self.generator(), block)


class UniformSource:
    """按块预取的 [0, 1) 均匀数；消费顺序固定，逐个取与整块取得到同一序列"""

    def __init__(self, generator: np.random.Generator, block: int = 4096):
        self._gen = generator
        self._block = block
        self._buf = generator.random(block)
        self._pos = 0

    def next(self) -> float:
        if self._pos == self._block:
            self._buf = self._gen.random(self._block)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)


def _source(rng: Union[RngStream, UniformSource, np.random.Generator]) -> UniformSource:
    if isinstance(rng, UniformSource):
        return rng
    if isinstance(rng, RngStream):
        return rng.uniforms()
    if isinstance(rng, np.random.Generator):
        return UniformSource(rng)
    raise UsageException(f"不支持的随机源类型: {type(rng).__name__}")


def sample_action(q: np.ndarray, u: float) -> int:
    cs = np.cumsum(q)
    k = int(np.searchsorted(cs, u * cs[-1], side="right"))
    return min(k, q.size - 1)


# -------------------------------
# 状态
# -------------------------------
@dataclass(frozen=True, eq=False)
class SimState:
    """
    第 t 期的状态。内部以质量形式保存：mass = t·z(t)，regret_sums = t·R_i(t)，
    belief_mass = t·x_i(t)；z、regrets、beliefs 为派生属性。
    """

    t: int
    mass: np.ndarray
    regret_sums: Tuple[np.ndarray, np.ndarray]
    belief_mass: Tuple[np.ndarray, np.ndarray]
    compensation: Tuple[np.ndarray, np.ndarray]
    last_realized: Optional[Tuple[int, int]] = None
    last_mixed: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @property
    def z(self) -> JointDistribution:
        return JointDistribution(self.mass / self.mass.sum())

    @property
    def regrets(self) -> Tuple[RegretVector, RegretVector]:
        return (
            RegretVector(1, self.regret_sums[0] / self.t),
            RegretVector(2, self.regret_sums[1] / self.t),
        )

    @property
    def beliefs(self) -> MixedProfile:
        b1, b2 = self.belief_mass
        return MixedProfile(MixedAction(b1 / b1.sum()), MixedAction(b2 / b2.sum()))

    @property
    def mixed(self) -> Optional[MixedProfile]:
        if self.last_mixed is None:
            return None
        return MixedProfile(MixedAction(self.last_mixed[0]), MixedAction(self.last_mixed[1]))


@dataclass(frozen=True, eq=False)
class InitialCondition:
    """
    初始状态：
    - uniform: 第 1 期的行动组合均匀随机抽取（缺省）
    - fallback: 第 1 期由兜底策略给出（对均匀信念的最优反应或常数行动）
    - counts: 给定历史的计数矩阵，t0 = 计数总和（单个组合或历史列表也化为计数）
    - distribution: 给定 z(t0) 与 t0
    """

    kind: str = "uniform"
    counts: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    t0: int = 1

    @classmethod
    def at_profile(cls, a1: int, a2: int, shape: Tuple[int, int]) -> "InitialCondition":
        return cls.from_history([(a1, a2)], shape)

    @classmethod
    def from_history(
        cls, history: Sequence[Tuple[int, int]], shape: Tuple[int, int]
    ) -> "InitialCondition":
        if not history:
            raise UsageException("初始历史不能为空")
        counts = np.zeros(shape, dtype=np.int64)
        for a1, a2 in history:
            counts[a1, a2] += 1
        return cls("counts", counts=counts, t0=len(history))

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "InitialCondition":
        counts = np.asarray(counts, dtype=np.int64)
        if counts.min() < 0 or counts.sum() < 1:
            raise UsageException("初始计数必须非负且总和 ≥ 1")
        return cls("counts", counts=counts, t0=int(counts.sum()))

    @classmethod
    def from_distribution(cls, z: Any, t0: int) -> "InitialCondition":
        if t0 < 1:
            raise UsageException(f"t0 必须 ≥ 1，当前: {t0}")
        return cls("distribution", z=JointDistribution(as_weights(z)).weights, t0=int(t0))

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind, "t0": self.t0}
        if self.counts is not None:
            out["counts"] = self.counts.tolist()
        if self.z is not None:
            out["z"] = self.z.tolist()
        return out


def _state_from_mass(game: Game, mass: np.ndarray, t: int, realized=None) -> SimState:
    z = mass / t
    return SimState(
        t=t,
        mass=mass,
        regret_sums=(t * regret_values(game, 1, z), t * regret_values(game, 2, z)),
        belief_mass=(mass.sum(axis=1), mass.sum(axis=0)),
        compensation=(np.zeros(game.actions_1), np.zeros(game.actions_2)),
        last_realized=realized,
    )


def initial_state(
    game: Game,
    initial: Optional[InitialCondition] = None,
    rng: Union[RngStream, UniformSource, np.random.Generator, None] = None,
    fallbacks: Tuple[FallbackPolicy, FallbackPolicy] = (ConstantAction(0), ConstantAction(0)),
) -> SimState:
    """由初始条件构造第 t0 期的状态"""
    initial = initial or InitialCondition()
    n1, n2 = game.shape
    if initial.kind == "uniform":
        if rng is None:
            raise UsageException("均匀随机初始状态需要随机源")
        src = _source(rng)
        a1 = min(int(src.next() * n1), n1 - 1)
        a2 = min(int(src.next() * n2), n2 - 1)
        mass = np.zeros((n1, n2))
        mass[a1, a2] = 1.0
        return _state_from_mass(game, mass, 1, (a1, a2))
    if initial.kind == "fallback":
        a1 = int(np.argmax(fallback_weights(fallbacks[0], game, 1, np.full(n2, 1.0 / n2))))
        a2 = int(np.argmax(fallback_weights(fallbacks[1], game, 2, np.full(n1, 1.0 / n1))))
        mass = np.zeros((n1, n2))
        mass[a1, a2] = 1.0
        return _state_from_mass(game, mass, 1, (a1, a2))
    if initial.kind == "counts":
        if initial.counts.shape != game.shape:
            raise UsageException("初始计数矩阵与博弈维度不符")
        mass = initial.counts.astype(float)
        realized = None
        if initial.t0 == 1:
            a1, a2 = np.unravel_index(int(np.argmax(mass)), mass.shape)
            realized = (int(a1), int(a2))
        return _state_from_mass(game, mass, initial.t0, realized)
    if initial.kind == "distribution":
        if initial.z.shape != game.shape:
            raise UsageException("初始分布与博弈维度不符")
        return _state_from_mass(game, initial.z * initial.t0, initial.t0)
    raise UsageException(f"未知的初始条件类型: {initial.kind}")


# -------------------------------
# 单步推进（可变工作区）
# -------------------------------
class _Work:
    """run 的热路径工作区；step_* 公共函数复用同一套推进代码"""

    def __init__(self, game: Game, state: SimState):
        self.game = game
        self.u1 = game.payoff_1
        self.u2 = game.payoff_2
        self.t = state.t
        self.mass = np.array(state.mass, dtype=float)
        self.S = [np.array(state.regret_sums[0]), np.array(state.regret_sums[1])]
        self.C = [np.array(state.compensation[0]), np.array(state.compensation[1])]
        self.bm = [np.array(state.belief_mass[0]), np.array(state.belief_mass[1])]
        self.last_a = state.last_realized
        self.last_q = state.last_mixed

    def freeze(self) -> SimState:
        return SimState(
            t=self.t,
            mass=self.mass.copy(),
            regret_sums=(self.S[0].copy(), self.S[1].copy()),
            belief_mass=(self.bm[0].copy(), self.bm[1].copy()),
            compensation=(self.C[0].copy(), self.C[1].copy()),
            last_realized=self.last_a,
            last_mixed=self.last_q,
        )

    def _kahan(self, i: int, inc: np.ndarray) -> None:
        y = inc - self.C[i]
        tmp = self.S[i] + y
        self.C[i] = (tmp - self.S[i]) - y
        self.S[i] = tmp

    def realize(self, a1: int, a2: int) -> None:
        u1, u2 = self.u1, self.u2
        self._kahan(0, u1[:, a2] - u1[a1, a2])
        self._kahan(1, u2[a1, :] - u2[a1, a2])
        self.mass[a1, a2] += 1.0
        self.bm[0][a1] += 1.0
        self.bm[1][a2] += 1.0
        self.t += 1
        self.last_a = (a1, a2)

    def expect(self, q1: np.ndarray, q2: np.ndarray) -> None:
        r1 = self.u1 @ q2
        r2 = q1 @ self.u2
        self._kahan(0, r1 - q1 @ r1)
        self._kahan(1, r2 - r2 @ q2)
        self.mass += np.outer(q1, q2)
        self.bm[0] += q1
        self.bm[1] += q2
        self.t += 1
        self.last_a = None

    def regrets(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.S[0] / self.t, self.S[1] / self.t

    def beliefs(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.bm[0] / self.t, self.bm[1] / self.t

    def intentions(self, strategies, fallbacks) -> Tuple[np.ndarray, np.ndarray, bool, bool]:
        r1, r2 = self.regrets()
        x1, x2 = self.beliefs()
        q1, f1 = mixed_action(strategies[0], fallbacks[0], self.game, 1, r1, x2, self.t)
        q2, f2 = mixed_action(strategies[1], fallbacks[1], self.game, 2, r2, x1, self.t)
        self.last_q = (q1, q2)
        return q1, q2, f1, f2

    def dfp_choice(self, player: int, tie_rule: str, src: Optional[UniformSource]) -> int:
        x1, x2 = self.beliefs()
        payoffs = self.u1 @ x2 if player == 1 else x1 @ self.u2
        ties = np.flatnonzero(payoffs >= payoffs.max() - TIE_ATOL)
        if ties.size == 1 or tie_rule == "lowest":
            return int(ties[0])
        if tie_rule == "stay":
            prev = None if self.last_a is None else self.last_a[player - 1]
            return int(prev) if prev is not None and prev in ties else int(ties[0])
        if src is None:
            raise UsageException("random 平局规则需要随机源")
        return int(ties[min(int(src.next() * ties.size), ties.size - 1)])

    def recompute_drift(self) -> float:
        z = self.mass / self.t
        d1 = np.max(np.abs(self.S[0] / self.t - regret_values(self.game, 1, z)))
        d2 = np.max(np.abs(self.S[1] / self.t - regret_values(self.game, 2, z)))
        return float(max(d1, d2))


def _as_pair(x, what: str):
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return tuple(x)
    return (x, x)


def step_no_regret(
    game: Game,
    specs: Tuple[StrategySpec, StrategySpec],
    fallbacks: Tuple[FallbackPolicy, FallbackPolicy],
    state: SimState,
    rng: Union[UniformSource, RngStream, np.random.Generator],
) -> SimState:
    """
    随机无悔动力学的一步：各玩家独立地从 next_action 给出的 q_i(t+1) 中抽取行动，
    再用实现的点质量更新平均博弈与遗憾。
    """
    work = _Work(game, state)
    src = _source(rng)
    q1, q2, _, _ = work.intentions(_as_pair(specs, "specs"), _as_pair(fallbacks, "fallbacks"))
    work.realize(sample_action(q1, src.next()), sample_action(q2, src.next()))
    return work.freeze()


def step_expected(
    game: Game,
    specs: Tuple[StrategySpec, StrategySpec],
    fallbacks: Tuple[FallbackPolicy, FallbackPolicy],
    state: SimState,
) -> SimState:
    """期望无悔动力学的一步：增量为 q_1 ⊗ q_2，确定性"""
    work = _Work(game, state)
    q1, q2, _, _ = work.intentions(_as_pair(specs, "specs"), _as_pair(fallbacks, "fallbacks"))
    work.expect(q1, q2)
    return work.freeze()


def step_dfp(
    game: Game,
    state: SimState,
    tie_rule: str = "lowest",
    rng: Union[UniformSource, RngStream, np.random.Generator, None] = None,
) -> SimState:
    """离散虚拟博弈的一步：每个玩家对对手当前信念选择纯的精确最优反应"""
    if tie_rule not in TIE_RULES:
        raise UsageException(f"未知的平局规则: {tie_rule}", {"known": list(TIE_RULES)})
    work = _Work(game, state)
    src = _source(rng) if rng is not None else None
    a1 = work.dfp_choice(1, tie_rule, src)
    a2 = work.dfp_choice(2, tie_rule, src)
    work.realize(a1, a2)
    return work.freeze()


# -------------------------------
# 轨迹
# -------------------------------
@dataclass(frozen=True, eq=False)
class Snapshot:
    t: int
    z: np.ndarray
    regrets: Tuple[np.ndarray, np.ndarray]

    @property
    def beliefs(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.z.sum(axis=1), self.z.sum(axis=0)

    @property
    def regret_max(self) -> Tuple[float, float]:
        return float(self.regrets[0].max()), float(self.regrets[1].max())


@dataclass(eq=False)
class Trajectory:
    """
    一次模拟的完整记录。actions/mixed/regret_max/fallback_used 按期保存
    （第 t0+1 期到第 T 期）；snapshots 按记录计划保存。
    期望动力学没有实现行动，actions 为 -1。
    """

    game_name: str
    dynamics: str
    t0: int
    horizon: int
    seed: int
    stream: int
    descriptors: Tuple[str, str]
    fallbacks: Tuple[str, str]
    initial_z: np.ndarray
    initial_regrets: Tuple[np.ndarray, np.ndarray]
    actions: np.ndarray
    mixed: Tuple[Optional[np.ndarray], Optional[np.ndarray]]
    regret_max: np.ndarray
    fallback_used: np.ndarray
    snapshots: List[Snapshot]
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    initial: Dict[str, Any] = field(default_factory=dict)

    @property
    def periods(self) -> np.ndarray:
        return np.arange(self.t0 + 1, self.horizon + 1)

    @property
    def has_actions(self) -> bool:
        return self.actions.size > 0 and bool(np.all(self.actions >= 0))

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    @property
    def initial_regret_max(self) -> Tuple[float, float]:
        return float(self.initial_regrets[0].max()), float(self.initial_regrets[1].max())

    def regret_max_path(self) -> Tuple[np.ndarray, np.ndarray]:
        """第 t0..T 期的 R_max（含初始期）"""
        head = np.array([self.initial_regret_max])
        full = np.vstack([head, self.regret_max]) if self.regret_max.size else head
        return np.arange(self.t0, self.horizon + 1), full

    def belief_path(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        每期信念 x_i(t)，t = t0..T。
        实现行动的增量为点质量，期望动力学的增量为 q_i。
        """
        n1, n2 = self.initial_z.shape
        inc1 = self._increments(0, n1)
        inc2 = self._increments(1, n2)
        m1 = np.vstack([self.t0 * self.initial_z.sum(axis=1), inc1]).cumsum(axis=0)
        m2 = np.vstack([self.t0 * self.initial_z.sum(axis=0), inc2]).cumsum(axis=0)
        periods = np.arange(self.t0, self.horizon + 1)
        return periods, m1 / periods[:, None], m2 / periods[:, None]

    def _increments(self, player: int, n: int) -> np.ndarray:
        if self.has_actions:
            return np.eye(n)[self.actions[:, player]]
        if self.actions.size == 0:
            return np.zeros((0, n))
        q = self.mixed[player]
        if q is None:
            raise TrajectoryException("期望动力学轨迹缺少每期的混合行动记录")
        return q

    def summary(self) -> Dict[str, Any]:
        final = self.final
        return {
            "game": self.game_name,
            "dynamics": self.dynamics,
            "t0": self.t0,
            "horizon": self.horizon,
            "seed": self.seed,
            "stream": self.stream,
            "strategies": list(self.descriptors),
            "fallbacks": list(self.fallbacks),
            "initial": self.initial,
            "final": {
                "t": final.t,
                "regret_max": list(final.regret_max),
                "beliefs": [b.tolist() for b in final.beliefs],
                "z": final.z.tolist(),
            },
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True, eq=False)
class RunConfig:
    """单次运行的配置"""

    strategies: Tuple[StrategySpec, StrategySpec]
    horizon: int
    dynamics: str = "stochastic"
    fallbacks: Tuple[FallbackPolicy, FallbackPolicy] = (ConstantAction(0), ConstantAction(0))
    seed: int = 0
    stream: int = 0
    schedule: Union[str, float, Sequence[int]] = 1.1
    initial: InitialCondition = field(default_factory=InitialCondition)
    tie_rule: str = "lowest"
    debug_checks: bool = field(
        default_factory=lambda: bool(get_config("dynamics.debug_checks", False))
    )
    recompute_every: int = field(
        default_factory=lambda: int(get_config("dynamics.recompute_every", 1000))
    )
    record_mixed: bool = True

    @classmethod
    def from_descriptors(
        cls, strategy_1: str, strategy_2: Optional[str] = None, **kwargs
    ) -> "RunConfig":
        s1 = parse_strategy(strategy_1)
        s2 = parse_strategy(strategy_2 or strategy_1)
        return cls(strategies=(s1, s2), **kwargs)


def schedule_periods(
    t0: int, horizon: int, schedule: Union[str, float, Sequence[int]] = 1.1
) -> np.ndarray:
    """
    记录计划：
    - 浮点数 r > 1：几何计划 t_{k+1} = max(t_k + 1, ⌊r·t_k⌋)，总包含 t0 与 T
    - "every"：每一期
    - 整数序列：显式期数（截断到 [t0, T]，补上 t0 与 T）
    """
    if horizon < t0:
        raise UsageException(f"T 必须 ≥ t0，当前 T={horizon}, t0={t0}")
    if isinstance(schedule, str):
        if schedule == "every":
            return np.arange(t0, horizon + 1)
        try:
            schedule = float(schedule)
        except ValueError:
            raise UsageException(f"无法识别的记录计划: {schedule!r}")
    if isinstance(schedule, (int, float)) and not isinstance(schedule, bool):
        ratio = float(schedule)
        if ratio <= 1.0:
            raise UsageException(f"几何记录比例必须 > 1，当前: {ratio}")
        periods = [t0]
        p = t0
        while True:
            p = max(p + 1, int(math.floor(p * ratio)))
            if p >= horizon:
                break
            periods.append(p)
        if periods[-1] != horizon:
            periods.append(horizon)
        return np.array(periods, dtype=np.int64)
    explicit = {int(p) for p in schedule if t0 <= int(p) <= horizon}
    explicit.update({t0, horizon})
    return np.array(sorted(explicit), dtype=np.int64)


def run(game: Game, config: RunConfig) -> Trajectory:
    """
    从配置的初始状态迭代所选动力学到 T。

    Args:
        game (Game): 博弈。
        config (RunConfig): 动力学类型、策略、兜底策略、T、种子、记录计划与初始条件。

    Returns:
        Trajectory: 同一配置重复运行得到逐位相同的记录。

    Raises:
        UsageException: 配置无效。
        ZeroGradientException: 势函数梯度归一化下溢。
    """
    if config.dynamics not in DYNAMICS:
        raise UsageException(f"未知的离散动力学: {config.dynamics}", {"known": list(DYNAMICS)})
    if config.tie_rule not in TIE_RULES:
        raise UsageException(f"未知的平局规则: {config.tie_rule}", {"known": list(TIE_RULES)})
    if config.horizon < 1:
        raise UsageException(f"T 必须 ≥ 1，当前: {config.horizon}")
    strategies = _as_pair(config.strategies, "strategies")
    fallbacks = _as_pair(config.fallbacks, "fallbacks")
    src = RngStream(config.seed, config.stream).uniforms()
    state = initial_state(game, config.initial, src, fallbacks)
    t0 = state.t
    if config.horizon < t0:
        raise UsageException(f"T={config.horizon} 小于初始期 t0={t0}")
    logger.info(
        f"开始运行 {config.dynamics} on {game.name or 'game'}: "
        f"T={config.horizon}, seed={config.seed}, stream={config.stream}"
    )

    n1, n2 = game.shape
    steps = config.horizon - t0
    actions = np.full((steps, 2), -1, dtype=np.int64)
    mixed1 = np.zeros((steps, n1)) if config.record_mixed else None
    mixed2 = np.zeros((steps, n2)) if config.record_mixed else None
    rmax = np.zeros((steps, 2))
    used = np.zeros((steps, 2), dtype=bool)
    schedule = schedule_periods(t0, config.horizon, config.schedule)
    snapshots: List[Snapshot] = []

    work = _Work(game, state)
    initial_regrets = work.regrets()
    next_record = 0
    if schedule[0] == t0:
        snapshots.append(Snapshot(t0, work.mass / t0, initial_regrets))
        next_record = 1

    ortho_max = 0.0
    drift_max = 0.0
    kind = config.dynamics
    for step in range(steps):
        if kind == "dfp":
            a1 = work.dfp_choice(1, config.tie_rule, src)
            a2 = work.dfp_choice(2, config.tie_rule, src)
            q1 = np.eye(n1)[a1]
            q2 = np.eye(n2)[a2]
            work.realize(a1, a2)
            actions[step] = (a1, a2)
        else:
            q1, q2, f1, f2 = work.intentions(strategies, fallbacks)
            used[step] = (f1, f2)
            if config.debug_checks:
                ortho_max = max(
                    ortho_max,
                    orthogonality_residual(game, 1, q1),
                    orthogonality_residual(game, 2, q2),
                )
            if kind == "stochastic":
                a1 = sample_action(q1, src.next())
                a2 = sample_action(q2, src.next())
                work.realize(a1, a2)
                actions[step] = (a1, a2)
            else:
                work.expect(q1, q2)
        if mixed1 is not None:
            mixed1[step] = q1
            mixed2[step] = q2
        r1, r2 = work.regrets()
        rmax[step] = (r1.max(), r2.max())
        if config.debug_checks and (step + 1) % config.recompute_every == 0:
            drift = work.recompute_drift()
            drift_max = max(drift_max, drift)
            if drift > RECOMPUTE_TOL:
                logger.warning(f"增量遗憾与重算偏差 {drift:.3e} 超过 {RECOMPUTE_TOL}")
        if next_record < schedule.size and work.t == schedule[next_record]:
            snapshots.append(Snapshot(work.t, work.mass / work.t, (r1.copy(), r2.copy())))
            next_record += 1

    diagnostics: Dict[str, Any] = {
        "final_recompute_drift": work.recompute_drift(),
        "min_max_regret_after_start": float(rmax.max(axis=1).min()) if steps else None,
    }
    if config.debug_checks:
        diagnostics["orthogonality_max"] = ortho_max
        diagnostics["recompute_drift_max"] = drift_max
    logger.info(
        f"运行结束: t={work.t}, R_max=({rmax[-1, 0] if steps else initial_regrets[0].max():.4g}, "
        f"{rmax[-1, 1] if steps else initial_regrets[1].max():.4g})"
    )
    return Trajectory(
        game_name=game.name,
        dynamics=kind,
        t0=t0,
        horizon=config.horizon,
        seed=config.seed,
        stream=config.stream,
        descriptors=(
            "fp" if kind == "dfp" else strategies[0].descriptor,
            "fp" if kind == "dfp" else strategies[1].descriptor,
        ),
        fallbacks=(fallbacks[0].descriptor, fallbacks[1].descriptor),
        initial_z=state.mass / t0,
        initial_regrets=(initial_regrets[0].copy(), initial_regrets[1].copy()),
        actions=actions,
        mixed=(mixed1, mixed2),
        regret_max=rmax,
        fallback_used=used,
        snapshots=snapshots,
        diagnostics=diagnostics,
        initial=config.initial.describe(),
    )


# -------------------------------
# 批量运行
# -------------------------------
def _run_one(args) -> Any:
    game, config, reducer = args
    traj = run(game, config)
    return reducer(traj) if reducer is not None else traj


def run_batch(
    game: Game,
    config: RunConfig,
    runs: int,
    reducer: Optional[Callable[[Trajectory], Any]] = None,
    workers: Optional[int] = None,
) -> List[Any]:
    """
    以相同主种子、流编号 0..runs-1 独立运行 runs 次。

    reducer 在工作进程内对每条轨迹求值（必须可 pickle），用于在长时程下只传回摘要。
    workers=1 时在当前进程中顺序执行。
    """
    if runs < 1:
        raise UsageException(f"runs 必须 ≥ 1，当前: {runs}")
    jobs = [(game, replace(config, stream=k), reducer) for k in range(runs)]
    if workers == 1 or runs == 1:
        return [_run_one(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers or None) as pool:
        return list(pool.map(_run_one, jobs))


# -------------------------------
# 轨迹级检查
# -------------------------------
def orthogonality_residuals(game: Game, traj: Trajectory) -> np.ndarray:
    """每期、每个玩家的 max_b |Σ_k q_k (u_i(k, b) - u_i(q, b))|，形状 (N, 2)"""
    if traj.mixed[0] is None:
        raise TrajectoryException("轨迹没有保存每期的混合行动")
    out = np.zeros((traj.regret_max.shape[0], 2))
    for i, player in enumerate((1, 2)):
        m = game.own_payoffs(player)
        q = traj.mixed[i]
        v = q @ m
        out[:, i] = np.max(np.abs(np.einsum("tk,tkb->tb", q, m[None, :, :] - v[:, None, :])), axis=1)
    return out


def sign_persistence_violations(traj: Trajectory) -> Tuple[int, int]:
    """R_{i,max} 一旦为正，之后每期都应保持为正；返回两个玩家的违反期数"""
    _, path = traj.regret_max_path()
    counts = []
    for i in range(2):
        positive = path[:, i] > 0.0
        if not positive.any():
            counts.append(0)
            continue
        first = int(np.argmax(positive))
        counts.append(int(np.sum(~positive[first:])))
    return counts[0], counts[1]


def q2_constancy_drift(game: Game, traj: Trajectory, player: int, action: int) -> float:
    """
    在所有遗憾非正、由常数行动兜底的连续时段内，t·R_{i,c}(t) 应保持不变；返回最大漂移。
    """
    if traj.actions.size == 0:
        return 0.0
    i = player - 1
    m = game.own_payoffs(player)
    if traj.has_actions:
        own = traj.actions[:, i]
        opp = traj.actions[:, 1 - i]
        inc = m[action, opp] - m[own, opp]
    else:
        q_own, q_opp = traj.mixed[i], traj.mixed[1 - i]
        reply = q_opp @ m.T
        inc = reply[:, action] - np.einsum("tk,tk->t", q_own, reply)
    start = traj.t0 * traj.initial_regrets[i][action]
    sums = start + np.cumsum(inc)
    sums = np.concatenate([[start], sums])
    used = traj.fallback_used[:, i]
    drift = 0.0
    block_start = None
    for s in range(used.size):
        if used[s]:
            if block_start is None:
                block_start = s
            drift = max(drift, abs(sums[s + 1] - sums[block_start]))
        else:
            block_start = None
    return float(drift)


def dfp_regret_floor(traj: Trajectory) -> float:
    """t ≥ t0+1 期间 max_i R_{i,max}(t) 的最小值（虚拟博弈遗憾锁定的度量）"""
    if traj.regret_max.size == 0:
        raise TrajectoryException("轨迹没有 t0 之后的记录")
    return float(traj.regret_max.max(axis=1).min())
