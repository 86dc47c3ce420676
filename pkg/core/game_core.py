"""
有限二人博弈代数模块

精确计算收益、边缘分布、遗憾、最优反应与 Hannan 集合判定，以及平均博弈的递推更新。
提供以下功能：
- expected_payoff: 相关行动下的期望收益
- marginals / product_distribution: 联合分布与混合策略组合之间的转换
- regret_vector: 单个玩家在相关行动 z 下的遗憾向量
- best_replies: ε-最优反应集合
- hannan_status: Hannan 集合 H 与约化 Hannan 集合 H_R 的判定
- update_average: 平均博弈递推 z(t) = z(t-1) + (a(t) - z(t-1)) / t
- sup_distance / duality_gap: 诊断工具

行动统一使用从 0 开始的稠密下标；玩家编号为 1 或 2。
所有值对象都是不可变的，可在多个进程间安全共享。
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from modules.YA_Common.utils.config import get_config
from modules.YA_Common.utils.errors import (
    DimensionMismatchException,
    InvalidDistributionException,
    UsageException,
)

SUM_TOL = 1e-12
RENORMALIZE_DRIFT = float(get_config("lab.renormalize_drift", 1e-14))
HANNAN_TOL = float(get_config("lab.tolerance", 1e-9))
TIE_ATOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_simplex(weights: np.ndarray, what: str) -> np.ndarray:
    if weights.size == 0:
        raise InvalidDistributionException(f"{what} 为空")
    if not np.all(np.isfinite(weights)):
        raise InvalidDistributionException(f"{what} 含有非有限值")
    if weights.min() < -SUM_TOL:
        raise InvalidDistributionException(
            f"{what} 含有负权重", {"min": float(weights.min())}
        )
    total = float(weights.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise InvalidDistributionException(
            f"{what} 权重和不为 1", {"sum": total}
        )
    return np.clip(weights, 0.0, None)


# -------------------------------
# 值类型
# -------------------------------
@dataclass(frozen=True, eq=False)
class Game:
    """双矩阵博弈：payoff_1[a1, a2] 与 payoff_2[a1, a2]"""

    payoff_1: np.ndarray
    payoff_2: np.ndarray
    labels_1: Tuple[str, ...] = ()
    labels_2: Tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        u1 = np.atleast_2d(np.array(self.payoff_1, dtype=float))
        u2 = np.atleast_2d(np.array(self.payoff_2, dtype=float))
        if u1.ndim != 2 or u1.shape != u2.shape:
            raise DimensionMismatchException(
                "两个收益表的维度不一致",
                {"payoff_1": list(u1.shape), "payoff_2": list(u2.shape)},
            )
        if min(u1.shape) < 1:
            raise DimensionMismatchException("每个玩家至少需要一个行动")
        if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))):
            raise DimensionMismatchException("收益表含有非有限值")
        object.__setattr__(self, "payoff_1", _frozen(u1))
        object.__setattr__(self, "payoff_2", _frozen(u2))
        n1, n2 = u1.shape
        labels_1 = tuple(self.labels_1) or tuple(str(k) for k in range(n1))
        labels_2 = tuple(self.labels_2) or tuple(str(k) for k in range(n2))
        if len(labels_1) != n1 or len(labels_2) != n2:
            raise DimensionMismatchException("行动标签数量与收益表不符")
        object.__setattr__(self, "labels_1", labels_1)
        object.__setattr__(self, "labels_2", labels_2)

    @property
    def actions_1(self) -> int:
        return self.payoff_1.shape[0]

    @property
    def actions_2(self) -> int:
        return self.payoff_1.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.payoff_1.shape

    @property
    def payoff_bound(self) -> float:
        """Ū = 两个收益表中绝对值的最大值"""
        return float(max(np.abs(self.payoff_1).max(), np.abs(self.payoff_2).max()))

    def actions(self, player: int) -> int:
        return self.actions_1 if _check_player(player) == 1 else self.actions_2

    def labels(self, player: int) -> Tuple[str, ...]:
        return self.labels_1 if _check_player(player) == 1 else self.labels_2

    def own_payoffs(self, player: int) -> np.ndarray:
        """以玩家自身行动为行的收益矩阵：M[k, b] = u_i(k, b)"""
        return self.payoff_1 if _check_player(player) == 1 else self.payoff_2.T

    def is_zero_sum(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.payoff_1 + self.payoff_2) <= tol))


@dataclass(frozen=True, eq=False)
class MixedAction:
    weights: np.ndarray

    def __post_init__(self):
        w = _check_simplex(np.asarray(self.weights, dtype=float).ravel(), "混合行动")
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def pure(cls, action: int, n: int) -> "MixedAction":
        if not 0 <= action < n:
            raise UsageException(f"行动下标越界: {action} (共 {n} 个行动)")
        w = np.zeros(n)
        w[action] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, n: int) -> "MixedAction":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.weights.size

    def support(self, tol: float = 0.0) -> Tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(self.weights > tol))


@dataclass(frozen=True, eq=False)
class MixedProfile:
    x1: MixedAction
    x2: MixedAction

    def __post_init__(self):
        if not isinstance(self.x1, MixedAction):
            object.__setattr__(self, "x1", MixedAction(self.x1))
        if not isinstance(self.x2, MixedAction):
            object.__setattr__(self, "x2", MixedAction(self.x2))

    def check(self, game: Game) -> "MixedProfile":
        if len(self.x1) != game.actions_1 or len(self.x2) != game.actions_2:
            raise DimensionMismatchException(
                "混合策略组合与博弈维度不符",
                {"profile": [len(self.x1), len(self.x2)], "game": list(game.shape)},
            )
        return self

    def player(self, player: int) -> MixedAction:
        return self.x1 if _check_player(player) == 1 else self.x2

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x1.weights, self.x2.weights])


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """相关行动 z ∈ Δ(A)，weights[a1, a2]"""

    weights: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        if w.ndim != 2:
            raise InvalidDistributionException("联合分布必须是二维表")
        flat = _check_simplex(w.ravel(), "联合分布")
        object.__setattr__(self, "weights", _frozen(flat.reshape(w.shape)))

    @classmethod
    def point_mass(cls, a1: int, a2: int, shape: Tuple[int, int]) -> "JointDistribution":
        w = np.zeros(shape)
        w[a1, a2] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, shape: Tuple[int, int]) -> "JointDistribution":
        return cls(np.full(shape, 1.0 / (shape[0] * shape[1])))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.weights.shape

    def check(self, game: Game) -> "JointDistribution":
        if self.weights.shape != game.shape:
            raise DimensionMismatchException(
                "联合分布与博弈维度不符",
                {"z": list(self.weights.shape), "game": list(game.shape)},
            )
        return self


@dataclass(frozen=True, eq=False)
class RegretVector:
    player: int
    values: np.ndarray

    def __post_init__(self):
        _check_player(self.player)
        object.__setattr__(self, "values", _frozen(np.asarray(self.values).ravel()))

    @property
    def max(self) -> float:
        """R_{i,max}"""
        return float(self.values.max())

    def positive_part(self) -> np.ndarray:
        return np.maximum(self.values, 0.0)


class HannanClass(str, Enum):
    OUTSIDE = "Outside"
    INTERIOR_H = "InteriorH"
    REDUCED_HR = "ReducedHR"


@dataclass(frozen=True)
class HannanStatus:
    classification: HannanClass
    margin: float
    maxima: Tuple[float, float] = field(default=(0.0, 0.0))

    @property
    def in_hannan_set(self) -> bool:
        return self.classification != HannanClass.OUTSIDE


@dataclass(frozen=True)
class BestReplySet:
    player: int
    actions: Tuple[int, ...]
    payoffs: np.ndarray = field(compare=False)
    best_value: float = 0.0

    def __contains__(self, action: int) -> bool:
        return action in self.actions


# -------------------------------
# 辅助函数
# -------------------------------
def _check_player(player: int) -> int:
    if player not in (1, 2):
        raise UsageException(f"玩家编号必须是 1 或 2，当前: {player}")
    return player


WeightsLike = Union[MixedAction, JointDistribution, np.ndarray, Sequence[float]]


def as_weights(x: WeightsLike) -> np.ndarray:
    """取出底层权重数组（不复制不校验，供引擎内部热路径使用）"""
    if isinstance(x, (MixedAction, JointDistribution)):
        return x.weights
    return np.asarray(x, dtype=float)


def reply_payoffs(game: Game, player: int, opp: WeightsLike) -> np.ndarray:
    """u_i(k, x_{-i}) 对所有 k"""
    y = as_weights(opp)
    m = game.own_payoffs(player)
    if y.shape != (m.shape[1],):
        raise DimensionMismatchException(
            "对手混合行动维度不符", {"expected": m.shape[1], "got": list(y.shape)}
        )
    return m @ y


# -------------------------------
# 操作
# -------------------------------
def expected_payoff(game: Game, z: WeightsLike) -> Tuple[float, float]:
    """
    计算相关行动 z 下两个玩家的期望收益 u_i(z) = Σ_a z(a) u_i(a)。

    Args:
        game (Game): 博弈。
        z (JointDistribution): 相关行动。

    Returns:
        Tuple[float, float]: (u_1(z), u_2(z))。

    Raises:
        DimensionMismatchException: z 与博弈维度不一致。

    Example:
        >>> expected_payoff(matching_pennies, JointDistribution.uniform((2, 2)))
        (0.0, 0.0)
    """
    w = as_weights(z)
    if w.shape != game.shape:
        raise DimensionMismatchException(
            "联合分布与博弈维度不符", {"z": list(w.shape), "game": list(game.shape)}
        )
    return float(np.sum(game.payoff_1 * w)), float(np.sum(game.payoff_2 * w))


def marginals(z: WeightsLike) -> MixedProfile:
    """z_i(a_i) = Σ_{a_{-i}} z(a_i, a_{-i})"""
    w = as_weights(z)
    return MixedProfile(MixedAction(w.sum(axis=1)), MixedAction(w.sum(axis=0)))


def product_distribution(p: MixedProfile) -> JointDistribution:
    """x1 ⊗ x2"""
    return JointDistribution(np.outer(p.x1.weights, p.x2.weights))


def regret_values(game: Game, player: int, z: np.ndarray) -> np.ndarray:
    """遗憾向量的数组形式：R_{i,k}(z) = u_i(k, z_{-i}) - u_i(z)"""
    if player == 1:
        own = game.payoff_1 @ z.sum(axis=0)
        current = np.sum(game.payoff_1 * z)
    else:
        own = z.sum(axis=1) @ game.payoff_2
        current = np.sum(game.payoff_2 * z)
    return own - current


def regret_vector(game: Game, player: int, z: WeightsLike) -> RegretVector:
    """
    计算玩家 player 在相关行动 z 下对每个行动的遗憾。

    Args:
        game (Game): 博弈。
        player (int): 1 或 2。
        z (JointDistribution): 相关行动。

    Returns:
        RegretVector: 各行动的遗憾，max 属性即 R_{i,max}。

    Raises:
        DimensionMismatchException: z 与博弈维度不一致。
    """
    _check_player(player)
    w = as_weights(z)
    if w.shape != game.shape:
        raise DimensionMismatchException(
            "联合分布与博弈维度不符", {"z": list(w.shape), "game": list(game.shape)}
        )
    return RegretVector(player, regret_values(game, player, w))


def best_replies(
    game: Game,
    player: int,
    opp: WeightsLike,
    epsilon: float = 0.0,
    atol: float = TIE_ATOL,
) -> BestReplySet:
    """
    ε-最优反应集合：所有满足 u_i(k, opp) ≥ max_s u_i(s, opp) - ε 的纯行动。

    atol 为浮点比较的绝对容差（默认 1e-12），用于判定精确平局。
    """
    if epsilon < 0:
        raise UsageException(f"epsilon 必须非负，当前: {epsilon}")
    payoffs = reply_payoffs(game, player, opp)
    best = float(payoffs.max())
    members = tuple(int(k) for k in np.flatnonzero(payoffs >= best - epsilon - atol))
    return BestReplySet(player, members, payoffs, best)


def hannan_status(game: Game, z: WeightsLike, tol: float = HANNAN_TOL) -> HannanStatus:
    """
    判定 z 是否属于 Hannan 集合 H 以及约化 Hannan 集合 H_R。

    - Outside: 某个玩家 R_{i,max} > tol
    - ReducedHR: 两个玩家的 R_{i,max} 都在 [-tol, tol] 内
    - InteriorH: 其余情形（在 H 中但不在 H_R 中）
    """
    if tol <= 0:
        raise UsageException(f"tol 必须为正，当前: {tol}")
    m1 = regret_vector(game, 1, z).max
    m2 = regret_vector(game, 2, z).max
    margin = max(m1, m2)
    if margin > tol:
        cls = HannanClass.OUTSIDE
    elif m1 >= -tol and m2 >= -tol:
        cls = HannanClass.REDUCED_HR
    else:
        cls = HannanClass.INTERIOR_H
    return HannanStatus(cls, margin, (m1, m2))


def renormalize(w: np.ndarray, drift: float = RENORMALIZE_DRIFT) -> np.ndarray:
    """概率质量漂移超过 drift 时重新归一化（原地修改并返回）"""
    total = w.sum()
    if abs(total - 1.0) > drift:
        w /= total
    return w


def update_average(
    z_prev: WeightsLike, increment: WeightsLike, t: int
) -> JointDistribution:
    """
    平均博弈递推：z(t) = z(t-1) + (increment - z(t-1)) / t。

    increment 为实现的纯行动组合（点质量）或期望博弈中的乘积分布。

    Raises:
        UsageException: t < 2。
        DimensionMismatchException: 两个分布维度不一致。
    """
    if t < 2:
        raise UsageException(f"平均递推要求 t ≥ 2，当前: {t}")
    prev = as_weights(z_prev)
    inc = as_weights(increment)
    if prev.shape != inc.shape:
        raise DimensionMismatchException(
            "增量与平均分布维度不符", {"z": list(prev.shape), "increment": list(inc.shape)}
        )
    z = prev + (inc - prev) / t
    return JointDistribution(renormalize(z))


def sup_distance(a: WeightsLike, b: WeightsLike) -> float:
    """sup 范数距离（全库统一使用的度量）"""
    return float(np.max(np.abs(as_weights(a) - as_weights(b))))


def profile_distance(p: MixedProfile, q: MixedProfile) -> float:
    return sup_distance(p.as_vector(), q.as_vector())


def duality_gap(game: Game, profile: MixedProfile) -> float:
    """
    零和博弈的对偶间隙 max_k u_1(k, x_2) - min_s u_1(x_1, s)；
    在乘积分布处等于两个玩家 R_{i,max} 之和，为 0 当且仅当 profile 是纳什均衡。
    """
    if not game.is_zero_sum():
        raise UsageException("duality_gap 只适用于零和博弈", {"game": game.name})
    x1, x2 = profile.check(game).x1.weights, profile.x2.weights
    return float((game.payoff_1 @ x2).max() - (x1 @ game.payoff_1).min())


def average_payoff(game: Game, z: WeightsLike) -> Tuple[float, float]:
    """平均实现收益：相关行动 z(t) 下的期望收益"""
    return expected_payoff(game, z)


def pure_profile_index(game: Game, label_1: str, label_2: str) -> Tuple[int, int]:
    try:
        return game.labels_1.index(label_1), game.labels_2.index(label_2)
    except ValueError:
        raise UsageException(
            f"未知的行动标签: ({label_1}, {label_2})",
            {"labels_1": list(game.labels_1), "labels_2": list(game.labels_2)},
        )


def maybe_profile(
    game: Game, x1: Optional[WeightsLike], x2: Optional[WeightsLike]
) -> MixedProfile:
    """构造并校验混合策略组合；缺省为均匀分布"""
    w1 = MixedAction.uniform(game.actions_1) if x1 is None else MixedAction(as_weights(x1))
    w2 = MixedAction.uniform(game.actions_2) if x2 is None else MixedAction(as_weights(x2))
    return MixedProfile(w1, w2).check(game)
