"""
基于势函数的行动规则模块

提供以下功能：
- potential_value: 势函数 P(x)（l_p 范数或自定义）
- q1_action: 规则 Q1，下一期混合行动与 ∇P(R) 成正比
- regret_matching: p = 2 的特例（与正遗憾成正比）
- exp_weights_action: 指数权重（softmax）
- next_action: 有正遗憾时用 Q1，否则使用兜底策略（Q2 常数行动 / Q2' 最优反应）
- validate_potential: 蒙特卡洛检查条件 R1–R3 与 P4'
- parse_strategy / parse_fallback: 实验配置中的描述符解析
- orthogonality_residual: Σ_k q_k (u_i(k, b) - u_i(q, b)) 的数值残差
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np

from core.game_core import Game, MixedAction, RegretVector, as_weights, reply_payoffs
from modules.YA_Common.utils.errors import UsageException, ZeroGradientException
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("strategies")

NORMALIZER_FLOOR = 1e-300
SKIP_BAND = 1e-9


# -------------------------------
# 势函数与兜底策略
# -------------------------------
@dataclass(frozen=True)
class LpNorm:
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 1.0):
            raise UsageException(f"l_p 势函数要求 1 < p < ∞，当前: {self.p}")

    @property
    def rho2(self) -> float:
        return 1.0

    @property
    def descriptor(self) -> str:
        return "rm" if self.p == 2 else f"lp:{self.p:g}"


@dataclass(frozen=True)
class CustomPotential:
    """自定义势函数；value 与 gradient 接受一维数组"""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    rho2: Optional[float] = None

    @property
    def descriptor(self) -> str:
        return f"custom:{self.name}"


PotentialSpec = Union[LpNorm, CustomPotential]


@dataclass(frozen=True)
class ConstantAction:
    action: int = 0

    @property
    def descriptor(self) -> str:
        return f"const:{self.action}"


@dataclass(frozen=True)
class BestReply:
    @property
    def descriptor(self) -> str:
        return "br"


FallbackPolicy = Union[ConstantAction, BestReply]


@dataclass(frozen=True)
class StrategySpec:
    """
    实验配置中的策略：
    - potential: 类 R 的无悔动力学（Q1 + 兜底策略）
    - expw: 指数权重，β_t = t^alpha
    - fp: 精确最优反应（离散虚拟博弈）
    """

    kind: str
    potential: Optional[PotentialSpec] = None
    alpha: float = 0.0
    descriptor: str = ""


def _values(x: Union[RegretVector, np.ndarray]) -> np.ndarray:
    return x.values if isinstance(x, RegretVector) else np.asarray(x, dtype=float)


# -------------------------------
# 势函数计算
# -------------------------------
def potential_value(spec: PotentialSpec, x: Union[RegretVector, np.ndarray]) -> float:
    """
    P(x)；l_p 情形为 (Σ_k [x_k]_+^p)^{1/p}，在非正象限上为 0。

    Example:
        >>> potential_value(LpNorm(2), np.array([0.3, 0.1, -0.2]))
        0.31622776601683794
    """
    v = _values(x)
    if isinstance(spec, CustomPotential):
        return float(spec.value(v))
    pos = np.maximum(v, 0.0)
    top = pos.max()
    if top <= 0.0:
        return 0.0
    return float(top * np.sum((pos / top) ** spec.p) ** (1.0 / spec.p))


def potential_gradient(spec: PotentialSpec, x: Union[RegretVector, np.ndarray]) -> np.ndarray:
    """∇P(x)；l_p 情形 ∇_k P = ([x_k]_+ / P)^{p-1}，与尺度无关"""
    v = _values(x)
    if isinstance(spec, CustomPotential):
        return np.asarray(spec.gradient(v), dtype=float)
    pos = np.maximum(v, 0.0)
    norm = potential_value(spec, v)
    if norm <= 0.0:
        return np.zeros_like(pos)
    return (pos / norm) ** (spec.p - 1.0)


def q1_action(spec: PotentialSpec, r: Union[RegretVector, np.ndarray]) -> MixedAction:
    """
    规则 Q1：q_k = ∇_k P(R) / Σ_s ∇_s P(R)。

    调用方保证 R_max > 0；归一化常数低于 1e-300 时抛出 ZeroGradientException。
    """
    return MixedAction(q1_weights(spec, _values(r)))


def q1_weights(spec: PotentialSpec, v: np.ndarray) -> np.ndarray:
    if isinstance(spec, LpNorm) and spec.p == 2.0:
        grad = np.maximum(v, 0.0)
    else:
        grad = potential_gradient(spec, v)
    total = grad.sum()
    if not total >= NORMALIZER_FLOOR:
        raise ZeroGradientException(
            "势函数梯度的归一化常数下溢",
            {"normalizer": float(total), "regrets": v.tolist()},
        )
    return grad / total


def regret_matching(r: Union[RegretVector, np.ndarray]) -> MixedAction:
    """与正遗憾成正比地选择行动（Q1 取 p = 2）"""
    return q1_action(LpNorm(2.0), r)


def softmax_weights(payoffs: np.ndarray, beta: float) -> np.ndarray:
    s = beta * (payoffs - payoffs.max())
    w = np.exp(s)
    return w / w.sum()


def exp_weights_action(
    game: Game, player: int, opp_belief: Any, beta: float
) -> MixedAction:
    """
    指数权重：q_k ∝ exp(β u_i(k, z_{-i}))，先减去最大值避免溢出。

    Raises:
        UsageException: β < 0。
    """
    if beta < 0:
        raise UsageException(f"beta 必须非负，当前: {beta}")
    return MixedAction(softmax_weights(reply_payoffs(game, player, opp_belief), beta))


def best_reply_weights(game: Game, player: int, opp: np.ndarray) -> np.ndarray:
    """最低下标的精确最优反应（点质量）"""
    payoffs = reply_payoffs(game, player, opp)
    w = np.zeros(payoffs.size)
    w[int(np.argmax(payoffs >= payoffs.max() - 1e-12))] = 1.0
    return w


def fallback_weights(
    fallback: FallbackPolicy, game: Game, player: int, opp: np.ndarray
) -> np.ndarray:
    if isinstance(fallback, ConstantAction):
        n = game.actions(player)
        if not 0 <= fallback.action < n:
            raise UsageException(
                f"兜底常数行动越界: {fallback.action}", {"player": player, "actions": n}
            )
        w = np.zeros(n)
        w[fallback.action] = 1.0
        return w
    return best_reply_weights(game, player, opp)


def next_action(
    spec: PotentialSpec,
    fallback: FallbackPolicy,
    r: Union[RegretVector, np.ndarray],
    opp_belief: Any,
    game: Game,
    player: int,
) -> MixedAction:
    """
    类 R 动力学的下一期混合行动：
    R_max > 0 时使用 Q1；否则 ConstantAction 返回 δ_c（Q2），
    BestReply 返回对 opp_belief 的最低下标精确最优反应（Q2'）。
    """
    v = _values(r)
    if v.max() > 0.0:
        return MixedAction(q1_weights(spec, v))
    return MixedAction(fallback_weights(fallback, game, player, as_weights(opp_belief)))


def mixed_action(
    strategy: StrategySpec,
    fallback: FallbackPolicy,
    game: Game,
    player: int,
    regrets: np.ndarray,
    opp_belief: np.ndarray,
    t: int,
) -> Tuple[np.ndarray, bool]:
    """
    引擎热路径使用的分派函数，返回 (q_i(t+1), 是否走了兜底分支)。

    regrets 与 opp_belief 均为第 t 期的值；指数权重使用 β = (t+1)^alpha。
    """
    if strategy.kind == "potential":
        if regrets.max() > 0.0:
            return q1_weights(strategy.potential, regrets), False
        return fallback_weights(fallback, game, player, opp_belief), True
    if strategy.kind == "expw":
        beta = float(t + 1) ** strategy.alpha
        return softmax_weights(reply_payoffs(game, player, opp_belief), beta), False
    if strategy.kind == "fp":
        return best_reply_weights(game, player, opp_belief), False
    raise UsageException(f"未知的策略类型: {strategy.kind}")


# -------------------------------
# 条件检查
# -------------------------------
@dataclass
class PotentialReport:
    passed: bool
    rho2: float
    checked: int
    skipped: int
    counterexample: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "rho2": self.rho2,
            "checked": self.checked,
            "skipped": self.skipped,
            "counterexample": self.counterexample,
        }


def validate_potential(
    spec: PotentialSpec,
    dims: int,
    samples: int = 2000,
    seed: int = 0,
    bound: float = 1.0,
    tol: float = 1e-10,
) -> PotentialReport:
    """
    在 [-2Ū, 2Ū]^dims 上随机抽样检查：
    - R1: P ≥ 0，且在非正象限上 P = 0
    - R2: 象限外 ∇P ≥ 0 且 ∇P·x > 0
    - R3: 象限外 x_k ≤ 0 时 ∇_k P = 0
    - P4': ∇P·x ≤ ρ₂ P
    任一坐标距 0 不足 1e-9 的点（不可微处）跳过。返回第一个反例。
    """
    rng = np.random.default_rng(seed)
    half = samples // 2
    xs = np.vstack(
        [
            rng.uniform(-2 * bound, 2 * bound, size=(samples - half, dims)),
            -rng.uniform(0.0, 2 * bound, size=(half, dims)),
        ]
    )
    rho2 = spec.rho2 if spec.rho2 is not None else None
    ratios = []
    checked = skipped = 0
    for x in xs:
        if np.any(np.abs(x) < SKIP_BAND):
            skipped += 1
            continue
        checked += 1
        p = potential_value(spec, x)
        outside = bool(np.any(x > 0))
        if p < -tol or (not outside and abs(p) > tol):
            return _fail(spec, "R1", x, {"P": p}, checked, skipped)
        if not outside:
            continue
        g = potential_gradient(spec, x)
        inner = float(g @ x)
        if np.any(g < -tol) or inner <= 0.0:
            return _fail(spec, "R2", x, {"grad": g.tolist(), "inner": inner}, checked, skipped)
        if np.any(np.abs(g[x <= 0]) > tol):
            return _fail(spec, "R3", x, {"grad": g.tolist()}, checked, skipped)
        if rho2 is not None and inner > rho2 * p + tol * max(1.0, abs(p)):
            return _fail(spec, "P4'", x, {"inner": inner, "P": p}, checked, skipped)
        if p > 0:
            ratios.append(inner / p)
    estimated = rho2 if rho2 is not None else (max(ratios) if ratios else 0.0)
    logger.debug(f"势函数 {spec.descriptor} 通过检查: checked={checked} skipped={skipped}")
    return PotentialReport(True, float(estimated), checked, skipped)


def _fail(spec, condition, x, extra, checked, skipped) -> PotentialReport:
    logger.info(f"势函数 {spec.descriptor} 违反条件 {condition}: x={x.tolist()}")
    return PotentialReport(
        False,
        float(spec.rho2) if spec.rho2 is not None else float("nan"),
        checked,
        skipped,
        {"condition": condition, "x": x.tolist(), **extra},
    )


def orthogonality_residual(game: Game, player: int, q: np.ndarray) -> float:
    """max_b |Σ_k q_k (u_i(k, b) - u_i(q, b))|"""
    m = game.own_payoffs(player)
    v = q @ m
    return float(np.max(np.abs(q @ (m - v))))


# -------------------------------
# 描述符
# -------------------------------
def parse_strategy(descriptor: str) -> StrategySpec:
    """
    解析策略描述符："lp:<p>"、"rm"（即 lp:2）、"expw:<alpha>"、"fp"。

    Raises:
        UsageException: 无法识别的描述符或参数越界。
    """
    text = descriptor.strip().lower()
    if text == "rm":
        return StrategySpec("potential", LpNorm(2.0), descriptor="rm")
    if text == "fp":
        return StrategySpec("fp", descriptor="fp")
    head, _, arg = text.partition(":")
    try:
        value = float(arg)
    except ValueError:
        raise UsageException(f"无法识别的策略描述符: {descriptor!r}")
    if head == "lp":
        return StrategySpec("potential", LpNorm(value), descriptor=text)
    if head == "expw":
        if not 0.0 < value < 1.0:
            raise UsageException(f"expw 的 alpha 必须在 (0, 1) 内，当前: {value}")
        return StrategySpec("expw", alpha=value, descriptor=text)
    raise UsageException(f"无法识别的策略描述符: {descriptor!r}")


def parse_fallback(descriptor: str) -> FallbackPolicy:
    """解析兜底策略："const:<c>"（缺省 c = 0）或 "br" """
    text = descriptor.strip().lower()
    if text == "br":
        return BestReply()
    if text == "const":
        return ConstantAction(0)
    head, _, arg = text.partition(":")
    if head == "const" and arg.isdigit():
        return ConstantAction(int(arg))
    raise UsageException(f"无法识别的兜底策略描述符: {descriptor!r}")
