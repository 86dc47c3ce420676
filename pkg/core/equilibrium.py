"""
静态解概念与 curb 集合

提供以下功能：
- nash_support_enumeration: 支撑枚举求全部纳什均衡
- strict_dominance_eliminate: 迭代剔除严格劣势行动（纯策略比较 + 混合占优 LP）
- curb_enumerate: 枚举所有对最优反应封闭的乘积集合，附 LP 不可行证书
- delta_B / delta_B_grid: curb 收益间隙常数（逐区域 LP，稠密网格交叉检验）
- rho_of_gamma / gamma_B / curb_constants: 吸引邻域半径
- in_U_gamma: 邻域 U_γ(H_B) 的成员判定
- hannan_face_point / distance_to_H_B / distance_to_hannan: H_B 的内点与 sup 范数距离（LP）
- positive_regret_support_check: 在 U_γ(H_B) 中抽样，检查有正遗憾的行动都在 B 内
- curb_attraction_experiment: 从 H_B 附近的合成历史出发的蒙特卡洛吸引实验
- wilson_interval: 二项比例的 Wilson 置信区间
"""

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from core.game_core import (
    Game,
    JointDistribution,
    MixedAction,
    MixedProfile,
    as_weights,
    regret_values,
    sup_distance,
)
from core.lp_solver import LpProblem, lp_solve
from core.strategies import (
    BestReply,
    CustomPotential,
    LpNorm,
    PotentialSpec,
    StrategySpec,
    potential_value,
)
from modules.YA_Common.utils.config import get_config
from modules.YA_Common.utils.errors import (
    CurbConstructionException,
    LPException,
    OversizedGameException,
    PreconditionViolatedException,
    UsageException,
)
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("equilibrium")

LP_SIZE_LIMIT = 6
DEDUP_TOL = 1e-6
DOMINANCE_TOL = 1e-9


# -------------------------------
# 类型
# -------------------------------
@dataclass(frozen=True)
class CurbSet:
    """
    乘积集合 B_1 × B_2。certificate[i] 记录玩家 i 每个 B_i 之外行动的
    LP 第一阶段目标值（为正即 "在 Δ(B_{-i}) 上从不是最优反应"）。
    """

    B1: Tuple[int, ...]
    B2: Tuple[int, ...]
    certificate: Dict[int, Dict[int, float]] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.B1 or not self.B2:
            raise UsageException("curb 集合的每个分量都必须非空")
        object.__setattr__(self, "B1", tuple(sorted(int(k) for k in self.B1)))
        object.__setattr__(self, "B2", tuple(sorted(int(k) for k in self.B2)))

    def part(self, player: int) -> Tuple[int, ...]:
        return self.B1 if player == 1 else self.B2

    def mask(self, shape: Tuple[int, int]) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        m[np.ix_(self.B1, self.B2)] = True
        return m

    def is_full(self, game: Game) -> bool:
        return len(self.B1) == game.actions_1 and len(self.B2) == game.actions_2

    def labels(self, game: Game) -> Tuple[List[str], List[str]]:
        return [game.labels_1[k] for k in self.B1], [game.labels_2[k] for k in self.B2]

    def to_dict(self, game: Optional[Game] = None) -> Dict[str, Any]:
        out: Dict[str, Any] = {"B1": list(self.B1), "B2": list(self.B2)}
        if game is not None:
            out["labels"] = self.labels(game)
        if self.certificate:
            out["certificate"] = {
                str(i): {str(k): v for k, v in cert.items()} for i, cert in self.certificate.items()
            }
        return out


@dataclass
class CurbConstants:
    delta_B: float
    gamma_B: float
    U_bound: float
    potential: str
    rho_resolution: float = 0.0
    delta_grid: Optional[float] = None

    def rho(self, gamma: float, spec: PotentialSpec) -> float:
        return rho_of_gamma(spec, gamma, bound=self.U_bound)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta_B": self.delta_B,
            "gamma_B": self.gamma_B,
            "U_bound": self.U_bound,
            "potential": self.potential,
            "rho_resolution": self.rho_resolution,
            "delta_grid": self.delta_grid,
        }


@dataclass
class DominanceResult:
    game: Game
    survivors: Tuple[Tuple[int, ...], Tuple[int, ...]]
    order: List[Dict[str, Any]]

    def to_dict(self, original: Game) -> Dict[str, Any]:
        return {
            "survivors": [
                [original.labels_1[k] for k in self.survivors[0]],
                [original.labels_2[k] for k in self.survivors[1]],
            ],
            "order": self.order,
        }


# -------------------------------
# 纳什均衡
# -------------------------------
def _indifference_solve(m: np.ndarray, own: Sequence[int], opp: Sequence[int]) -> Optional[np.ndarray]:
    """方阵情形：使 own 中各行动对 y（支撑在 opp 上）无差异的 y"""
    k = len(own)
    a = np.zeros((k + 1, k + 1))
    a[:k, :k] = m[np.ix_(own, opp)]
    a[:k, k] = -1.0
    a[k, :k] = 1.0
    b = np.zeros(k + 1)
    b[k] = 1.0
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    y = np.zeros(m.shape[1])
    y[list(opp)] = sol[:k]
    return y


def _indifference_lp(m: np.ndarray, own: Sequence[int], opp: Sequence[int]) -> Optional[np.ndarray]:
    """一般情形：y ∈ Δ(opp)，own 中行动收益相等且不低于其余行动"""
    n_opp = len(opp)
    sub = m[:, list(opp)]
    others = [k for k in range(m.shape[0]) if k not in own]
    # 变量 (y, v)，v 自由
    A_eq = np.zeros((len(own) + 1, n_opp + 1))
    A_eq[: len(own), :n_opp] = sub[list(own)]
    A_eq[: len(own), n_opp] = -1.0
    A_eq[-1, :n_opp] = 1.0
    b_eq = np.zeros(len(own) + 1)
    b_eq[-1] = 1.0
    A_ub = None
    b_ub = None
    if others:
        A_ub = np.zeros((len(others), n_opp + 1))
        A_ub[:, :n_opp] = sub[others]
        A_ub[:, n_opp] = -1.0
        b_ub = np.zeros(len(others))
    bounds = [(0.0, None)] * n_opp + [(None, None)]
    res = lp_solve(LpProblem(np.zeros(n_opp + 1), A_ub, b_ub, A_eq, b_eq, bounds))
    if not res.success:
        return None
    y = np.zeros(m.shape[1])
    y[list(opp)] = res.x[:n_opp]
    return y


def _supports(n: int):
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            yield combo


def _is_best_reply_support(m: np.ndarray, own: Sequence[int], y: np.ndarray, tol: float) -> bool:
    payoffs = m @ y
    return bool(np.all(payoffs[list(own)] >= payoffs.max() - tol))


def _clean(w: np.ndarray) -> np.ndarray:
    w = np.where(w < 0.0, 0.0, w)
    return w / w.sum()


def nash_support_enumeration(game: Game, tol: float = 1e-9) -> List[MixedProfile]:
    """
    支撑枚举求全部纳什均衡。

    支撑大小相同时解无差异线性方程组；方程组奇异或支撑大小不同（退化博弈）时，
    若两个玩家的行动数都不超过 6，则改用 LP 求可行点。结果按支撑大小与字典序排列，
    在 sup 范数 1e-6 内去重。

    Raises:
        OversizedGameException: 某个玩家行动数超过 equilibrium.max_actions（缺省 12）。
    """
    limit = int(get_config("equilibrium.max_actions", 12))
    n1, n2 = game.shape
    if max(n1, n2) > limit:
        raise OversizedGameException(
            f"支撑枚举最多支持每个玩家 {limit} 个行动", {"shape": [n1, n2]}
        )
    m1 = game.own_payoffs(1)
    m2 = game.own_payoffs(2)
    small = max(n1, n2) <= LP_SIZE_LIMIT
    found: List[MixedProfile] = []
    for s1 in _supports(n1):
        for s2 in _supports(n2):
            if len(s1) == len(s2):
                x2 = _indifference_solve(m1, s1, s2)
                x1 = _indifference_solve(m2, s2, s1)
                if (x1 is None or x2 is None) and small:
                    x2 = _indifference_lp(m1, s1, s2)
                    x1 = _indifference_lp(m2, s2, s1)
            elif small:
                x2 = _indifference_lp(m1, s1, s2)
                x1 = _indifference_lp(m2, s2, s1)
            else:
                continue
            if x1 is None or x2 is None:
                continue
            if x1.min() < -tol or x2.min() < -tol:
                continue
            x1, x2 = _clean(x1), _clean(x2)
            if not (_is_best_reply_support(m1, s1, x2, tol) and _is_best_reply_support(m2, s2, x1, tol)):
                continue
            # 支撑之外的权重必须为零
            if np.any(np.delete(x1, s1) > tol) or np.any(np.delete(x2, s2) > tol):
                continue
            profile = MixedProfile(x1, x2)
            vec = profile.as_vector()
            if any(sup_distance(vec, p.as_vector()) <= DEDUP_TOL for p in found):
                continue
            found.append(profile)
    logger.debug(f"{game.name or 'game'}: 支撑枚举得到 {len(found)} 个纳什均衡")
    return found


# -------------------------------
# 严格劣势剔除
# -------------------------------
def _mixed_dominator(rows: np.ndarray, target: np.ndarray, bound: float) -> Tuple[float, Optional[np.ndarray]]:
    """max ε s.t. σ·rows ≥ target + ε（逐列），σ ∈ Δ；返回 (ε, σ)"""
    r, c = rows.shape
    cost = np.zeros(r + 1)
    cost[-1] = -1.0
    A_ub = np.zeros((c, r + 1))
    A_ub[:, :r] = -rows.T
    A_ub[:, r] = 1.0
    b_ub = -target
    A_eq = np.zeros((1, r + 1))
    A_eq[0, :r] = 1.0
    bounds = [(0.0, None)] * r + [(None, 2.0 * bound + 1.0)]
    res = lp_solve(LpProblem(cost, A_ub, b_ub, A_eq, np.ones(1), bounds))
    if not res.success:
        raise LPException("混合占优 LP 求解失败", {"status": res.status})
    return float(res.x[-1]), res.x[:r]


def strict_dominance_eliminate(
    game: Game,
    allow_mixed: bool = True,
    player_order: Tuple[int, int] = (1, 2),
) -> DominanceResult:
    """
    迭代剔除严格劣势行动，直到没有玩家可以再剔除。

    每一轮按 player_order 依次扫描玩家，每次剔除一个行动后重新扫描；
    先做纯策略逐分量比较，allow_mixed 时再用 LP 检查幸存行动的混合是否严格占优。
    严格劣势剔除与顺序无关，player_order 只影响 order 记录。
    """
    survivors = [list(range(game.actions_1)), list(range(game.actions_2))]
    order: List[Dict[str, Any]] = []
    bound = game.payoff_bound
    changed = True
    while changed:
        changed = False
        for player in player_order:
            i = player - 1
            m = game.own_payoffs(player)
            eliminated = True
            while eliminated and len(survivors[i]) > 1:
                eliminated = False
                cols = survivors[1 - i]
                own = survivors[i]
                sub = m[np.ix_(own, cols)]
                for idx, k in enumerate(own):
                    dominator = None
                    for jdx, s in enumerate(own):
                        if s != k and np.all(sub[jdx] > sub[idx]):
                            dominator = {"kind": "pure", "by": game.labels(player)[s]}
                            break
                    if dominator is None and allow_mixed and len(own) > 2:
                        others = [j for j in range(len(own)) if j != idx]
                        eps, sigma = _mixed_dominator(sub[others], sub[idx], bound)
                        if eps > DOMINANCE_TOL:
                            dominator = {
                                "kind": "mixed",
                                "by": {
                                    game.labels(player)[own[j]]: float(w)
                                    for j, w in zip(others, sigma)
                                    if w > 1e-12
                                },
                                "margin": eps,
                            }
                    if dominator is not None:
                        order.append(
                            {"player": player, "action": game.labels(player)[k], **dominator}
                        )
                        own.remove(k)
                        eliminated = changed = True
                        break
    rows, cols = survivors
    reduced = Game(
        game.payoff_1[np.ix_(rows, cols)],
        game.payoff_2[np.ix_(rows, cols)],
        tuple(game.labels_1[k] for k in rows),
        tuple(game.labels_2[k] for k in cols),
        name=f"{game.name}|reduced" if game.name else "reduced",
    )
    logger.debug(f"严格劣势剔除: 剔除 {len(order)} 个行动")
    return DominanceResult(reduced, (tuple(rows), tuple(cols)), order)


# -------------------------------
# curb 集合
# -------------------------------
def _best_reply_region_lp(m: np.ndarray, k: int, opp: Sequence[int]):
    """{y ∈ Δ(opp) : m[k]·y ≥ m[s]·y ∀s}"""
    sub = m[:, list(opp)]
    A_ub = sub - sub[k]
    A_ub = np.delete(A_ub, k, axis=0)
    n = len(opp)
    return lp_solve(
        LpProblem(
            np.zeros(n),
            A_ub if A_ub.size else None,
            np.zeros(A_ub.shape[0]) if A_ub.size else None,
            np.ones((1, n)),
            np.ones(1),
        )
    )


def _reachable_replies(game: Game, player: int, opp: Sequence[int]) -> Dict[int, float]:
    """对 Δ(opp) 中某个信念是最优反应的行动；值为 LP 第一阶段目标（0 表示可行）"""
    m = game.own_payoffs(player)
    out = {}
    for k in range(m.shape[0]):
        res = _best_reply_region_lp(m, k, opp)
        out[k] = 0.0 if res.success else res.phase1_value
    return out


def is_curb(game: Game, B1: Sequence[int], B2: Sequence[int]) -> Optional[CurbSet]:
    """B1 × B2 为 curb 时返回带证书的 CurbSet，否则返回 None"""
    cert: Dict[int, Dict[int, float]] = {}
    for player, own, opp in ((1, B1, B2), (2, B2, B1)):
        reach = _reachable_replies(game, player, opp)
        outside = {k: v for k, v in reach.items() if k not in own}
        if any(v <= 0.0 for v in outside.values()):
            return None
        cert[player] = outside
    return CurbSet(tuple(B1), tuple(B2), cert)


def curb_enumerate(game: Game, symmetric: bool = False) -> List[CurbSet]:
    """
    枚举所有 curb 乘积集合。

    对每个对手子集先求出在其单纯形上可能成为最优反应的行动集合，
    B_1 × B_2 为 curb 当且仅当这两个集合分别包含于 B_1、B_2。
    symmetric=True 时只返回 B_1 = B_2（按下标）的集合，要求两个玩家行动数相同。

    Raises:
        OversizedGameException: 某个玩家行动数超过 equilibrium.max_curb_actions（缺省 8）。
    """
    limit = int(get_config("equilibrium.max_curb_actions", 8))
    n1, n2 = game.shape
    if max(n1, n2) > limit:
        raise OversizedGameException(f"curb 枚举最多支持每个玩家 {limit} 个行动", {"shape": [n1, n2]})
    if symmetric and n1 != n2:
        raise UsageException("symmetric=True 要求两个玩家行动数相同")
    reach1 = {s: _reachable_replies(game, 1, s) for s in _supports(n2)}
    reach2 = {s: _reachable_replies(game, 2, s) for s in _supports(n1)}
    found: List[CurbSet] = []
    for B1 in _supports(n1):
        for B2 in _supports(n2):
            if symmetric and B1 != B2:
                continue
            out1 = {k: v for k, v in reach1[B2].items() if k not in B1}
            out2 = {k: v for k, v in reach2[B1].items() if k not in B2}
            if any(v <= 0.0 for v in out1.values()) or any(v <= 0.0 for v in out2.values()):
                continue
            found.append(CurbSet(B1, B2, {1: out1, 2: out2}))
    found.sort(key=lambda c: (len(c.B1) + len(c.B2), c.B1, c.B2))
    logger.debug(f"{game.name or 'game'}: 共 {len(found)} 个 curb 集合")
    return found


def _as_curb(game: Game, B: Any) -> CurbSet:
    if isinstance(B, CurbSet):
        return B
    B1, B2 = B
    return CurbSet(tuple(B1), tuple(B2))


def delta_B(game: Game, B: Any) -> float:
    """
    δ_B = min_i min_{z ∈ Δ(B_{-i})} [max_s u_i(s, z) - max_{k ∉ B_i} u_i(k, z)]。

    对每个 B_i 之外的行动 k，在 "k 是外部行动中最好的" 区域上解
    min t - u_i(k, y)，t ≥ u_i(s, y) ∀s。没有外部行动时返回 +∞。
    """
    B = _as_curb(game, B)
    best = math.inf
    for player in (1, 2):
        m = game.own_payoffs(player)
        own, opp = B.part(player), B.part(3 - player)
        outside = [k for k in range(m.shape[0]) if k not in own]
        if not outside:
            continue
        sub = m[:, list(opp)]
        n = len(opp)
        for k in outside:
            # 变量 (y, t)
            rows = [np.append(sub[s], -1.0) for s in range(m.shape[0])]
            rows += [np.append(sub[j] - sub[k], 0.0) for j in outside if j != k]
            cost = np.append(-sub[k], 1.0)
            res = lp_solve(
                LpProblem(
                    cost,
                    np.array(rows),
                    np.zeros(len(rows)),
                    np.append(np.ones(n), 0.0)[None, :],
                    np.ones(1),
                    [(0.0, None)] * n + [(None, None)],
                )
            )
            if res.success:
                best = min(best, res.fun)
    if math.isinf(best):
        logger.debug("δ_B: 两个玩家都没有外部行动，返回 +∞")
    return float(best)


def _grid(n: int, denominator: int):
    for combo in itertools.combinations(range(denominator + n - 1), n - 1):
        parts = np.diff(np.concatenate([[-1], combo, [denominator + n - 1]])) - 1
        yield parts / denominator


def delta_B_grid(game: Game, B: Any, denominator: Optional[int] = None) -> float:
    """在步长 1/denominator 的单纯形网格上直接求 δ_B（交叉检验用）"""
    B = _as_curb(game, B)
    den = int(denominator or get_config("equilibrium.grid_denominator", 64))
    best = math.inf
    for player in (1, 2):
        m = game.own_payoffs(player)
        own, opp = B.part(player), B.part(3 - player)
        outside = [k for k in range(m.shape[0]) if k not in own]
        if not outside:
            continue
        sub = m[:, list(opp)]
        for y in _grid(len(opp), den):
            payoffs = sub @ y
            best = min(best, float(payoffs.max() - payoffs[outside].max()))
    return best


def rho_of_gamma(
    spec: PotentialSpec,
    gamma: float,
    dims: int = 2,
    bound: float = 1.0,
    points: int = 41,
) -> float:
    """
    ρ(γ)：P(x) ≤ γ 时 max_k x_k 的最小上界。

    l_p 势函数精确为 γ（sup 范数 ≤ p 范数，单位向量处取等）；
    自定义势函数在 [-2Ū, 2Ū]^dims 的网格上搜索，返回 "找到的最大值 + 网格分辨率"。
    """
    if gamma < 0:
        raise UsageException(f"gamma 必须非负，当前: {gamma}")
    if gamma == 0:
        return 0.0
    if isinstance(spec, LpNorm):
        return float(gamma)
    return _rho_grid(spec, gamma, dims, bound, points)[0]


def _rho_grid(spec: CustomPotential, gamma: float, dims: int, bound: float, points: int):
    axis = np.linspace(-2.0 * bound, 2.0 * bound, points)
    resolution = float(axis[1] - axis[0])
    best = 0.0
    for x in itertools.product(axis, repeat=dims):
        v = np.array(x)
        if potential_value(spec, v) <= gamma:
            best = max(best, float(v.max()))
    return best + resolution, resolution


def gamma_B(game: Game, B: Any, spec: PotentialSpec, delta: Optional[float] = None) -> float:
    """
    (2Ū + δ_B)·γ + ρ(γ) - δ_B = 0 在 [0, δ_B/(2Ū + δ_B)] 上的唯一根，二分到 1e-13。

    Raises:
        PreconditionViolatedException: δ_B 为 +∞（B 是全集）。
    """
    delta = delta_B(game, B) if delta is None else delta
    if not math.isfinite(delta):
        raise PreconditionViolatedException("B 为全集时 δ_B = +∞，γ_B 无定义")
    if delta <= 0:
        raise PreconditionViolatedException(f"δ_B 必须为正，当前: {delta}（B 不是 curb 集合?）")
    u_bar = game.payoff_bound
    dims = max(game.shape)

    def f(g: float) -> float:
        return (2.0 * u_bar + delta) * g + rho_of_gamma(spec, g, dims, u_bar) - delta

    hi = delta / (2.0 * u_bar + delta)
    if f(hi) == 0.0:
        return hi
    return float(bisect(f, 0.0, hi, xtol=1e-13))


def curb_constants(game: Game, B: Any, spec: PotentialSpec, grid: bool = False) -> CurbConstants:
    delta = delta_B(game, B)
    gamma = gamma_B(game, B, spec, delta)
    resolution = 0.0
    if isinstance(spec, CustomPotential):
        resolution = _rho_grid(spec, gamma, max(game.shape), game.payoff_bound, 41)[1]
    return CurbConstants(
        delta_B=delta,
        gamma_B=gamma,
        U_bound=game.payoff_bound,
        potential=getattr(spec, "descriptor", "custom"),
        rho_resolution=resolution,
        delta_grid=delta_B_grid(game, B) if grid else None,
    )


def _potentials(specs: Any) -> Tuple[PotentialSpec, PotentialSpec]:
    if not isinstance(specs, (tuple, list)):
        specs = (specs, specs)
    out = []
    for s in specs:
        if isinstance(s, StrategySpec):
            if s.kind != "potential":
                raise UsageException(f"需要势函数策略，当前: {s.descriptor}")
            s = s.potential
        out.append(s)
    return out[0], out[1]


def in_U_gamma(game: Game, B: Any, specs: Any, z: Any, gamma: float) -> bool:
    """Σ_{a ∉ B} z_a < γ 且 P_i(R_i(z)) < γ 对两个玩家都成立"""
    if gamma <= 0:
        raise UsageException(f"gamma 必须为正，当前: {gamma}")
    B = _as_curb(game, B)
    w = JointDistribution(as_weights(z)).check(game).weights
    if float(w[~B.mask(game.shape)].sum()) >= gamma:
        return False
    p1, p2 = _potentials(specs)
    return (
        potential_value(p1, regret_values(game, 1, w)) < gamma
        and potential_value(p2, regret_values(game, 2, w)) < gamma
    )


# -------------------------------
# H_B 上的 LP
# -------------------------------
def _hannan_rows(game: Game, cells: List[Tuple[int, int]]) -> List[np.ndarray]:
    """对每个玩家 i 与行动 k：Σ_a w_a (u_i(k, a_{-i}) - u_i(a)) 的系数"""
    rows = []
    u1, u2 = game.payoff_1, game.payoff_2
    for k in range(game.actions_1):
        rows.append(np.array([u1[k, b] - u1[a, b] for a, b in cells]))
    for k in range(game.actions_2):
        rows.append(np.array([u2[a, k] - u2[a, b] for a, b in cells]))
    return rows


def hannan_face_point(game: Game, B: Any) -> JointDistribution:
    """
    H_B 中松弛最大的点：支撑在 B 上，所有遗憾 ≤ 0，
    并最大化 B 之外行动的最小负遗憾 s（s ≤ 1）。
    """
    B = _as_curb(game, B)
    cells = [(a, b) for a in B.B1 for b in B.B2]
    n = len(cells)
    rows = _hannan_rows(game, cells)
    outside = [False] * game.actions_1 + [False] * game.actions_2
    for k in range(game.actions_1):
        outside[k] = k not in B.B1
    for k in range(game.actions_2):
        outside[game.actions_1 + k] = k not in B.B2
    A_ub = np.array([np.append(r, 1.0 if out else 0.0) for r, out in zip(rows, outside)])
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    res = lp_solve(
        LpProblem(
            cost,
            A_ub,
            np.zeros(A_ub.shape[0]),
            np.append(np.ones(n), 0.0)[None, :],
            np.ones(1),
            [(0.0, None)] * n + [(None, 1.0)],
        )
    )
    if not res.success:
        raise CurbConstructionException("H_B 为空，无法构造内点", {"status": res.status})
    w = np.zeros(game.shape)
    for (a, b), v in zip(cells, res.x[:n]):
        w[a, b] = max(v, 0.0)
    return JointDistribution(w / w.sum())


def distance_to_H_B(game: Game, B: Any, z: Any) -> float:
    """z 到 H_B 的 sup 范数距离（LP）"""
    B = _as_curb(game, B)
    target = JointDistribution(as_weights(z)).check(game).weights
    cells = [(a, b) for a in B.B1 for b in B.B2]
    n = len(cells)
    outside_mass = float(target[~B.mask(game.shape)].max(initial=0.0))
    zc = np.array([target[a, b] for a, b in cells])
    rows = [np.append(r, 0.0) for r in _hannan_rows(game, cells)]
    b_ub = [0.0] * len(rows)
    eye = np.eye(n)
    for j in range(n):
        rows.append(np.append(eye[j], -1.0))
        b_ub.append(zc[j])
        rows.append(np.append(-eye[j], -1.0))
        b_ub.append(-zc[j])
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    res = lp_solve(
        LpProblem(
            cost,
            np.array(rows),
            np.array(b_ub),
            np.append(np.ones(n), 0.0)[None, :],
            np.ones(1),
            [(0.0, None)] * n + [(outside_mass, None)],
        )
    )
    if not res.success:
        raise LPException("H_B 距离 LP 求解失败", {"status": res.status})
    return float(res.fun)


def distance_to_hannan(game: Game, z: Any) -> float:
    """z 到 Hannan 集合 H 的 sup 范数距离"""
    full = CurbSet(tuple(range(game.actions_1)), tuple(range(game.actions_2)))
    return distance_to_H_B(game, full, z)


def positive_regret_support_check(
    game: Game, B: Any, spec: Any, samples: int = 200, seed: int = 0
) -> Dict[str, Any]:
    """
    在 U_{γ_B}(H_B) 中抽样 z = (1-κ)·w + κ·d（w 为 H_B 内点，d 为随机分布，κ ~ U(0, γ_B)），
    检查每个有正遗憾的行动都在 B 内。
    """
    B = _as_curb(game, B)
    p1, p2 = _potentials(spec)
    gamma = min(gamma_B(game, B, p1), gamma_B(game, B, p2))
    w = hannan_face_point(game, B).weights
    rng = np.random.default_rng(seed)
    accepted = 0
    violations = []
    for _ in range(samples):
        kappa = rng.uniform(0.0, gamma)
        d = rng.dirichlet(np.ones(w.size)).reshape(w.shape)
        z = (1.0 - kappa) * w + kappa * d
        if not in_U_gamma(game, B, (p1, p2), z, gamma):
            continue
        accepted += 1
        for player in (1, 2):
            r = regret_values(game, player, z)
            bad = [int(k) for k in np.flatnonzero(r > 0.0) if k not in B.part(player)]
            if bad:
                violations.append({"player": player, "actions": bad, "z": z.tolist()})
    return {"gamma_B": gamma, "samples": samples, "accepted": accepted, "violations": violations}


# -------------------------------
# 蒙特卡洛吸引实验
# -------------------------------
def wilson_interval(successes: int, n: int, z: float = 1.96) -> Tuple[float, float]:
    if n <= 0:
        raise UsageException("wilson_interval 需要 n ≥ 1")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _attraction_run(args) -> Tuple[bool, float]:
    from core.dynamics_discrete import InitialCondition, RunConfig, run

    game, B, strategies, counts, T, seed, stream = args
    config = RunConfig(
        strategies=strategies,
        horizon=T,
        fallbacks=(BestReply(), BestReply()),
        seed=seed,
        stream=stream,
        schedule=[T],
        initial=InitialCondition.from_counts(counts),
        record_mixed=False,
    )
    traj = run(game, config)
    inside = np.isin(traj.actions[:, 0], B.B1) & np.isin(traj.actions[:, 1], B.B2)
    return bool(np.all(inside)), distance_to_H_B(game, B, traj.final.z)


def curb_attraction_experiment(
    game: Game,
    B: Any,
    specs: Tuple[StrategySpec, StrategySpec],
    t0: int,
    T: int,
    runs: int,
    gamma: float,
    seed: int = 0,
    kappa: float = 0.1,
    workers: Optional[int] = None,
) -> Dict[str, Any]:
    """
    从 U_γ(H_B) 内的合成历史出发，检查类 R 动力学（兜底策略为最优反应）是否一直停留在 B 中。

    每次运行从 (1-κ)·w + κ·Uniform(B) 中抽取长度为 t0 的历史（w 为 H_B 的松弛最大点），
    历史不在 U_γ 中时计为构造失败，不重试。

    Returns:
        dict: stay_frequency、Wilson 区间、终点到 H_B 距离的分位数、构造失败数与参数。
    """
    B = _as_curb(game, B)
    if not (0 < t0 < T):
        raise UsageException(f"需要 0 < t0 < T，当前 t0={t0}, T={T}")
    if runs < 1:
        raise UsageException(f"runs 必须 ≥ 1，当前: {runs}")
    if not 0.0 <= kappa <= 1.0:
        raise UsageException(f"kappa 必须在 [0, 1] 内，当前: {kappa}")
    strategies = tuple(specs) if isinstance(specs, (tuple, list)) else (specs, specs)
    gamma_limit = None
    if not B.is_full(game):
        p1, p2 = _potentials(strategies)
        gamma_limit = min(gamma_B(game, B, p1), gamma_B(game, B, p2))
        if gamma >= gamma_limit:
            raise PreconditionViolatedException(
                f"gamma={gamma} 必须小于 γ_B={gamma_limit:.6g}", {"gamma_B": gamma_limit}
            )
    w = hannan_face_point(game, B).weights
    mask = B.mask(game.shape)
    mix = (1.0 - kappa) * w + kappa * mask / mask.sum()
    mix = mix / mix.sum()

    jobs = []
    failures = 0
    for r in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r, 1)))
        counts = rng.multinomial(t0, mix.ravel()).reshape(game.shape)
        if not in_U_gamma(game, B, strategies, counts / t0, gamma):
            failures += 1
            continue
        jobs.append((game, B, strategies, counts, T, seed, r))
    logger.info(
        f"curb 吸引实验: {len(jobs)} 次运行（构造失败 {failures}），t0={t0}, T={T}, γ={gamma}"
    )
    if workers == 1 or len(jobs) <= 1:
        results = [_attraction_run(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers or None) as pool:
            results = list(pool.map(_attraction_run, jobs))

    params = {
        "game": game.name,
        "B": B.to_dict(game),
        "t0": t0,
        "T": T,
        "runs": runs,
        "gamma": gamma,
        "gamma_B": gamma_limit,
        "kappa": kappa,
        "seed": seed,
        "strategies": [s.descriptor for s in strategies],
    }
    if not results:
        return {
            "stay_frequency": None,
            "ci_low": None,
            "ci_high": None,
            "terminal_H_B_distances": {},
            "construction_failures": failures,
            "runs_completed": 0,
            "parameters": params,
        }
    stays = sum(1 for stayed, _ in results if stayed)
    dists = np.array([d for _, d in results])
    lo, hi = wilson_interval(stays, len(results))
    return {
        "stay_frequency": stays / len(results),
        "ci_low": lo,
        "ci_high": hi,
        "terminal_H_B_distances": {
            "p50": float(np.quantile(dists, 0.5)),
            "p90": float(np.quantile(dists, 0.9)),
            "max": float(dists.max()),
        },
        "construction_failures": failures,
        "runs_completed": len(results),
        "parameters": params,
    }
