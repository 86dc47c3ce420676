"""
博弈目录模块

精确构造研究中用到的全部博弈，并提供若干博弈类的随机生成器。
提供以下功能：
- build: 按名称与参数构造博弈（fig1, fig2, fig3i, fig3ii, shapley, fig5, a2ex1, a2ex2, matching_pennies, rps, coordination2）
- generate: 生成 zero_sum / identical_interest / weighted_potential 随机博弈
- resolve: 解析 CLI 名称，例如 "fig3ii:0.25"、"generate:zero_sum:3:7" 或博弈文件路径
- list_entries: 目录清单（含来源说明）
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from core.game_core import Game, MixedProfile, as_weights
from modules.YA_Common.utils.errors import CatalogException
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("catalog")

SQRT2 = math.sqrt(2.0)
ETA_FIG2 = SQRT2 / (1.0 + SQRT2)
MAX_GENERATED_ACTIONS = 12


@dataclass(frozen=True)
class ParamSpec:
    name: str
    default: float
    low: float
    high: float
    low_open: bool = False
    high_open: bool = False

    def check(self, value: float) -> float:
        too_low = value <= self.low if self.low_open else value < self.low
        too_high = value >= self.high if self.high_open else value > self.high
        if too_low or too_high or not math.isfinite(value):
            lo = "(" if self.low_open else "["
            hi = ")" if self.high_open else "]"
            raise CatalogException(
                f"参数 {self.name}={value} 不在 {lo}{self.low}, {self.high}{hi} 内"
            )
        return float(value)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    builder: Callable[..., Game]
    provenance: str
    params: Tuple[ParamSpec, ...] = ()
    nash_distance: Optional[Callable[[MixedProfile], float]] = None
    special_points: Dict[str, Any] = field(default_factory=dict)

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "params": [
                {"name": p.name, "default": p.default, "range": [p.low, p.high]}
                for p in self.params
            ],
            "provenance": self.provenance,
            "continuum_nash_set": self.nash_distance is not None,
        }


# -------------------------------
# 构造函数
# -------------------------------
def _fig1() -> Game:
    u1 = [[1.0, 0.0], [0.0, SQRT2]]
    u2 = [[SQRT2, 0.0], [0.0, 1.0]]
    return Game(u1, u2, ("L", "R"), ("L", "R"), "fig1")


def _fig2() -> Game:
    eta = ETA_FIG2
    u1 = [[1.0, 0.0], [0.0, SQRT2], [eta, eta]]
    u2 = [[0.0, SQRT2], [1.0, 0.0], [0.0, 0.0]]
    return Game(u1, u2, ("L", "R", "C"), ("L", "R"), "fig2")


def _fig3i() -> Game:
    u = np.array([[2.0, 1.0, -4.0], [1.0, 0.0, -1.0], [-4.0, -1.0, -2.0]])
    return Game(u, u.T, ("A", "B", "C"), ("A", "B", "C"), "fig3i")


def _fig3ii(eps: float) -> Game:
    u = np.array(
        [
            [1.0, 1.0, 0.0, 0.0],
            [1.0 - eps, 1.0 - eps, -eps, -eps],
            [0.0, 0.0, 1.0, 1.0],
            [-eps, -eps, 1.0 - eps, 1.0 - eps],
        ]
    )
    labels = ("A", "A-", "B", "B-")
    return Game(u, u.T, labels, labels, f"fig3ii:{eps:g}")


def _shapley() -> Game:
    u1 = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]
    u2 = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    return Game(u1, u2, ("A", "B", "C"), ("A", "B", "C"), "shapley")


def _fig5(eta: float) -> Game:
    u1 = [[1.0, 0.0], [0.0, 1.0], [0.5 - eta, 0.5 - eta]]
    return Game(u1, np.zeros((3, 2)), ("T", "C", "B"), ("L", "R"), f"fig5:{eta:g}")


def _a2ex1() -> Game:
    u = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    return Game(u, u.T, ("A", "B", "C"), ("A", "B", "C"), "a2ex1")


def _a2ex2() -> Game:
    u1 = [[0.0, 0.0], [0.0, -1.0]]
    return Game(u1, np.zeros((2, 2)), ("T", "B"), ("L", "R"), "a2ex2")


def _matching_pennies() -> Game:
    u1 = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return Game(u1, -u1, ("H", "T"), ("H", "T"), "matching_pennies")


def _rps() -> Game:
    u1 = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
    return Game(u1, -u1, ("R", "P", "S"), ("R", "P", "S"), "rps")


def _coordination2() -> Game:
    u = np.eye(2)
    return Game(u, u.copy(), ("A", "B"), ("A", "B"), "coordination2")


# 连续纳什集合的 sup 范数距离
def _a2ex2_distance(profile: MixedProfile) -> float:
    """纳什集合为 {x_B = 0} ∪ {y_R = 0}"""
    return float(min(profile.x1.weights[1], profile.x2.weights[1]))


def _a2ex1_distance(profile: MixedProfile) -> float:
    """
    纳什集合为 ({y_A = 0} ∪ {x_C = 0}) ∩ ({x_A = 0} ∪ {y_C = 0})。
    把一个玩家的两个坐标同时清零需要把两者的质量移到剩下的行动上，代价是两者之和。
    """
    x = as_weights(profile.x1)
    y = as_weights(profile.x2)
    options = (
        max(y[0], x[0]),
        y[0] + y[2],
        x[0] + x[2],
        max(x[2], y[2]),
    )
    return float(min(options))


_ENTRIES: Dict[str, CatalogEntry] = {}


def _register(entry: CatalogEntry) -> None:
    _ENTRIES[entry.name] = entry


_register(
    CatalogEntry(
        "fig1",
        _fig1,
        "2x2 coordination game with payoffs (1, √2) and (√2, 1) on the diagonal; "
        "discrete fictitious play from an off-diagonal start is locked off the diagonal.",
        special_points={"dfp_start": (0, 1), "regret_floor": ETA_FIG2},
    )
)
_register(
    CatalogEntry(
        "fig2",
        _fig2,
        "3x2 game in which C is a best reply only to x2 = (η, 1-η), η = √2/(1+√2).",
        special_points={"c_belief": (ETA_FIG2, 1.0 - ETA_FIG2)},
    )
)
_register(
    CatalogEntry(
        "fig3i",
        _fig3i,
        "symmetric identical-interest 3x3 game, strictly dominance solvable to (A, A); "
        "the diagonal-thirds correlated action lies in the reduced Hannan set.",
        special_points={"diagonal_thirds": np.eye(3) / 3.0, "nash_payoff": 2.0},
    )
)
_register(
    CatalogEntry(
        "fig3ii",
        _fig3ii,
        "symmetric 4x4 coordination game with penalized duplicates A-, B-; "
        "the half-half correlated action on (A-, A-), (B-, B-) is in the Hannan set iff ε ≤ 1/2.",
        params=(ParamSpec("eps", 0.0, 0.0, math.inf, high_open=True),),
        special_points={"hannan_threshold": 0.5},
    )
)
_register(
    CatalogEntry(
        "shapley",
        _shapley,
        "Shapley's 3x3 game: unique uniform Nash equilibrium, fictitious play cycles on a hexagon.",
        special_points={"nash": (np.full(3, 1 / 3), np.full(3, 1 / 3))},
    )
)
_register(
    CatalogEntry(
        "fig5",
        _fig5,
        "3x2 game of player 1 only (player 2's payoffs set to zero): C is a 2ε-best reply and "
        "an ε-graph-perturbed best reply to (1/2+ε, 1/2-ε); B is only a 1-graph-perturbed one.",
        params=(ParamSpec("eta", 0.1, 0.0, 0.5, low_open=True, high_open=True),),
    )
)
_register(
    CatalogEntry(
        "a2ex1",
        _a2ex1,
        "symmetric one-population 3x3 example stored as the bimatrix (u, u^T); "
        "the population structure differs from the single-population original.",
        nash_distance=_a2ex1_distance,
    )
)
_register(
    CatalogEntry(
        "a2ex2",
        _a2ex2,
        "2x2 game of player 1 only (player 2's payoffs zero); Nash set = edges x_B = 0 ∪ y_R = 0.",
        nash_distance=_a2ex2_distance,
    )
)
_register(
    CatalogEntry(
        "matching_pennies",
        _matching_pennies,
        "zero-sum 2x2 game with the unique mixed equilibrium ((1/2, 1/2), (1/2, 1/2)).",
    )
)
_register(
    CatalogEntry(
        "rps",
        _rps,
        "standard zero-sum rock-paper-scissors with the uniform equilibrium.",
    )
)
_register(
    CatalogEntry(
        "coordination2",
        _coordination2,
        "2x2 pure coordination game (diagonal 1, off-diagonal 0).",
    )
)


# -------------------------------
# 对外接口
# -------------------------------
def get_entry(name: str) -> CatalogEntry:
    try:
        return _ENTRIES[name]
    except KeyError:
        raise CatalogException(f"未知的博弈名称: {name}", {"known": sorted(_ENTRIES)})


def list_entries() -> List[Dict[str, Any]]:
    return [entry.describe() for entry in _ENTRIES.values()]


def build(name: str, params: Optional[Dict[str, float]] = None) -> Game:
    """
    按名称构造目录中的博弈。

    Args:
        name (str): 目录名称，例如 "fig3ii"。
        params (Optional[Dict[str, float]]): 参数，例如 {"eps": 0.25}；缺省使用默认值。

    Returns:
        Game: 精确收益表（无理数条目为双精度）。

    Raises:
        CatalogException: 未知名称、未知参数或参数越界。
    """
    entry = get_entry(name)
    params = dict(params or {})
    unknown = set(params) - {p.name for p in entry.params}
    if unknown:
        raise CatalogException(f"{name} 不接受参数 {sorted(unknown)}")
    values = [p.check(float(params.get(p.name, p.default))) for p in entry.params]
    return entry.builder(*values)


def generate(kind: str, dims: Tuple[int, int], seed: int) -> Game:
    """
    生成随机博弈：
    - zero_sum: u1 ~ U[-1, 1]，u2 = -u1
    - identical_interest: u2 = u1
    - weighted_potential: u_i = w_i P + d_i(a_{-i})，w_i > 0
    """
    n1, n2 = int(dims[0]), int(dims[1])
    if not (1 <= n1 <= MAX_GENERATED_ACTIONS and 1 <= n2 <= MAX_GENERATED_ACTIONS):
        raise CatalogException(
            f"生成博弈的维度必须在 1..{MAX_GENERATED_ACTIONS} 内", {"dims": [n1, n2]}
        )
    rng = np.random.default_rng(seed)
    name = f"generate:{kind}:{n1}x{n2}:{seed}"
    if kind == "zero_sum":
        u1 = rng.uniform(-1.0, 1.0, size=(n1, n2))
        return Game(u1, -u1, name=name)
    if kind == "identical_interest":
        u1 = rng.uniform(-1.0, 1.0, size=(n1, n2))
        return Game(u1, u1.copy(), name=name)
    if kind == "weighted_potential":
        potential = rng.uniform(-1.0, 1.0, size=(n1, n2))
        w1, w2 = rng.uniform(0.5, 2.0, size=2)
        d1 = rng.uniform(-1.0, 1.0, size=n2)  # 只依赖玩家 2 的行动
        d2 = rng.uniform(-1.0, 1.0, size=n1)
        u1 = w1 * potential + d1[None, :]
        u2 = w2 * potential + d2[:, None]
        return Game(u1, u2, name=name)
    raise CatalogException(
        f"未知的博弈类: {kind}",
        {"known": ["zero_sum", "identical_interest", "weighted_potential"]},
    )


def resolve(reference: str) -> Game:
    """
    解析博弈引用：
    - 目录名，可带一个位置参数："fig3ii:0.25"、"fig5:0.1"
    - 生成器："generate:<class>:<dims>:<seed>"，dims 为 "3" 或 "3x4"
    - 其余视为博弈文件路径
    """
    parts = reference.strip().split(":")
    head = parts[0]
    if head == "generate":
        if len(parts) != 4:
            raise CatalogException(f"生成器引用格式应为 generate:<class>:<dims>:<seed>: {reference}")
        try:
            dims_text = parts[2].lower().split("x")
            dims = (int(dims_text[0]), int(dims_text[-1]))
            seed = int(parts[3])
        except ValueError:
            raise CatalogException(f"生成器引用无法解析: {reference}")
        return generate(parts[1], dims, seed)
    if head in _ENTRIES:
        entry = _ENTRIES[head]
        params: Dict[str, float] = {}
        if len(parts) > 1:
            if len(parts) - 1 > len(entry.params):
                raise CatalogException(f"{head} 的参数过多: {reference}")
            try:
                for spec, raw in zip(entry.params, parts[1:]):
                    params[spec.name] = float(raw)
            except ValueError:
                raise CatalogException(f"参数不是数值: {reference}")
        return build(head, params)
    path = Path(reference)
    if path.suffix or path.exists():
        from core.game_file import load_game_file

        return load_game_file(path)
    raise CatalogException(f"未知的博弈名称: {reference}", {"known": sorted(_ENTRIES)})


def entry_for(game: Game) -> Optional[CatalogEntry]:
    """根据 Game.name 找回目录条目（名称中的参数部分被忽略）"""
    return _ENTRIES.get(game.name.split(":")[0])
