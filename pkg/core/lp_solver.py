"""
稠密小规模线性规划求解器

两阶段单纯形法，维护完整的稠密表格（不是修正单纯形法，不维护基矩阵的逆或分解）。
进出基均使用 Bland 规则以保证不循环、结果确定。
变量上下界不在换基时处理：先代换 x = l + y（或 x = u - y、自由变量拆成 y⁺ - y⁻），
有限上界再作为附加的 ≤ 行进入表格。
问题形式：
    min c·x
    s.t. A_ub x ≤ b_ub, A_eq x = b_eq, l ≤ x ≤ u（l、u 可为 None 表示无界）

本库中所有 LP（curb 闭包证书、δ_B、混合占优、图扰动距离、Hannan 距离）都只有几十个变量，
表格的 O(m·n) 换基代价可以忽略。
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from modules.YA_Common.utils.errors import LPException
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("lp_solver")

MAX_VARIABLES = 200
PIVOT_TOL = 1e-12
COST_TOL = 1e-11

Bound = Tuple[Optional[float], Optional[float]]


@dataclass
class LpProblem:
    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: Optional[Sequence[Bound]] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        if n == 0:
            raise LPException("LP 没有变量")
        if n > MAX_VARIABLES:
            raise LPException(f"LP 变量数超过上限 {MAX_VARIABLES}", {"n": n})
        self.A_ub, self.b_ub = self._rows(self.A_ub, self.b_ub, n, "A_ub")
        self.A_eq, self.b_eq = self._rows(self.A_eq, self.b_eq, n, "A_eq")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        elif len(self.bounds) == 2 and not isinstance(self.bounds[0], (tuple, list)):
            self.bounds = [tuple(self.bounds)] * n
        if len(self.bounds) != n:
            raise LPException("bounds 数量与变量数不符", {"n": n, "bounds": len(self.bounds)})

    @staticmethod
    def _rows(A, b, n: int, name: str) -> Tuple[np.ndarray, np.ndarray]:
        if A is None:
            return np.zeros((0, n)), np.zeros(0)
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[1] != n or A.shape[0] != b.size:
            raise LPException(
                f"{name} 维度不一致", {"A": list(A.shape), "b": b.size, "n": n}
            )
        return A, b

    @property
    def num_variables(self) -> int:
        return self.c.size


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray] = None
    fun: Optional[float] = None
    iterations: int = 0
    residual: float = 0.0
    phase1_value: float = 0.0
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status == "optimal"


@dataclass
class _Tableau:
    T: np.ndarray
    basis: List[int]
    iterations: int = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        for i in range(T.shape[0]):
            if i != row and T[i, col] != 0.0:
                T[i] -= T[i, col] * T[row]
        self.basis[row] = col
        self.iterations += 1

    def set_objective(self, costs: np.ndarray) -> None:
        T = self.T
        T[-1, :] = 0.0
        T[-1, : costs.size] = costs
        for i, b in enumerate(self.basis):
            if costs[b] != 0.0:
                T[-1] -= costs[b] * T[i]

    def run(self, max_iter: int) -> str:
        T = self.T
        m = T.shape[0] - 1
        ncols = T.shape[1] - 1
        while self.iterations < max_iter:
            entering = -1
            for j in range(ncols):
                if T[-1, j] < -COST_TOL:
                    entering = j
                    break
            if entering < 0:
                return "optimal"
            leaving = -1
            best_ratio = np.inf
            for i in range(m):
                a = T[i, entering]
                if a > PIVOT_TOL:
                    ratio = T[i, -1] / a
                    if ratio < best_ratio - 1e-15 or (
                        abs(ratio - best_ratio) <= 1e-15 and self.basis[i] < self.basis[leaving]
                    ):
                        best_ratio = ratio
                        leaving = i
            if leaving < 0:
                return "unbounded"
            self.pivot(leaving, entering)
        raise LPException("单纯形迭代次数超过上限", {"max_iter": max_iter})


def _substitute(problem: LpProblem):
    """把 l ≤ x ≤ u 代换为 x = offset + M y, y ≥ 0，并附加上界行"""
    n = problem.num_variables
    columns = []
    offset = np.zeros(n)
    extra_rows = []
    for j, (lo, hi) in enumerate(problem.bounds):
        lo = None if lo is None or np.isneginf(lo) else float(lo)
        hi = None if hi is None or np.isposinf(hi) else float(hi)
        if lo is not None and hi is not None and hi < lo:
            return None
        if lo is not None:
            offset[j] = lo
            columns.append((j, 1.0))
            if hi is not None:
                extra_rows.append((len(columns) - 1, hi - lo))
        elif hi is not None:
            offset[j] = hi
            columns.append((j, -1.0))
        else:
            columns.append((j, 1.0))
            columns.append((j, -1.0))
    M = np.zeros((n, len(columns)))
    for k, (j, sign) in enumerate(columns):
        M[j, k] = sign
    return offset, M, extra_rows


def lp_solve(problem: LpProblem, max_iter: int = 20000) -> LpResult:
    """
    求解 LpProblem。

    Returns:
        LpResult: status 为 optimal / infeasible / unbounded；optimal 时附带 x、目标值
        与约束残差（最大违反量）。

    Raises:
        LPException: 迭代次数超限或问题维度错误。
    """
    sub = _substitute(problem)
    if sub is None:
        return LpResult("infeasible", message="变量上下界矛盾")
    offset, M, extra_rows = sub
    ny = M.shape[1]

    A_ub = problem.A_ub @ M
    b_ub = problem.b_ub - problem.A_ub @ offset
    if extra_rows:
        E = np.zeros((len(extra_rows), ny))
        for r, (k, cap) in enumerate(extra_rows):
            E[r, k] = 1.0
        A_ub = np.vstack([A_ub, E])
        b_ub = np.concatenate([b_ub, [cap for _, cap in extra_rows]])
    A_eq = problem.A_eq @ M
    b_eq = problem.b_eq - problem.A_eq @ offset

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    cost_y = problem.c @ M

    if m == 0:
        if np.any(cost_y < -COST_TOL):
            return LpResult("unbounded", message="无约束且目标无下界")
        x = offset.copy()
        return LpResult("optimal", x, float(problem.c @ x), 0, _residual(problem, x))

    # 行：A y + s = b（≤ 行）或 A y = b（= 行），统一化为 b ≥ 0
    rows = np.zeros((m, ny + m_ub))
    rhs = np.zeros(m)
    rows[:m_ub, :ny] = A_ub
    rows[:m_ub, ny:] = np.eye(m_ub)
    rhs[:m_ub] = b_ub
    rows[m_ub:, :ny] = A_eq
    rhs[m_ub:] = b_eq
    negative = rhs < 0
    rows[negative] *= -1.0
    rhs[negative] *= -1.0

    needs_artificial = [i for i in range(m) if i >= m_ub or negative[i]]
    n_art = len(needs_artificial)
    ncols = ny + m_ub + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[:m, : ny + m_ub] = rows
    T[:m, -1] = rhs
    basis = [ny + i for i in range(m)]
    for k, i in enumerate(needs_artificial):
        T[i, ny + m_ub + k] = 1.0
        basis[i] = ny + m_ub + k
    tab = _Tableau(T, basis)

    # Phase 1
    phase1_value = 0.0
    if n_art:
        costs = np.zeros(ncols)
        costs[ny + m_ub :] = 1.0
        tab.set_objective(costs)
        tab.run(max_iter)
        phase1_value = float(-tab.T[-1, -1])
        scale = max(1.0, float(np.abs(rhs).max()))
        if phase1_value > 1e-9 * scale:
            logger.debug(f"LP 不可行，第一阶段目标值 {phase1_value:.3e}")
            return LpResult(
                "infeasible",
                iterations=tab.iterations,
                phase1_value=phase1_value,
                message="第一阶段目标值为正",
            )
        _drive_out_artificials(tab, ny + m_ub)
        tab.T = np.delete(tab.T, np.s_[ny + m_ub : ncols], axis=1)

    costs = np.zeros(ny + m_ub)
    costs[:ny] = cost_y
    tab.set_objective(costs)
    status = tab.run(max_iter)
    if status == "unbounded":
        return LpResult("unbounded", iterations=tab.iterations, phase1_value=phase1_value)

    y = np.zeros(ny + m_ub)
    for i, b in enumerate(tab.basis):
        y[b] = tab.T[i, -1]
    x = offset + M @ y[:ny]
    return LpResult(
        "optimal",
        x,
        float(problem.c @ x),
        tab.iterations,
        _residual(problem, x),
        phase1_value,
    )


def _drive_out_artificials(tab: _Tableau, first_artificial: int) -> None:
    """把第一阶段后仍在基中的人工变量换出；无法换出的行是冗余行，直接删除"""
    i = 0
    while i < len(tab.basis):
        if tab.basis[i] >= first_artificial:
            row = tab.T[i, :first_artificial]
            candidates = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if candidates.size:
                tab.pivot(i, int(candidates[0]))
            else:
                tab.T = np.delete(tab.T, i, axis=0)
                del tab.basis[i]
                continue
        i += 1


def _residual(problem: LpProblem, x: np.ndarray) -> float:
    worst = 0.0
    if problem.A_ub.size:
        worst = max(worst, float(np.max(problem.A_ub @ x - problem.b_ub, initial=0.0)))
    if problem.A_eq.size:
        worst = max(worst, float(np.max(np.abs(problem.A_eq @ x - problem.b_eq), initial=0.0)))
    for j, (lo, hi) in enumerate(problem.bounds):
        if lo is not None and np.isfinite(lo):
            worst = max(worst, float(lo - x[j]))
        if hi is not None and np.isfinite(hi):
            worst = max(worst, float(x[j] - hi))
    return worst


def is_feasible(problem: LpProblem) -> bool:
    return lp_solve(problem).status != "infeasible"

