"""
博弈文件解析模块

文件格式（纯文本）：
    第一行 "R C"
    随后 R×C 个玩家 1 的收益（按行优先），再 R×C 个玩家 2 的收益。
条目之间以空白或逗号分隔，可以是小数、分数 "a/b"，或包含 sqrt、+ - * /、括号的表达式
（表达式内部不能有空白，例如 sqrt(2)/(1+sqrt(2))），在解析时求值为双精度。
"#" 之后为注释。可选的 "labels1:" / "labels2:" 行给出行动标签。

提供以下功能：
- parse_payoff_expression: 安全地求值单个条目
- parse_game_text: 从文本构造 Game
- load_game_file: 从文件构造 Game
"""

import ast
import math
import operator
from pathlib import Path
from typing import List, Optional, Union

from core.game_core import Game
from modules.YA_Common.utils.errors import GameFileException
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("game_file")

_BINARY = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCTIONS = {"sqrt": math.sqrt}
_CONSTANTS = {"pi": math.pi, "e": math.e}


def _eval_node(node: ast.AST) -> float:
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
        return _BINARY[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCTIONS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _FUNCTIONS[node.func.id](_eval_node(node.args[0]))
    if isinstance(node, ast.Name) and node.id in _CONSTANTS:
        return _CONSTANTS[node.id]
    raise ValueError(f"不支持的表达式成分: {ast.dump(node)}")


def parse_payoff_expression(token: str) -> float:
    """
    求值一个收益条目，例如 "1.5"、"-1/3"、"sqrt(2)/(1+sqrt(2))"。

    Raises:
        GameFileException: 无法解析或结果不是有限实数。
    """
    try:
        value = _eval_node(ast.parse(token.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as e:
        raise GameFileException(f"无法解析收益条目: {token!r}", {"reason": str(e)})
    if not math.isfinite(value):
        raise GameFileException(f"收益条目不是有限实数: {token!r}")
    return value


def _tokens(text: str) -> List[str]:
    tokens: List[str] = []
    current: List[str] = []
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and (ch.isspace() or ch == ","):
            if current:
                tokens.append("".join(current))
                current = []
            continue
        current.append(ch)
    if depth != 0:
        raise GameFileException("括号不匹配")
    if current:
        tokens.append("".join(current))
    return tokens


def parse_game_text(text: str, name: str = "") -> Game:
    """从博弈文件文本构造 Game"""
    labels = {}
    body: List[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        lowered = line.lower()
        if lowered.startswith("labels1:") or lowered.startswith("labels2:"):
            labels[lowered[6]] = tuple(line.split(":", 1)[1].split())
            continue
        body.append(line)
    tokens = _tokens("\n".join(body))
    if len(tokens) < 2:
        raise GameFileException("缺少维度行 'R C'")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
    except ValueError:
        raise GameFileException(f"维度行无效: {tokens[0]!r} {tokens[1]!r}")
    if rows < 1 or cols < 1:
        raise GameFileException(f"维度必须为正: {rows} x {cols}")
    entries = tokens[2:]
    expected = 2 * rows * cols
    if len(entries) != expected:
        raise GameFileException(
            "收益条目数量不符", {"expected": expected, "got": len(entries)}
        )
    values = [parse_payoff_expression(tok) for tok in entries]
    n = rows * cols
    u1 = [values[r * cols : (r + 1) * cols] for r in range(rows)]
    u2 = [values[n + r * cols : n + (r + 1) * cols] for r in range(rows)]
    logger.debug(f"解析博弈文件: {rows}x{cols} {name}")
    return Game(
        u1,
        u2,
        labels_1=labels.get("1", ()),
        labels_2=labels.get("2", ()),
        name=name,
    )


def load_game_file(path: Union[str, Path], name: Optional[str] = None) -> Game:
    """读取博弈文件"""
    p = Path(path)
    if not p.exists():
        raise GameFileException(f"博弈文件不存在: {p}")
    return parse_game_text(p.read_text(encoding="utf-8"), name=name or p.stem)
