import importlib
import pkgutil
import sys
from typing import List

from art import text2art

from .config import (
    get_server_name,
    get_server_author,
    get_server_description,
    get_server_version,
)


def print_server_banner():
    """
    打印 banner（输出到 stderr，避免破坏 STDIO 传输与结果表格），包括：
    - 名称（大字）
    - 作者与版本号
    - 描述
    """
    name = get_server_name()
    ascii_name = text2art(name, font="small")
    print(ascii_name, file=sys.stderr)
    print(f"Author: {get_server_author()}", file=sys.stderr)
    print(f"Version: {get_server_version()}", file=sys.stderr)
    print(f"{get_server_description()}", file=sys.stderr)
    print("=" * 60, file=sys.stderr)


def format_table(rows, headers) -> str:
    """将结果行排版为等宽文本表格（verify 输出使用）"""
    cells = [[str(h) for h in headers]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = []
    for n, row in enumerate(cells):
        lines.append(" | ".join(c.ljust(w) for c, w in zip(row, widths)))
        if n == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines)


def import_submodules(package_path, package_name: str) -> List[str]:
    """导入包下的全部非包模块，触发其中的注册装饰器"""
    loaded = []
    for info in pkgutil.walk_packages(package_path, f"{package_name}."):
        if not info.ispkg:
            importlib.import_module(info.name)
            loaded.append(info.name)
    return loaded
