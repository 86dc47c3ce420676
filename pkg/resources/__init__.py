"""
MCP 资源注册表

资源 URI 必须显式给出；文档类资源从 docs/ 目录读取。
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from mcp.server.fastmcp import FastMCP

from modules.YA_Common.utils.errors import UsageException
from modules.YA_Common.utils.helpers import import_submodules
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("resources")

DOCS_DIR = Path(__file__).resolve().parent.parent / "docs"

_RESOURCE_REGISTRY: List[Tuple[Callable, str, Dict[str, Any]]] = []


def RegretLab_Resource(
    uri: str,
    *,
    name: Optional[str] = None,
    title: Optional[str] = None,
    description: Optional[str] = None,
    mime_type: Optional[str] = None,
):
    """
    资源装饰器，例如：

        @RegretLab_Resource("catalog://games", title="Game Catalog", mime_type="application/json")
        def catalog() -> str:
            ...
    """
    if callable(uri) or not uri:
        raise UsageException("RegretLab_Resource 需要 uri，例如 @RegretLab_Resource('docs://guide')")
    meta = {"name": name, "title": title, "description": description, "mime_type": mime_type}

    def decorator(func: Callable):
        _RESOURCE_REGISTRY.append((func, uri, meta))
        return func

    return decorator


def read_doc(filename: str) -> str:
    path = DOCS_DIR / filename
    if path.exists():
        return path.read_text(encoding="utf-8")
    logger.warning(f"文档不存在: {path}")
    return f"# {filename}\n\n(文档缺失)\n"


def register_resources(app: FastMCP) -> int:
    import_submodules(__path__, __name__)
    for func, uri, meta in _RESOURCE_REGISTRY:
        app.resource(uri, **meta)(func)
    logger.info(f"已注册 {len(_RESOURCE_REGISTRY)} 个资源")
    return len(_RESOURCE_REGISTRY)
