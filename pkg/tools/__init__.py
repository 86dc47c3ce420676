"""
regretlab 的 MCP 工具注册表

tools 目录下的模块用 @RegretLab_Tool 标记函数，register_tools 统一导入并挂载到 FastMCP。
挂载时每个工具都包上 async_exception_handler，LabException 以错误记录返回给客户端。
"""

from typing import Callable, List, Optional

from mcp.server.fastmcp import FastMCP
from mcp.types import ToolAnnotations

from modules.YA_Common.utils.helpers import import_submodules
from modules.YA_Common.utils.logger import get_logger
from modules.YA_Common.utils.middleware import async_exception_handler

logger = get_logger("tools")

_TOOL_REGISTRY: List[tuple[Callable, dict]] = []

# 纯计算工具：不修改外部状态，相同输入得到相同结果
READ_ONLY = ToolAnnotations(readOnlyHint=True, idempotentHint=True, openWorldHint=False)


def RegretLab_Tool(
    name: Optional[str] = None,
    title: Optional[str] = None,
    description: Optional[str] = None,
    annotations: Optional[ToolAnnotations] = READ_ONLY,
):
    """
    工具装饰器，登记后由 register_tools 延迟挂载：

        @RegretLab_Tool(name="game_info", title="Game Info", description="...")
        async def game_info(game: str) -> dict:
            ...
    """

    def decorator(func: Callable):
        meta = {"name": name, "title": title, "description": description, "annotations": annotations}
        _TOOL_REGISTRY.append((func, meta))
        return func

    return decorator


def registered_tools() -> List[str]:
    return [meta["name"] or func.__name__ for func, meta in _TOOL_REGISTRY]


def register_tools(app: FastMCP) -> int:
    """导入 tools 下所有模块，把登记的工具挂载到 app，返回挂载数量"""
    import_submodules(__path__, __name__)
    for func, meta in _TOOL_REGISTRY:
        app.tool(**meta)(async_exception_handler(func))
    logger.info(f"已注册 {len(_TOOL_REGISTRY)} 个工具")
    return len(_TOOL_REGISTRY)
