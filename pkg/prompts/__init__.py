"""
MCP 提示词注册表：@RegretLab_Prompt 登记，register_prompts 挂载
"""

from typing import Callable, Dict, List, Optional, Tuple

from mcp.server.fastmcp import FastMCP

from modules.YA_Common.utils.helpers import import_submodules
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("prompts")

_PROMPT_REGISTRY: List[Tuple[Callable, Dict[str, Optional[str]]]] = []


def RegretLab_Prompt(name: Optional[str] = None, title: Optional[str] = None, description: Optional[str] = None):
    def decorator(func: Callable):
        _PROMPT_REGISTRY.append((func, {"name": name, "title": title, "description": description}))
        return func

    return decorator


def register_prompts(app: FastMCP) -> int:
    import_submodules(__path__, __name__)
    for func, meta in _PROMPT_REGISTRY:
        app.prompt(**meta)(func)
    logger.info(f"已注册 {len(_PROMPT_REGISTRY)} 个提示词")
    return len(_PROMPT_REGISTRY)
