"""
全局异常捕获中间件

在 CLI 与 MCP Server 中统一捕获 LabException 与未处理的异常，
并将其转换为 JSON 格式的错误记录。
- exception_handler: CLI 入口使用，返回退出码（0 通过，1 模块失败，2 用法错误）
- async_exception_handler: MCP 工具使用，返回错误字典而不是抛出
"""

import json
import sys
import traceback
from functools import wraps
from typing import Callable, Any, Coroutine, Dict

from .errors import LabException, InternalException, USAGE_CODES
from .logger import get_logger

logger = get_logger("middleware")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def exit_code_for(exc: LabException) -> int:
    """将异常映射为 CLI 退出码"""
    return EXIT_USAGE if exc.code in USAGE_CODES else EXIT_FAILURE


def _emit(error: Dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(error, ensure_ascii=False, default=str) + "\n")
    sys.stdout.flush()


def exception_handler(func):
    """
    捕获 LabException 和未知异常的装饰器
    - LabException 会被转换为 JSON 错误记录（写到 stdout），返回对应退出码。
    - 未知异常会被包装成 InternalException，退出码为 1。
    - 被装饰函数返回 None 时视为成功（退出码 0）。
    """

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            result = func(*args, **kwargs)
            return EXIT_OK if result is None else result
        except LabException as e:
            logger.error(f"LabException: {e.code} - {e.message} | details={e.details}")
            _emit(e.to_error().to_dict())
            return exit_code_for(e)
        except Exception as e:
            ex = InternalException(str(e), {"traceback": traceback.format_exc()})
            logger.exception("Unhandled exception")
            _emit(ex.to_error().to_dict())
            return EXIT_FAILURE

    return wrapper


def async_exception_handler(func: Callable[..., Coroutine[Any, Any, Any]]):
    """
    捕获 LabException 和未知异常的装饰器（异步版本）
    - 返回错误字典，交给 MCP 客户端展示。
    """

    @wraps(func)
    async def wrapper(*args, **kwargs):
        try:
            return await func(*args, **kwargs)
        except LabException as e:
            logger.error(f"LabException: {e.code} - {e.message} | details={e.details}")
            return e.to_error().to_dict()
        except Exception as e:
            ex = InternalException(str(e), {"traceback": traceback.format_exc()})
            logger.exception("Unhandled exception")
            return ex.to_error().to_dict()

    return wrapper
