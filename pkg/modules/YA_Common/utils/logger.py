"""
日志模块

根 logger 在导入时按 config.yaml 的 logging 节配置一次：
- 控制台：colorlog 彩色输出到 stderr，stdout 留给 STDIO 传输、JSON 结果与 verify 表格
- 文件：可选的 RotatingFileHandler

run_batch 与 run_experiment 会在进程池中执行，格式里带上进程名以区分工作进程。
环境变量 REGRETLAB_LOG_LEVEL 覆盖控制台级别。
"""

import logging
import os
import sys
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict

from colorlog import ColoredFormatter

ROOT_NAME = "regretlab"
LEVEL_ENV = "REGRETLAB_LOG_LEVEL"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
PLAIN_FORMAT = "%(asctime)s | %(levelname)-8s | %(processName)s | %(name)s:%(lineno)d - %(message)s"
LOG_COLORS = {
    "DEBUG": "blue",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "bold_red",
}


def load_logger_config() -> Dict[str, Any]:
    try:
        from .config import get_config

        return get_config("logging", {}) or {}
    except Exception:
        return {}


def _console_handler(cfg: Dict[str, Any]) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    level = os.getenv(LEVEL_ENV) or cfg.get("level", "INFO")
    handler.setLevel(str(level).upper())
    handler.setFormatter(ColoredFormatter("%(log_color)s" + PLAIN_FORMAT, DATE_FORMAT, log_colors=LOG_COLORS))
    return handler


def _file_handler(cfg: Dict[str, Any]) -> logging.Handler:
    log_path = Path(datetime.now().strftime(cfg.get("path", "logs/%Y-%m-%d_%H-%M-%S.log")))
    log_path.parent.mkdir(exist_ok=True, parents=True)
    handler = RotatingFileHandler(
        filename=log_path,
        maxBytes=int(cfg.get("rotation_bytes", 10 * 1024 * 1024)),
        backupCount=int(cfg.get("retention_count", 7)),
        encoding="utf-8",
    )
    handler.setLevel(str(cfg.get("level", "DEBUG")).upper())
    handler.setFormatter(logging.Formatter(PLAIN_FORMAT, DATE_FORMAT))
    return handler


def setup_logger() -> None:
    cfg = load_logger_config()
    root = logging.getLogger()
    root.setLevel(logging.DEBUG)
    for handler in root.handlers[:]:
        root.removeHandler(handler)

    console_cfg = cfg.get("console", {})
    if console_cfg.get("enabled", True):
        root.addHandler(_console_handler(console_cfg))
    file_cfg = cfg.get("file", {})
    if file_cfg.get("enabled", False):
        root.addHandler(_file_handler(file_cfg))


def set_console_level(level: str) -> None:
    """调整控制台日志级别（CLI 的 -v 使用）"""
    for handler in logging.getLogger().handlers:
        # RotatingFileHandler 也是 StreamHandler 的子类
        if isinstance(handler, logging.StreamHandler) and not isinstance(handler, RotatingFileHandler):
            handler.setLevel(level.upper())


def get_logger(name: str = ROOT_NAME) -> logging.Logger:
    """模块 logger 统一挂在 regretlab 命名空间下，例如 regretlab.catalog"""
    if name != ROOT_NAME and not name.startswith(ROOT_NAME + "."):
        name = f"{ROOT_NAME}.{name}"
    return logging.getLogger(name)


setup_logger()
