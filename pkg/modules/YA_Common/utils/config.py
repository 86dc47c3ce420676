"""
YAML 配置读取

查找顺序：环境变量 REGRETLAB_CONFIG 指定的文件，其次为工作目录下的 config.yaml。
找不到文件时所有键取调用方给出的默认值，实验可以在任意目录下运行。
键按点号分层，例如 get_config("continuous.root_tol", 1e-12)。
"""

import os
import warnings
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

CONFIG_ENV = "REGRETLAB_CONFIG"
SEED_ENV = "REGRETLAB_SEED"

SERVER_DEFAULTS = {
    "name": "regretlab",
    "author": "regretlab developers",
    "description": "",
    "version": "0.0.1",
}


def _locate() -> Path:
    return Path(os.getenv(CONFIG_ENV) or Path.cwd() / "config.yaml")


def _read(path: Path) -> Dict[str, Any]:
    if not path.exists():
        warnings.warn(f"未找到配置文件 {path}，使用默认值")
        return {}
    with path.open("r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    return data if isinstance(data, dict) else {}


class Config:
    def __init__(self, path: Optional[Path] = None):
        self.path = path or _locate()
        self.data = _read(self.path)

    def get(self, key: str, default: Any = None) -> Any:
        node: Any = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def server_field(self, field: str) -> str:
        return str(self.get(f"server.{field}", SERVER_DEFAULTS[field]))


_config = Config()


def get_config(key: str, default: Any = None) -> Any:
    return _config.get(key, default)


def get_transport_type() -> str:
    return _config.get("transport.type", "stdio")


def get_server_name() -> str:
    return _config.server_field("name")


def get_server_author() -> str:
    return _config.server_field("author")


def get_server_description() -> str:
    return _config.server_field("description")


def get_server_version() -> str:
    return _config.server_field("version")


def seed_override() -> Optional[int]:
    """REGRETLAB_SEED 覆盖实验主种子；未设置返回 None，非整数抛 ConfigException"""
    raw = (os.getenv(SEED_ENV) or "").strip()
    if not raw:
        return None
    try:
        return int(raw, 0)
    except ValueError:
        from .errors import ConfigException

        raise ConfigException(f"{SEED_ENV} 不是整数: {raw!r}", {"env": SEED_ENV})
