"""
错误码与异常层级

LabException 的每个子类绑定一个错误码（类属性 code）。异常在 CLI 与 MCP 工具的边界上
转成 Error 记录输出；USAGE_CODES 中的错误码对应命令行退出码 2，其余对应 1。
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional


@dataclass
class Error:
    """可序列化的错误记录"""

    code: str
    message: str
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"error": {"code": self.code, "message": self.message, "details": dict(self.details)}}


class LabException(Exception):
    code = "INTERNAL_ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(f"[{self.code}] {message}")

    def to_error(self) -> Error:
        return Error(self.code, self.message, self.details)


# 数值与前置条件
class DimensionMismatchException(LabException):
    code = "DIMENSION_MISMATCH"


class InvalidDistributionException(LabException):
    code = "INVALID_DISTRIBUTION"


class ZeroGradientException(LabException):
    code = "ZERO_GRADIENT"


class StalledIntegrationException(LabException):
    code = "STALLED_INTEGRATION"


class PreconditionViolatedException(LabException):
    code = "PRECONDITION_VIOLATED"


class LPException(LabException):
    code = "LP_ERROR"


class OversizedGameException(LabException):
    code = "OVERSIZED_GAME"


class TrajectoryException(LabException):
    code = "TRAJECTORY_ERROR"


class CurbConstructionException(LabException):
    code = "CURB_CONSTRUCTION_ERROR"


# 输入与配置
class CatalogException(LabException):
    code = "CATALOG_ERROR"


class GameFileException(LabException):
    code = "GAME_FILE_ERROR"


class ConfigException(LabException):
    code = "CONFIG_ERROR"


class UsageException(LabException):
    code = "USAGE_ERROR"


class InternalException(LabException):
    def __init__(self, message: str = "内部错误", details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)


USAGE_CODES = frozenset(
    cls.code for cls in (UsageException, ConfigException, CatalogException, GameFileException)
)
