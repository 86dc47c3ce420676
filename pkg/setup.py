from pathlib import Path

import numpy as np
import scipy

from modules.YA_Common.utils.config import get_config
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("setup")


def setup() -> Path:
    """服务器启动前的环境准备：创建实验输出目录并记录数值库版本"""
    try:
        out = Path(get_config("experiments.output_dir", "./runs"))
        out.mkdir(parents=True, exist_ok=True)
        logger.info(f"numpy {np.__version__}, scipy {scipy.__version__}; 实验输出目录 {out.resolve()}")
        return out
    except OSError as e:
        logger.error(f"环境准备失败: {e}")
        raise


if __name__ == "__main__":
    # 被 setuptools 构建后端执行时（pip install），交给 pyproject.toml 中的元数据
    from setuptools import setup as _setuptools_setup

    _setuptools_setup()
