"""
实验与验收工具，包括：
- run_experiment_tool: 运行 YAML 实验配置并写出产物
- verify_claims: 执行验收检查套件
"""

from typing import Any, Dict, Optional

from tools import RegretLab_Tool
from mcp.types import ToolAnnotations


@RegretLab_Tool(
    name="run_experiment_tool",
    title="Run Experiment",
    description="运行实验配置文件（YAML），在输出目录写出每个 run 的 trajectory.csv、summary.json 与 manifest.json",
    annotations=ToolAnnotations(readOnlyHint=False, idempotentHint=True, openWorldHint=False),
)
async def run_experiment_tool(
    config_path: str, output_dir: Optional[str] = None, workers: int = 1
) -> Dict[str, Any]:
    try:
        from core.experiments import run_experiment
        from core.trajectory_io import to_jsonable
    except ImportError as e:
        raise RuntimeError(f"无法导入实验模块: {e}")

    return to_jsonable(run_experiment(config_path, output_dir=output_dir, workers=workers))


@RegretLab_Tool(
    name="verify_claims",
    title="Verify Claims",
    description="执行验收检查套件 static | dynamics | all；dynamics 耗时较长，quick=True 只做冒烟规模",
)
async def verify_claims(suite: str = "static", quick: bool = True) -> Dict[str, Any]:
    try:
        from core.verification import verify_suite
    except ImportError as e:
        raise RuntimeError(f"无法导入验收模块: {e}")

    results = verify_suite(suite, quick=quick)
    return {
        "suite": suite,
        "quick": quick,
        "passed": all(r.passed for r in results),
        "results": [r.to_dict() for r in results],
    }
