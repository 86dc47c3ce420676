"""
批量实验

提供以下功能：
- ExperimentConfig: 实验配置（pydantic 模型），从单层分节的 YAML 文件读取
- load_experiment_config: 读取并校验配置文件，REGRETLAB_SEED 覆盖主种子
- run_experiment: 按配置运行全部 run，写出 <outdir>/<name>/<run>/trajectory.csv、
  summary.json，以及实验级 summary.json 与带 sha256 的 manifest.json

同一配置与种子重复运行得到逐字节相同的 CSV；时间戳只出现在实验级 summary.json 中。
"""

import datetime as _dt
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from core.catalog import entry_for, resolve
from core.game_core import Game, MixedProfile, hannan_status, pure_profile_index
from core.strategies import BestReply, ConstantAction, parse_fallback, parse_strategy
from core.trajectory_io import sha256_file, write_json, write_trajectory_csv
from modules.YA_Common.utils.config import get_config, seed_override
from modules.YA_Common.utils.errors import ConfigException, UsageException
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("experiments")

DYNAMICS_KINDS = ("stochastic", "expected", "dfp", "cfp", "cont_noregret")
ANALYSES = (
    "hannan",
    "limit_set",
    "perturbation",
    "perturbation_bound",
    "dfp_floor",
    "identities",
    "conservation",
)


class ExperimentConfig(BaseModel):
    """实验配置；YAML 中的分节只用于组织，读取时合并为一层"""

    name: str
    game: str
    dynamics: Literal["stochastic", "expected", "dfp", "cfp", "cont_noregret"] = "stochastic"
    strategy_1: str = "rm"
    strategy_2: Optional[str] = None
    fallback_1: str = Field(default_factory=lambda: str(get_config("dynamics.fallback", "const:0")))
    fallback_2: Optional[str] = None
    horizon: int = Field(ge=1)
    runs: int = Field(default=1, ge=1)
    seed: int = 0
    initial: str = "uniform"
    x0_1: Optional[List[float]] = None
    x0_2: Optional[List[float]] = None
    schedule: Union[float, str, List[int]] = Field(
        default_factory=lambda: float(get_config("dynamics.record_ratio", 1.1))
    )
    tie_rule: str = Field(default_factory=lambda: str(get_config("dynamics.tie_rule", "lowest")))
    tie_policy: Literal["restricted", "lowest"] = "restricted"
    debug_checks: bool = False
    regret_threshold: float = 0.05
    analyses: List[str] = Field(default_factory=list)
    output_dir: str = Field(default_factory=lambda: str(get_config("experiments.output_dir", "./runs")))
    workers: Optional[int] = None

    @field_validator("analyses", mode="before")
    @classmethod
    def _split_analyses(cls, v):
        if isinstance(v, str):
            v = [s.strip() for s in v.split(",") if s.strip()]
        unknown = [a for a in v or [] if a not in ANALYSES]
        if unknown:
            raise ValueError(f"未知的分析: {unknown}，可选 {list(ANALYSES)}")
        return list(v or [])

    @field_validator("x0_1", "x0_2", mode="before")
    @classmethod
    def _split_vector(cls, v):
        if isinstance(v, str):
            return [float(s) for s in v.split(",")]
        return v

    @model_validator(mode="after")
    def _check_descriptors(self):
        # 描述符在这里解析一次，错误作为配置错误报告
        for d in (self.strategy_1, self.strategy_2):
            if d is not None:
                parse_strategy(d)
        for d in (self.fallback_1, self.fallback_2):
            if d is not None:
                parse_fallback(d)
        if self.dynamics in ("cfp", "cont_noregret") and self.horizon < 2:
            raise ValueError("连续时间动力学要求 horizon > 1")
        return self

    @property
    def strategies(self):
        return parse_strategy(self.strategy_1), parse_strategy(self.strategy_2 or self.strategy_1)

    @property
    def fallbacks(self):
        return parse_fallback(self.fallback_1), parse_fallback(self.fallback_2 or self.fallback_1)


def _flatten(document: Dict[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in document.items():
        items = value.items() if isinstance(value, dict) else [(key, value)]
        for k, v in items:
            if isinstance(v, dict):
                raise ConfigException(f"实验配置只允许一层分节: {key}.{k}")
            if k in flat:
                raise ConfigException(f"配置键重复: {k}")
            flat[k] = v
    return flat


def parse_experiment_config(document: Dict[str, Any]) -> ExperimentConfig:
    """
    校验配置字典并应用 REGRETLAB_SEED 覆盖。

    Raises:
        ConfigException: 字段缺失、类型错误或描述符无效。
    """
    if not isinstance(document, dict):
        raise ConfigException("实验配置必须是映射")
    flat = _flatten(document)
    override = seed_override()
    if override is not None:
        logger.info(f"REGRETLAB_SEED 覆盖主种子: {flat.get('seed')} -> {override}")
        flat["seed"] = override
    try:
        return ExperimentConfig(**flat)
    except ValidationError as e:
        raise ConfigException("实验配置无效", {"errors": e.errors(include_url=False)})
    except UsageException as e:
        raise ConfigException(f"实验配置无效: {e.message}", e.details)


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigException(f"实验配置文件不存在: {p}")
    try:
        document = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigException(f"实验配置不是合法的 YAML: {e}")
    return parse_experiment_config(document)


# -------------------------------
# 单次运行
# -------------------------------
def _initial_condition(game: Game, spec: str):
    from core.dynamics_discrete import InitialCondition

    kind, _, rest = spec.partition(":")
    if kind in ("uniform", "fallback") and not rest:
        return InitialCondition(kind)
    if kind == "profile":
        l1, l2 = [s.strip() for s in rest.split(",")]
        return InitialCondition.at_profile(*pure_profile_index(game, l1, l2), game.shape)
    if kind == "history":
        history = []
        for pair in rest.split(";"):
            l1, l2 = [s.strip() for s in pair.split(",")]
            history.append(pure_profile_index(game, l1, l2))
        return InitialCondition.from_history(history, game.shape)
    raise ConfigException(
        f"无法识别的初始条件: {spec!r}",
        {"formats": ["uniform", "fallback", "profile:<l1>,<l2>", "history:<l1>,<l2>;..."]},
    )


def _continuous_start(game: Game, cfg: ExperimentConfig, run: int) -> MixedProfile:
    if cfg.x0_1 is not None and cfg.x0_2 is not None:
        return MixedProfile(np.array(cfg.x0_1), np.array(cfg.x0_2)).check(game)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(run,)))
    return MixedProfile(rng.dirichlet(np.ones(game.actions_1)), rng.dirichlet(np.ones(game.actions_2)))


def _discrete_analyses(game: Game, cfg: ExperimentConfig, traj) -> Dict[str, Any]:
    from core import dynamics_discrete as dd
    from core import perturbation_analysis as pa

    out: Dict[str, Any] = {}
    if "dfp_floor" in cfg.analyses:
        out["dfp_floor"] = dd.dfp_regret_floor(traj)
    if "perturbation" in cfg.analyses:
        series = pa.payoff_perturbation_series(game, traj)
        out["perturbation"] = {"tail_max_last_decade": series.tail_max(max(traj.t0 + 1, cfg.horizon // 10))}
    if "perturbation_bound" in cfg.analyses:
        out["perturbation_bound"] = pa.perturbation_bound_violations(game, traj)
    if "identities" in cfg.analyses:
        ident: Dict[str, Any] = {"sign_persistence_violations": list(dd.sign_persistence_violations(traj))}
        if traj.mixed[0] is not None and traj.dynamics != "dfp":
            ident["orthogonality_max"] = float(dd.orthogonality_residuals(game, traj).max(initial=0.0))
        for player, fb in zip((1, 2), cfg.fallbacks):
            if isinstance(fb, ConstantAction):
                ident[f"q2_drift_{player}"] = dd.q2_constancy_drift(game, traj, player, fb.action)
        out["identities"] = ident
    return out


def _execute_run(args: Tuple[Game, ExperimentConfig, int, str]) -> Dict[str, Any]:
    """在工作进程中完成一个 run：模拟、分析、写出本 run 的文件"""
    from core import dynamics_continuous as dc
    from core import dynamics_discrete as dd
    from core import perturbation_analysis as pa

    game, cfg, run, run_dir = args
    out_dir = Path(run_dir)
    result: Dict[str, Any] = {"run": run}
    if cfg.dynamics in ("stochastic", "expected", "dfp"):
        config = dd.RunConfig(
            strategies=cfg.strategies,
            horizon=cfg.horizon,
            dynamics=cfg.dynamics,
            fallbacks=cfg.fallbacks,
            seed=cfg.seed,
            stream=run,
            schedule=cfg.schedule,
            initial=_initial_condition(game, cfg.initial),
            tie_rule=cfg.tie_rule,
            debug_checks=cfg.debug_checks,
            record_mixed="identities" in cfg.analyses,
        )
        traj = dd.run(game, config)
        rows = write_trajectory_csv(game, traj, out_dir / "trajectory.csv")
        result.update(traj.summary())
        result["rows"] = rows
        result.update(_discrete_analyses(game, cfg, traj))
    elif cfg.dynamics == "cfp":
        traj = dc.cfp_integrate(game, _continuous_start(game, cfg, run), float(cfg.horizon), tie_policy=cfg.tie_policy)
        rows = write_trajectory_csv(game, traj, out_dir / "trajectory.csv")
        result.update(traj.summary())
        result["rows"] = rows
        if "conservation" in cfg.analyses:
            result["conservation_residual"] = list(dc.regret_conservation_residual(traj))
    else:
        z1 = cfg.initial
        start = _continuous_start(game, cfg, run)
        if z1.startswith("profile:"):
            l1, l2 = [s.strip() for s in z1.split(":", 1)[1].split(",")]
            a1, a2 = pure_profile_index(game, l1, l2)
            z = np.zeros(game.shape)
            z[a1, a2] = 1.0
        else:
            z = np.outer(start.x1.weights, start.x2.weights)
        traj = dc.cont_no_regret_integrate(game, cfg.strategies, z, float(cfg.horizon))
        rows = write_trajectory_csv(game, traj, out_dir / "trajectory.csv")
        result.update(traj.summary())
        result["rows"] = rows
        if "conservation" in cfg.analyses:
            result["conservation_residual"] = list(dc.potential_conservation_residual(traj))

    final_z = np.array(result["final"]["z"])
    if "hannan" in cfg.analyses:
        from core.equilibrium import distance_to_hannan

        status = hannan_status(game, final_z)
        result["hannan"] = {
            "classification": status.classification.value,
            "margin": status.margin,
            "distance": distance_to_hannan(game, final_z),
        }
    if "limit_set" in cfg.analyses:
        entry = entry_for(game)
        report = pa.limit_set_estimate(
            game, traj, nash_distance=entry.nash_distance if entry is not None else None
        )
        result["limit_set"] = report.to_dict()
    write_json(result, out_dir / "summary.json")
    return result


def _aggregate(cfg: ExperimentConfig, results: List[Dict[str, Any]]) -> Dict[str, Any]:
    finals = np.array([r["final"]["regret_max"] for r in results])
    below = np.all(finals <= cfg.regret_threshold, axis=1)
    agg: Dict[str, Any] = {
        "runs": len(results),
        "regret_threshold": cfg.regret_threshold,
        "fraction_final_regret_below": float(below.mean()),
        "final_regret_max": {
            "mean": finals.max(axis=1).mean(),
            "max": finals.max(),
        },
    }
    if "dfp_floor" in cfg.analyses:
        agg["dfp_floor_min"] = min(r["dfp_floor"] for r in results)
    if "conservation" in cfg.analyses:
        agg["conservation_residual_max"] = max(max(r["conservation_residual"]) for r in results)
    if "limit_set" in cfg.analyses:
        classes: Dict[str, int] = {}
        for r in results:
            c = r["limit_set"]["classification"]
            classes[c] = classes.get(c, 0) + 1
        agg["limit_set_classes"] = classes
    return agg


def run_experiment(
    config: Union[ExperimentConfig, str, Path],
    output_dir: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
) -> Dict[str, Any]:
    """
    运行一个实验并写出全部产物。

    Args:
        config: ExperimentConfig 或配置文件路径。
        output_dir: 覆盖配置中的输出目录。
        workers: 进程数；1 表示在当前进程顺序执行，0 或 None 使用全部可用 CPU。

    Returns:
        dict: {"status": 0, "directory", "manifest", "aggregate"}。

    Raises:
        ConfigException / CatalogException / GameFileException: 用法错误（退出码 2）。
        其他 LabException: 模块失败（退出码 1）。
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_experiment_config(config)
    game = resolve(cfg.game)
    root = Path(output_dir or cfg.output_dir) / cfg.name
    root.mkdir(parents=True, exist_ok=True)
    n_workers = workers if workers is not None else cfg.workers
    if n_workers is None:
        n_workers = int(get_config("experiments.workers", 0))
    logger.info(
        f"实验 {cfg.name}: {cfg.dynamics} on {game.name}, runs={cfg.runs}, T={cfg.horizon}, seed={cfg.seed}"
    )
    jobs = [(game, cfg, r, str(root / f"{r:04d}")) for r in range(cfg.runs)]
    if n_workers == 1 or cfg.runs == 1:
        results = [_execute_run(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers or None) as pool:
            results = list(pool.map(_execute_run, jobs))

    aggregate = _aggregate(cfg, results)
    summary = {
        "experiment": cfg.name,
        "config": cfg.model_dump(),
        "game": game.name,
        "aggregate": aggregate,
        "runs": [{"run": r["run"], "final": r["final"]} for r in results],
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    summary_path = write_json(summary, root / "summary.json")

    artifacts = []
    for r in range(cfg.runs):
        for name in ("trajectory.csv", "summary.json"):
            p = root / f"{r:04d}" / name
            artifacts.append({"path": str(p.relative_to(root)), "sha256": sha256_file(p)})
    artifacts.append({"path": summary_path.name, "sha256": sha256_file(summary_path)})
    manifest_path = write_json({"experiment": cfg.name, "artifacts": artifacts}, root / "manifest.json")
    logger.info(f"实验 {cfg.name} 完成: {root}")
    return {
        "status": 0,
        "directory": str(root),
        "manifest": str(manifest_path),
        "aggregate": aggregate,
    }


# -------------------------------
# 博弈信息与轨迹分析
# -------------------------------
def game_info(reference: str) -> Dict[str, Any]:
    """收益表、Ū、纳什均衡、严格占优消去与 curb 集合；过大的博弈跳过枚举并记录原因"""
    from core.equilibrium import curb_enumerate, nash_support_enumeration, strict_dominance_eliminate
    from modules.YA_Common.utils.errors import OversizedGameException

    game = resolve(reference)
    entry = entry_for(game)
    info: Dict[str, Any] = {
        "name": game.name,
        "shape": list(game.shape),
        "labels": [list(game.labels_1), list(game.labels_2)],
        "payoff_1": game.payoff_1,
        "payoff_2": game.payoff_2,
        "payoff_bound": game.payoff_bound,
        "zero_sum": game.is_zero_sum(),
        "provenance": entry.provenance if entry is not None else None,
    }
    try:
        info["nash_equilibria"] = [
            [eq.x1.weights, eq.x2.weights] for eq in nash_support_enumeration(game)
        ]
    except OversizedGameException as e:
        info["nash_equilibria"] = {"skipped": e.message}
    info["dominance"] = strict_dominance_eliminate(game).to_dict(game)
    try:
        info["curb_sets"] = [c.to_dict(game) for c in curb_enumerate(game)]
    except OversizedGameException as e:
        info["curb_sets"] = {"skipped": e.message}
    return info


ANALYZE_KINDS = ("limit_set", "perturbation", "hannan", "interpolate")


def analyze_trajectory(reference: str, csv_path: Union[str, Path], analysis: str) -> Dict[str, Any]:
    """
    对导出的 trajectory.csv 做一项分析。

    perturbation 与 interpolate 需要逐期记录（schedule: every）的离散轨迹；
    limit_set 与 hannan 接受任何记录计划。
    """
    from core import perturbation_analysis as pa
    from core.equilibrium import distance_to_hannan
    from core.trajectory_io import read_trajectory_csv, table_to_continuous, table_to_trajectory

    if analysis not in ANALYZE_KINDS:
        raise UsageException(f"未知的分析: {analysis}", {"analyses": list(ANALYZE_KINDS)})
    game = resolve(reference)
    table = read_trajectory_csv(game, csv_path)
    if analysis == "limit_set":
        entry = entry_for(game)
        report = pa.limit_set_estimate(
            game,
            table_to_continuous(game, table),
            nash_distance=entry.nash_distance if entry is not None else None,
        )
        return report.to_dict()
    if analysis == "hannan":
        z = table.z[-1]
        status = hannan_status(game, z)
        return {
            "t": float(table.t[-1]),
            "classification": status.classification.value,
            "margin": status.margin,
            "distance": distance_to_hannan(game, z),
        }
    if analysis == "interpolate":
        path = pa.interpolate((table.x1, table.x2), t0=int(table.t[0])) if table.contiguous else None
        if path is None:
            raise UsageException("插值需要逐期记录的轨迹（记录计划为 every）")
        disp = path.displacements()
        return {
            "periods": int(path.periods.size),
            "max_bound_ratio": path.max_bound_ratio,
            "max_displacement": float(disp.max(initial=0.0)),
        }
    traj = table_to_trajectory(game, table)
    series = pa.payoff_perturbation_series(game, traj)
    return {
        "periods": int(series.periods.size),
        "epsilon_final": float(series.epsilon[-1]),
        "tail_max_last_decade": series.tail_max(max(traj.t0 + 1, traj.horizon // 10)),
        "perturbation_bound": pa.perturbation_bound_violations(game, traj),
    }
