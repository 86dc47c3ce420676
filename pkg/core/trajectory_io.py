"""
轨迹的 CSV / JSON 导入导出

CSV 每行对应记录计划中的一期（连续时间轨迹为一个断点），列为：
    t, breakpoint, a1, a2, r1max, r2max, x1_<标签>..., x2_<标签>..., z_<i>_<j>...
浮点数以 17 位有效数字写出，同一配置重复运行得到逐字节相同的 CSV。
"""

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from core.dynamics_continuous import ContinuousTrajectory
from core.dynamics_discrete import Snapshot, Trajectory
from core.game_core import Game, regret_values
from modules.YA_Common.utils.errors import TrajectoryException
from modules.YA_Common.utils.logger import get_logger

logger = get_logger("trajectory_io")


def _num(v: float) -> str:
    return format(float(v), ".17g")


def csv_header(game: Game) -> List[str]:
    n1, n2 = game.shape
    head = ["t", "breakpoint", "a1", "a2", "r1max", "r2max"]
    head += [f"x1_{label}" for label in game.labels_1]
    head += [f"x2_{label}" for label in game.labels_2]
    head += [f"z_{i}_{j}" for i in range(n1) for j in range(n2)]
    return head


def trajectory_rows(game: Game, traj: Union[Trajectory, ContinuousTrajectory]) -> List[List[str]]:
    rows: List[List[str]] = []
    if isinstance(traj, Trajectory):
        for snap in traj.snapshots:
            step = snap.t - traj.t0 - 1
            a1, a2 = (-1, -1) if step < 0 else (int(traj.actions[step, 0]), int(traj.actions[step, 1]))
            x1, x2 = snap.beliefs
            r1, r2 = snap.regret_max
            rows.append(
                [str(snap.t), "0", str(a1), str(a2), _num(r1), _num(r2)]
                + [_num(v) for v in x1]
                + [_num(v) for v in x2]
                + [_num(v) for v in snap.z.ravel()]
            )
        return rows
    flag = "1" if traj.kind == "cfp" else "0"
    times = traj.original_times()
    for j in range(times.size):
        rows.append(
            [_num(times[j]), flag, "-1", "-1", _num(traj.regret_max[j, 0]), _num(traj.regret_max[j, 1])]
            + [_num(v) for v in traj.x1[j]]
            + [_num(v) for v in traj.x2[j]]
            + [_num(v) for v in traj.z[j].ravel()]
        )
    return rows


def write_trajectory_csv(
    game: Game, traj: Union[Trajectory, ContinuousTrajectory], path: Union[str, Path]
) -> int:
    """写出轨迹 CSV，返回数据行数"""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    rows = trajectory_rows(game, traj)
    with p.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(csv_header(game))
        writer.writerows(rows)
    logger.debug(f"写出轨迹 {p}: {len(rows)} 行")
    return len(rows)


@dataclass
class TrajectoryTable:
    """从 CSV 读回的表格；列按 csv_header 的顺序拆分"""

    t: np.ndarray
    breakpoint: np.ndarray
    actions: np.ndarray
    regret_max: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    z: np.ndarray

    @property
    def contiguous(self) -> bool:
        return bool(np.all(np.diff(self.t) == 1.0))


def read_trajectory_csv(game: Game, path: Union[str, Path]) -> TrajectoryTable:
    """
    读回 write_trajectory_csv 写出的文件。

    Raises:
        TrajectoryException: 文件不存在、表头与博弈维度不符或数据无法解析。
    """
    p = Path(path)
    if not p.exists():
        raise TrajectoryException(f"轨迹文件不存在: {p}")
    with p.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        body = [row for row in reader if row]
    expected = csv_header(game)
    if header != expected:
        raise TrajectoryException(
            "轨迹文件表头与博弈不符", {"expected": expected[:8], "got": (header or [])[:8]}
        )
    if not body:
        raise TrajectoryException("轨迹文件没有数据行")
    try:
        data = np.array(body, dtype=float)
    except ValueError as e:
        raise TrajectoryException(f"轨迹文件包含无法解析的数值: {e}")
    n1, n2 = game.shape
    c = 6
    return TrajectoryTable(
        t=data[:, 0],
        breakpoint=data[:, 1].astype(bool),
        actions=data[:, 2:4].astype(np.int64),
        regret_max=data[:, 4:6],
        x1=data[:, c : c + n1],
        x2=data[:, c + n1 : c + n1 + n2],
        z=data[:, c + n1 + n2 :].reshape(-1, n1, n2),
    )


def table_to_trajectory(game: Game, table: TrajectoryTable) -> Trajectory:
    """
    把逐期记录（schedule=every）的离散轨迹表还原为 Trajectory，供扰动分析使用。

    Raises:
        TrajectoryException: 记录不是逐期的，或缺少实现行动。
    """
    if not table.contiguous or table.t.size < 2:
        raise TrajectoryException("需要逐期记录的轨迹（记录计划为 every）")
    if np.any(table.actions[1:] < 0):
        raise TrajectoryException("轨迹没有实现行动（期望动力学或连续时间轨迹）")
    t0 = int(table.t[0])
    z0 = table.z[0]
    final = table.z[-1]
    snapshots = [
        Snapshot(int(table.t[0]), z0, (regret_values(game, 1, z0), regret_values(game, 2, z0))),
        Snapshot(int(table.t[-1]), final, (regret_values(game, 1, final), regret_values(game, 2, final))),
    ]
    return Trajectory(
        game_name=game.name,
        dynamics="table",
        t0=t0,
        horizon=int(table.t[-1]),
        seed=-1,
        stream=-1,
        descriptors=("", ""),
        fallbacks=("", ""),
        initial_z=z0,
        initial_regrets=snapshots[0].regrets,
        actions=table.actions[1:],
        mixed=(None, None),
        regret_max=table.regret_max[1:],
        fallback_used=np.zeros((table.t.size - 1, 2), dtype=bool),
        snapshots=snapshots,
    )


def table_to_continuous(game: Game, table: TrajectoryTable) -> ContinuousTrajectory:
    """把任意轨迹表视为按记录时刻采样的路径（极限集与 Hannan 分析只需要信念与 z）"""
    return ContinuousTrajectory(
        game_name=game.name,
        kind="table",
        times=table.t.copy(),
        x1=table.x1,
        x2=table.x2,
        z=table.z,
        q1=np.zeros((0, game.actions_1)),
        q2=np.zeros((0, game.actions_2)),
        regret_max=table.regret_max,
    )


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return str(obj)


def dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True, default=_json_default)


def write_json(obj: Any, path: Union[str, Path]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(obj) + "\n", encoding="utf-8")
    return p


def sha256_file(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def load_json(path: Union[str, Path]) -> Dict[str, Any]:
    p = Path(path)
    if not p.exists():
        raise TrajectoryException(f"文件不存在: {p}")
    return json.loads(p.read_text(encoding="utf-8"))


def to_jsonable(obj: Any) -> Any:
    """转为只含 JSON 原生类型的对象（MCP 工具的返回值）"""
    return json.loads(json.dumps(obj, ensure_ascii=False, default=_json_default))
