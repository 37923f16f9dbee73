"""
Report IO - 解网格 CSV 与 key=value 报告的写出

所有文件先写入同目录下的临时文件再原子替换, 失败时不会留下半个文件；
浮点数统一 17 位有效数字, 行尾为 LF, 同样的输入得到逐字节相同的输出。
"""

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
from dotenv import load_dotenv

from ..analysis.dissipation import DissipationReport
from ..model.feeder_model import SolutionGrid
from ..model.profile import ProfileLike


load_dotenv()

SOLUTION_HEADER = ("x", "theta", "v", "s", "w", "p", "q", "psi_b", "psi_g", "delta")

SWEEP_HEADER = (
    "param", "value", "status", "iterations", "v_terminal", "v_gradient_0", "theta_gradient_0",
    "total_loss", "loss_active", "loss_reactive", "reactive_loss_sign", "phenomena", "error",
)


def format_float(value: Any) -> str:
    return format(float(value), ".17g")


def default_output_dir() -> Path:
    """FEEDERFLOW_OUTPUT_DIR, 未设置时为项目根目录下的 runs/"""
    configured = os.getenv("FEEDERFLOW_OUTPUT_DIR")
    if configured:
        return Path(configured)
    return Path(__file__).parent.parent.parent / "runs"


def resolve_output_dir(out_dir: Optional[str]) -> Path:
    directory = Path(out_dir) if out_dir else default_output_dir()
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def atomic_write_text(path: Path, text: str) -> Path:
    """写临时文件后 os.replace"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def solution_rows(grid: SolutionGrid, profile: ProfileLike, report: DissipationReport) -> List[List[str]]:
    """每个节点一行: x, theta, v, s, w, p, q, psi_b, psi_g, delta"""
    p, q = profile.evaluate(grid.xs)
    columns = np.column_stack([
        grid.xs, grid.theta, grid.v, grid.s, grid.w,
        np.broadcast_to(p, grid.xs.shape), np.broadcast_to(q, grid.xs.shape),
        report.psi_b, report.psi_g, report.delta,
    ])
    return [[format_float(value) for value in row] for row in columns]


def write_solution_csv(path: Path, grid: SolutionGrid, profile: ProfileLike, report: DissipationReport) -> Path:
    return atomic_write_text(path, csv_text(SOLUTION_HEADER, solution_rows(grid, profile, report)))


def report_text(record: Mapping[str, Any]) -> str:
    """key=value 行, 保持传入顺序"""
    return "".join(f"{key}={value}\n" for key, value in record.items())


def write_report(path: Path, record: Mapping[str, Any]) -> Path:
    return atomic_write_text(path, report_text(record))


def parse_report(text: str) -> Dict[str, str]:
    """report_text 的逆操作, 测试与下游脚本使用"""
    record = {}
    for line in text.splitlines():
        if line and "=" in line:
            key, value = line.split("=", 1)
            record[key] = value
    return record
