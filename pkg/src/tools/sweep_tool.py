"""
Sweep Tool - 单参数扫描, 多进程并行, 输出顺序与进程数无关
"""

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from langchain.tools import BaseTool
from pydantic import BaseModel, Field

from ..model.errors import ScenarioValidationError
from ..scenario.scenario import parse_scenario, serialize_scenario, with_value
from .common import failure, prepare_scenario, progress, solve_scenario
from .report_io import SWEEP_HEADER, atomic_write_text, csv_text, format_float, resolve_output_dir
from .solve_tool import run_record


# 省略节名的简写
PARAM_ALIASES = {"g": "feeder.g", "b": "feeder.b", "length": "feeder.length", "grid": "solver.grid"}

_STATUS_NAMES = {"ScenarioValidationError": "ValidationError"}


class SweepToolInput(BaseModel):
    """Sweep Tool 输入参数"""
    scenario: str = Field(description="模板场景文件路径或预设名")
    param: str = Field(description="参数路径, 如 feeder.b, solver.grid, segment.2.p_density")
    values: List[float] = Field(min_length=1, description="参数取值列表")
    jobs: int = Field(default=1, ge=1, description="并行进程数")
    out: Optional[str] = Field(default=None, description="输出 CSV 路径")
    verbose: bool = Field(default=False, description="是否输出进度信息")


def _sign_word(value: float) -> str:
    if value < 0.0:
        return "negative"
    if value > 0.0:
        return "positive"
    return "zero"


def sweep_point(task: Tuple[str, str, float]) -> Dict[str, str]:
    """
    单个扫描点 (子进程入口, 参数可 pickle)

    失败不抛出, 以 status 列记录
    """
    scenario_text, path, value = task
    row = {key: "" for key in SWEEP_HEADER}
    row.update({"param": path, "value": format_float(value)})
    try:
        scenario = with_value(parse_scenario(scenario_text), path, value)
        _, diagnostics, report, _ = solve_scenario(scenario)
        record = run_record(scenario, diagnostics, report)
        row.update({key: record[key] for key in (
            "iterations", "v_terminal", "v_gradient_0", "theta_gradient_0",
            "total_loss", "loss_active", "loss_reactive", "phenomena",
        )})
        row["reactive_loss_sign"] = _sign_word(report.loss_reactive)
        row["status"] = "ok"
    except Exception as error:
        row["status"] = _STATUS_NAMES.get(type(error).__name__, type(error).__name__)
        row["error"] = str(error).replace("\n", " ")
    return row


class SweepTool(BaseTool):
    """
    扫描工具 - 对模板场景的一个数值字段取一组值逐点求解

    每个点独立求解, 单点失败只影响该行；至少一个点成功即视为成功
    """

    name: str = "sweep_tool"
    description: str = """
    参数扫描: 对一个场景字段取多个值, 并行求解并汇总损耗与现象。

    输入：模板场景, 参数路径 (feeder.b 等), 取值列表, 并行进程数
    输出：每个取值一行的 CSV (status 列标记 ok / NotConverged / VoltageCollapse / ValidationError)
    """
    args_schema: type[BaseModel] = SweepToolInput

    def _run(
        self,
        scenario: str,
        param: str,
        values: Sequence[float],
        jobs: int = 1,
        out: Optional[str] = None,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        try:
            template = prepare_scenario(scenario)
            path = PARAM_ALIASES.get(param, param)
            # 路径本身无效时整体失败, 不逐点记录
            with_value(template, path, getattr_path(template, path))

            text = serialize_scenario(template)
            tasks = [(text, path, float(v)) for v in values]
            progress(verbose, f"🔧 扫描 {path}: {len(tasks)} 个点, {jobs} 个进程")
            if jobs == 1:
                rows = [sweep_point(task) for task in tasks]
            else:
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    rows = list(pool.map(sweep_point, tasks))

            target = Path(out) if out else resolve_output_dir(None) / f"{template.name}_sweep_{path}.csv"
            atomic_write_text(target, csv_text(SWEEP_HEADER, ([row[key] for key in SWEEP_HEADER] for row in rows)))

            ok = sum(row["status"] == "ok" for row in rows)
            for row in rows:
                marker = "✅" if row["status"] == "ok" else "⚠️ "
                progress(verbose, f"{marker} {path}={row['value']}: {row['status']}")

            result = {
                "success": ok > 0,
                "scenario": template.name,
                "param": path,
                "rows": rows,
                "csv_path": str(target),
                "exit_code": 0 if ok else 1,
                "message": f"✅ 扫描完成: {ok}/{len(rows)} 个点成功",
            }
            if not ok:
                result["error"] = f"扫描的 {len(rows)} 个点全部失败"
            return result

        except Exception as error:
            progress(verbose, f"❌ 扫描失败: {error}")
            return failure(error)

    async def _arun(
        self,
        scenario: str,
        param: str,
        values: Sequence[float],
        jobs: int = 1,
        out: Optional[str] = None,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        """异步执行（当前使用同步实现）"""
        return self._run(scenario, param, values, jobs, out, verbose)


def getattr_path(scenario, path: str) -> float:
    """读取扫描路径当前的取值"""
    parts = path.split(".")
    try:
        if parts[0] == "feeder":
            return getattr(scenario.params, parts[1])
        if parts[0] == "solver":
            return getattr(scenario.solver, "n_intervals" if parts[1] == "grid" else parts[1])
        if parts[0] in ("segment", "bump"):
            items = scenario.profile.segments if parts[0] == "segment" else scenario.profile.bumps
            index = int(parts[1]) - 1
            if index < 0:
                raise IndexError(index)
            return getattr(items[index], parts[2])
        if parts[0] == "manufactured" and scenario.manufactured is not None:
            return getattr(scenario.manufactured, parts[1])
    except (AttributeError, IndexError, ValueError):
        pass
    raise ScenarioValidationError("无效的参数路径", field=path)


def sweep_feeder(scenario: str, param: str, values: Sequence[float], jobs: int = 1) -> Dict[str, Any]:
    return SweepTool()._run(scenario, param, values, jobs)
