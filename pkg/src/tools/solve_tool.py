"""
Solve Tool - 求解馈线电压分布并输出 CSV 与报告
"""

from pathlib import Path
from typing import Any, Dict, Optional

from langchain.tools import BaseTool
from pydantic import BaseModel, Field

from ..analysis.dissipation import DissipationReport, report_record
from ..scenario.scenario import Scenario
from ..solver.bvp_solver import SolveDiagnostics
from .common import failure, prepare_scenario, progress, solve_scenario
from .report_io import format_float, resolve_output_dir, write_report, write_solution_csv


class SolveToolInput(BaseModel):
    """Solve Tool 输入参数"""
    scenario: str = Field(description="场景文件路径或预设名 (conventional, pv_ev, no_load, manufactured, pv_supply)")
    grid: Optional[int] = Field(default=None, description="网格区间数 N, 覆盖场景中的设置")
    out_dir: Optional[str] = Field(default=None, description="输出目录, 默认 FEEDERFLOW_OUTPUT_DIR 或 runs/")
    verbose: bool = Field(default=False, description="是否输出进度信息")


def run_record(scenario: Scenario, diagnostics: SolveDiagnostics, report: DissipationReport) -> Dict[str, str]:
    """求解摘要 + 耗散分析的扁平记录"""
    theta0, v0, sL, wL = diagnostics.boundary_residuals
    record = {
        "scenario": scenario.name,
        "grid": str(scenario.solver.n_intervals),
        "converged": "true" if diagnostics.converged else "false",
        "iterations": str(diagnostics.iterations),
        "final_residual_norm": format_float(diagnostics.final_residual_norm),
        "boundary_theta_0": format_float(theta0),
        "boundary_v_0": format_float(v0),
        "boundary_s_L": format_float(sL),
        "boundary_w_L": format_float(wL),
        "v_terminal": format_float(diagnostics.v_terminal),
        "theta_terminal": format_float(diagnostics.theta_terminal),
        "continuation_used": "true" if diagnostics.continuation_used else "false",
        "warnings": str(len(diagnostics.warnings)),
    }
    record.update(report_record(report))
    return record


class SolveTool(BaseTool):
    """
    求解工具 - 反向打靶求解两点边值问题

    输出每个节点的 x, theta, v, s, w, p, q, psi_b, psi_g, delta (CSV)
    以及 key=value 格式的运行报告。
    """

    name: str = "solve_tool"
    description: str = """
    求解一个馈线场景的电压分布, 并计算通量、耗散率、损耗与现象判定。

    输入：场景文件路径或预设名, 可选网格 N 与输出目录
    输出：CSV 路径、报告路径以及报告内容 (phenomena, total_loss 等)

    示例：
    输入: {"scenario": "conventional"}
    输出: {"success": true, "record": {"phenomena": "VoltageDrop,PhaseDelay", ...}}
    """
    args_schema: type[BaseModel] = SolveToolInput

    def _run(
        self,
        scenario: str,
        grid: Optional[int] = None,
        out_dir: Optional[str] = None,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        """
        执行求解

        Args:
            scenario: 场景文件或预设名
            grid: 网格区间数
            out_dir: 输出目录
            verbose: 进度输出

        Returns:
            结果字典, 失败时带 exit_code
        """
        try:
            loaded = prepare_scenario(scenario, grid)
            solution, diagnostics, report, profile = solve_scenario(loaded, verbose)

            record = run_record(loaded, diagnostics, report)
            directory = resolve_output_dir(out_dir)
            stem = f"{loaded.name}_N{loaded.solver.n_intervals}"
            csv_path = write_solution_csv(directory / f"{stem}.csv", solution, profile, report)
            record["csv_path"] = str(csv_path)
            report_path = write_report(directory / f"{stem}_report.txt", record)
            progress(verbose, f"✅ 已写出 {Path(csv_path).name}, 现象: {report.phenomena.label}")

            return {
                "success": True,
                "scenario": loaded.name,
                "record": record,
                "csv_path": str(csv_path),
                "report_path": str(report_path),
                "exit_code": 0,
                "message": f"✅ 求解完成: {loaded.name}, 现象 {report.phenomena.label}",
            }
        except Exception as error:
            progress(verbose, f"❌ 求解失败: {error}")
            return failure(error)

    async def _arun(
        self,
        scenario: str,
        grid: Optional[int] = None,
        out_dir: Optional[str] = None,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        """异步执行（当前使用同步实现）"""
        return self._run(scenario, grid, out_dir, verbose)


# 便捷函数：直接调用工具
def solve_feeder(scenario: str, grid: Optional[int] = None, out_dir: Optional[str] = None) -> Dict[str, Any]:
    tool = SolveTool()
    return tool._run(scenario, grid, out_dir)
