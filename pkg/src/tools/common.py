"""
工具共用的小函数: 进度输出、失败结果字典、场景加载与求解
"""

import sys
from typing import Any, Dict, Optional, Tuple

from ..analysis.dissipation import DissipationReport, analyze
from ..model.errors import FeederFlowError
from ..model.feeder_model import SolutionGrid
from ..model.profile import ProfileLike
from ..scenario.scenario import Scenario, load_scenario, with_value
from ..solver.bvp_solver import SolveDiagnostics, solve_bvp


def progress(verbose: bool, message: str) -> None:
    """进度信息写到 stderr, stdout 只留给报告"""
    if verbose:
        print(message, file=sys.stderr)


def failure(error: BaseException, suffix: str = "") -> Dict[str, Any]:
    """异常 -> 工具失败结果, FeederFlowError 携带退出码"""
    exit_code = error.exit_code if isinstance(error, FeederFlowError) else 1
    message = str(error)
    if suffix:
        message = f"{message} ({suffix})"
    return {
        "success": False,
        "error": message,
        "error_type": type(error).__name__,
        "exit_code": exit_code,
    }


def prepare_scenario(source: str, grid: Optional[int] = None) -> Scenario:
    """加载场景 (文件或预设), 可选覆盖网格区间数"""
    scenario = load_scenario(source)
    if grid is not None:
        scenario = with_value(scenario, "solver.grid", grid)
    return scenario


def solve_scenario(
    scenario: Scenario,
    verbose: bool = False,
) -> Tuple[SolutionGrid, SolveDiagnostics, DissipationReport, ProfileLike]:
    """求解并分析一个场景"""
    profile = scenario.load_profile
    progress(verbose, f"🔧 求解 {scenario.name} (N={scenario.solver.n_intervals})")
    grid, diagnostics = solve_bvp(profile, scenario.params, scenario.solver)
    for warning in diagnostics.warnings:
        progress(verbose, f"⚠️  {warning}")
    progress(verbose, f"📊 Newton 迭代 {diagnostics.iterations} 次, 残差 {diagnostics.final_residual_norm:.3e}")
    report = analyze(grid, profile, scenario.params)
    return grid, diagnostics, report, profile
