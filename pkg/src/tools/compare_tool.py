"""
Compare Tool - 连续模型与梯形网络潮流的对比
"""

from typing import Any, Dict, List, Optional

from langchain.tools import BaseTool
from pydantic import BaseModel, Field

from ..analysis.numerics import observed_orders
from ..model.errors import OracleDisagreement
from ..scenario.scenario import with_value
from ..solver.bvp_solver import solve_bvp
from ..solver.ladder_oracle import build_network, compare_to_continuum, solve_powerflow
from .common import failure, prepare_scenario, progress
from .report_io import format_float


# 单调性判断时容许的舍入噪声
_MONOTONE_SLACK = 1e-13


class CompareToolInput(BaseModel):
    """Compare Tool 输入参数"""
    scenario: str = Field(description="场景文件路径或预设名")
    grid: Optional[int] = Field(default=None, description="最粗网格 N")
    levels: int = Field(default=3, ge=2, description="网格层数 (N, 2N, 4N ...)")
    tol: float = Field(default=1e-2, gt=0, description="最细网格上允许的相对损耗误差")
    verbose: bool = Field(default=False, description="是否输出进度信息")


def _monotone(values: List[float]) -> bool:
    return all(fine <= coarse * (1.0 + 1e-12) + _MONOTONE_SLACK for coarse, fine in zip(values[:-1], values[1:]))


class CompareTool(BaseTool):
    """
    对比工具 - 梯形网络预言机

    同一场景在 N, 2N, 4N 网格上分别用 ODE 打靶与前推回代潮流求解,
    比较电压幅值、相角和有功损耗。
    """

    name: str = "compare_tool"
    description: str = """
    将连续 ODE 解与离散梯形网络潮流解逐级比较。

    输入：场景文件或预设名, 最粗网格 N
    输出：每层的 v_err, theta_err, loss_err 与 v_err 的观测收敛阶
    通过条件：v_err, theta_err 单调下降且最细网格 loss_err <= tol
    loss_err 不参与单调性检查, 只在最细网格上与 tol 比较
    """
    args_schema: type[BaseModel] = CompareToolInput

    def _run(
        self,
        scenario: str,
        grid: Optional[int] = None,
        levels: int = 3,
        tol: float = 1e-2,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        try:
            base = prepare_scenario(scenario, grid)
            profile = base.load_profile
            n0 = base.solver.n_intervals

            comparisons = []
            for level in range(levels):
                n = n0 * 2 ** level
                progress(verbose, f"🔧 N={n}: ODE 打靶 + 前推回代")
                solution, _ = solve_bvp(profile, base.params, with_value(base, "solver.grid", n).solver)
                network = build_network(profile, base.params, n)
                flow = solve_powerflow(network)
                if not flow.converged:
                    raise OracleDisagreement(f"N={n} 时梯形网络潮流未收敛 ({flow.iterations} 次迭代)")
                comparisons.append(compare_to_continuum(solution, network, flow, base.params))

            v_errs = [c.v_err for c in comparisons]
            theta_errs = [c.theta_err for c in comparisons]
            rows = [
                {
                    "grid": str(c.n_intervals),
                    "v_err": format_float(c.v_err),
                    "theta_err": format_float(c.theta_err),
                    "loss_err": format_float(c.loss_err),
                    "ladder_active_loss": format_float(c.ladder_active_loss),
                    "continuum_active_loss": format_float(c.continuum_active_loss),
                }
                for c in comparisons
            ]
            result = {
                "success": True,
                "scenario": base.name,
                "table": rows,
                "v_err_orders": [format_float(o) for o in observed_orders(v_errs)],
                "exit_code": 0,
                "message": f"✅ 梯形网络与连续模型一致 ({base.name})",
            }

            problems = []
            if not _monotone(v_errs):
                problems.append("v_err 未单调下降")
            if not _monotone(theta_errs):
                problems.append("theta_err 未单调下降")
            if comparisons[-1].loss_err > tol:
                problems.append(f"loss_err {comparisons[-1].loss_err:.3e} > {tol:g}")
            if problems:
                error = OracleDisagreement("; ".join(problems))
                progress(verbose, f"❌ {error}")
                result.update(failure(error))
            else:
                progress(verbose, result["message"])
            return result

        except Exception as error:
            progress(verbose, f"❌ 对比中断: {error}")
            return failure(error)

    async def _arun(
        self,
        scenario: str,
        grid: Optional[int] = None,
        levels: int = 3,
        tol: float = 1e-2,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        """异步执行（当前使用同步实现）"""
        return self._run(scenario, grid, levels, tol, verbose)


def compare_feeder(scenario: str, grid: Optional[int] = None, levels: int = 3) -> Dict[str, Any]:
    return CompareTool()._run(scenario, grid, levels)
