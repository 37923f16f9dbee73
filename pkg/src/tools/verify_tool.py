"""
Verify Tool - 耗散等式与积分恒等式的网格加密校验
"""

import math
from typing import Any, Dict, List, Optional

import numpy as np
from langchain.tools import BaseTool
from pydantic import BaseModel, Field

from ..analysis.dissipation import verify_dissipation_equalities, verify_integral_identities
from ..analysis.numerics import observed_orders
from ..model.errors import VerificationFailed
from ..model.feeder_model import SolutionGrid
from ..scenario.scenario import with_value
from ..solver.bvp_solver import ROUNDOFF_FLOOR, solve_bvp
from .common import failure, prepare_scenario, progress
from .report_io import format_float


CHECK_NAMES = ("d09", "d10", "e05", "e06", "j02", "j04", "i02", "i04", "lossless")

# 光滑场景下要求的最低观测收敛阶
MIN_ORDER = 1.9


class VerifyToolInput(BaseModel):
    """Verify Tool 输入参数"""
    scenario: str = Field(description="场景文件路径或预设名")
    grid: Optional[int] = Field(default=None, description="最粗网格区间数 N")
    refine: int = Field(default=3, ge=1, description="网格层数 k (N, 2N, ..., 2^(k-1) N)")
    tol: float = Field(default=1e-6, gt=0, description="最细网格上的残差容差")
    perturb: float = Field(default=0.0, description="测试钩子: 在 w 上叠加 perturb * sin(pi x / L)")
    verbose: bool = Field(default=False, description="是否输出进度信息")


def perturb_grid(grid: SolutionGrid, eps: float) -> SolutionGrid:
    """故障注入: w += eps sin(pi x / L)"""
    return grid.with_states(w=grid.w + eps * np.sin(np.pi * grid.xs / grid.length))


def _orders_ok(values: List[float]) -> bool:
    for coarse, fine, order in zip(values[:-1], values[1:], observed_orders(values)):
        if fine <= ROUNDOFF_FLOOR or coarse <= ROUNDOFF_FLOOR:
            continue
        if math.isnan(order) or order < MIN_ORDER:
            return False
    return True


class VerifyTool(BaseTool):
    """
    校验工具 - 逐级加密网格, 检查 d09, d10, e05, e06 四个耗散等式
    与 j02, j04, i02, i04, 相位无损五个积分恒等式

    最细网格上任一残差超过 tol, 或光滑场景下观测收敛阶低于 1.9, 即判为失败 (退出码 4)
    """

    name: str = "verify_tool"
    description: str = """
    在 N, 2N, 4N ... 网格上求解并计算全部耗散等式与积分恒等式的残差及观测收敛阶。

    输入：场景文件或预设名, 网格层数 refine, 容差 tol
    输出：残差表 (每层一行) 与各检查项的收敛阶, 失败项名称
    """
    args_schema: type[BaseModel] = VerifyToolInput

    def _run(
        self,
        scenario: str,
        grid: Optional[int] = None,
        refine: int = 3,
        tol: float = 1e-6,
        perturb: float = 0.0,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        try:
            base = prepare_scenario(scenario, grid)
            profile = base.load_profile
            n0 = base.solver.n_intervals

            table: List[Dict[str, float]] = []
            for level in range(refine):
                n = n0 * 2 ** level
                options = with_value(base, "solver.grid", n).solver
                progress(verbose, f"🔧 N={n} 求解中")
                solution, _ = solve_bvp(profile, base.params, options)
                if perturb:
                    solution = perturb_grid(solution, perturb)
                residuals = verify_dissipation_equalities(solution, profile, base.params)
                identities = verify_integral_identities(solution, profile, base.params)
                row = {"grid": n}
                row.update(residuals.norms)
                row.update(identities.gaps)
                table.append(row)

            orders = {name: observed_orders([row[name] for row in table]) for name in CHECK_NAMES}
            failing = [name for name in CHECK_NAMES if table[-1][name] > tol]
            if base.is_smooth:
                failing += [
                    f"{name}(order)" for name in CHECK_NAMES
                    if name not in failing and not _orders_ok([row[name] for row in table])
                ]

            rows = [
                {"grid": str(row["grid"]), **{name: format_float(row[name]) for name in CHECK_NAMES}}
                for row in table
            ]
            result = {
                "success": True,
                "scenario": base.name,
                "table": rows,
                "orders": {name: [format_float(o) for o in values] for name, values in orders.items()},
                "failing": failing,
                "exit_code": 0,
                "message": f"✅ 全部校验通过 ({base.name}, 最细网格 N={table[-1]['grid']})",
            }
            if failing:
                error = VerificationFailed(failing)
                progress(verbose, f"❌ {error}")
                result.update(failure(error))
            else:
                progress(verbose, result["message"])
            return result

        except Exception as error:
            progress(verbose, f"❌ 校验中断: {error}")
            return failure(error)

    async def _arun(
        self,
        scenario: str,
        grid: Optional[int] = None,
        refine: int = 3,
        tol: float = 1e-6,
        perturb: float = 0.0,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        """异步执行（当前使用同步实现）"""
        return self._run(scenario, grid, refine, tol, perturb, verbose)


def verify_feeder(scenario: str, grid: Optional[int] = None, refine: int = 3, tol: float = 1e-6) -> Dict[str, Any]:
    return VerifyTool()._run(scenario, grid, refine, tol)
