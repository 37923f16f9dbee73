"""
Losses Tool - 评估功率注入对全馈线净损耗的影响
"""

from typing import Any, Dict, Optional

from langchain.tools import BaseTool
from pydantic import BaseModel, Field

from ..analysis.dissipation import injection_evaluation
from ..model.errors import ScenarioValidationError
from ..model.profile import zero_profile
from ..scenario.scenario import load_scenario
from .common import failure, prepare_scenario, progress
from .report_io import format_float


class LossesToolInput(BaseModel):
    """Losses Tool 输入参数"""
    scenario: str = Field(description="基准场景文件路径或预设名")
    inject: Optional[str] = Field(default=None, description="注入场景 (只使用其 [loads]), 省略时为零注入")
    grid: Optional[int] = Field(default=None, description="网格区间数 N")
    verbose: bool = Field(default=False, description="是否输出进度信息")


class LossesTool(BaseTool):
    """
    损耗工具 - 基准场景与叠加注入后的场景分别求解,
    报告 ∫Delta, ∫sigma_V, dv(0)/dx, 净损耗恒等式间隙和 loss_delta
    """

    name: str = "losses_tool"
    description: str = """
    计算注入前后全馈线净损耗 ∫Delta 及其恒等式 ∫Delta = ∫sigma_V - dv(0)/dx。

    输入：基准场景, 注入场景 (其负荷分布与基准叠加)
    输出：两个场景的损耗各项与 loss_delta = 注入后损耗 - 基准损耗
    """
    args_schema: type[BaseModel] = LossesToolInput

    def _run(
        self,
        scenario: str,
        inject: Optional[str] = None,
        grid: Optional[int] = None,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        try:
            base = prepare_scenario(scenario, grid)
            if base.manufactured is not None:
                raise ScenarioValidationError("注入评估需要由区段/凸包组成的负荷分布", field="manufactured")

            if inject is None:
                injection = zero_profile(base.params.length)
            else:
                injected_scenario = load_scenario(inject)
                if injected_scenario.manufactured is not None:
                    raise ScenarioValidationError("注入场景不能是制造解", field="manufactured")
                injection = injected_scenario.profile
                if abs(injection.length - base.params.length) > 1e-12 * max(1.0, base.params.length):
                    raise ScenarioValidationError(
                        f"注入场景长度 {injection.length} 与基准 {base.params.length} 不一致", field="feeder.length"
                    )

            progress(verbose, f"🔧 评估注入: {base.name} + {inject or 'zero'}")
            evaluation = injection_evaluation(base.profile, injection, base.params, base.solver)

            record = {"scenario": base.name, "inject": inject or "zero"}
            for item in evaluation.scenarios:
                record[f"{item.label}_total_loss"] = format_float(item.total_loss)
                record[f"{item.label}_integral_sigma_v"] = format_float(item.integral_sigma_v)
                record[f"{item.label}_v_gradient_0"] = format_float(item.v_gradient_0)
                record[f"{item.label}_identity_gap"] = format_float(item.identity_gap)
            record["loss_delta"] = format_float(evaluation.loss_delta)

            progress(verbose, f"✅ loss_delta = {evaluation.loss_delta:.6g}")
            return {
                "success": True,
                "record": record,
                "evaluation": evaluation,
                "exit_code": 0,
                "message": f"✅ 注入评估完成, loss_delta = {evaluation.loss_delta:.6g}",
            }
        except Exception as error:
            progress(verbose, f"❌ 注入评估失败: {error}")
            return failure(error)

    async def _arun(
        self,
        scenario: str,
        inject: Optional[str] = None,
        grid: Optional[int] = None,
        verbose: bool = False,
    ) -> Dict[str, Any]:
        """异步执行（当前使用同步实现）"""
        return self._run(scenario, inject, grid, verbose)


def evaluate_injection(scenario: str, inject: Optional[str] = None) -> Dict[str, Any]:
    return LossesTool()._run(scenario, inject)
