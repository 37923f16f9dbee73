"""
FeederFlow 异常体系
所有库函数抛出的异常都继承自 FeederFlowError，并携带 CLI 退出码
"""

from typing import Iterable, Optional


class FeederFlowError(Exception):
    """FeederFlow 基础异常"""

    exit_code: int = 1
    scenario: Optional[str] = None

    def for_scenario(self, label: str) -> "FeederFlowError":
        """标记出错的场景 (注入评估中区分 base / injected)"""
        self.scenario = label
        return self

    def __str__(self) -> str:
        text = super().__str__()
        return f"{text} [场景: {self.scenario}]" if self.scenario else text


class ScenarioParseError(FeederFlowError):
    """场景文件语法错误（带行号）"""

    exit_code = 1

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        location = f"第 {line} 行: " if line is not None else ""
        super().__init__(f"{location}{message}")


class ScenarioValidationError(FeederFlowError, ValueError):
    """场景内容违反不变量（重叠区段、g <= 0 等）"""

    exit_code = 1

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        prefix = []
        if line is not None:
            prefix.append(f"第 {line} 行")
        if field:
            prefix.append(field)
        head = f"{' / '.join(prefix)}: " if prefix else ""
        super().__init__(f"{head}{message}")


class UnknownPreset(FeederFlowError, KeyError):
    """未知的预设场景名称"""

    exit_code = 1

    def __init__(self, name: str, available: Iterable[str] = ()):
        self.name = name
        self.available = tuple(available)
        super().__init__(name)

    def __str__(self) -> str:
        names = ", ".join(self.available) or "无"
        return f"未知预设: {self.name} (可用: {names})"


class DomainError(FeederFlowError, ValueError):
    """制造解不满足边界兼容条件"""

    exit_code = 1


class NotConverged(FeederFlowError):
    """Newton 迭代或潮流迭代未收敛"""

    exit_code = 2

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class VoltageCollapse(FeederFlowError):
    """电压幅值跌破 v_min，ODE 右端奇异"""

    exit_code = 3

    def __init__(self, x: float, v: float, v_min: float):
        self.x = x
        self.v = v
        self.v_min = v_min
        super().__init__(f"电压崩溃: x={x:.6g} 处 v={v:.6g} < v_min={v_min:.3g}")


class VerificationFailed(FeederFlowError):
    """耗散等式或积分恒等式校验失败"""

    exit_code = 4

    def __init__(self, failing: Iterable[str]):
        self.failing = tuple(failing)
        super().__init__(f"校验失败: {', '.join(self.failing)}")


class OracleDisagreement(FeederFlowError):
    """连续模型与梯形网络预言机不一致"""

    exit_code = 5


class PowerBalanceError(OracleDisagreement):
    """梯形网络功率守恒残差过大"""

    exit_code = 5
