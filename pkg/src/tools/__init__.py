"""
FeederFlow Tools Module
命令工具集合: solve, verify, compare, losses, sweep
"""

from .solve_tool import SolveTool, solve_feeder
from .verify_tool import VerifyTool, verify_feeder
from .compare_tool import CompareTool, compare_feeder
from .losses_tool import LossesTool, evaluate_injection
from .sweep_tool import SweepTool, sweep_feeder

__all__ = [
    'SolveTool', 'VerifyTool', 'CompareTool', 'LossesTool', 'SweepTool',
    'solve_feeder', 'verify_feeder', 'compare_feeder', 'evaluate_injection', 'sweep_feeder',
]
