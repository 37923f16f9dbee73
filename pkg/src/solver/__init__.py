"""
FeederFlow Solver Module
反向打靶 BVP 求解器与梯形网络潮流参照
"""

from .bvp_solver import (
    CONTINUATION_STEPS,
    ConvergenceStudy,
    SolveDiagnostics,
    SolverOptions,
    convergence_study,
    integrate_backward,
    refine_and_estimate,
    sample_forcing,
    solve_bvp,
)
from .ladder_oracle import (
    ContinuumComparison,
    LadderNetwork,
    PowerFlowResult,
    build_network,
    compare_to_continuum,
    ladder_losses,
    oracle_terminal_voltage,
    solve_powerflow,
)

__all__ = [
    'SolverOptions', 'SolveDiagnostics', 'ConvergenceStudy', 'CONTINUATION_STEPS',
    'integrate_backward', 'solve_bvp', 'refine_and_estimate', 'convergence_study', 'sample_forcing',
    'LadderNetwork', 'PowerFlowResult', 'ContinuumComparison',
    'build_network', 'solve_powerflow', 'ladder_losses', 'compare_to_continuum', 'oracle_terminal_voltage',
]
