"""
FeederFlow Analysis Module
数值工具与耗散性分析
"""

from .numerics import aligned_cut_indices, fd_derivative, observed_orders, piecewise_simpson, smooth_stencil_mask
from .dissipation import (
    EQUALITY_NAMES,
    PHENOMENA_ORDER,
    TOL_SIGN,
    DissipationReport,
    EqualityResiduals,
    FluxFunctions,
    InjectionEvaluation,
    IntegralIdentities,
    LossDecomposition,
    PhenomenaReport,
    ScenarioLosses,
    analyze,
    classify_phenomena,
    evaluate_functions,
    injection_evaluation,
    loss_decomposition,
    report_record,
    verify_dissipation_equalities,
    verify_integral_identities,
)

__all__ = [
    'fd_derivative', 'smooth_stencil_mask', 'aligned_cut_indices', 'piecewise_simpson', 'observed_orders',
    'TOL_SIGN', 'PHENOMENA_ORDER', 'EQUALITY_NAMES',
    'FluxFunctions', 'EqualityResiduals', 'IntegralIdentities', 'LossDecomposition', 'PhenomenaReport',
    'DissipationReport', 'ScenarioLosses', 'InjectionEvaluation',
    'evaluate_functions', 'verify_dissipation_equalities', 'verify_integral_identities', 'loss_decomposition',
    'classify_phenomena', 'injection_evaluation', 'analyze', 'report_record',
]
