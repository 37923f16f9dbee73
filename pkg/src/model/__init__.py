"""
FeederFlow Model Module
馈线参数、功率分布与 ODE 模型
"""

from .errors import (
    DomainError,
    FeederFlowError,
    NotConverged,
    OracleDisagreement,
    PowerBalanceError,
    ScenarioParseError,
    ScenarioValidationError,
    UnknownPreset,
    VerificationFailed,
    VoltageCollapse,
)
from .profile import Bump, PowerProfile, ProfileLike, Segment, segment_profile, zero_profile
from .feeder_model import (
    DEFAULT_V_MIN,
    FeederParams,
    ManufacturedProfile,
    SmoothFunction,
    SolutionGrid,
    State,
    combined_residual,
    cosine_pair,
    cubic_pair,
    exact_grid,
    flat_pair,
    inverse_supply_rates,
    manufactured_family,
    manufactured_profile,
    rhs,
    rhs_components,
    subsystem_residuals,
    supply_rates,
)

__all__ = [
    'FeederFlowError', 'ScenarioParseError', 'ScenarioValidationError', 'UnknownPreset', 'DomainError',
    'NotConverged', 'VoltageCollapse', 'VerificationFailed', 'OracleDisagreement', 'PowerBalanceError',
    'Segment', 'Bump', 'PowerProfile', 'ProfileLike', 'segment_profile', 'zero_profile',
    'DEFAULT_V_MIN', 'FeederParams', 'State', 'SolutionGrid', 'SmoothFunction', 'ManufacturedProfile',
    'rhs', 'rhs_components', 'subsystem_residuals', 'combined_residual', 'supply_rates', 'inverse_supply_rates',
    'manufactured_profile', 'manufactured_family', 'cubic_pair', 'cosine_pair', 'flat_pair', 'exact_grid',
]
