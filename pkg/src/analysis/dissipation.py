"""
Dissipation Analysis - 通量函数、耗散等式与积分恒等式的数值校验

    Psi_b = -v^2 dtheta/dx        (与 s 相同)
    Psi_g = -v dv/dx
    Delta = (dv/dx)^2 + v^2 (dtheta/dx)^2 >= 0

耗散等式:
    d/dx Psi_g = sigma_V - Delta                     (电压子系统)
    d/dx Psi_b = sigma_P                             (相位子系统, 无损)
    d/dx (b Psi_b + g Psi_g) = p - g Delta           (有功)
    d/dx (b Psi_g - g Psi_b) = q - b Delta           (无功)
"""

from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from ..model.feeder_model import FeederParams, SolutionGrid, supply_rates
from ..model.profile import PowerProfile, ProfileLike
from .numerics import aligned_cut_indices, fd_derivative, piecewise_simpson, smooth_stencil_mask


# 现象判定阈值
TOL_SIGN = 1e-8

DERIVATIVE_SOURCES = ("state", "finite_difference")

PHENOMENA_ORDER = ("VoltageDrop", "ReverseFlow", "PhaseDelay", "PhaseAdvance")

EQUALITY_NAMES = ("d09", "d10", "e05", "e06")


class FluxFunctions(NamedTuple):
    psi_b: np.ndarray
    psi_g: np.ndarray
    delta: np.ndarray


class LossDecomposition(NamedTuple):
    total: float
    active: float
    reactive: float
    current_sq: np.ndarray


@dataclass(frozen=True)
class EqualityResiduals:
    """
    四个耗散等式的逐节点带符号残差

    mask 为 False 的节点 (差分模板跨越分布断点) 不计入最大范数
    """

    d09: np.ndarray
    d10: np.ndarray
    e05: np.ndarray
    e06: np.ndarray
    mask: np.ndarray

    def max_norm(self, name: str) -> float:
        values = np.abs(getattr(self, name)[self.mask])
        return float(values.max()) if values.size else 0.0

    @property
    def norms(self) -> Dict[str, float]:
        return {name: self.max_norm(name) for name in EQUALITY_NAMES}


@dataclass(frozen=True)
class IntegralIdentities:
    """积分恒等式的各项与间隙"""

    integral_p: float
    integral_q: float
    integral_sigma_v: float
    integral_sigma_p: float
    integral_delta: float
    v_gradient_0: float
    theta_gradient_0: float
    j02_gap: float
    j04_gap: float
    i02_gap: float
    i04_gap: float
    lossless_gap: float

    @property
    def gaps(self) -> Dict[str, float]:
        return {
            "j02": self.j02_gap,
            "j04": self.j04_gap,
            "i02": self.i02_gap,
            "i04": self.i04_gap,
            "lossless": self.lossless_gap,
        }


@dataclass(frozen=True)
class PhenomenaReport:
    """
    物理现象判定

    各定理检查在前提不成立时为 None
    """

    flags: Tuple[str, ...]
    v_gradient_0: float
    theta_gradient_0: float
    integral_p: float
    integral_q: float
    phase_delay_equivalence: Optional[bool] = None
    phase_advance_equivalence: Optional[bool] = None
    voltage_drop_theorem: Optional[bool] = None
    reactive_dissipation_sign: Optional[bool] = None
    reverse_flow_inequality: Optional[bool] = None
    reverse_flow_equivalence: Optional[bool] = None

    @property
    def label(self) -> str:
        return ",".join(self.flags) if self.flags else "none"

    @property
    def theorem_checks(self) -> Dict[str, Optional[bool]]:
        return {
            "phase_delay_equivalence": self.phase_delay_equivalence,
            "phase_advance_equivalence": self.phase_advance_equivalence,
            "voltage_drop_theorem": self.voltage_drop_theorem,
            "reactive_dissipation_sign": self.reactive_dissipation_sign,
            "reverse_flow_inequality": self.reverse_flow_inequality,
            "reverse_flow_equivalence": self.reverse_flow_equivalence,
        }


@dataclass(frozen=True)
class DissipationReport:
    """单个解的完整耗散分析结果"""

    psi_b: np.ndarray
    psi_g: np.ndarray
    delta: np.ndarray
    residuals: EqualityResiduals
    identities: IntegralIdentities
    losses: LossDecomposition
    phenomena: PhenomenaReport

    @property
    def residual_d09(self) -> float:
        return self.residuals.max_norm("d09")

    @property
    def residual_d10(self) -> float:
        return self.residuals.max_norm("d10")

    @property
    def residual_e05(self) -> float:
        return self.residuals.max_norm("e05")

    @property
    def residual_e06(self) -> float:
        return self.residuals.max_norm("e06")

    @property
    def integral_j02_lhs(self) -> float:
        return self.identities.integral_sigma_v

    @property
    def integral_j02_rhs(self) -> float:
        return self.identities.v_gradient_0 + self.identities.integral_delta

    @property
    def integral_j04_lhs(self) -> float:
        return self.identities.integral_sigma_p

    @property
    def total_loss(self) -> float:
        return self.losses.total

    @property
    def loss_active(self) -> float:
        return self.losses.active

    @property
    def loss_reactive(self) -> float:
        return self.losses.reactive

    @property
    def v_gradient_0(self) -> float:
        return self.identities.v_gradient_0

    @property
    def theta_gradient_0(self) -> float:
        return self.identities.theta_gradient_0


# ----------------------------------------------------------------------
# 通量与耗散率
# ----------------------------------------------------------------------

def _gradients(grid: SolutionGrid, derivative_source: str) -> Tuple[np.ndarray, np.ndarray]:
    if derivative_source == "state":
        return grid.dv_dx(), grid.dtheta_dx()
    if derivative_source == "finite_difference":
        return fd_derivative(grid.v, grid.h), fd_derivative(grid.theta, grid.h)
    raise ValueError(f"未知的导数来源: {derivative_source} (可用: {', '.join(DERIVATIVE_SOURCES)})")


def evaluate_functions(grid: SolutionGrid, derivative_source: str = "state") -> FluxFunctions:
    """
    计算 Psi_b, Psi_g, Delta

    Args:
        grid: 求解结果
        derivative_source: "state" 用 dv/dx = w, dtheta/dx = -s/v^2 精确代入；
            "finite_difference" 对 v, theta 做四阶差分

    Returns:
        FluxFunctions(psi_b, psi_g, delta)
    """
    dv, dtheta = _gradients(grid, derivative_source)
    v = grid.v
    psi_b = -v * v * dtheta
    psi_g = -v * dv
    delta = dv * dv + v * v * dtheta * dtheta
    return FluxFunctions(psi_b, psi_g, delta)


def _node_forcing(grid: SolutionGrid, profile: ProfileLike, params: FeederParams):
    p, q = profile.evaluate(grid.xs)
    sigma_v, sigma_p = supply_rates(p, q, params)
    return p, q, sigma_v, sigma_p


def verify_dissipation_equalities(
    grid: SolutionGrid,
    profile: ProfileLike,
    params: FeederParams,
    derivative_source: str = "state",
) -> EqualityResiduals:
    """
    四个耗散等式的逐节点残差, 外层导数用四阶差分

    端点节点与差分模板跨越断点的节点被掩码排除
    """
    g, b = params.g, params.b
    h = grid.h
    psi_b, psi_g, delta = evaluate_functions(grid, derivative_source)
    dpsi_b = fd_derivative(psi_b, h)
    dpsi_g = fd_derivative(psi_g, h)
    p, q, sigma_v, sigma_p = _node_forcing(grid, profile, params)

    mask = smooth_stencil_mask(grid.xs, profile.breakpoints())
    mask[0] = mask[-1] = False

    return EqualityResiduals(
        d09=b * dpsi_b + g * dpsi_g - p + g * delta,
        d10=b * dpsi_g - g * dpsi_b - q + b * delta,
        e05=dpsi_g - sigma_v + delta,
        e06=dpsi_b - sigma_p,
        mask=mask,
    )


# ----------------------------------------------------------------------
# 积分恒等式
# ----------------------------------------------------------------------

def _grid_integrals(grid: SolutionGrid, profile: ProfileLike, params: FeederParams):
    """∫p, ∫q 在网格上的分段 Simpson 积分；断点未落在节点上时改用分布自身的积分"""
    xs = grid.xs
    points = profile.breakpoints()
    cuts = aligned_cut_indices(xs, points)
    if len(cuts) - 2 < len(points) and not profile.is_smooth:
        return profile.integrate(0.0, grid.length)
    p_right, q_right = profile.evaluate(xs, side=1)
    p_left, q_left = profile.evaluate(xs, side=-1)
    return (
        piecewise_simpson(xs, p_right, p_left, cuts),
        piecewise_simpson(xs, q_right, q_left, cuts),
    )


def _integral_delta(grid: SolutionGrid, delta: np.ndarray, breakpoints=()) -> float:
    return piecewise_simpson(grid.xs, delta, cuts=aligned_cut_indices(grid.xs, breakpoints))


def verify_integral_identities(
    grid: SolutionGrid,
    profile: ProfileLike,
    params: FeederParams,
) -> IntegralIdentities:
    """
    积分形式的恒等式

        j02: ∫sigma_V = dv(0)/dx + ∫Delta
        j04: ∫sigma_P = dtheta(0)/dx
        i02: ∫p = b dtheta(0)/dx + g dv(0)/dx + g ∫Delta
        i04: ∫q = b dv(0)/dx - g dtheta(0)/dx + b ∫Delta
        相位子系统无损: ∫sigma_P = Psi_b(L) - Psi_b(0)

    Returns:
        IntegralIdentities, 各 *_gap 为绝对间隙
    """
    g, b = params.g, params.b
    den = params.admittance_sq
    psi_b, _, delta = evaluate_functions(grid)

    int_p, int_q = _grid_integrals(grid, profile, params)
    int_sigma_v = (g * int_p + b * int_q) / den
    int_sigma_p = (b * int_p - g * int_q) / den
    int_delta = _integral_delta(grid, delta, profile.breakpoints())

    dv0 = float(grid.w[0])
    dtheta0 = float(-grid.s[0] / (grid.v[0] * grid.v[0]))

    return IntegralIdentities(
        integral_p=int_p,
        integral_q=int_q,
        integral_sigma_v=int_sigma_v,
        integral_sigma_p=int_sigma_p,
        integral_delta=int_delta,
        v_gradient_0=dv0,
        theta_gradient_0=dtheta0,
        j02_gap=abs(int_sigma_v - dv0 - int_delta),
        j04_gap=abs(int_sigma_p - dtheta0),
        i02_gap=abs(int_p - b * dtheta0 - g * dv0 - g * int_delta),
        i04_gap=abs(int_q - b * dv0 + g * dtheta0 - b * int_delta),
        lossless_gap=abs(int_sigma_p - (float(psi_b[-1]) - float(psi_b[0]))),
    )


# ----------------------------------------------------------------------
# 损耗
# ----------------------------------------------------------------------

def loss_decomposition(grid: SolutionGrid, params: FeederParams, breakpoints=()) -> LossDecomposition:
    """
    配电损耗分解

    total = ∫Delta, active = g ∫Delta (= ∫R I^2), reactive = b ∫Delta,
    current_sq = (g^2 + b^2) Delta 为电流幅值平方
    """
    _, _, delta = evaluate_functions(grid)
    total = _integral_delta(grid, delta, breakpoints)
    return LossDecomposition(
        total=total,
        active=params.g * total,
        reactive=params.b * total,
        current_sq=params.admittance_sq * delta,
    )


# ----------------------------------------------------------------------
# 现象判定
# ----------------------------------------------------------------------

def _sign_everywhere(profile: ProfileLike, which: int, sign: int, samples: int = 4097) -> bool:
    """分布分量 (0=p, 1=q) 是否处处同号: sign<0 时检查 <= 0, sign>0 时检查 >= 0"""
    xs = np.concatenate([np.linspace(0.0, profile.length, samples), np.asarray(profile.breakpoints(), dtype=float)])
    for side in (1, -1):
        values = np.asarray(profile.evaluate(xs, side=side)[which])
        if sign < 0 and np.any(values > 0.0):
            return False
        if sign > 0 and np.any(values < 0.0):
            return False
    return True


def classify_phenomena(
    grid: SolutionGrid,
    profile: ProfileLike,
    params: FeederParams,
    tol_sign: float = TOL_SIGN,
    identities: Optional[IntegralIdentities] = None,
) -> PhenomenaReport:
    """
    由 x = 0 处的梯度判定电压降落、反向潮流、相位滞后与超前

    |梯度| < tol_sign 时不设标志。同时在各自前提成立时检查:
      - q <= 0 处处: dtheta(0)/dx <= 0 当且仅当 ∫q >= (b/g) ∫p
      - q >= 0 处处: dtheta(0)/dx >= 0 当且仅当 ∫q <= (b/g) ∫p
      - p <= 0, q <= 0 处处, b >= 0 且总损耗 > 0: dv(0)/dx < 0
      - b < 0: 无功耗散率 b Delta 处处 <= 0

    净供给与总损耗之差 |∫sigma_V - ∫Delta| >= tol_sign 时记录 ∫sigma_V >= ∫Delta
    是否成立, 以及它与 dv(0)/dx >= 0 是否等价。
    """
    g, b = params.g, params.b
    identities = identities or verify_integral_identities(grid, profile, params)
    dv0 = identities.v_gradient_0
    dtheta0 = identities.theta_gradient_0
    int_p, int_q = identities.integral_p, identities.integral_q

    raised = {
        "VoltageDrop": dv0 <= -tol_sign,
        "ReverseFlow": dv0 >= tol_sign,
        "PhaseDelay": dtheta0 <= -tol_sign,
        "PhaseAdvance": dtheta0 >= tol_sign,
    }
    flags = tuple(name for name in PHENOMENA_ORDER if raised[name])

    threshold = (b / g) * int_p
    q_nonpositive = _sign_everywhere(profile, 1, -1)
    q_nonnegative = _sign_everywhere(profile, 1, 1)

    phase_delay = None
    if q_nonpositive:
        phase_delay = (dtheta0 <= tol_sign) == (int_q >= threshold - tol_sign)

    phase_advance = None
    if q_nonnegative:
        phase_advance = (dtheta0 >= -tol_sign) == (int_q <= threshold + tol_sign)

    voltage_drop = None
    if q_nonpositive and b >= 0.0 and _sign_everywhere(profile, 0, -1) and identities.integral_delta > 0.0:
        voltage_drop = dv0 < 0.0

    reactive_sign = None
    if b < 0.0:
        _, _, delta = evaluate_functions(grid)
        reactive_sign = bool(np.all(b * delta <= 0.0))

    reverse_flow = None
    reverse_flow_equivalence = None
    surplus = identities.integral_sigma_v - identities.integral_delta
    if abs(surplus) >= tol_sign:
        reverse_flow = bool(surplus > 0.0)
        reverse_flow_equivalence = reverse_flow == bool(dv0 >= 0.0)

    return PhenomenaReport(
        flags=flags,
        v_gradient_0=dv0,
        theta_gradient_0=dtheta0,
        integral_p=int_p,
        integral_q=int_q,
        phase_delay_equivalence=phase_delay,
        phase_advance_equivalence=phase_advance,
        voltage_drop_theorem=voltage_drop,
        reactive_dissipation_sign=reactive_sign,
        reverse_flow_inequality=reverse_flow,
        reverse_flow_equivalence=reverse_flow_equivalence,
    )


# ----------------------------------------------------------------------
# 汇总
# ----------------------------------------------------------------------

def analyze(
    grid: SolutionGrid,
    profile: ProfileLike,
    params: FeederParams,
    derivative_source: str = "state",
    tol_sign: float = TOL_SIGN,
) -> DissipationReport:
    """对一个解执行全部通量、等式、恒等式、损耗与现象分析"""
    flux = evaluate_functions(grid, derivative_source)
    residuals = verify_dissipation_equalities(grid, profile, params, derivative_source)
    identities = verify_integral_identities(grid, profile, params)
    losses = loss_decomposition(grid, params, profile.breakpoints())
    phenomena = classify_phenomena(grid, profile, params, tol_sign, identities=identities)
    return DissipationReport(
        psi_b=flux.psi_b,
        psi_g=flux.psi_g,
        delta=flux.delta,
        residuals=residuals,
        identities=identities,
        losses=losses,
        phenomena=phenomena,
    )


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return format(float(value), ".17g")


def report_record(report: DissipationReport) -> Dict[str, str]:
    """扁平 key=value 记录 (键顺序固定)"""
    ident = report.identities
    record: Dict[str, str] = {
        "phenomena": report.phenomena.label,
        "v_gradient_0": _fmt(report.v_gradient_0),
        "theta_gradient_0": _fmt(report.theta_gradient_0),
        "total_loss": _fmt(report.total_loss),
        "loss_active": _fmt(report.loss_active),
        "loss_reactive": _fmt(report.loss_reactive),
        "integral_p": _fmt(ident.integral_p),
        "integral_q": _fmt(ident.integral_q),
        "integral_j02_lhs": _fmt(report.integral_j02_lhs),
        "integral_j02_rhs": _fmt(report.integral_j02_rhs),
        "integral_j04_lhs": _fmt(report.integral_j04_lhs),
    }
    for name in EQUALITY_NAMES:
        record[f"residual_{name}"] = _fmt(report.residuals.max_norm(name))
    for name, gap in ident.gaps.items():
        record[f"{name}_gap"] = _fmt(gap)
    for name, value in report.phenomena.theorem_checks.items():
        record[name] = _fmt(value)
    return record


# ----------------------------------------------------------------------
# 注入评估
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioLosses:
    """单个场景的净损耗恒等式各项"""

    label: str
    total_loss: float
    integral_sigma_v: float
    v_gradient_0: float

    @property
    def identity_gap(self) -> float:
        """|∫Delta - (∫sigma_V - dv(0)/dx)|"""
        return abs(self.total_loss - (self.integral_sigma_v - self.v_gradient_0))


@dataclass(frozen=True)
class InjectionEvaluation:
    base: ScenarioLosses
    injected: ScenarioLosses

    @property
    def loss_delta(self) -> float:
        return self.injected.total_loss - self.base.total_loss

    @property
    def scenarios(self) -> List[ScenarioLosses]:
        return [self.base, self.injected]


def _scenario_losses(label: str, profile: ProfileLike, params: FeederParams, options) -> ScenarioLosses:
    from ..model.errors import FeederFlowError
    from ..solver.bvp_solver import solve_bvp

    try:
        grid, _ = solve_bvp(profile, params, options)
    except FeederFlowError as error:
        raise error.for_scenario(label)
    identities = verify_integral_identities(grid, profile, params)
    return ScenarioLosses(
        label=label,
        total_loss=identities.integral_delta,
        integral_sigma_v=identities.integral_sigma_v,
        v_gradient_0=identities.v_gradient_0,
    )


def injection_evaluation(
    base_profile: PowerProfile,
    injection_profile: PowerProfile,
    params: FeederParams,
    options=None,
) -> InjectionEvaluation:
    """
    评估注入对全馈线净损耗的影响

    注入后分布 = base 与 injection 的叠加；两个场景分别求解并检查
    ∫Delta = ∫sigma_V - dv(0)/dx。求解失败时异常带有场景标签 base / injected。
    """
    injected_profile = base_profile.superpose(injection_profile)
    return InjectionEvaluation(
        base=_scenario_losses("base", base_profile, params, options),
        injected=_scenario_losses("injected", injected_profile, params, options),
    )
