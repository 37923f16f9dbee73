"""
Ladder Oracle - 离散阻抗梯形网络的前推回代潮流

把连续馈线离散为 N 段串联阻抗 z = (R + jX) h, 节点 k 位于 x_k = k h,
节点注入功率 S_k 为 [x_k - h/2, x_k + h/2] ∩ [0, L] 上的功率密度积分；
节点 0 为平衡节点 1∠0。该模型与 ODE 模型完全独立, 用作一致性参照。
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..model.errors import PowerBalanceError
from ..model.feeder_model import FeederParams, ManufacturedProfile, SolutionGrid
from ..model.profile import ProfileLike


@dataclass(frozen=True)
class LadderNetwork:
    """
    N 段梯形网络；injections[k] 为节点 k 的复功率注入 (正值为向线路注入)

    breakpoints 为原分布的断点, 连续模型损耗积分在此切分
    """

    h: float
    z_segment: complex
    injections: np.ndarray
    slack_voltage: complex = 1.0 + 0.0j
    breakpoints: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.z_segment.real <= 0.0:
            raise ValueError(f"线段阻抗实部必须为正: {self.z_segment}")
        arr = np.array(self.injections, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "injections", arr)

    @property
    def n_nodes(self) -> int:
        return len(self.injections)

    @property
    def n_segments(self) -> int:
        return self.n_nodes - 1

    @property
    def resistance(self) -> float:
        """单位长度电阻 R"""
        return self.z_segment.real / self.h


@dataclass(frozen=True)
class PowerFlowResult:
    """潮流计算结果"""

    voltages: np.ndarray
    branch_currents: np.ndarray
    iterations: int
    converged: bool
    slack_power: complex
    losses: complex
    balance_residual: float

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.voltages)

    @property
    def angles(self) -> np.ndarray:
        return np.angle(self.voltages)


@dataclass(frozen=True)
class ContinuumComparison:
    """梯形网络与连续模型的差异"""

    n_intervals: int
    v_err: float
    theta_err: float
    loss_err: float
    ladder_active_loss: float
    continuum_active_loss: float


def _cell_integrals(profile: ProfileLike, xs: np.ndarray, h: float):
    """各节点所属小单元上的 ∫p, ∫q"""
    L = float(xs[-1])
    lo = np.clip(xs - 0.5 * h, 0.0, L)
    hi = np.clip(xs + 0.5 * h, 0.0, L)

    if isinstance(profile, ManufacturedProfile):
        # 两个半单元各用一次中点公式
        left_mid = 0.5 * (lo + xs)
        right_mid = 0.5 * (xs + hi)
        p_l, q_l = profile.evaluate(left_mid)
        p_r, q_r = profile.evaluate(right_mid)
        return p_l * (xs - lo) + p_r * (hi - xs), q_l * (xs - lo) + q_r * (hi - xs)

    P = np.empty(len(xs))
    Q = np.empty(len(xs))
    for k, (a, b) in enumerate(zip(lo, hi)):
        P[k], Q[k] = profile.integrate(float(a), float(b))
    return P, Q


def build_network(profile: ProfileLike, params: FeederParams, n_intervals: int) -> LadderNetwork:
    """
    将连续分布集总为 N 段梯形网络

    Args:
        profile: 功率密度分布
        params: 馈线参数
        n_intervals: 段数 N (>= 16)

    Returns:
        LadderNetwork, 两端节点各只获得半个单元
    """
    if n_intervals < 16:
        raise ValueError(f"梯形网络段数至少为 16, 实际 {n_intervals}")
    h = params.length / n_intervals
    xs = np.linspace(0.0, params.length, n_intervals + 1)
    P, Q = _cell_integrals(profile, xs, h)
    return LadderNetwork(
        h=h,
        z_segment=params.impedance * h,
        injections=P + 1j * Q,
        breakpoints=tuple(float(x) for x in profile.breakpoints()),
    )


def solve_powerflow(network: LadderNetwork, tol: float = 1e-12, max_iters: int = 500) -> PowerFlowResult:
    """
    前推回代潮流

    回代: 节点电流 I_k = conj(S_k / V_k), 支路 k (节点 k-1 -> k) 电流
          J_k = -sum_{m >= k} I_m
    前推: V_k = V_{k-1} - z J_k
    直到 max |ΔV| <= tol。未收敛时 converged=False, 不抛异常。

    Raises:
        PowerBalanceError: 收敛后复功率守恒残差过大
    """
    if tol <= 0:
        raise ValueError("tol 必须为正")

    S = network.injections
    z = network.z_segment
    V = np.full(network.n_nodes, network.slack_voltage, dtype=complex)
    J = np.zeros(network.n_segments, dtype=complex)
    converged = False
    iterations = 0

    while iterations < max_iters:
        iterations += 1
        node_current = np.conj(S[1:] / V[1:])
        J = -np.cumsum(node_current[::-1])[::-1]
        V_new = np.empty_like(V)
        V_new[0] = network.slack_voltage
        V_new[1:] = network.slack_voltage - z * np.cumsum(J)
        change = float(np.max(np.abs(V_new - V)))
        V = V_new
        if change <= tol:
            converged = True
            break

    J = -np.cumsum(np.conj(S[1:] / V[1:])[::-1])[::-1]
    losses = complex(z * np.sum(np.abs(J) ** 2))
    slack_power = complex(V[0] * np.conj(J[0])) if len(J) else 0j
    residual = abs(slack_power + complex(np.sum(S[1:])) - losses)

    if converged and residual > 1e-6 * (1.0 + float(np.sum(np.abs(S)))):
        raise PowerBalanceError(f"梯形网络功率不守恒: 残差 {residual:.3e}")

    return PowerFlowResult(
        voltages=V,
        branch_currents=J,
        iterations=iterations,
        converged=converged,
        slack_power=slack_power,
        losses=losses,
        balance_residual=residual,
    )


def ladder_losses(result: PowerFlowResult) -> complex:
    """网络总损耗 sum z |J_k|^2 (实部为有功损耗)"""
    return result.losses


def compare_to_continuum(
    grid: SolutionGrid,
    network: LadderNetwork,
    result: PowerFlowResult,
    params: FeederParams,
    eps: float = 1e-14,
) -> ContinuumComparison:
    """
    比较同一 N 下的梯形网络与 ODE 解

    v_err = max |V_k| 与 v(x_k) 之差, theta_err 为相角之差,
    loss_err = |sum R h |J_k|^2 - g ∫Δ| / max(g ∫Δ, eps)
    """
    from ..analysis.dissipation import loss_decomposition

    if grid.n_intervals != network.n_segments:
        raise ValueError(f"网格区间数 {grid.n_intervals} 与网络段数 {network.n_segments} 不一致")

    v_err = float(np.max(np.abs(result.magnitudes - grid.v)))
    theta_err = float(np.max(np.abs(result.angles - grid.theta)))
    ladder_active = float(result.losses.real)
    continuum_active = loss_decomposition(grid, params, network.breakpoints).active
    loss_err = abs(ladder_active - continuum_active) / max(continuum_active, eps)

    return ContinuumComparison(
        n_intervals=grid.n_intervals,
        v_err=v_err,
        theta_err=theta_err,
        loss_err=loss_err,
        ladder_active_loss=ladder_active,
        continuum_active_loss=continuum_active,
    )


def oracle_terminal_voltage(profile: ProfileLike, params: FeederParams, n_intervals: int = 10_000) -> Optional[float]:
    """细网格梯形网络的终端电压幅值, 用作求解器的独立参考值"""
    result = solve_powerflow(build_network(profile, params, n_intervals))
    return float(result.magnitudes[-1]) if result.converged else None
