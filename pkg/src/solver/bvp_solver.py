"""
BVP Solver - 反向打靶法求解馈线电压分布两点边值问题

终端条件 s(L) = w(L) = 0 精确给定, 未知量只剩 (v_L, theta_L)；
从 x = L 用经典四阶 Runge-Kutta 向 x = 0 积分, 再用有限差分 Jacobian 的
阻尼 Newton 迭代使 v(0) = 1, theta(0) = 0。
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..analysis.numerics import observed_orders
from ..model.errors import DomainError, NotConverged, VoltageCollapse
from ..model.feeder_model import (
    DEFAULT_V_MIN,
    FeederParams,
    ManufacturedProfile,
    SolutionGrid,
    rhs_components,
)
from ..model.profile import ProfileLike


# 负荷延拓的缩放序列
CONTINUATION_STEPS: Tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)

# 最多折半次数
MAX_HALVINGS = 8

# |v_L - 1| 超过此值时给出可疑解警告
SUSPICIOUS_TERMINAL_GAP = 0.5

# 低于此值的误差视为舍入噪声, 不参与收敛阶判定
ROUNDOFF_FLOOR = 1e-11


class SolverOptions(BaseModel):
    """打靶求解器参数"""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    n_intervals: int = Field(default=256, ge=16, description="网格区间数 N (偶数)")
    newton_tol: float = Field(default=1e-10, gt=0, description="残差无穷范数容差")
    max_newton_iters: int = Field(default=50, ge=1, description="最大 Newton 迭代次数")
    fd_step: float = Field(default=1e-7, gt=0, description="Jacobian 有限差分步长")
    damping: float = Field(default=1.0, gt=0, le=1, description="初始阻尼系数")
    v_min: float = Field(default=DEFAULT_V_MIN, gt=0, description="电压崩溃阈值")
    split_at_breakpoints: bool = Field(default=True, description="在分布断点处切分 RK4 步")
    continuation: bool = Field(default=True, description="不收敛时启用负荷延拓")

    @field_validator("n_intervals")
    @classmethod
    def _even_grid(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"网格区间数必须为偶数 (Simpson 积分), 实际 {value}")
        return value


class SolveDiagnostics(BaseModel):
    """求解诊断信息"""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    iterations: int
    final_residual_norm: float
    converged: bool
    boundary_residuals: Tuple[float, float, float, float]
    v_terminal: float = 1.0
    theta_terminal: float = 0.0
    continuation_used: bool = False
    warnings: Tuple[str, ...] = ()


# ----------------------------------------------------------------------
# 分布采样
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class StepForcing:
    """
    每个 RK4 步 [x_k, x_{k+1}] 所需的 p, q 采样

    lo 取右极限, hi 取左极限；含内部断点的步在 splits 中保存子步
    """

    xs: np.ndarray
    p_lo: np.ndarray
    q_lo: np.ndarray
    p_mid: np.ndarray
    q_mid: np.ndarray
    p_hi: np.ndarray
    q_hi: np.ndarray
    splits: Dict[int, Tuple[Tuple[float, ...], ...]] = field(default_factory=dict)

    def scaled(self, factor: float) -> "StepForcing":
        return StepForcing(
            xs=self.xs,
            p_lo=factor * self.p_lo, q_lo=factor * self.q_lo,
            p_mid=factor * self.p_mid, q_mid=factor * self.q_mid,
            p_hi=factor * self.p_hi, q_hi=factor * self.q_hi,
            splits={
                k: tuple((sub[0], sub[1]) + tuple(factor * val for val in sub[2:]) for sub in subs)
                for k, subs in self.splits.items()
            },
        )


def _sample_interval(profile: ProfileLike, lo: float, hi: float) -> Tuple[float, ...]:
    p_lo, q_lo = profile.evaluate(lo, side=1)
    p_mid, q_mid = profile.evaluate(0.5 * (lo + hi))
    p_hi, q_hi = profile.evaluate(hi, side=-1)
    return (lo, hi, float(p_lo), float(q_lo), float(p_mid), float(q_mid), float(p_hi), float(q_hi))


def sample_forcing(profile: ProfileLike, n_intervals: int, split_at_breakpoints: bool = True) -> StepForcing:
    """在网格上预先采样分布, Newton 迭代中反复复用"""
    L = profile.length
    xs = np.linspace(0.0, L, n_intervals + 1)
    lo, hi = xs[:-1], xs[1:]
    p_lo, q_lo = profile.evaluate(lo, side=1)
    p_mid, q_mid = profile.evaluate(0.5 * (lo + hi))
    p_hi, q_hi = profile.evaluate(hi, side=-1)

    splits: Dict[int, Tuple[Tuple[float, ...], ...]] = {}
    if split_at_breakpoints:
        h = L / n_intervals
        tol = 1e-9 * h
        interior: Dict[int, List[float]] = {}
        for xb in profile.breakpoints():
            k = min(int(xb // h), n_intervals - 1)
            if xs[k] + tol < xb < xs[k + 1] - tol:
                interior.setdefault(k, []).append(xb)
        for k, points in interior.items():
            cuts = [float(xs[k])] + sorted(points) + [float(xs[k + 1])]
            splits[k] = tuple(_sample_interval(profile, a, b) for a, b in zip(cuts[:-1], cuts[1:]))

    return StepForcing(xs=xs, p_lo=p_lo, q_lo=q_lo, p_mid=p_mid, q_mid=q_mid, p_hi=p_hi, q_hi=q_hi, splits=splits)


# ----------------------------------------------------------------------
# RK4 反向积分
# ----------------------------------------------------------------------

def _rk4_back(theta, v, s, w, x_hi, step, p_hi, q_hi, p_mid, q_mid, p_lo, q_lo, g, b, den, v_min):
    """从 x_hi 向 x_hi - step 走一步经典 RK4"""
    if v < v_min:
        raise VoltageCollapse(x_hi, v, v_min)
    k1 = rhs_components(v, s, w, p_hi, q_hi, g, b, den)

    half = 0.5 * step
    v2 = v - half * k1[1]
    if v2 < v_min:
        raise VoltageCollapse(x_hi - half, v2, v_min)
    k2 = rhs_components(v2, s - half * k1[2], w - half * k1[3], p_mid, q_mid, g, b, den)

    v3 = v - half * k2[1]
    if v3 < v_min:
        raise VoltageCollapse(x_hi - half, v3, v_min)
    k3 = rhs_components(v3, s - half * k2[2], w - half * k2[3], p_mid, q_mid, g, b, den)

    v4 = v - step * k3[1]
    if v4 < v_min:
        raise VoltageCollapse(x_hi - step, v4, v_min)
    k4 = rhs_components(v4, s - step * k3[2], w - step * k3[3], p_lo, q_lo, g, b, den)

    c = step / 6.0
    return (
        theta - c * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        v - c * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s - c * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        w - c * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
    )


def _march(forcing: StepForcing, v_terminal: float, theta_terminal: float, params: FeederParams,
           v_min: float, store: bool):
    """
    从终端 (theta_L, v_L, 0, 0) 积分到 x = 0

    store=False 时只返回 x = 0 处状态, 供 Newton 迭代使用
    """
    xs = forcing.xs
    n = len(xs) - 1
    g, b = params.g, params.b
    den = params.admittance_sq

    if v_terminal < v_min:
        raise VoltageCollapse(float(xs[-1]), v_terminal, v_min)

    theta, v, s, w = theta_terminal, v_terminal, 0.0, 0.0
    if store:
        out = np.empty((n + 1, 4))
        out[n] = (theta, v, s, w)

    p_lo, q_lo = forcing.p_lo, forcing.q_lo
    p_mid, q_mid = forcing.p_mid, forcing.q_mid
    p_hi, q_hi = forcing.p_hi, forcing.q_hi
    splits = forcing.splits

    for k in range(n - 1, -1, -1):
        subs = splits.get(k)
        if subs is None:
            theta, v, s, w = _rk4_back(
                theta, v, s, w, xs[k + 1], xs[k + 1] - xs[k],
                p_hi[k], q_hi[k], p_mid[k], q_mid[k], p_lo[k], q_lo[k], g, b, den, v_min,
            )
        else:
            for lo, hi, sp_lo, sq_lo, sp_mid, sq_mid, sp_hi, sq_hi in reversed(subs):
                theta, v, s, w = _rk4_back(
                    theta, v, s, w, hi, hi - lo,
                    sp_hi, sq_hi, sp_mid, sq_mid, sp_lo, sq_lo, g, b, den, v_min,
                )
        if store:
            out[k] = (theta, v, s, w)

    if v < v_min:
        raise VoltageCollapse(0.0, v, v_min)
    if store:
        return SolutionGrid(xs=xs, theta=out[:, 0], v=out[:, 1], s=out[:, 2], w=out[:, 3])
    return theta, v


def integrate_backward(
    terminal: Tuple[float, float],
    profile: ProfileLike,
    params: FeederParams,
    n_intervals: int,
    v_min: float = DEFAULT_V_MIN,
    split_at_breakpoints: bool = True,
) -> SolutionGrid:
    """
    从终端数据 (v_L, theta_L) 反向积分得到完整网格

    Raises:
        VoltageCollapse: 积分过程中 v < v_min
    """
    if n_intervals < 16:
        raise ValueError(f"网格区间数至少为 16, 实际 {n_intervals}")
    v_terminal, theta_terminal = terminal
    forcing = sample_forcing(profile, n_intervals, split_at_breakpoints)
    return _march(forcing, float(v_terminal), float(theta_terminal), params, v_min, store=True)


# ----------------------------------------------------------------------
# Newton 打靶
# ----------------------------------------------------------------------

def _shooting_residual(forcing, u, params, v_min) -> np.ndarray:
    theta0, v0 = _march(forcing, float(u[0]), float(u[1]), params, v_min, store=False)
    return np.array([v0 - 1.0, theta0])


def _newton(forcing: StepForcing, guess: Sequence[float], params: FeederParams, options: SolverOptions):
    """阻尼 Newton 迭代, 返回 (u, iterations, residual_norm)"""
    u = np.array(guess, dtype=float)
    F = _shooting_residual(forcing, u, params, options.v_min)
    norm = float(np.max(np.abs(F)))
    iterations = 0
    if not np.isfinite(norm):
        raise NotConverged(f"打靶残差非有限 ({norm})", iterations=0, residual=norm)

    while norm > options.newton_tol:
        if iterations >= options.max_newton_iters:
            raise NotConverged(
                f"Newton 迭代 {iterations} 次未收敛, 残差 {norm:.3e}", iterations=iterations, residual=norm
            )

        J = np.empty((2, 2))
        for j in range(2):
            step = options.fd_step * max(1.0, abs(u[j]))
            shifted = u.copy()
            shifted[j] += step
            J[:, j] = (_shooting_residual(forcing, shifted, params, options.v_min) - F) / step
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise NotConverged("打靶 Jacobian 奇异", iterations=iterations, residual=norm) from None

        factor = options.damping
        for _ in range(MAX_HALVINGS + 1):
            trial = u + factor * delta
            try:
                F_trial = _shooting_residual(forcing, trial, params, options.v_min)
                trial_norm = float(np.max(np.abs(F_trial)))
            except VoltageCollapse:
                trial_norm = math.inf
            if trial_norm < norm:
                break
            factor *= 0.5
        else:
            raise NotConverged(
                f"阻尼折半 {MAX_HALVINGS} 次后残差仍未下降 ({norm:.3e})", iterations=iterations, residual=norm
            )

        u, F, norm = trial, F_trial, trial_norm
        iterations += 1

    return u, iterations, norm


def solve_bvp(
    profile: ProfileLike,
    params: FeederParams,
    options: Optional[SolverOptions] = None,
) -> Tuple[SolutionGrid, SolveDiagnostics]:
    """
    求解两点边值问题 theta(0) = 0, v(0) = 1, s(L) = 0, w(L) = 0

    初值 (v_L, theta_L) = (1, 0)；直接迭代失败时按 lambda = 0.25, 0.5, 0.75, 1.0
    缩放分布做负荷延拓, 每一级以上一级的解热启动。

    Raises:
        NotConverged: Newton 迭代失败 (含延拓)
        VoltageCollapse: 积分中电压崩溃
    """
    options = options or SolverOptions()
    if abs(profile.length - params.length) > 1e-12 * max(1.0, params.length):
        raise DomainError(f"分布长度 {profile.length} 与馈线长度 {params.length} 不一致")

    forcing = sample_forcing(profile, options.n_intervals, options.split_at_breakpoints)
    warnings: List[str] = []
    continuation_used = False

    try:
        u, iterations, norm = _newton(forcing, (1.0, 0.0), params, options)
    except (NotConverged, VoltageCollapse) as first_error:
        if not options.continuation:
            raise
        warnings.append(f"直接迭代失败 ({first_error}), 启用负荷延拓")
        continuation_used = True
        u = np.array([1.0, 0.0])
        iterations = 0
        for lam in CONTINUATION_STEPS:
            u, stage_iterations, norm = _newton(forcing.scaled(lam), u, params, options)
            iterations += stage_iterations

    grid = _march(forcing, float(u[0]), float(u[1]), params, options.v_min, store=True)

    if abs(u[0] - 1.0) > SUSPICIOUS_TERMINAL_GAP:
        warnings.append(f"可疑解: |v_L - 1| = {abs(u[0] - 1.0):.3f} > {SUSPICIOUS_TERMINAL_GAP}")

    diagnostics = SolveDiagnostics(
        iterations=iterations,
        final_residual_norm=norm,
        converged=norm <= options.newton_tol,
        boundary_residuals=grid.boundary_residuals(),
        v_terminal=float(u[0]),
        theta_terminal=float(u[1]),
        continuation_used=continuation_used,
        warnings=tuple(warnings),
    )
    return grid, diagnostics


# ----------------------------------------------------------------------
# 网格加密
# ----------------------------------------------------------------------

def refine_and_estimate(
    profile: ProfileLike,
    params: FeederParams,
    options: Optional[SolverOptions] = None,
) -> Tuple[SolutionGrid, float]:
    """
    在 N 与 2N 网格上分别求解, 误差估计为粗网格节点上 v 的最大差

    Returns:
        (细网格解, 误差估计)
    """
    options = options or SolverOptions()
    coarse, _ = solve_bvp(profile, params, options)
    fine_options = options.model_copy(update={"n_intervals": 2 * options.n_intervals})
    fine, _ = solve_bvp(profile, params, fine_options)
    estimate = float(np.max(np.abs(coarse.v - fine.v[::2])))
    return fine, estimate


@dataclass(frozen=True)
class ConvergenceStudy:
    """网格收敛研究结果"""

    grid_sizes: Tuple[int, ...]
    errors: Tuple[float, ...]
    orders: Tuple[float, ...]
    grids: Tuple[SolutionGrid, ...] = ()

    @property
    def min_order(self) -> float:
        finite = [o for o in self.orders if not math.isnan(o)]
        return min(finite) if finite else float("nan")

    def resolved_orders(self, floor: float = ROUNDOFF_FLOOR) -> Tuple[float, ...]:
        """只保留细网格误差仍高于舍入噪声的相邻对"""
        return tuple(o for o, fine in zip(self.orders, self.errors[1:]) if fine > floor)


def convergence_study(
    profile: ProfileLike,
    params: FeederParams,
    options: Optional[SolverOptions] = None,
    levels: int = 3,
    exact_v: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> ConvergenceStudy:
    """
    逐级加密 (N, 2N, 4N, ...) 的 v 最大范数误差与观测收敛阶

    有精确解 (exact_v, 制造解时自动取用) 时直接比较；否则用相邻两级之差
    (需要多求解一级)。
    """
    options = options or SolverOptions()
    if exact_v is None and isinstance(profile, ManufacturedProfile) and profile.factor == 1.0:
        exact_v = profile.v_fn.value

    n_solves = levels if exact_v is not None else levels + 1
    sizes = [options.n_intervals * 2 ** i for i in range(n_solves)]
    grids = [solve_bvp(profile, params, options.model_copy(update={"n_intervals": n}))[0] for n in sizes]

    if exact_v is not None:
        errors = [float(np.max(np.abs(gr.v - exact_v(gr.xs)))) for gr in grids]
    else:
        errors = [float(np.max(np.abs(c.v - f.v[::2]))) for c, f in zip(grids[:-1], grids[1:])]
        sizes = sizes[:-1]

    return ConvergenceStudy(
        grid_sizes=tuple(sizes),
        errors=tuple(errors),
        orders=tuple(observed_orders(errors)),
        grids=tuple(grids),
    )
