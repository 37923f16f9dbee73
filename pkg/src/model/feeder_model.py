"""
Feeder Model - 配电馈线电压分布的非线性 ODE 模型

状态 (theta, v, s, w) 沿馈线位置 x 的变化:
    dtheta/dx = -s / v^2
    dv/dx     = w
    ds/dx     = (b p - g q) / (g^2 + b^2)
    dw/dx     = s^2 / v^3 - (g p + b q) / ((g^2 + b^2) v)
边界条件: theta(0) = 0, v(0) = 1, s(L) = 0, w(L) = 0
"""

from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import DomainError, VoltageCollapse


DEFAULT_V_MIN = 1e-6


class FeederParams(BaseModel):
    """馈线单位长度参数 (per-unit)"""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    g: float = Field(gt=0, description="单位长度电导, 必须为正")
    b: float = Field(description="单位长度电纳, 正负均可")
    length: float = Field(gt=0, description="馈线长度 L")

    @property
    def admittance_sq(self) -> float:
        """g^2 + b^2"""
        return self.g * self.g + self.b * self.b

    @property
    def resistance(self) -> float:
        """R = g / (g^2 + b^2)"""
        return self.g / self.admittance_sq

    @property
    def reactance(self) -> float:
        """X = b / (g^2 + b^2)"""
        return self.b / self.admittance_sq

    @property
    def impedance(self) -> complex:
        """(R + jX) = (g - jb)^-1"""
        return complex(self.resistance, self.reactance)


class State(NamedTuple):
    """馈线某一位置的状态"""

    theta: float
    v: float
    s: float
    w: float


@dataclass(frozen=True)
class SolutionGrid:
    """
    均匀网格上的 BVP 解

    xs 共 N+1 个节点, xs[0] = 0, xs[N] = L；各状态数组只读
    """

    xs: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    s: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        for name in ("xs", "theta", "v", "s", "w"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_intervals(self) -> int:
        return len(self.xs) - 1

    @property
    def h(self) -> float:
        return float(self.xs[-1] - self.xs[0]) / self.n_intervals

    @property
    def length(self) -> float:
        return float(self.xs[-1])

    @property
    def states(self) -> List[State]:
        return [State(*row) for row in zip(self.theta, self.v, self.s, self.w)]

    def state_at(self, index: int) -> State:
        return State(float(self.theta[index]), float(self.v[index]), float(self.s[index]), float(self.w[index]))

    def dv_dx(self) -> np.ndarray:
        """dv/dx = w"""
        return self.w

    def dtheta_dx(self) -> np.ndarray:
        """dtheta/dx = -s / v^2"""
        return -self.s / (self.v * self.v)

    def boundary_residuals(self) -> Tuple[float, float, float, float]:
        """(|theta(0)|, |v(0) - 1|, |s(L)|, |w(L)|)"""
        return (
            abs(float(self.theta[0])),
            abs(float(self.v[0]) - 1.0),
            abs(float(self.s[-1])),
            abs(float(self.w[-1])),
        )

    def with_states(self, **arrays: np.ndarray) -> "SolutionGrid":
        """返回替换了部分状态数组的新网格"""
        fields = {"xs": self.xs, "theta": self.theta, "v": self.v, "s": self.s, "w": self.w}
        fields.update(arrays)
        return SolutionGrid(**fields)


# ----------------------------------------------------------------------
# 右端项与子系统残差
# ----------------------------------------------------------------------

def rhs_components(v: float, s: float, w: float, p: float, q: float, g: float, b: float, den: float):
    """右端四个分量的标量内核, 调用方负责 v_min 检查；den = g^2 + b^2"""
    return (
        -s / (v * v),
        w,
        (b * p - g * q) / den,
        s * s / (v * v * v) - (g * p + b * q) / (den * v),
    )


def rhs(
    state: State, p: float, q: float, params: FeederParams, v_min: float = DEFAULT_V_MIN, x: float = float("nan")
) -> State:
    """
    ODE 右端 (dtheta/dx, dv/dx, ds/dx, dw/dx), x 只用于崩溃报告

    Raises:
        VoltageCollapse: v < v_min
    """
    theta, v, s, w = state
    if v < v_min:
        raise VoltageCollapse(x=x, v=v, v_min=v_min)
    return State(*rhs_components(v, s, w, p, q, params.g, params.b, params.admittance_sq))


def subsystem_residuals(
    v: float,
    dv: float,
    d2v: float,
    theta: float,
    dtheta: float,
    d2theta: float,
    p: float,
    q: float,
    params: FeederParams,
) -> Tuple[float, float]:
    """
    有功子系统 A 与无功子系统 R 的残差, 精确解时均为 0

        res_A = p + b (2 v v' theta' + v^2 theta'') + g (v v'' - v^2 theta'^2)
        res_R = q + b (v v'' - v^2 theta'^2) - g (2 v v' theta' + v^2 theta'')

    theta 本身不出现在方程中, 保留参数以保持 (v, theta) 成对传入的调用形式。
    """
    g, b = params.g, params.b
    phase_term = 2.0 * v * dv * dtheta + v * v * d2theta
    amplitude_term = v * d2v - v * v * dtheta * dtheta
    res_a = p + b * phase_term + g * amplitude_term
    res_r = q + b * amplitude_term - g * phase_term
    return res_a, res_r


def combined_residual(v, dv, d2v, theta, dtheta, d2theta, p, q, params: FeederParams) -> complex:
    """复功率形式 (p + jq) + (b - jg) A + (g + jb) B"""
    res_a, res_r = subsystem_residuals(v, dv, d2v, theta, dtheta, d2theta, p, q, params)
    return complex(res_a, res_r)


def supply_rates(p, q, params: FeederParams):
    """
    电压子系统 V 与相位子系统 P 的供给率

        sigma_V = (g p + b q) / (g^2 + b^2)
        sigma_P = (b p - g q) / (g^2 + b^2)
    """
    g, b = params.g, params.b
    den = params.admittance_sq
    return (g * p + b * q) / den, (b * p - g * q) / den


def inverse_supply_rates(sigma_v, sigma_p, params: FeederParams):
    """supply_rates 的逆映射"""
    g, b = params.g, params.b
    return g * sigma_v + b * sigma_p, b * sigma_v - g * sigma_p


# ----------------------------------------------------------------------
# 制造解
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothFunction:
    """带一阶、二阶导数的光滑函数 (numpy 向量化)"""

    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))


def _constant(c: float) -> SmoothFunction:
    return SmoothFunction(
        value=lambda x: np.full_like(x, c, dtype=float),
        d1=lambda x: np.zeros_like(x, dtype=float),
        d2=lambda x: np.zeros_like(x, dtype=float),
    )


def cubic_pair(v_amplitude: float, theta_amplitude: float, length: float) -> Tuple[SmoothFunction, SmoothFunction]:
    """
    三次多项式制造解 v = 1 + a phi, theta = c phi
    phi = (x/L)^2 (2x/L - 3), phi(0) = 0, phi'(L) = 0, phi(L) = -1
    """
    L = length

    def phi(x):
        t = x / L
        return t * t * (2.0 * t - 3.0)

    def dphi(x):
        t = x / L
        return 6.0 * t * (t - 1.0) / L

    def d2phi(x):
        t = x / L
        return (12.0 * t - 6.0) / (L * L)

    a, c = v_amplitude, theta_amplitude
    v_fn = SmoothFunction(lambda x: 1.0 + a * phi(x), lambda x: a * dphi(x), lambda x: a * d2phi(x))
    theta_fn = SmoothFunction(lambda x: c * phi(x), lambda x: c * dphi(x), lambda x: c * d2phi(x))
    return v_fn, theta_fn


def cosine_pair(v_amplitude: float, theta_amplitude: float, length: float) -> Tuple[SmoothFunction, SmoothFunction]:
    """
    余弦制造解 v = 1 - a (1 - cos(pi x / L)), theta = -c (1 - cos(pi x / L))
    v(L) = 1 - 2a, 两端导数均为 0
    """
    k = np.pi / length
    a, c = v_amplitude, theta_amplitude
    v_fn = SmoothFunction(
        lambda x: 1.0 - a * (1.0 - np.cos(k * x)),
        lambda x: -a * k * np.sin(k * x),
        lambda x: -a * k * k * np.cos(k * x),
    )
    theta_fn = SmoothFunction(
        lambda x: -c * (1.0 - np.cos(k * x)),
        lambda x: -c * k * np.sin(k * x),
        lambda x: -c * k * k * np.cos(k * x),
    )
    return v_fn, theta_fn


MANUFACTURED_FAMILIES = {"cubic": cubic_pair, "cosine": cosine_pair}


@dataclass(frozen=True)
class ManufacturedProfile:
    """
    由制造解 (v_fn, theta_fn) 反推出的 p(x), q(x)

    实现 ProfileLike 接口：光滑、无断点；终端 p(L) 一般不为 0
    """

    v_fn: SmoothFunction
    theta_fn: SmoothFunction
    params: FeederParams
    factor: float = 1.0

    @property
    def length(self) -> float:
        return self.params.length

    def evaluate(self, x, side: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        v, dv, d2v = self.v_fn.value(x), self.v_fn.d1(x), self.v_fn.d2(x)
        dth, d2th = self.theta_fn.d1(x), self.theta_fn.d2(x)
        g, b = self.params.g, self.params.b
        phase_term = 2.0 * v * dv * dth + v * v * d2th
        amplitude_term = v * d2v - v * v * dth * dth
        p = -(b * phase_term + g * amplitude_term)
        q = g * phase_term - b * amplitude_term
        return self.factor * p, self.factor * q

    def breakpoints(self) -> Tuple[float, ...]:
        return ()

    def integrate(self, a: float, b: float) -> Tuple[float, float]:
        from scipy.integrate import simpson

        xs = np.linspace(a, b, 2049)
        p, q = self.evaluate(xs)
        return float(simpson(p, x=xs)), float(simpson(q, x=xs))

    def scaled(self, factor: float) -> "ManufacturedProfile":
        return ManufacturedProfile(self.v_fn, self.theta_fn, self.params, self.factor * factor)

    @property
    def is_smooth(self) -> bool:
        return True

    @property
    def is_zero(self) -> bool:
        return self.factor == 0.0


def manufactured_profile(
    v_fn: SmoothFunction,
    theta_fn: SmoothFunction,
    params: FeederParams,
    tol: float = 1e-10,
) -> ManufacturedProfile:
    """
    由光滑的 (v, theta) 反推 p, q, 使其精确满足子系统方程

    Raises:
        DomainError: v(0) != 1, theta(0) != 0, v'(L) != 0, theta'(L) != 0 或 v 非正
    """
    L = params.length
    checks = [
        ("v(0) = 1", float(v_fn.value(np.asarray(0.0))) - 1.0),
        ("theta(0) = 0", float(theta_fn.value(np.asarray(0.0)))),
        ("v'(L) = 0", float(v_fn.d1(np.asarray(L)))),
        ("theta'(L) = 0", float(theta_fn.d1(np.asarray(L)))),
    ]
    for label, gap in checks:
        if abs(gap) > tol:
            raise DomainError(f"制造解不满足边界兼容条件 {label} (偏差 {gap:.3e})")
    samples = np.linspace(0.0, L, 257)
    if np.min(v_fn.value(samples)) <= 0.0:
        raise DomainError("制造解的电压幅值必须在 [0, L] 上为正")
    return ManufacturedProfile(v_fn=v_fn, theta_fn=theta_fn, params=params)


def manufactured_family(family: str, v_amplitude: float, theta_amplitude: float, params: FeederParams) -> ManufacturedProfile:
    """按名称构造制造解分布 ('cubic' 或 'cosine')"""
    try:
        builder = MANUFACTURED_FAMILIES[family]
    except KeyError:
        raise DomainError(f"未知制造解族: {family} (可用: {', '.join(MANUFACTURED_FAMILIES)})") from None
    v_fn, theta_fn = builder(v_amplitude, theta_amplitude, params.length)
    return manufactured_profile(v_fn, theta_fn, params)


def flat_pair() -> Tuple[SmoothFunction, SmoothFunction]:
    """空载解 v = 1, theta = 0"""
    return _constant(1.0), _constant(0.0)


def exact_grid(profile: ManufacturedProfile, n_intervals: int) -> SolutionGrid:
    """制造解在均匀网格上的精确状态, 用作求解器的参考答案"""
    xs = np.linspace(0.0, profile.length, n_intervals + 1)
    v = profile.v_fn.value(xs)
    dv = profile.v_fn.d1(xs)
    dth = profile.theta_fn.d1(xs)
    return SolutionGrid(xs=xs, theta=profile.theta_fn.value(xs), v=v, s=-v * v * dth, w=dv)


