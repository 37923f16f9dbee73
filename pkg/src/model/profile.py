"""
Power Profile - 馈线上的有功/无功功率密度分布 p(x), q(x)
由分段常数区段 (segment) 与余弦平方凸包 (bump) 叠加而成

符号约定: 正值表示向馈线注入 (PV 等), 负值表示从馈线消耗 (负荷)
"""

from typing import Iterable, List, Protocol, Tuple, runtime_checkable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


# 边界比较用的相对容差
_EDGE_TOL = 1e-12


@runtime_checkable
class ProfileLike(Protocol):
    """求解器与分析模块所需的功率分布接口"""

    length: float

    def evaluate(self, x, side: int = 1) -> Tuple[np.ndarray, np.ndarray]: ...

    def breakpoints(self) -> Tuple[float, ...]: ...

    def integrate(self, a: float, b: float) -> Tuple[float, float]: ...

    def scaled(self, factor: float) -> "ProfileLike": ...

    @property
    def is_smooth(self) -> bool: ...


class Segment(BaseModel):
    """分段常数功率密度区段 [x_start, x_end)"""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x_start: float = Field(description="区段起点")
    x_end: float = Field(description="区段终点")
    p_density: float = Field(default=0.0, description="有功功率密度 (p.u./length)")
    q_density: float = Field(default=0.0, description="无功功率密度 (p.u./length)")

    @model_validator(mode="after")
    def _check_order(self) -> "Segment":
        if not self.x_end > self.x_start:
            raise ValueError(f"区段终点必须大于起点: [{self.x_start}, {self.x_end}]")
        return self


class Bump(BaseModel):
    """
    余弦平方凸包 amplitude * (1 + cos(pi (x - c) / w)) / 2, |x - c| <= w

    C1 连续、紧支撑；积分等于 amplitude * width
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    center: float = Field(description="凸包中心 c")
    width: float = Field(gt=0, description="凸包半宽 w")
    p_amplitude: float = Field(default=0.0, description="有功峰值密度")
    q_amplitude: float = Field(default=0.0, description="无功峰值密度")

    @property
    def support(self) -> Tuple[float, float]:
        return self.center - self.width, self.center + self.width

    def shape(self, x: np.ndarray) -> np.ndarray:
        u = (x - self.center) / self.width
        inside = np.abs(u) <= 1.0
        return np.where(inside, 0.5 * (1.0 + np.cos(np.pi * np.clip(u, -1.0, 1.0))), 0.0)

    def antiderivative(self, x: float) -> float:
        """∫_{c-w}^{x} shape(t) dt"""
        lo, hi = self.support
        x = min(max(x, lo), hi)
        return 0.5 * (x - lo) + self.width / (2.0 * np.pi) * np.sin(np.pi * (x - self.center) / self.width)


class PowerProfile(BaseModel):
    """
    空间功率密度分布

    evaluate 默认取右极限（区段为左闭右开），因此终端 p(L) = q(L) = 0
    只要所有区段与凸包都位于 [0, L] 内即可自动满足。
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    length: float = Field(gt=0, description="馈线长度 L")
    segments: Tuple[Segment, ...] = Field(default=(), description="按起点排序、互不重叠的区段")
    bumps: Tuple[Bump, ...] = Field(default=(), description="凸包注入项")

    @model_validator(mode="after")
    def _check_layout(self) -> "PowerProfile":
        L = self.length
        tol = _EDGE_TOL * max(1.0, L)
        for i, seg in enumerate(self.segments, start=1):
            if seg.x_start < -tol or seg.x_end > L + tol:
                raise ValueError(f"segment {i} [{seg.x_start}, {seg.x_end}] 超出 [0, {L}]")
        for i in range(1, len(self.segments)):
            prev, cur = self.segments[i - 1], self.segments[i]
            if cur.x_start < prev.x_start:
                raise ValueError(f"segment {i + 1} 未按 x_start 排序")
            if cur.x_start < prev.x_end - tol:
                raise ValueError(
                    f"segment {i} [{prev.x_start}, {prev.x_end}] 与 "
                    f"segment {i + 1} [{cur.x_start}, {cur.x_end}] 重叠"
                )
        for i, bump in enumerate(self.bumps, start=1):
            lo, hi = bump.support
            if lo < -tol or hi > L + tol:
                raise ValueError(f"bump {i} 支撑集 [{lo}, {hi}] 超出 [0, {L}]")
        p_end, q_end = self.evaluate(L)
        if abs(float(p_end)) > _EDGE_TOL or abs(float(q_end)) > _EDGE_TOL:
            raise ValueError("终端无负荷条件 p(L) = q(L) = 0 不满足")
        return self

    # ------------------------------------------------------------------
    # 求值
    # ------------------------------------------------------------------

    def evaluate(self, x, side: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        """
        计算 p(x), q(x)

        Args:
            x: 标量或数组
            side: +1 取右极限 (默认), -1 取左极限；只影响区段端点

        Returns:
            (p, q) 与 x 同形状的数组
        """
        x = np.asarray(x, dtype=float)
        p = np.zeros_like(x)
        q = np.zeros_like(x)
        for seg in self.segments:
            if side >= 0:
                mask = (x >= seg.x_start) & (x < seg.x_end)
            else:
                mask = (x > seg.x_start) & (x <= seg.x_end)
            p = p + np.where(mask, seg.p_density, 0.0)
            q = q + np.where(mask, seg.q_density, 0.0)
        for bump in self.bumps:
            shape = bump.shape(x)
            p = p + bump.p_amplitude * shape
            q = q + bump.q_amplitude * shape
        return p, q

    def breakpoints(self) -> Tuple[float, ...]:
        """(0, L) 内部的非光滑点：区段端点与凸包支撑端点"""
        points = set()
        for seg in self.segments:
            points.update((seg.x_start, seg.x_end))
        for bump in self.bumps:
            points.update(bump.support)
        return tuple(sorted(x for x in points if 0.0 < x < self.length))

    def integrate(self, a: float, b: float) -> Tuple[float, float]:
        """精确计算 ∫_a^b p dx 与 ∫_a^b q dx"""
        P = Q = 0.0
        for seg in self.segments:
            overlap = min(b, seg.x_end) - max(a, seg.x_start)
            if overlap > 0.0:
                P += seg.p_density * overlap
                Q += seg.q_density * overlap
        for bump in self.bumps:
            mass = bump.antiderivative(b) - bump.antiderivative(a)
            P += bump.p_amplitude * mass
            Q += bump.q_amplitude * mass
        return float(P), float(Q)

    @property
    def is_smooth(self) -> bool:
        return not self.segments

    @property
    def is_zero(self) -> bool:
        return all(s.p_density == 0.0 and s.q_density == 0.0 for s in self.segments) and all(
            b.p_amplitude == 0.0 and b.q_amplitude == 0.0 for b in self.bumps
        )

    # ------------------------------------------------------------------
    # 组合
    # ------------------------------------------------------------------

    def scaled(self, factor: float) -> "PowerProfile":
        """负荷延拓用: 所有密度与幅值乘以 factor"""
        return PowerProfile(
            length=self.length,
            segments=tuple(
                s.model_copy(update={"p_density": factor * s.p_density, "q_density": factor * s.q_density})
                for s in self.segments
            ),
            bumps=tuple(
                b.model_copy(update={"p_amplitude": factor * b.p_amplitude, "q_amplitude": factor * b.q_amplitude})
                for b in self.bumps
            ),
        )

    def superpose(self, other: "PowerProfile") -> "PowerProfile":
        """
        两个分布叠加

        区段在所有端点处切分后密度相加，密度为零的小区段被丢弃，
        相邻且密度相同的小区段被合并，结果仍满足互不重叠的不变量。
        """
        if abs(other.length - self.length) > _EDGE_TOL * max(1.0, self.length):
            raise ValueError(f"馈线长度不一致: {self.length} vs {other.length}")

        all_segments = list(self.segments) + list(other.segments)
        cuts = sorted({x for s in all_segments for x in (s.x_start, s.x_end)})

        pieces: List[Segment] = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            covering = [s for s in all_segments if s.x_start <= lo and s.x_end >= hi]
            p = sum(s.p_density for s in covering)
            q = sum(s.q_density for s in covering)
            if p == 0.0 and q == 0.0:
                continue
            if pieces and pieces[-1].x_end == lo and pieces[-1].p_density == p and pieces[-1].q_density == q:
                pieces[-1] = pieces[-1].model_copy(update={"x_end": hi})
            else:
                pieces.append(Segment(x_start=lo, x_end=hi, p_density=p, q_density=q))

        return PowerProfile(length=self.length, segments=tuple(pieces), bumps=self.bumps + other.bumps)


def zero_profile(length: float) -> PowerProfile:
    """空载分布"""
    return PowerProfile(length=length)


def segment_profile(length: float, blocks: Iterable[Tuple[float, float, float, float]]) -> PowerProfile:
    """便捷函数：由 (x_start, x_end, p, q) 元组构造分段分布"""
    return PowerProfile(
        length=length,
        segments=tuple(Segment(x_start=a, x_end=b, p_density=p, q_density=q) for a, b, p, q in blocks),
    )
