"""
数值工具: 四阶有限差分、分段复合 Simpson 积分、收敛阶估计
"""

import math
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import simpson


def fd_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """
    四阶精度的一阶导数

    内部节点用五点中心差分, 两端各两个节点用四阶单侧差分；至少需要 5 个节点
    """
    f = np.asarray(values, dtype=float)
    n = len(f)
    if n < 5:
        raise ValueError(f"四阶差分至少需要 5 个节点, 实际 {n}")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    return d


def _stencil_bounds(n_nodes: int) -> np.ndarray:
    """fd_derivative 在每个节点使用的 (起始, 结束) 节点下标"""
    lo = np.arange(n_nodes) - 2
    hi = np.arange(n_nodes) + 2
    lo[:2], hi[:2] = 0, 4
    lo[-2:], hi[-2:] = n_nodes - 5, n_nodes - 1
    return np.stack([lo, hi], axis=1)


def smooth_stencil_mask(xs: np.ndarray, breakpoints: Iterable[float]) -> np.ndarray:
    """
    节点掩码: True 表示该节点的差分模板内部不含断点且节点本身不是断点

    模板端点恰好落在断点上时仍视为光滑 (单侧光滑延拓)
    """
    xs = np.asarray(xs, dtype=float)
    mask = np.ones(len(xs), dtype=bool)
    points = list(breakpoints)
    if not points:
        return mask
    h = float(xs[1] - xs[0])
    tol = 1e-9 * h
    bounds = _stencil_bounds(len(xs))
    x_lo = xs[bounds[:, 0]]
    x_hi = xs[bounds[:, 1]]
    for xb in points:
        inside = (x_lo + tol < xb) & (xb < x_hi - tol)
        on_node = np.abs(xs - xb) <= tol
        mask &= ~(inside | on_node)
    return mask


def aligned_cut_indices(xs: np.ndarray, breakpoints: Iterable[float]) -> List[int]:
    """与网格节点重合的断点下标 (含两端 0 与 N)"""
    xs = np.asarray(xs, dtype=float)
    h = float(xs[1] - xs[0])
    cuts = {0, len(xs) - 1}
    for xb in breakpoints:
        k = int(round((xb - xs[0]) / h))
        if 0 < k < len(xs) - 1 and abs(xs[k] - xb) <= 1e-9 * h:
            cuts.add(k)
    return sorted(cuts)


def piecewise_simpson(
    xs: np.ndarray,
    right_values: np.ndarray,
    left_values: Optional[np.ndarray] = None,
    cuts: Optional[Sequence[int]] = None,
) -> float:
    """
    在断点处切分后的复合 Simpson 积分

    Args:
        xs: 均匀网格
        right_values: 各节点右极限
        left_values: 各节点左极限 (默认与右极限相同, 即连续被积函数)
        cuts: 切分节点下标, 须包含 0 与 N

    Returns:
        积分值
    """
    xs = np.asarray(xs, dtype=float)
    right = np.asarray(right_values, dtype=float)
    left = right if left_values is None else np.asarray(left_values, dtype=float)
    cuts = list(cuts) if cuts is not None else [0, len(xs) - 1]

    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        y = right[a:b + 1].copy()
        y[-1] = left[b]
        total += float(simpson(y, x=xs[a:b + 1]))
    return total


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> List[float]:
    """相邻网格误差之比的对数 log(e_k / e_{k+1}) / log(ratio)；无法定义时为 nan"""
    orders = []
    for coarse, fine in zip(errors[:-1], errors[1:]):
        if coarse > 0.0 and fine > 0.0:
            orders.append(math.log(coarse / fine) / math.log(ratio))
        else:
            orders.append(float("nan"))
    return orders
