"""
馈线模型测试
测试 ODE 右端、子系统残差、供给率、制造解与功率分布
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

# 添加项目根目录到路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.model import (  # noqa: E402
    Bump,
    DomainError,
    FeederParams,
    PowerProfile,
    Segment,
    SmoothFunction,
    State,
    VoltageCollapse,
    combined_residual,
    cosine_pair,
    cubic_pair,
    flat_pair,
    inverse_supply_rates,
    manufactured_family,
    manufactured_profile,
    rhs,
    segment_profile,
    subsystem_residuals,
    supply_rates,
    zero_profile,
)


UNIT = FeederParams(g=1.0, b=1.0, length=1.0)

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=0.05, max_value=10.0, allow_nan=False, allow_infinity=False)


def banner(title: str) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def test_rhs_flat_equilibrium():
    """测试 1: 空载平衡点右端为零"""
    banner("测试 1: 空载平衡点右端为零")
    for params in (UNIT, FeederParams(g=2.0, b=-0.5, length=3.0)):
        assert rhs(State(0.0, 1.0, 0.0, 0.0), 0.0, 0.0, params) == (0.0, 0.0, 0.0, 0.0)
    print("✅ (0, 1, 0, 0) -> (0, 0, 0, 0)")


def test_rhs_unit_supply():
    """测试 2: p = 1, q = 0, g = b = 1 的直接代入"""
    banner("测试 2: 右端直接代入")
    d = rhs(State(0.0, 1.0, 0.0, 0.0), 1.0, 0.0, UNIT)
    assert d.theta == 0.0
    assert d.v == 0.0
    assert d.s == pytest.approx(0.5, abs=1e-15)
    assert d.w == pytest.approx(-0.5, abs=1e-15)
    print(f"✅ 右端 = {tuple(d)}")


def test_rhs_voltage_collapse():
    """测试 3: v 低于 v_min 抛出 VoltageCollapse"""
    banner("测试 3: 电压崩溃保护")
    with pytest.raises(VoltageCollapse) as info:
        rhs(State(0.0, 0.5e-7, 0.0, 0.0), 0.0, 0.0, UNIT)
    assert info.value.exit_code == 3
    with pytest.raises(VoltageCollapse) as located:
        rhs(State(0.0, 0.5e-7, 0.0, 0.0), 0.0, 0.0, UNIT, x=0.375)
    assert located.value.x == 0.375
    assert "x=0.375" in str(located.value)
    print(f"✅ {info.value}")


def test_subsystem_residuals_flat():
    """测试 4: 平坦解只剩 p, q 项"""
    banner("测试 4: 子系统残差")
    assert subsystem_residuals(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, UNIT) == (0.0, 0.0)
    res_a, res_r = subsystem_residuals(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, -0.2, UNIT)
    assert res_a == pytest.approx(0.3)
    assert res_r == pytest.approx(-0.2)
    print("✅ 平坦解残差 = (p, q)")


@pytest.mark.parametrize("builder", [cosine_pair, cubic_pair])
def test_manufactured_pair_solves_subsystems(builder):
    """测试 5: 制造解精确满足两个子系统方程"""
    banner(f"测试 5: 制造解残差 ({builder.__name__})")
    params = FeederParams(g=1.3, b=0.7, length=2.0)
    v_fn, theta_fn = builder(0.1, 0.05, params.length)
    profile = manufactured_profile(v_fn, theta_fn, params)
    xs = np.linspace(0.0, params.length, 41)
    p, q = profile.evaluate(xs)
    res_a, res_r = subsystem_residuals(
        v_fn.value(xs), v_fn.d1(xs), v_fn.d2(xs),
        theta_fn.value(xs), theta_fn.d1(xs), theta_fn.d2(xs),
        p, q, params,
    )
    assert np.max(np.abs(res_a)) < 1e-13
    assert np.max(np.abs(res_r)) < 1e-13
    print("✅ 残差处于舍入误差水平")


def test_supply_rates_examples():
    """测试 6: 供给率示例"""
    banner("测试 6: 供给率")
    assert supply_rates(0.0, 0.0, UNIT) == (0.0, 0.0)
    assert supply_rates(1.0, 1.0, UNIT) == pytest.approx((1.0, 0.0))
    assert supply_rates(2.0, 3.0, FeederParams(g=1.0, b=0.0, length=1.0)) == pytest.approx((2.0, 3.0))
    print("✅ (0,0) / (1,0) / (2,3)")


@settings(max_examples=200, deadline=None)
@given(p=finite, q=finite, g=positive, b=finite)
def test_supply_rates_orthogonality(p, q, g, b):
    """测试 7: 供给率映射可逆 (正交分解)"""
    params = FeederParams(g=g, b=b, length=1.0)
    sigma_v, sigma_p = supply_rates(p, q, params)
    p_back, q_back = inverse_supply_rates(sigma_v, sigma_p, params)
    assert p_back == pytest.approx(p, abs=1e-9)
    assert q_back == pytest.approx(q, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(v=positive, dv=finite, d2v=finite, dth=finite, d2th=finite, p=finite, q=finite, g=positive, b=finite)
def test_combined_residual_is_complex_power_form(v, dv, d2v, dth, d2th, p, q, g, b):
    """测试 8: 复功率形式 (p + jq) + (b - jg) A + (g + jb) B"""
    params = FeederParams(g=g, b=b, length=1.0)
    A = 2.0 * v * dv * dth + v * v * d2th
    B = v * d2v - v * v * dth * dth
    expected = complex(p, q) + complex(b, -g) * A + complex(g, b) * B
    got = combined_residual(v, dv, d2v, 0.0, dth, d2th, p, q, params)
    assert abs(got - expected) <= 1e-9 * (1.0 + abs(expected))


def test_feeder_params_derived_constants():
    """测试 9: R, X 与 g, b 的关系 (R + jX)(g - jb) = 1"""
    banner("测试 9: 线路常数")
    params = FeederParams(g=0.8, b=-1.7, length=1.0)
    assert params.impedance * complex(params.g, -params.b) == pytest.approx(1.0 + 0.0j)
    assert params.resistance > 0
    with pytest.raises(ValidationError):
        FeederParams(g=0.0, b=1.0, length=1.0)
    with pytest.raises(ValidationError):
        FeederParams(g=1.0, b=1.0, length=-1.0)
    with pytest.raises(ValidationError):
        FeederParams(g=1.0, b=float("nan"), length=1.0)
    with pytest.raises(ValidationError):
        Segment(x_start=0.25, x_end=0.5, p_density=float("inf"), q_density=0.0)
    print(f"✅ R = {params.resistance:.6f}, X = {params.reactance:.6f}")


def test_manufactured_profile_rejects_bad_boundary():
    """测试 10: v(0) != 1 的制造解被拒绝"""
    banner("测试 10: 制造解边界兼容性")
    v_fn, theta_fn = cosine_pair(0.1, 0.0, 1.0)
    shifted = SmoothFunction(lambda x: v_fn.value(x) + 0.1, v_fn.d1, v_fn.d2)
    with pytest.raises(DomainError):
        manufactured_profile(shifted, theta_fn, UNIT)
    with pytest.raises(DomainError):
        manufactured_family("quartic", 0.1, 0.1, UNIT)

    flat = manufactured_profile(*flat_pair(), UNIT)
    p, q = flat.evaluate(np.linspace(0.0, 1.0, 11))
    assert np.all(p == 0.0) and np.all(q == 0.0)
    print("✅ v(0) = 1.1 -> DomainError, 平坦解 -> p = q = 0")


def test_profile_rejects_overlap():
    """测试 11: 重叠区段的错误信息点名两个区段"""
    banner("测试 11: 区段重叠")
    with pytest.raises(ValidationError) as info:
        segment_profile(1.0, [(0.1, 0.5, -0.1, 0.0), (0.4, 0.6, -0.1, 0.0)])
    message = str(info.value)
    assert "segment 1" in message and "segment 2" in message
    with pytest.raises(ValidationError):
        Segment(x_start=0.5, x_end=0.5)
    with pytest.raises(ValidationError):
        PowerProfile(length=1.0, bumps=(Bump(center=0.95, width=0.1, p_amplitude=1.0),))
    print("✅ 重叠 / 空区段 / 超界凸包均被拒绝")


def test_profile_evaluation_and_integrals():
    """测试 12: 单侧极限、断点与精确积分"""
    banner("测试 12: 分布求值")
    profile = PowerProfile(
        length=1.0,
        segments=(Segment(x_start=0.25, x_end=0.75, p_density=-0.2, q_density=-0.1),),
        bumps=(Bump(center=0.5, width=0.25, p_amplitude=1.2),),
    )
    p_right, _ = profile.evaluate(0.25, side=1)
    p_left, _ = profile.evaluate(0.25, side=-1)
    assert float(p_right) == pytest.approx(-0.2)
    assert float(p_left) == 0.0
    assert profile.breakpoints() == (0.25, 0.75)
    P, Q = profile.integrate(0.0, 1.0)
    assert P == pytest.approx(-0.1 + 0.3, abs=1e-14)
    assert Q == pytest.approx(-0.05, abs=1e-14)
    p_end, q_end = profile.evaluate(1.0)
    assert float(p_end) == 0.0 and float(q_end) == 0.0
    assert not profile.is_smooth
    print(f"✅ ∫p = {P:.6f}, ∫q = {Q:.6f}")


def test_profile_superpose_cancels():
    """测试 13: 叠加相反分布得到零分布"""
    banner("测试 13: 分布叠加")
    base = segment_profile(1.0, [(0.4, 0.6, -0.1, 0.0)])
    cancel = segment_profile(1.0, [(0.4, 0.6, 0.1, 0.0)])
    assert base.superpose(cancel).is_zero
    assert base.superpose(cancel).segments == ()

    other = segment_profile(1.0, [(0.5, 0.8, -0.3, 0.2)])
    merged = base.superpose(other)
    assert merged.integrate(0.0, 1.0) == pytest.approx((-0.02 - 0.09, 0.06))
    assert zero_profile(2.0).scaled(3.0).is_zero
    print(f"✅ 叠加后 {len(merged.segments)} 个区段")


def run_all_tests():
    """运行所有测试"""
    print("\n" + "🧪" * 30)
    print("馈线模型测试套件")
    print("🧪" * 30)

    tests = [
        ("右端平衡点", test_rhs_flat_equilibrium),
        ("右端代入", test_rhs_unit_supply),
        ("电压崩溃", test_rhs_voltage_collapse),
        ("子系统残差", test_subsystem_residuals_flat),
        ("制造解 (cosine)", lambda: test_manufactured_pair_solves_subsystems(cosine_pair)),
        ("制造解 (cubic)", lambda: test_manufactured_pair_solves_subsystems(cubic_pair)),
        ("供给率", test_supply_rates_examples),
        ("供给率正交性", test_supply_rates_orthogonality),
        ("复功率形式", test_combined_residual_is_complex_power_form),
        ("线路常数", test_feeder_params_derived_constants),
        ("制造解边界", test_manufactured_profile_rejects_bad_boundary),
        ("区段重叠", test_profile_rejects_overlap),
        ("分布求值", test_profile_evaluation_and_integrals),
        ("分布叠加", test_profile_superpose_cancels),
    ]
    return report_results(tests)


def report_results(tests):
    results = []
    for name, test in tests:
        try:
            test()
            results.append((name, True))
        except Exception as e:
            print(f"❌ {name} 失败: {e}")
            results.append((name, False))

    print("\n" + "=" * 60)
    print("测试总结")
    print("=" * 60)
    passed = sum(1 for _, ok in results if ok)
    for name, ok in results:
        print(f"{'✅ 通过' if ok else '❌ 失败'} - {name}")
    print(f"\n总计: {passed}/{len(results)} 测试通过")
    return passed == len(results)


def main():
    """主函数"""
    success = run_all_tests()
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
