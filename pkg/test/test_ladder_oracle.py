"""
梯形网络预言机测试
测试前推回代潮流、功率守恒以及与连续模型的收敛一致性
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.model import FeederParams, manufactured_family, segment_profile, zero_profile  # noqa: E402
from src.analysis import loss_decomposition  # noqa: E402
from src.scenario import preset  # noqa: E402
from src.solver import (  # noqa: E402
    LadderNetwork,
    SolverOptions,
    build_network,
    compare_to_continuum,
    ladder_losses,
    solve_bvp,
    solve_powerflow,
)


UNIT = FeederParams(g=1.0, b=1.0, length=1.0)


def banner(title: str) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def test_zero_injection_is_flat():
    """测试 1: 零注入一次迭代收敛到 V = 1"""
    banner("测试 1: 零注入")
    result = solve_powerflow(build_network(zero_profile(1.0), UNIT, 32))
    assert result.converged
    assert result.iterations == 1
    assert np.all(result.voltages == 1.0 + 0.0j)
    assert ladder_losses(result) == 0j
    print("✅ 所有节点 V = 1∠0")


def test_two_node_closed_form():
    """测试 2: 两节点纯电阻线路 V = (1 + sqrt(1 - 4 r P)) / 2"""
    banner("测试 2: 两节点解析解")
    r, P = 0.1, 1.0
    network = LadderNetwork(h=1.0, z_segment=complex(r, 0.0), injections=np.array([0.0, -P]))
    result = solve_powerflow(network)
    expected = (1.0 + np.sqrt(1.0 - 4.0 * r * P)) / 2.0
    assert result.converged
    assert result.magnitudes[1] == pytest.approx(expected, abs=1e-12)
    assert abs(result.angles[1]) <= 1e-12
    print(f"✅ V_1 = {result.magnitudes[1]:.12f}")

    with pytest.raises(ValueError):
        LadderNetwork(h=1.0, z_segment=complex(0.0, 0.1), injections=np.array([0.0, -P]))


def test_injections_integrate_profile():
    """测试 3: 常数密度 p = -0.1 的节点注入之和为 -0.1"""
    banner("测试 3: 集总注入")
    network = build_network(segment_profile(1.0, [(0.0, 1.0, -0.1, 0.0)]), UNIT, 64)
    assert network.n_segments == 64
    assert float(np.sum(network.injections.real)) == pytest.approx(-0.1, abs=1e-15)
    assert network.injections[0].real == pytest.approx(-0.1 / 128, abs=1e-18)
    assert network.resistance == pytest.approx(UNIT.resistance)
    with pytest.raises(ValueError):
        build_network(zero_profile(1.0), UNIT, 8)
    print("✅ Σ Re S = -0.1, 端点只分得半个单元")


def test_consumption_monotone_and_balanced():
    """测试 4: 纯消耗时 |V| 单调下降, 平衡节点功率 = 负荷 + 损耗"""
    banner("测试 4: 单调性与功率守恒")
    network = build_network(preset("conventional").profile, UNIT, 256)
    result = solve_powerflow(network)
    assert result.converged
    assert np.all(np.diff(result.magnitudes) <= 1e-15)
    assert result.losses.real > 0.0
    assert result.balance_residual <= 1e-10
    loads = complex(np.sum(network.injections[1:]))
    assert result.slack_power == pytest.approx(-loads + result.losses, abs=1e-10)
    print(f"✅ 有功损耗 {result.losses.real:.6e}, 守恒残差 {result.balance_residual:.2e}")


def test_nonconvergence_is_reported():
    """测试 5: 迭代上限不足时 converged = False, 不抛异常"""
    banner("测试 5: 未收敛标记")
    network = build_network(preset("conventional").profile, UNIT, 64)
    result = solve_powerflow(network, max_iters=1)
    assert not result.converged
    assert result.iterations == 1
    print("✅ converged = False")


def test_voltage_error_decreases():
    """测试 6: 网格加密时梯形网络与 ODE 解的电压差单调下降, 观测阶 >= 0.9"""
    banner("测试 6: 电压误差收敛")
    profile = preset("conventional").profile
    errors = []
    for n in (64, 128, 256):
        grid, _ = solve_bvp(profile, UNIT, SolverOptions(n_intervals=n, newton_tol=1e-12))
        network = build_network(profile, UNIT, n)
        comparison = compare_to_continuum(grid, network, solve_powerflow(network), UNIT)
        errors.append(comparison.v_err)
    orders = [np.log2(a / b) for a, b in zip(errors[:-1], errors[1:])]
    print(f"📊 v_err = {errors}, 阶 = {orders}")
    assert errors[0] > errors[1] > errors[2]
    assert min(orders) >= 0.9


def test_loss_agreement_manufactured():
    """测试 7: 光滑制造解的有功损耗相对误差 <= 1e-2"""
    banner("测试 7: 损耗一致性")
    profile = manufactured_family("cosine", 0.1, 0.05, UNIT)
    n = 1024
    grid, _ = solve_bvp(profile, UNIT, SolverOptions(n_intervals=n, newton_tol=1e-12))
    network = build_network(profile, UNIT, n)
    comparison = compare_to_continuum(grid, network, solve_powerflow(network), UNIT)
    print(f"📊 梯形网络 {comparison.ladder_active_loss:.8e}, 连续 {comparison.continuum_active_loss:.8e}, "
          f"相对误差 {comparison.loss_err:.2e}")
    assert comparison.loss_err <= 1e-2

    with pytest.raises(ValueError):
        compare_to_continuum(grid, build_network(profile, UNIT, 64), solve_powerflow(build_network(profile, UNIT, 64)), UNIT)


def test_single_load_voltage_error_order():
    """测试 8: 单负荷区段在 N = 512..4096 上电压差观测阶 >= 0.9"""
    banner("测试 8: 单负荷收敛阶")
    profile = segment_profile(1.0, [(0.4, 0.6, -0.1, 0.0)])
    errors = []
    for n in (512, 1024, 2048, 4096):
        grid, _ = solve_bvp(profile, UNIT, SolverOptions(n_intervals=n, newton_tol=1e-12))
        network = build_network(profile, UNIT, n)
        comparison = compare_to_continuum(grid, network, solve_powerflow(network), UNIT)
        errors.append(comparison.v_err)
    orders = [np.log2(a / b) for a, b in zip(errors[:-1], errors[1:])]
    print(f"📊 v_err = {errors}, 阶 = {orders}")
    assert all(a > b for a, b in zip(errors[:-1], errors[1:]))
    assert min(orders) >= 0.9


def test_loss_integral_splits_at_breakpoints():
    """测试 9: 连续模型损耗积分使用分布断点"""
    banner("测试 9: 损耗积分断点")
    profile = segment_profile(1.0, [(0.3, 0.7, -0.2, -0.1)])
    n = 64
    grid, _ = solve_bvp(profile, UNIT, SolverOptions(n_intervals=n, newton_tol=1e-12))
    network = build_network(profile, UNIT, n)
    assert network.breakpoints == (0.3, 0.7)
    comparison = compare_to_continuum(grid, network, solve_powerflow(network), UNIT)
    split = loss_decomposition(grid, UNIT, profile.breakpoints()).active
    assert comparison.continuum_active_loss == split
    assert build_network(zero_profile(1.0), UNIT, 32).breakpoints == ()
    print(f"✅ g∫Δ = {split:.8e}")


def run_all_tests():
    """运行所有测试"""
    print("\n" + "🧪" * 30)
    print("梯形网络预言机测试套件")
    print("🧪" * 30)

    tests = [
        ("零注入", test_zero_injection_is_flat),
        ("两节点解析解", test_two_node_closed_form),
        ("集总注入", test_injections_integrate_profile),
        ("单调性与功率守恒", test_consumption_monotone_and_balanced),
        ("未收敛标记", test_nonconvergence_is_reported),
        ("电压误差收敛", test_voltage_error_decreases),
        ("损耗一致性", test_loss_agreement_manufactured),
        ("单负荷收敛阶", test_single_load_voltage_error_order),
        ("损耗积分断点", test_loss_integral_splits_at_breakpoints),
    ]
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
