"""
命令工具测试
测试 solve / verify / compare / losses / sweep 五个工具的输出与退出码
"""

import csv
import sys
import tempfile
from pathlib import Path

# 添加项目根目录到路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.tools import CompareTool, LossesTool, SolveTool, SweepTool, VerifyTool  # noqa: E402
from src.tools.report_io import parse_report  # noqa: E402


PV_ONLY = """
[feeder]
name = pv_only
g = 1.0
b = 1.0
length = 1.0

[loads]
bump = 0.5, 0.25, 1.2, 0.0
"""


def banner(title: str) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def test_tool_metadata():
    """测试 1: 工具名称与描述"""
    banner("测试 1: 工具元数据")
    names = [tool.name for tool in (SolveTool(), VerifyTool(), CompareTool(), LossesTool(), SweepTool())]
    assert names == ["solve_tool", "verify_tool", "compare_tool", "losses_tool", "sweep_tool"]
    assert "CSV" in SolveTool().description
    print(f"✅ 工具: {names}")


def test_solve_no_load():
    """测试 2: 空载解 v = 1, Delta = 0, 无现象"""
    banner("测试 2: solve no_load")
    with tempfile.TemporaryDirectory() as out:
        result = SolveTool()._run("no_load", grid=64, out_dir=out)
        assert result["success"], result.get("error")
        assert result["exit_code"] == 0
        rows = read_csv(result["csv_path"])
        assert len(rows) == 65
        assert list(rows[0]) == ["x", "theta", "v", "s", "w", "p", "q", "psi_b", "psi_g", "delta"]
        assert all(float(row["v"]) == 1.0 and float(row["delta"]) == 0.0 for row in rows)
        record = parse_report(Path(result["report_path"]).read_text(encoding="utf-8"))
        assert record["phenomena"] == "none"
        assert record["converged"] == "true"
        assert float(record["total_loss"]) == 0.0
        print("✅ 65 个节点全部 v = 1")


def test_solve_phenomena():
    """测试 3: conventional 与 pv_ev 的现象标签"""
    banner("测试 3: solve 现象")
    with tempfile.TemporaryDirectory() as out:
        conventional = SolveTool()._run("conventional", out_dir=out)["record"]
        pv_ev = SolveTool()._run("pv_ev", out_dir=out)["record"]
    assert "VoltageDrop" in conventional["phenomena"] and "PhaseDelay" in conventional["phenomena"]
    assert "ReverseFlow" in pv_ev["phenomena"]
    assert float(pv_ev["v_gradient_0"]) > 0.0
    print(f"✅ conventional: {conventional['phenomena']}, pv_ev: {pv_ev['phenomena']}")


def test_solve_is_byte_identical():
    """测试 4: 相同输入两次运行输出逐字节相同"""
    banner("测试 4: 确定性输出")
    with tempfile.TemporaryDirectory() as out:
        first = SolveTool()._run("conventional", grid=128, out_dir=out)
        csv_bytes = Path(first["csv_path"]).read_bytes()
        report_bytes = Path(first["report_path"]).read_bytes()
        second = SolveTool()._run("conventional", grid=128, out_dir=out)
        assert Path(second["csv_path"]).read_bytes() == csv_bytes
        assert Path(second["report_path"]).read_bytes() == report_bytes
        assert b"\r\n" not in csv_bytes
        assert Path(first["csv_path"]).name == "conventional_N128.csv"
    print("✅ CSV 与报告逐字节相同")


def test_solve_reports_failures():
    """测试 5: 未知预设与电压崩溃的退出码"""
    banner("测试 5: solve 失败")
    missing = SolveTool()._run("rural")
    assert not missing["success"]
    assert missing["exit_code"] == 1
    assert missing["error_type"] == "UnknownPreset"

    with tempfile.TemporaryDirectory() as out:
        path = Path(out) / "overload.cfg"
        path.write_text(
            "[feeder]\ng = 1\nb = 1\nlength = 1\n\n[loads]\nsegment = 0.25, 0.75, -50, 0\n", encoding="utf-8"
        )
        overloaded = SolveTool()._run(str(path), out_dir=out)
    assert not overloaded["success"]
    assert overloaded["exit_code"] in (2, 3)
    print(f"✅ {missing['error_type']} / {overloaded['error_type']}")


def test_verify_manufactured_passes():
    """测试 6: 光滑制造解通过全部检查, 收敛阶充分"""
    banner("测试 6: verify manufactured")
    result = VerifyTool()._run("manufactured", grid=64, refine=3)
    assert result["success"], result.get("error")
    assert result["failing"] == []
    assert [row["grid"] for row in result["table"]] == ["64", "128", "256"]
    assert float(result["table"][-1]["e05"]) <= 1e-6
    print(f"✅ order_e05 = {result['orders']['e05']}")


def test_verify_no_load_is_exact():
    """测试 7: 空载所有残差为零"""
    banner("测试 7: verify no_load")
    result = VerifyTool()._run("no_load", grid=32, refine=2)
    assert result["success"]
    assert all(float(value) == 0.0 for row in result["table"] for key, value in row.items() if key != "grid")
    print("✅ 所有残差为 0")


def test_verify_detects_perturbation():
    """测试 8: 扰动 w 后 e05 失败, 退出码 4"""
    banner("测试 8: verify --perturb")
    result = VerifyTool()._run("manufactured", grid=64, refine=2, perturb=1e-3)
    assert not result["success"]
    assert result["exit_code"] == 4
    assert "e05" in result["failing"]
    assert "e06" not in result["failing"]
    print(f"✅ failing = {result['failing']}")


def test_compare_manufactured():
    """测试 9: 梯形网络与连续模型一致"""
    banner("测试 9: compare")
    result = CompareTool()._run("manufactured", grid=64, levels=3)
    assert result["success"], result.get("error")
    v_errs = [float(row["v_err"]) for row in result["table"]]
    assert v_errs[0] > v_errs[1] > v_errs[2]
    assert float(result["table"][-1]["loss_err"]) <= 1e-2
    assert len(result["v_err_orders"]) == 2

    strict = CompareTool()._run("manufactured", grid=64, levels=2, tol=1e-12)
    assert strict["exit_code"] == 5
    assert "loss_err 不参与单调性检查" in CompareTool().description
    print(f"✅ v_err = {v_errs}")


def test_losses_injection():
    """测试 10: 零注入 loss_delta = 0, 光伏注入恒等式间隙 <= 1e-6"""
    banner("测试 10: losses")
    zero = LossesTool()._run("conventional", grid=128)
    assert zero["success"], zero.get("error")
    assert float(zero["record"]["loss_delta"]) == 0.0

    with tempfile.TemporaryDirectory() as out:
        path = Path(out) / "pv_only.cfg"
        path.write_text(PV_ONLY, encoding="utf-8")
        injected = LossesTool()._run("conventional", inject=str(path))
    record = injected["record"]
    assert injected["success"], injected.get("error")
    assert float(record["base_identity_gap"]) <= 1e-6
    assert float(record["injected_identity_gap"]) <= 1e-6
    assert float(record["loss_delta"]) == float(record["injected_total_loss"]) - float(record["base_total_loss"])

    rejected = LossesTool()._run("manufactured")
    assert rejected["exit_code"] == 1
    print(f"✅ loss_delta = {record['loss_delta']}")


def test_sweep_susceptance():
    """测试 11: 扫描 b, b < 0 时无功损耗为负"""
    banner("测试 11: sweep b")
    with tempfile.TemporaryDirectory() as out:
        target = Path(out) / "sweep_b.csv"
        result = SweepTool()._run("conventional", param="b", values=[-0.5, 0.0, 0.5, 1.0], out=str(target))
        assert result["success"], result.get("error")
        rows = read_csv(target)
    assert [row["status"] for row in rows] == ["ok"] * 4
    assert [row["reactive_loss_sign"] for row in rows] == ["negative", "zero", "positive", "positive"]
    assert all(row["param"] == "feeder.b" for row in rows)
    print(f"✅ {[(row['value'], row['reactive_loss_sign']) for row in rows]}")


def test_sweep_single_value_matches_solve():
    """测试 12: 单点扫描与直接求解的结果一致"""
    banner("测试 12: 单点扫描")
    with tempfile.TemporaryDirectory() as out:
        record = SolveTool()._run("conventional", out_dir=out)["record"]
        sweep = SweepTool()._run("conventional", param="feeder.b", values=[1.0], out=str(Path(out) / "one.csv"))
    row = sweep["rows"][0]
    for key in ("v_terminal", "v_gradient_0", "theta_gradient_0", "total_loss", "phenomena"):
        assert row[key] == record[key], key
    print("✅ 逐字段一致")


def test_sweep_flags_failures_and_parallel_order():
    """测试 13: 崩溃点被标记, 并行结果顺序与串行一致"""
    banner("测试 13: 扫描失败点与并行")
    values = [-0.2, -50.0, -0.4]
    with tempfile.TemporaryDirectory() as out:
        serial = SweepTool()._run("conventional", param="segment.2.p_density", values=values,
                                  out=str(Path(out) / "serial.csv"))
        parallel = SweepTool()._run("conventional", param="segment.2.p_density", values=values, jobs=2,
                                    out=str(Path(out) / "parallel.csv"))
        serial_bytes = (Path(out) / "serial.csv").read_bytes()
        parallel_bytes = (Path(out) / "parallel.csv").read_bytes()
    statuses = [row["status"] for row in serial["rows"]]
    assert statuses[0] == "ok" and statuses[2] == "ok"
    assert statuses[1] in ("NotConverged", "VoltageCollapse")
    assert serial["exit_code"] == 0
    assert serial_bytes == parallel_bytes

    invalid = SweepTool()._run("conventional", param="segment.9.p_density", values=[0.1])
    assert not invalid["success"] and invalid["exit_code"] == 1
    print(f"✅ 状态: {statuses}")


def run_all_tests():
    """运行所有测试"""
    print("\n" + "🧪" * 30)
    print("命令工具测试套件")
    print("🧪" * 30)

    tests = [
        ("工具元数据", test_tool_metadata),
        ("solve no_load", test_solve_no_load),
        ("solve 现象", test_solve_phenomena),
        ("确定性输出", test_solve_is_byte_identical),
        ("solve 失败", test_solve_reports_failures),
        ("verify manufactured", test_verify_manufactured_passes),
        ("verify no_load", test_verify_no_load_is_exact),
        ("verify --perturb", test_verify_detects_perturbation),
        ("compare", test_compare_manufactured),
        ("losses", test_losses_injection),
        ("sweep b", test_sweep_susceptance),
        ("单点扫描", test_sweep_single_value_matches_solve),
        ("扫描失败点与并行", test_sweep_flags_failures_and_parallel_order),
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
