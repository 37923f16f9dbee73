"""
命令行测试
测试 argparse 前端、stdout/stderr 分离与退出码
"""

import io
import sys
import tempfile
from pathlib import Path

# 添加项目根目录到路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.cli import FeederCLI, main  # noqa: E402
from src.tools.report_io import parse_report  # noqa: E402


def banner(title: str) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def run(*argv):
    stdout, stderr = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=stdout, stderr=stderr)
    return code, stdout.getvalue(), stderr.getvalue()


def test_dispatcher_tools():
    """测试 1: 分发器注册了五个工具"""
    banner("测试 1: 分发器")
    cli = FeederCLI()
    assert cli.get_available_tools() == ["solve_tool", "verify_tool", "compare_tool", "losses_tool", "sweep_tool"]
    unknown = cli.run("plot", scenario="no_load")
    assert not unknown["success"] and unknown["exit_code"] == 1
    print(f"✅ {cli.get_available_tools()}")


def test_solve_command():
    """测试 2: solve 在 stdout 输出报告, 进度只写 stderr"""
    banner("测试 2: solve")
    with tempfile.TemporaryDirectory() as out:
        code, stdout, stderr = run("solve", "conventional", "--grid", "128", "--out", out, "--verbose")
        assert code == 0
        record = parse_report(stdout)
        assert record["phenomena"] == "VoltageDrop,PhaseDelay"
        assert Path(record["csv_path"]).is_file()
        assert "🔧" in stderr and "🔧" not in stdout
    print(f"✅ phenomena={record['phenomena']}")


def test_verify_command():
    """测试 3: verify 通过与扰动失败"""
    banner("测试 3: verify")
    code, stdout, _ = run("verify", "manufactured", "--grid", "64", "--refine", "2")
    assert code == 0
    assert "status=pass" in stdout
    assert stdout.splitlines()[0].startswith("grid,d09,d10,e05,e06")

    code, stdout, stderr = run("verify", "manufactured", "--grid", "64", "--refine", "2", "--perturb", "1e-3")
    assert code == 4
    failing = parse_report(stdout)["failing"].split(",")
    assert "e05" in failing
    assert "VerificationFailed" in stderr
    print(f"✅ failing={failing}")


def test_compare_and_losses_commands():
    """测试 4: compare 与 losses"""
    banner("测试 4: compare / losses")
    code, stdout, _ = run("compare", "manufactured", "--grid", "64", "--levels", "2")
    assert code == 0
    assert "v_err_orders=" in stdout

    code, stdout, _ = run("losses", "conventional", "--grid", "128")
    assert code == 0
    assert float(parse_report(stdout)["loss_delta"]) == 0.0
    print("✅ compare / losses 正常退出")


def test_sweep_command():
    """测试 5: sweep 解析 --param 并写出 CSV"""
    banner("测试 5: sweep")
    with tempfile.TemporaryDirectory() as out:
        target = Path(out) / "b.csv"
        code, stdout, _ = run("sweep", "conventional", "--param", "b=-0.5,1.0", "--out", str(target))
        assert code == 0
        assert target.is_file()
        assert f"csv_path={target}" in stdout
    code, _, _ = run("sweep", "conventional", "--param", "b")
    assert code == 1
    print("✅ sweep 写出 CSV")


def test_exit_codes():
    """测试 6: 用法错误与场景错误的退出码"""
    banner("测试 6: 退出码")
    code, stdout, stderr = run("plot", "conventional")
    assert code == 1
    assert stdout == ""
    assert "usage: feederflow" in stderr
    code, _, stderr = run("solve")
    assert code == 1
    assert "scenario" in stderr
    code, stdout, _ = run("--help")
    assert code == 0
    assert "feederflow" in stdout
    code, stdout, stderr = run("solve", "rural")
    assert code == 1
    assert stdout == ""
    assert "UnknownPreset" in stderr
    with tempfile.TemporaryDirectory() as out:
        path = Path(out) / "broken.cfg"
        path.write_text("[feeder]\ng = 1\nb = 1\nlength = 1\n\n[loads]\nsegment = 0.5, 0.4, -0.1, 0\n",
                        encoding="utf-8")
        code, _, stderr = run("solve", str(path), "--out", out)
        assert code == 1
        assert "第 7 行" in stderr

        path.write_text("[feeder]\ng = 1\nb = nan\nlength = 1\n", encoding="utf-8")
        code, stdout, stderr = run("solve", str(path), "--out", out)
        assert code == 1
        assert stdout == ""
        assert "第 3 行" in stderr
    print("✅ 退出码 1")


def run_all_tests():
    """运行所有测试"""
    print("\n" + "🧪" * 30)
    print("命令行测试套件")
    print("🧪" * 30)

    tests = [
        ("分发器", test_dispatcher_tools),
        ("solve", test_solve_command),
        ("verify", test_verify_command),
        ("compare / losses", test_compare_and_losses_commands),
        ("sweep", test_sweep_command),
        ("退出码", test_exit_codes),
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


def main_tests():
    """主函数"""
    success = run_all_tests()
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main_tests()
