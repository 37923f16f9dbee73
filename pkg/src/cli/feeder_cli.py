"""
FeederFlow CLI - 命令分发器与 argparse 前端

    feederflow solve   SCENARIO [--grid N] [--out DIR]
    feederflow verify  SCENARIO [--grid N] [--refine K] [--tol T] [--perturb EPS]
    feederflow compare SCENARIO [--grid N] [--levels K] [--tol T]
    feederflow losses  SCENARIO [--inject SCENARIO] [--grid N]
    feederflow sweep   SCENARIO --param PATH=v1,v2,... [--jobs J] [--out FILE]

报告写到 stdout, 进度与错误写到 stderr；进程退出码取自工具结果的 exit_code。
"""

import argparse
import sys
from contextlib import redirect_stderr, redirect_stdout
from typing import Any, Dict, List, Optional, Sequence, TextIO

from langchain.tools import BaseTool

from ..tools import CompareTool, LossesTool, SolveTool, SweepTool, VerifyTool
from ..tools.report_io import csv_text, report_text


# 子命令名 -> 工具名
COMMANDS = {
    "solve": "solve_tool",
    "verify": "verify_tool",
    "compare": "compare_tool",
    "losses": "losses_tool",
    "sweep": "sweep_tool",
}


class FeederCLI:
    """
    命令分发器

    每个子命令对应一个 BaseTool, 通过工具名调度；
    工具也可以单独交给任何支持 LangChain 工具的框架使用
    """

    def __init__(self, tools: Optional[List[BaseTool]] = None, verbose: bool = False):
        self.tools = tools if tools is not None else default_tools()
        self.verbose = verbose
        self.tool_map = {tool.name: tool for tool in self.tools}

    def add_tool(self, tool: BaseTool) -> None:
        """添加工具"""
        self.tools.append(tool)
        self.tool_map[tool.name] = tool

    def get_available_tools(self) -> List[str]:
        """获取可用工具列表"""
        return [tool.name for tool in self.tools]

    def run(self, command: str, **kwargs: Any) -> Dict[str, Any]:
        """按子命令执行对应工具"""
        tool_name = COMMANDS.get(command, command)
        if tool_name not in self.tool_map:
            return {
                "success": False,
                "error": f"未知命令: {command} (可用: {', '.join(COMMANDS)})",
                "exit_code": 1,
            }
        kwargs.setdefault("verbose", self.verbose)
        return self.tool_map[tool_name]._run(**kwargs)


def default_tools() -> List[BaseTool]:
    return [SolveTool(), VerifyTool(), CompareTool(), LossesTool(), SweepTool()]


# ----------------------------------------------------------------------
# 输出
# ----------------------------------------------------------------------

def _table_text(rows: Sequence[Dict[str, str]]) -> str:
    if not rows:
        return ""
    header = list(rows[0])
    return csv_text(header, ([row[key] for key in header] for row in rows))


def render(command: str, result: Dict[str, Any]) -> str:
    """工具结果 -> stdout 文本"""
    if command in ("solve", "losses") and "record" in result:
        return report_text(result["record"])
    if command == "verify" and "table" in result:
        lines = [_table_text(result["table"])]
        lines += [f"order_{name}={','.join(values)}\n" for name, values in result["orders"].items()]
        lines.append(f"status={'pass' if not result['failing'] else 'fail'}\n")
        lines.append(f"failing={','.join(result['failing'])}\n")
        return "".join(lines)
    if command == "compare" and "table" in result:
        return _table_text(result["table"]) + f"v_err_orders={','.join(result['v_err_orders'])}\n"
    if command == "sweep" and "rows" in result:
        return _table_text(result["rows"]) + f"csv_path={result['csv_path']}\n"
    return ""


# ----------------------------------------------------------------------
# argparse
# ----------------------------------------------------------------------

def _parse_param(text: str):
    """'path=v1,v2,...' -> (path, [floats])"""
    if "=" not in text:
        raise argparse.ArgumentTypeError("--param 需要 path=v1,v2,... 形式")
    path, raw = text.split("=", 1)
    try:
        values = [float(item) for item in raw.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--param 的取值必须是数值: {raw}") from None
    if not path.strip() or not values:
        raise argparse.ArgumentTypeError("--param 需要参数路径和至少一个取值")
    return path.strip(), values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feederflow", description="配电馈线电压分布 BVP 求解与耗散性校验")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("scenario", help="场景文件路径或预设名")
        p.add_argument("--verbose", "-v", action="store_true", help="输出进度信息到 stderr")

    p = sub.add_parser("solve", help="求解并输出 CSV 与报告")
    common(p)
    p.add_argument("--grid", type=int, default=None, help="网格区间数 N")
    p.add_argument("--out", default=None, help="输出目录")

    p = sub.add_parser("verify", help="耗散等式与积分恒等式的加密校验")
    common(p)
    p.add_argument("--grid", type=int, default=None, help="最粗网格 N")
    p.add_argument("--refine", type=int, default=3, help="网格层数 k")
    p.add_argument("--tol", type=float, default=1e-6, help="残差容差")
    p.add_argument("--perturb", type=float, default=0.0, help="测试钩子: w += EPS sin(pi x / L)")

    p = sub.add_parser("compare", help="与梯形网络潮流对比")
    common(p)
    p.add_argument("--grid", type=int, default=None, help="最粗网格 N")
    p.add_argument("--levels", type=int, default=3, help="网格层数")
    p.add_argument("--tol", type=float, default=1e-2, help="最细网格相对损耗误差上限")

    p = sub.add_parser("losses", help="注入前后净损耗评估")
    common(p)
    p.add_argument("--inject", default=None, help="注入场景 (文件或预设名)")
    p.add_argument("--grid", type=int, default=None, help="网格区间数 N")

    p = sub.add_parser("sweep", help="单参数扫描")
    common(p)
    p.add_argument("--param", type=_parse_param, required=True, help="path=v1,v2,...")
    p.add_argument("--jobs", type=int, default=1, help="并行进程数")
    p.add_argument("--out", default=None, help="输出 CSV 文件路径")

    return parser


def _tool_kwargs(args: argparse.Namespace) -> Dict[str, Any]:
    kwargs: Dict[str, Any] = {"scenario": args.scenario, "verbose": args.verbose}
    if args.command == "solve":
        kwargs.update(grid=args.grid, out_dir=args.out)
    elif args.command == "verify":
        kwargs.update(grid=args.grid, refine=args.refine, tol=args.tol, perturb=args.perturb)
    elif args.command == "compare":
        kwargs.update(grid=args.grid, levels=args.levels, tol=args.tol)
    elif args.command == "losses":
        kwargs.update(inject=args.inject, grid=args.grid)
    elif args.command == "sweep":
        path, values = args.param
        kwargs.update(param=path, values=values, jobs=args.jobs, out=args.out)
    return kwargs


def main(argv: Optional[Sequence[str]] = None, stdout: TextIO = None, stderr: TextIO = None) -> int:
    """命令行入口, 返回进程退出码"""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with redirect_stdout(stdout), redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exit_request:
        # 用法错误归入退出码 1, 2 留给 NotConverged
        return 1 if exit_request.code else 0

    cli = FeederCLI(verbose=args.verbose)
    with redirect_stderr(stderr):
        result = cli.run(args.command, **_tool_kwargs(args))

    stdout.write(render(args.command, result))
    if not result.get("success"):
        print(f"❌ {result.get('error_type', 'Error')}: {result.get('error')}", file=stderr)
    return int(result.get("exit_code", 0 if result.get("success") else 1))


if __name__ == "__main__":
    sys.exit(main())
