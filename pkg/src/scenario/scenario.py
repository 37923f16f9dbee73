"""
Scenario - 场景文件的解析、序列化与内置预设

文件格式 (UTF-8, 每行一个 key = value, '#' 之后为注释):

    [feeder]
    name = conventional
    g = 1.0
    b = 1.0
    length = 1.0

    [loads]
    segment = x_start, x_end, p_density, q_density     # 可重复
    bump = center, width, p_amplitude, q_amplitude      # 可重复

    [solver]
    grid = 256
    newton_tol = 1e-10

    [manufactured]
    family = cosine
    v_amplitude = 0.1
    theta_amplitude = 0.05

[solver] 只覆盖给出的字段, 其余取 SolverOptions 默认值；[manufactured] 与
[loads] 互斥, 给出时用制造解分布代替负荷分布。
"""

import math
import os
import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..model.errors import DomainError, ScenarioParseError, ScenarioValidationError, UnknownPreset
from ..model.feeder_model import FeederParams, ManufacturedProfile, manufactured_family
from ..model.profile import Bump, PowerProfile, ProfileLike, Segment
from ..solver.bvp_solver import SolverOptions


load_dotenv()

PRESET_NAMES: Tuple[str, ...] = ("conventional", "pv_ev", "no_load", "manufactured", "pv_supply")

BUILTIN_PRESET_DIR = Path(__file__).parent / "presets"

SECTIONS = ("feeder", "loads", "solver", "manufactured")

FEEDER_KEYS = ("name", "g", "b", "length")
LOAD_KEYS = ("segment", "bump")
MANUFACTURED_KEYS = ("family", "v_amplitude", "theta_amplitude")

# 文件中的 grid 对应 SolverOptions.n_intervals
SOLVER_KEYS = {
    "grid": "n_intervals",
    "newton_tol": "newton_tol",
    "max_newton_iters": "max_newton_iters",
    "fd_step": "fd_step",
    "damping": "damping",
    "v_min": "v_min",
    "split_at_breakpoints": "split_at_breakpoints",
    "continuation": "continuation",
}

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "false": False, "no": False, "off": False}


class ManufacturedSpec(BaseModel):
    """制造解参数 (族名与两个幅值)"""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    family: Literal["cubic", "cosine"] = Field(default="cosine", description="制造解族")
    v_amplitude: float = Field(description="电压幅值扰动 a")
    theta_amplitude: float = Field(description="相位扰动 c")

    def build(self, params: FeederParams) -> ManufacturedProfile:
        return manufactured_family(self.family, self.v_amplitude, self.theta_amplitude, params)


class Scenario(BaseModel):
    """一个完整的计算场景: 馈线参数 + 负荷分布 + 求解器设置"""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    name: str = Field(default="scenario", description="场景名称")
    params: FeederParams
    profile: PowerProfile
    solver: SolverOptions = Field(default_factory=SolverOptions)
    manufactured: Optional[ManufacturedSpec] = None

    @field_validator("name")
    @classmethod
    def _plain_name(cls, value: str) -> str:
        value = value.strip()
        if not value or any(ch in value for ch in "#\r\n="):
            raise ValueError(f"场景名称不能为空且不能包含 '#', '=' 或换行: {value!r}")
        return value

    @property
    def load_profile(self) -> ProfileLike:
        """求解用的分布: 制造解场景返回制造解分布"""
        if self.manufactured is not None:
            return self.manufactured.build(self.params)
        return self.profile

    @property
    def is_smooth(self) -> bool:
        return self.manufactured is not None or self.profile.is_smooth


# ----------------------------------------------------------------------
# 解析
# ----------------------------------------------------------------------

def _parse_number(text: str, line: int, key: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ScenarioParseError(f"{key} 需要数值, 实际为 {text!r}", line) from None
    if not math.isfinite(value):
        raise ScenarioValidationError(f"数值必须有限, 实际为 {text!r}", field=key, line=line)
    return value


def _parse_bool(text: str, line: int, key: str) -> bool:
    try:
        return _BOOL_WORDS[text.lower()]
    except KeyError:
        raise ScenarioParseError(f"{key} 需要 true/false, 实际为 {text!r}", line) from None


def _parse_tuple(text: str, line: int, key: str) -> Tuple[float, float, float, float]:
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 4:
        raise ScenarioParseError(f"{key} 需要 4 个逗号分隔的数值, 实际 {len(parts)} 个", line)
    a, b, c, d = (_parse_number(part, line, key) for part in parts)
    return a, b, c, d


def _tokenize(text: str) -> List[Tuple[int, str, str, str]]:
    """拆成 (行号, 节名, 键, 值) 列表, 只检查语法"""
    entries = []
    section: Optional[str] = None
    seen_sections = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", line)
        if header:
            section = header.group(1).lower()
            if section not in SECTIONS:
                raise ScenarioParseError(f"未知的节 [{section}] (可用: {', '.join(SECTIONS)})", number)
            if section in seen_sections:
                raise ScenarioParseError(f"节 [{section}] 重复出现", number)
            seen_sections.add(section)
            continue
        if line.startswith("["):
            raise ScenarioParseError(f"无法解析的节标题: {line!r}", number)
        if "=" not in line:
            raise ScenarioParseError(f"需要 key = value 形式: {line!r}", number)
        if section is None:
            raise ScenarioParseError("键值对出现在任何节之前", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioParseError("键名为空", number)
        entries.append((number, section, key.lower(), value))
    return entries


def _pydantic_message(error: ValidationError) -> Tuple[str, str]:
    first = error.errors()[0]
    loc = ".".join(str(part) for part in first.get("loc", ()))
    message = first.get("msg", str(error)).removeprefix("Value error, ")
    return message, loc


def _first_bad_prefix(length: float, segments, bumps, segment_lines, bump_lines) -> Optional[int]:
    """逐个加入区段与凸包, 找到第一个导致 PowerProfile 校验失败的行"""
    for k in range(1, len(segments) + 1):
        try:
            PowerProfile(length=length, segments=tuple(segments[:k]))
        except ValidationError:
            return segment_lines[k - 1]
    for k in range(1, len(bumps) + 1):
        try:
            PowerProfile(length=length, segments=tuple(segments), bumps=tuple(bumps[:k]))
        except ValidationError:
            return bump_lines[k - 1]
    return None


def parse_scenario(text: str, source: Optional[str] = None) -> Scenario:
    """
    解析场景文本

    Args:
        text: 场景文件内容
        source: 来源描述 (文件名), 仅用于默认场景名

    Returns:
        校验通过的 Scenario

    Raises:
        ScenarioParseError: 语法错误 (带行号)
        ScenarioValidationError: 内容违反不变量 (带行号与字段)
    """
    feeder: Dict[str, Tuple[int, str]] = {}
    solver: Dict[str, Tuple[int, str]] = {}
    manufactured: Dict[str, Tuple[int, str]] = {}
    segments: List[Segment] = []
    bumps: List[Bump] = []
    segment_lines: List[int] = []
    bump_lines: List[int] = []

    singles = {"feeder": (feeder, FEEDER_KEYS), "solver": (solver, tuple(SOLVER_KEYS)),
               "manufactured": (manufactured, MANUFACTURED_KEYS)}

    for line, section, key, value in _tokenize(text):
        if section == "loads":
            if key not in LOAD_KEYS:
                raise ScenarioParseError(f"[loads] 中未知的键 {key!r} (可用: {', '.join(LOAD_KEYS)})", line)
            numbers = _parse_tuple(value, line, key)
            try:
                if key == "segment":
                    segments.append(Segment(x_start=numbers[0], x_end=numbers[1],
                                            p_density=numbers[2], q_density=numbers[3]))
                    segment_lines.append(line)
                else:
                    bumps.append(Bump(center=numbers[0], width=numbers[1],
                                      p_amplitude=numbers[2], q_amplitude=numbers[3]))
                    bump_lines.append(line)
            except ValidationError as error:
                message, _ = _pydantic_message(error)
                index = len(segments) + 1 if key == "segment" else len(bumps) + 1
                raise ScenarioValidationError(message, field=f"{key} {index}", line=line) from None
            continue

        store, allowed = singles[section]
        if key not in allowed:
            raise ScenarioParseError(f"[{section}] 中未知的键 {key!r} (可用: {', '.join(allowed)})", line)
        if key in store:
            raise ScenarioParseError(f"[{section}] 中的 {key} 重复 (首次出现在第 {store[key][0]} 行)", line)
        store[key] = (line, value)

    # [feeder]
    for key in ("g", "b", "length"):
        if key not in feeder:
            raise ScenarioValidationError("缺少必需字段", field=f"feeder.{key}")
    numbers = {key: _parse_number(feeder[key][1], feeder[key][0], key) for key in ("g", "b", "length")}
    try:
        params = FeederParams(**numbers)
    except ValidationError as error:
        message, loc = _pydantic_message(error)
        raise ScenarioValidationError(message, field=f"feeder.{loc}", line=feeder.get(loc, (None,))[0]) from None

    # [solver]
    solver_values: Dict[str, Any] = {}
    for key, (line, value) in solver.items():
        if key in ("split_at_breakpoints", "continuation"):
            solver_values[SOLVER_KEYS[key]] = _parse_bool(value, line, key)
        elif key in ("grid", "max_newton_iters"):
            if not re.fullmatch(r"[+-]?\d+", value):
                raise ScenarioParseError(f"{key} 需要整数, 实际为 {value!r}", line)
            solver_values[SOLVER_KEYS[key]] = int(value)
        else:
            solver_values[SOLVER_KEYS[key]] = _parse_number(value, line, key)
    try:
        options = SolverOptions(**solver_values)
    except ValidationError as error:
        message, loc = _pydantic_message(error)
        file_key = next((k for k, v in SOLVER_KEYS.items() if v == loc), loc)
        raise ScenarioValidationError(message, field=f"solver.{file_key}", line=solver.get(file_key, (None,))[0]) from None

    # [loads]
    try:
        profile = PowerProfile(length=params.length, segments=tuple(segments), bumps=tuple(bumps))
    except ValidationError as error:
        message, _ = _pydantic_message(error)
        bad_line = _first_bad_prefix(params.length, segments, bumps, segment_lines, bump_lines)
        raise ScenarioValidationError(message, field="loads", line=bad_line) from None

    # [manufactured]
    spec: Optional[ManufacturedSpec] = None
    if manufactured:
        if segments or bumps:
            raise ScenarioValidationError("[manufactured] 与 [loads] 不能同时给出", field="manufactured",
                                          line=min(line for line, _ in manufactured.values()))
        values: Dict[str, Any] = {}
        for key, (line, value) in manufactured.items():
            values[key] = value if key == "family" else _parse_number(value, line, key)
        try:
            spec = ManufacturedSpec(**values)
            spec.build(params)
        except ValidationError as error:
            message, loc = _pydantic_message(error)
            raise ScenarioValidationError(message, field=f"manufactured.{loc}",
                                          line=manufactured.get(loc, (None,))[0]) from None
        except DomainError as error:
            raise ScenarioValidationError(str(error), field="manufactured") from None

    if "name" in feeder:
        name = feeder["name"][1]
    elif source:
        name = Path(source).stem
    else:
        name = "scenario"

    try:
        return Scenario(name=name, params=params, profile=profile, solver=options, manufactured=spec)
    except ValidationError as error:
        message, _ = _pydantic_message(error)
        raise ScenarioValidationError(message, field="feeder.name", line=feeder.get("name", (None,))[0]) from None


# ----------------------------------------------------------------------
# 序列化
# ----------------------------------------------------------------------

def _num(value: float) -> str:
    return repr(float(value))


def serialize_scenario(scenario: Scenario) -> str:
    """输出可被 parse_scenario 原样读回的文本"""
    p = scenario.params
    lines = [
        "[feeder]",
        f"name = {scenario.name}",
        f"g = {_num(p.g)}",
        f"b = {_num(p.b)}",
        f"length = {_num(p.length)}",
    ]
    if scenario.profile.segments or scenario.profile.bumps:
        lines += ["", "[loads]"]
        for seg in scenario.profile.segments:
            lines.append("segment = " + ", ".join(_num(v) for v in (seg.x_start, seg.x_end, seg.p_density, seg.q_density)))
        for bump in scenario.profile.bumps:
            lines.append("bump = " + ", ".join(_num(v) for v in (bump.center, bump.width, bump.p_amplitude, bump.q_amplitude)))

    opts = scenario.solver
    lines += ["", "[solver]"]
    for file_key, attr in SOLVER_KEYS.items():
        value = getattr(opts, attr)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, int):
            text = str(value)
        else:
            text = _num(value)
        lines.append(f"{file_key} = {text}")

    if scenario.manufactured is not None:
        m = scenario.manufactured
        lines += ["", "[manufactured]", f"family = {m.family}",
                  f"v_amplitude = {_num(m.v_amplitude)}", f"theta_amplitude = {_num(m.theta_amplitude)}"]
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# 预设与加载
# ----------------------------------------------------------------------

def preset_dirs() -> List[Path]:
    """预设搜索路径: FEEDERFLOW_PRESET_DIR (若设置) 优先, 然后是内置目录"""
    dirs = []
    override = os.getenv("FEEDERFLOW_PRESET_DIR")
    if override:
        dirs.append(Path(override))
    dirs.append(BUILTIN_PRESET_DIR)
    return dirs


def available_presets() -> List[str]:
    names = set()
    for directory in preset_dirs():
        if directory.is_dir():
            names.update(path.stem for path in directory.glob("*.cfg"))
    return sorted(names)


def preset(name: str) -> Scenario:
    """
    读取内置 (或 FEEDERFLOW_PRESET_DIR 中的) 预设场景

    Raises:
        UnknownPreset: 搜索路径中不存在 <name>.cfg
    """
    for directory in preset_dirs():
        path = directory / f"{name}.cfg"
        if path.is_file():
            return parse_scenario(path.read_text(encoding="utf-8"), source=str(path))
    raise UnknownPreset(name, available_presets())


def load_scenario(source: Union[str, Path]) -> Scenario:
    """
    场景参数既可以是文件路径也可以是预设名

    Raises:
        ScenarioParseError: 看起来是路径但文件不存在
        UnknownPreset: 既不是文件也不是已知预设
    """
    path = Path(source)
    if path.is_file():
        return parse_scenario(path.read_text(encoding="utf-8"), source=str(path))
    text = str(source)
    if path.suffix or os.sep in text or "/" in text:
        raise ScenarioParseError(f"场景文件不存在: {text}")
    return preset(text)


# ----------------------------------------------------------------------
# 参数扫描路径
# ----------------------------------------------------------------------

_SOLVER_ATTRS = dict(SOLVER_KEYS, n_intervals="n_intervals")

_FEEDER_ATTRS = {"g": "g", "b": "b", "length": "length"}


def with_value(scenario: Scenario, path: str, value: float) -> Scenario:
    """
    返回修改了某个数值字段的新场景 (重新校验全部不变量)

    path 形如 feeder.b, solver.grid, segment.2.p_density, bump.1.p_amplitude,
    manufactured.v_amplitude；区段与凸包编号从 1 开始

    Raises:
        ScenarioValidationError: 路径无效或新值违反不变量
    """
    data = scenario.model_dump()
    parts = path.strip().split(".")
    head = parts[0]

    try:
        if head == "feeder" and len(parts) == 2 and parts[1] in _FEEDER_ATTRS:
            data["params"][_FEEDER_ATTRS[parts[1]]] = value
            if parts[1] == "length":
                data["profile"]["length"] = value
        elif head == "solver" and len(parts) == 2 and parts[1] in _SOLVER_ATTRS:
            data["solver"][_SOLVER_ATTRS[parts[1]]] = value
        elif head in ("segment", "bump") and len(parts) == 3:
            items = data["profile"]["segments" if head == "segment" else "bumps"]
            index = int(parts[1]) - 1
            if not 0 <= index < len(items) or parts[2] not in items[index]:
                raise KeyError(path)
            items[index][parts[2]] = value
        elif head == "manufactured" and len(parts) == 2 and data.get("manufactured") and parts[1] != "family":
            if parts[1] not in data["manufactured"]:
                raise KeyError(path)
            data["manufactured"][parts[1]] = value
        else:
            raise KeyError(path)
    except (KeyError, ValueError):
        raise ScenarioValidationError("无效的参数路径", field=path) from None

    try:
        updated = Scenario.model_validate(data)
        if updated.manufactured is not None:
            updated.manufactured.build(updated.params)
    except ValidationError as error:
        message, _ = _pydantic_message(error)
        raise ScenarioValidationError(message, field=path) from None
    except DomainError as error:
        raise ScenarioValidationError(str(error), field=path) from None
    return updated
