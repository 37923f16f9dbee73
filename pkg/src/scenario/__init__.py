"""
FeederFlow Scenario Module
场景文件解析、序列化与内置预设
"""

from .scenario import (
    PRESET_NAMES,
    ManufacturedSpec,
    Scenario,
    available_presets,
    load_scenario,
    parse_scenario,
    preset,
    preset_dirs,
    serialize_scenario,
    with_value,
)

__all__ = [
    'PRESET_NAMES', 'Scenario', 'ManufacturedSpec',
    'parse_scenario', 'serialize_scenario', 'preset', 'preset_dirs', 'available_presets',
    'load_scenario', 'with_value',
]
