"""
FeederFlow CLI Module
"""

from .feeder_cli import COMMANDS, FeederCLI, build_parser, main, render

__all__ = ['COMMANDS', 'FeederCLI', 'build_parser', 'main', 'render']
