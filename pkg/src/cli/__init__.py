#!/usr/bin/env python3
# SaddleKit - Command Line

from src.cli.commands import build_parser, run

__all__ = ["build_parser", "run"]
