"""Benchmark harness: verified timing grids and the property battery."""

from __future__ import annotations

from .checks import CheckResult, verify_suite
from .grid import ExperimentSpec, GridResult, ResultRow, run_grid
from .render import parse_csv, parse_json, render, render_csv, render_json, render_table

__all__ = [
    "CheckResult",
    "ExperimentSpec",
    "GridResult",
    "ResultRow",
    "parse_csv",
    "parse_json",
    "render",
    "render_csv",
    "render_json",
    "render_table",
    "run_grid",
    "verify_suite",
]
