"""Scenario harness: configuration, runner, reports and figures."""

from importlib import resources
from pathlib import Path

from .config import ScenarioConfig, load_scenario, parse_scenario
from .report import ScenarioReport, format_table, render_text, report_packet_sizes, to_csv
from .runner import Scenario, run_scenario

BUNDLED = ("battlefield", "battlefield-abe", "outage")


def bundled_path(name: str) -> Path:
    """Filesystem path of a bundled scenario (``battlefield``, ``battlefield-abe`` or ``outage``)."""
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled scenario {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files(__package__) / "scenarios" / f"{name}.json"))


__all__ = [
    "BUNDLED", "Scenario", "ScenarioConfig", "ScenarioReport", "bundled_path", "format_table", "load_scenario",
    "parse_scenario", "render_text", "report_packet_sizes", "run_scenario", "to_csv",
]
