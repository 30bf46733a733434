"""Monte-Carlo scenarios: linear consistency networks, the scalar weight study and radar surveillance."""

from .config import (
    ConfigError,
    MetricSeries,
    NodeGraph,
    RunReport,
    ScenarioConfig,
    ScenarioKind,
    load_config,
)
from .registry import default_config, run

__all__ = [
    "ConfigError",
    "MetricSeries",
    "NodeGraph",
    "RunReport",
    "ScenarioConfig",
    "ScenarioKind",
    "default_config",
    "load_config",
    "run",
]
