"""Scenario configuration, node graphs and the common run-report container."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from ..fusion import Method

SCHEMA_VERSION = 1


class ScenarioKind(str, Enum):
    CONSISTENCY1 = "consistency1"
    CONSISTENCY2 = "consistency2"
    SURVEILLANCE = "surveillance"
    SCALAR_WEIGHT = "scalar_weight"


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


@dataclass(frozen=True)
class NodeGraph:
    """Directed acyclic fusion-flow graph; estimates travel along ``edges``."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        names = set(self.nodes)
        if len(names) != len(self.nodes):
            raise ConfigError("duplicate node names")
        for a, b in self.edges:
            if a not in names or b not in names:
                raise ConfigError(f"edge {a}->{b} references an unknown node")
        self.order()

    def inbound(self, node: str) -> list[str]:
        return [a for a, b in self.edges if b == node]

    @property
    def sinks(self) -> list[str]:
        sources = {a for a, _ in self.edges}
        return [n for n in self.nodes if n not in sources]

    def order(self) -> list[str]:
        """Topological order (Kahn), ties broken by declaration order."""
        indeg = {n: 0 for n in self.nodes}
        for _, b in self.edges:
            indeg[b] += 1
        ready = [n for n in self.nodes if indeg[n] == 0]
        out = []
        while ready:
            n = ready.pop(0)
            out.append(n)
            for a, b in self.edges:
                if a == n:
                    indeg[b] -= 1
                    if indeg[b] == 0:
                        ready.append(b)
            ready.sort(key=self.nodes.index)
        if len(out) != len(self.nodes):
            raise ConfigError("node graph contains a cycle")
        return out


FUSER_NAMES = ("naive", "ci", "ici", "hmd-ga", "centralized")


def parse_fusers(names) -> tuple[str, ...]:
    if isinstance(names, str):
        names = [n for n in names.split(",") if n.strip()]
    out = []
    for n in names:
        m = Method.parse(n)
        if m is Method.KNOWN_PRIOR:
            raise ConfigError("known-prior fusion needs the mutual component and is not a scenario fuser")
        out.append(m.value)
    if not out:
        raise ConfigError("at least one fuser is required")
    return tuple(dict.fromkeys(out))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one experiment.

    ``params`` holds the scenario-specific values (models, sensors, targets);
    builders fill in defaults and files or flags may override any key.
    """

    kind: ScenarioKind
    mc_runs: int
    seed: int = 0
    fusers: tuple[str, ...] = ("naive", "ci", "ici", "hmd-ga", "centralized")
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        if int(self.mc_runs) < 1:
            raise ConfigError("mc_runs must be at least 1")
        object.__setattr__(self, "mc_runs", int(self.mc_runs))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "fusers", parse_fusers(self.fusers))

    def with_overrides(self, **changes) -> "ScenarioConfig":
        params = dict(self.params)
        params.update(changes.pop("params", {}) or {})
        base = dict(kind=self.kind, mc_runs=self.mc_runs, seed=self.seed, fusers=self.fusers, params=params)
        base.update({k: v for k, v in changes.items() if v is not None})
        return ScenarioConfig(**base)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind.value,
            "mc_runs": self.mc_runs,
            "seed": self.seed,
            "fusers": list(self.fusers),
            "params": _jsonable(self.params),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        unknown = set(data) - {"schema_version", "kind", "mc_runs", "seed", "fusers", "params"}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "kind" not in data:
            raise ConfigError("configuration needs a 'kind'")
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {version}")
        from .registry import default_config

        base = default_config(data["kind"])
        return base.with_overrides(
            mc_runs=data.get("mc_runs"), seed=data.get("seed"), fusers=data.get("fusers"),
            params=data.get("params", {}),
        )


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Enum):
        return obj.value
    return obj


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"configuration file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration file is not valid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(data)


def bundled_config_path(kind: str) -> Path:
    return Path(str(resources.files("hmdfusion.scenarios") / "configs" / f"{ScenarioKind(kind).value}.json"))


@dataclass
class MetricSeries:
    """One per-step metric trace with optional confidence bounds."""

    fuser: str
    metric: str
    step: np.ndarray
    time_s: np.ndarray
    value: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None


@dataclass
class RunReport:
    """Output of one scenario execution."""

    config: ScenarioConfig
    series: list[MetricSeries] = field(default_factory=list)
    ellipses: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def get(self, fuser: str, metric: str) -> MetricSeries:
        for s in self.series:
            if s.fuser == fuser and s.metric == metric:
                return s
        raise KeyError(f"no series {metric!r} for fuser {fuser!r}")

    def add(self, fuser, metric, value, time_s=None, lower=None, upper=None) -> None:
        value = np.atleast_1d(np.asarray(value, dtype=float))
        step = np.arange(len(value))
        time_s = step.astype(float) if time_s is None else np.asarray(time_s, dtype=float)
        self.series.append(MetricSeries(fuser, metric, step, time_s, value,
                                        None if lower is None else np.broadcast_to(lower, value.shape).astype(float),
                                        None if upper is None else np.broadcast_to(upper, value.shape).astype(float)))


def failure_guard(failures: int, total: int, what: str, limit: float = 0.01) -> None:
    if total and failures / total > limit:
        raise RuntimeError(f"{what}: {failures} of {total} fusions failed (over {limit:.0%})")
