"""Scenario builders and runners by name."""

from __future__ import annotations

from .config import ConfigError, RunReport, ScenarioConfig, ScenarioKind


def _kind(kind) -> ScenarioKind:
    try:
        return ScenarioKind(kind)
    except ValueError:
        names = ", ".join(k.value for k in ScenarioKind)
        raise ConfigError(f"unknown scenario {kind!r}; choose one of {names}") from None


def default_config(kind, mc_runs: int | None = None, seed: int = 0) -> ScenarioConfig:
    """Built-in configuration for a scenario, optionally with a different run count."""
    kind = _kind(kind)
    if kind in (ScenarioKind.CONSISTENCY1, ScenarioKind.CONSISTENCY2):
        from .consistency import build_consistency1, build_consistency2

        build = build_consistency1 if kind is ScenarioKind.CONSISTENCY1 else build_consistency2
    elif kind is ScenarioKind.SCALAR_WEIGHT:
        from .scalar import build_scalar_weight as build
    else:
        from .surveillance import build_surveillance as build
    cfg = build(seed=seed)
    return cfg if mc_runs is None else cfg.with_overrides(mc_runs=mc_runs)


def run(config: ScenarioConfig, threads: int = 1) -> RunReport:
    """Execute a scenario and return its report.

    ``threads`` parallelizes surveillance Monte-Carlo runs; the linear
    scenarios are vectorized over runs and ignore it.
    """
    if config.kind in (ScenarioKind.CONSISTENCY1, ScenarioKind.CONSISTENCY2):
        from .consistency import run_consistency

        return run_consistency(config)
    if config.kind is ScenarioKind.SCALAR_WEIGHT:
        from .scalar import run_scalar_weight

        return run_scalar_weight(config)
    from .surveillance import run_surveillance

    return run_surveillance(config, threads=threads)
