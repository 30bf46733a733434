"""Scalar random-walk experiment on fusion-weight degeneracy.

``x_k = x_{k-1} + w_{k-1}`` and ``z_k = x_k + v_k`` with ``w_{k-1}`` and
``v_k`` jointly Gaussian and correlated. At every step each fuser combines
its predicted estimate (input 1) with the raw measurement (input 2) without
knowing the correlation, and the fused estimate becomes the next prior.
For scalars the CI and ICI optimal weights sit on a boundary and simply
return the less uncertain input.
"""

from __future__ import annotations

import time

import numpy as np

from ..metrics import nees_bounds
from .common import nees_values, robust_fuse, run_rng
from .config import ConfigError, RunReport, ScenarioConfig, ScenarioKind, failure_guard

SCALAR_FUSERS = ("naive", "ci", "ici", "hmd-ga")


def build_scalar_weight(mc_runs: int = 500, seed: int = 0, fusers=None) -> ScenarioConfig:
    params = {
        "rho": 0.5,
        "process_var": 1.0,
        "measurement_var": 1.0,
        "initial_var": 1.0,
        "steps": 50,
        "weight_objective": "trace",
    }
    return ScenarioConfig(ScenarioKind.SCALAR_WEIGHT, mc_runs, seed, fusers or ("ci", "ici", "hmd-ga"), params)


def run_scalar_weight(cfg: ScenarioConfig) -> RunReport:
    p = cfg.params
    bad = [f for f in cfg.fusers if f not in SCALAR_FUSERS]
    if bad:
        raise ConfigError(f"fusers {bad} are not defined for the scalar experiment")
    rho, q, r = float(p["rho"]), float(p["process_var"]), float(p["measurement_var"])
    if not -1.0 < rho < 1.0:
        raise ConfigError("rho must lie in (-1, 1)")
    K, M = int(p["steps"]), cfg.mc_runs
    rng = run_rng(cfg.seed, 0)
    joint = np.array([[q, rho * np.sqrt(q * r)], [rho * np.sqrt(q * r), r]])
    x0 = rng.normal(0.0, np.sqrt(p["initial_var"]), size=M)
    noise = rng.multivariate_normal(np.zeros(2), joint, size=(K, M))
    truth = x0 + np.cumsum(noise[:, :, 0], axis=0)
    z = truth + noise[:, :, 1]
    objective = p.get("weight_objective", "trace")
    report = RunReport(cfg)
    steps = np.arange(1, K + 1, dtype=float)
    lo, hi = nees_bounds(M, 1)
    for fuser in cfg.fusers:
        t0 = time.perf_counter()
        x = np.zeros((M, 1))
        P = np.full((M, 1, 1), float(p["initial_var"]))
        R = np.full((M, 1, 1), r)
        omega = np.full((K, M), np.nan)
        xs, Ps = np.zeros((K, M)), np.zeros((K, M))
        failures = 0
        for k in range(K):
            x, P, w, failed = robust_fuse(fuser, x, P + q, z[k][:, None], R, objective)
            failures += int(failed.sum())
            omega[k] = w
            xs[k], Ps[k] = x[:, 0], P[:, 0, 0]
        failure_guard(failures, K * M, f"scalar_weight/{fuser}")
        report.timings[fuser] = time.perf_counter() - t0
        report.failures[fuser] = failures
        err = xs - truth
        report.add(fuser, "rmse", np.sqrt(np.mean(err**2, axis=1)), steps)
        report.add(fuser, "nees", np.mean(nees_values(err[..., None], Ps[..., None, None]), axis=1), steps, lo, hi)
        if fuser != "naive":
            report.add(fuser, "omega_mean", np.mean(omega, axis=1), steps)
            report.add(fuser, "omega_min", np.min(omega, axis=1), steps)
            report.add(fuser, "omega_max", np.max(omega, axis=1), steps)
        report.summary[fuser] = {
            "omega_average": float(np.nanmean(omega)) if fuser != "naive" else None,
            "omega_min": float(np.nanmin(omega)) if fuser != "naive" else None,
            "omega_max": float(np.nanmax(omega)) if fuser != "naive" else None,
            "rmse_average": float(np.sqrt(np.mean(err**2))),
        }
    return report
