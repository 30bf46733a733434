"""Linear consistency tests on small sensor networks.

Every node runs a Kalman filter on its own measurements and then fuses the
estimates arriving along the graph edges, one inbound estimate at a time, in
topological order. All nodes start from the same prior, so the local
estimates share information and naive fusion double-counts it.

Both tests are vectorized over Monte-Carlo runs: each fusion step fuses the
whole batch of runs in one call.
"""

from __future__ import annotations

import time

import numpy as np

from ..gaussian import spd_inverse, symmetrize
from ..metrics import ellipse_from_cov, nees_bounds
from ..trackers import kf_update_arrays
from .common import nees_values, robust_fuse, run_rng
from .config import ConfigError, NodeGraph, RunReport, ScenarioConfig, ScenarioKind, failure_guard

CONSISTENCY1_EDGES = (
    ("S1", "S4"), ("S2", "S5"), ("S3", "S6"), ("S4", "S7"), ("S5", "S7"),
    ("S6", "S8"), ("S7", "S9"), ("S8", "S9"), ("S9", "S10"),
)
CONSISTENCY2_EDGES = (("S1", "S5"), ("S2", "S5"), ("S3", "S5"), ("S4", "S5"))


def measurement_matrix(i: int, n_nodes: int = 10) -> np.ndarray:
    a = 0.5 * np.pi * i / n_nodes
    s, c = np.sin(a), np.cos(a)
    return np.array([[s, c], [c, s]])


def build_consistency1(mc_runs: int = 5000, seed: int = 0, fusers=None) -> ScenarioConfig:
    params = {
        "prior_mean": [0.0, 0.0],
        "prior_cov": [[2.0, 0.0], [0.0, 2.0]],
        "measurement_cov": [[0.2, 0.0], [0.0, 0.2]],
        "nodes": [f"S{i}" for i in range(1, 11)],
        "edges": [list(e) for e in CONSISTENCY1_EDGES],
        "weight_objective": "trace",
    }
    return ScenarioConfig(ScenarioKind.CONSISTENCY1, mc_runs, seed,
                          fusers or ("naive", "ci", "ici", "hmd-ga", "centralized"), params)


def build_consistency2(mc_runs: int = 5000, seed: int = 0, fusers=None) -> ScenarioConfig:
    ra, rb = [[0.5, 0.0], [0.0, 0.2]], [[0.1, 0.0], [0.0, 0.5]]
    params = {
        "prior_mean": [0.0, 0.0],
        "prior_cov": [[2.0, 1.0], [1.0, 2.0]],
        "transition": [[1.0, 0.5], [0.0, 1.0]],
        "process_cov": [[0.5, 0.0], [0.0, 0.5]],
        "measurement_matrix": [[1.0, 0.0], [0.0, 1.0]],
        "measurement_cov": {"S1": ra, "S2": rb, "S3": ra, "S4": rb, "S5": ra},
        "steps": 5,
        "nodes": ["S1", "S2", "S3", "S4", "S5"],
        "edges": [list(e) for e in CONSISTENCY2_EDGES],
        "weight_objective": "trace",
    }
    return ScenarioConfig(ScenarioKind.CONSISTENCY2, mc_runs, seed,
                          fusers or ("naive", "ci", "ici", "hmd-ga", "centralized"), params)


def _graph(params) -> NodeGraph:
    g = NodeGraph(tuple(params["nodes"]), tuple(tuple(e) for e in params["edges"]))
    if len(g.sinks) != 1:
        raise ConfigError(f"expected exactly one sink node, found {g.sinks}")
    return g


def _fuse_graph(graph: NodeGraph, local: dict, method: str, objective: str):
    """Propagate estimates along the graph and return the sink's fused estimate."""
    est = {}
    omegas, failures, total = [], 0, 0
    for node in graph.order():
        x, P = local[node]
        for src in graph.inbound(node):
            xs, Ps = est[src]
            x, P, w, failed = robust_fuse(method, x, P, xs, Ps, objective)
            omegas.append(w)
            failures += int(failed.sum())
            total += len(failed)
        est[node] = (x, P)
    return est[graph.sinks[0]], (np.stack(omegas) if omegas else np.zeros((0, 0))), failures, total


def _simulate_consistency1(cfg: ScenarioConfig):
    p = cfg.params
    graph = _graph(p)
    M = cfg.mc_runs
    rng = run_rng(cfg.seed, 0)
    m0 = np.asarray(p["prior_mean"], float)
    P0 = np.asarray(p["prior_cov"], float)
    R = np.asarray(p["measurement_cov"], float)
    truth = m0 + rng.multivariate_normal(np.zeros(2), P0, size=M)
    local, meas = {}, {}
    n_nodes = len(graph.nodes)
    for i, node in enumerate(graph.nodes, start=1):
        H = measurement_matrix(i, n_nodes)
        z = truth @ H.T + rng.multivariate_normal(np.zeros(2), R, size=M)
        x0 = np.broadcast_to(m0, (M, 2))
        Pb = np.broadcast_to(P0, (M, 2, 2))
        local[node] = kf_update_arrays(x0, Pb, z - x0 @ H.T, H, R)
        meas[node] = (z, H, R)
    # centralized: the shared prior plus every raw measurement
    info = spd_inverse(P0) + sum(H.T @ spd_inverse(R) @ H for _, H, R in meas.values())
    Pc = spd_inverse(info)
    vec = (spd_inverse(P0) @ m0)[None] + sum(z @ (spd_inverse(R) @ H) for z, H, R in meas.values())
    cen = (vec @ Pc.T, np.broadcast_to(Pc, (M, 2, 2)))
    return graph, truth, local, cen


def _simulate_consistency2(cfg: ScenarioConfig):
    p = cfg.params
    graph = _graph(p)
    M = cfg.mc_runs
    rng = run_rng(cfg.seed, 0)
    m0 = np.asarray(p["prior_mean"], float)
    P0 = np.asarray(p["prior_cov"], float)
    F = np.asarray(p["transition"], float)
    Q = np.asarray(p["process_cov"], float)
    H = np.asarray(p["measurement_matrix"], float)
    Rs = {n: np.asarray(p["measurement_cov"][n], float) for n in graph.nodes}
    truth = m0 + rng.multivariate_normal(np.zeros(2), P0, size=M)
    local = {n: (np.broadcast_to(m0, (M, 2)).copy(), np.broadcast_to(P0, (M, 2, 2)).copy()) for n in graph.nodes}
    cx, cP = np.broadcast_to(m0, (M, 2)).copy(), np.broadcast_to(P0, (M, 2, 2)).copy()
    for _ in range(int(p["steps"])):
        truth = truth @ F.T + rng.multivariate_normal(np.zeros(2), Q, size=M)
        cx, cP = cx @ F.T, symmetrize(F @ cP @ F.T + Q)
        for n in graph.nodes:
            z = truth @ H.T + rng.multivariate_normal(np.zeros(2), Rs[n], size=M)
            x, P = local[n]
            x, P = x @ F.T, symmetrize(F @ P @ F.T + Q)
            local[n] = kf_update_arrays(x, P, z - x @ H.T, H, Rs[n])
            cx, cP = kf_update_arrays(cx, cP, z - cx @ H.T, H, Rs[n])
    return graph, truth, local, (cx, cP)


def run_consistency(cfg: ScenarioConfig) -> RunReport:
    """Fuse along the node graph with every configured fuser and compare covariances.

    For each fuser the report holds the run-averaged reported covariance, the
    sample covariance of the errors at the sink, mean NEES with its 95% bounds,
    and 86.5% ellipses of both covariances.
    """
    if cfg.kind is ScenarioKind.CONSISTENCY1:
        graph, truth, local, cen = _simulate_consistency1(cfg)
    elif cfg.kind is ScenarioKind.CONSISTENCY2:
        graph, truth, local, cen = _simulate_consistency2(cfg)
    else:
        raise ConfigError(f"{cfg.kind.value} is not a consistency scenario")
    objective = cfg.params.get("weight_objective", "trace")
    report = RunReport(cfg)
    M = cfg.mc_runs
    lo, hi = nees_bounds(M, 2)
    for fuser in cfg.fusers:
        t0 = time.perf_counter()
        if fuser == "centralized":
            (x, P), omegas, failures, total = cen, np.zeros((0, 0)), 0, 0
        else:
            (x, P), omegas, failures, total = _fuse_graph(graph, local, fuser, objective)
        report.timings[fuser] = time.perf_counter() - t0
        failure_guard(failures, total, f"{cfg.kind.value}/{fuser}")
        report.failures[fuser] = failures
        err = x - truth
        sample = err.T @ err / M
        reported = P.mean(axis=0)
        nees = float(np.mean(nees_values(err, P)))
        report.add(fuser, "trace_reported", np.trace(reported))
        report.add(fuser, "trace_sample", np.trace(sample))
        report.add(fuser, "nees", nees, lower=lo, upper=hi)
        if omegas.size and np.isfinite(omegas).any():
            report.add(fuser, "omega_mean", np.nanmean(omegas))
        report.summary[fuser] = {
            "reported_cov": reported,
            "sample_cov": sample,
            "mean_error": err.mean(axis=0),
            "trace_ratio": float(np.trace(sample) / np.trace(reported)),
            "min_eig_reported_minus_sample": float(np.linalg.eigvalsh(symmetrize(reported - sample))[0]),
            "nees": nees,
        }
        for label, cov in (("reported", reported), ("sample", sample)):
            ell = ellipse_from_cov(cov, 0.865, center=np.zeros(2))
            report.ellipses.append({"fuser": fuser, "kind": label, **ell.to_dict()})
    return report
