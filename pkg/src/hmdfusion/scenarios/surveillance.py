"""Three-radar, twenty-target surveillance scenario with a fusion center.

Each radar runs a :class:`~hmdfusion.trackers.LocalTracker` on its own
detections (targets plus uniform clutter) every scan. At every fusion instant
the confirmed local tracks of all radars are sent to a fusion center that is
collocated with radar 1 and keeps its own global tracks between instants:
globals are predicted to the fusion time, associated with each radar's
tracks in turn, fused with the selected rule, and started afresh from
unmatched local tracks.

All geometry lives in the east-north plane of the fusion center. Truth
trajectories are the same in every Monte-Carlo run; only sensor noise,
detection misses and clutter change. Local tracking is run once per
Monte-Carlo run and shared by all fusers so that they see identical inputs.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..association import associate, default_gate
from ..geodesy import geodetic_to_enu, surface_interpolate
from ..metrics import nees as nees_metric
from ..metrics import rmse as rmse_metric
from ..trackers import (
    LocalTracker,
    MotionModel,
    RangeBearingSensor,
    TrackManagementConfig,
    kf_predict_arrays,
)
from .common import log, robust_fuse, run_rng
from .config import ConfigError, RunReport, ScenarioConfig, ScenarioKind, failure_guard

RADARS = {
    "R1": (59.7138694, -55.2676093),
    "R2": (57.5399008, -57.6551522),
    "R3": (56.6320564, -52.104272),
}

# target id: (initial lat, lon), (final lat, lon)
TARGETS = {
    1: ((59.6104, -52.6939), (59.9352, -52.7611)),
    2: ((57.7699, -59.1922), (58.0822, -58.7635)),
    3: ((60.7648, -55.762), (60.8607, -56.3676)),
    4: ((57.7025, -54.7059), (57.3769, -54.7036)),
    5: ((59.4254, -54.4498), (59.7284, -54.5691)),
    6: ((59.1483, -51.2977), (59.4869, -51.3718)),
    7: ((58.8561, -58.484), (58.6288, -58.495)),
    8: ((59.831, -58.3974), (59.6367, -58.0819)),
    9: ((59.5306, -53.1629), (59.5036, -53.5418)),
    10: ((58.8028, -54.3803), (58.6656, -53.5222)),
    11: ((57.8132, -52.6504), (57.676, -51.8147)),
    12: ((57.4636, -58.9469), (57.5906, -59.8504)),
    13: ((57.2096, -52.6824), (57.7325, -52.5499)),
    14: ((59.9093, -56.8477), (59.8108, -57.9123)),
    15: ((57.5181, -56.2302), (58.1104, -56.6123)),
    16: ((58.3548, -56.4447), (58.0948, -56.8321)),
    17: ((57.8268, -49.5721), (57.55, -50.3705)),
    18: ((60.2969, -49.9242), (60.6296, -49.3978)),
    19: ((57.6451, -59.8337), (57.988, -59.1956)),
    20: ((60.6533, -51.4683), (61.1832, -51.9363)),
}

CATEGORIES = {"A": (4, 10, 15), "B": (2, 5, 7, 8, 11, 12, 13, 14, 16), "C": (3, 6, 9, 17, 20)}
EXCLUDED_TARGETS = (18,)


def build_surveillance(mc_runs: int = 25, seed: int = 0, fusers=None) -> ScenarioConfig:
    params = {
        "scan_interval_s": 2.0,
        "fusion_interval_s": 10.0,
        "duration_s": 4537.0,
        "process_noise_intensity": 0.15,
        "p_detect": 0.99,
        "false_alarm_probability": 1e-6,
        "clutter_density": 1e-6,
        "clutter_cell_range_m": 10.0,
        "clutter_cell_bearing_deg": 0.1,
        "max_speed_mps": 30.0,
        "sigma_range_m": 50.0,
        "sigma_bearing_deg": 2.0,
        "coverage_m": 300_000.0,
        "gate_mass": 0.95,
        "deletion_misses": 6,
        "confirm_window": 2,
        "init_gate_mass": 0.99,
        "track_loss_m": 500.0,
        "association_gate_mass": 0.99,
        "global_deletion_cycles": 6,
        "fusion_center": "R1",
        "radars": {k: list(v) for k, v in RADARS.items()},
        "targets": {str(k): [list(a), list(b)] for k, (a, b) in TARGETS.items()},
        "excluded_targets": list(EXCLUDED_TARGETS),
        "categories": {k: list(v) for k, v in CATEGORIES.items()},
        "weight_objective": "trace",
    }
    return ScenarioConfig(ScenarioKind.SURVEILLANCE, mc_runs, seed, fusers or ("ci", "ici", "hmd-ga"), params)


@dataclass(frozen=True)
class SurveillanceGeometry:
    """Truth and sensors resolved into the fusion-center plane."""

    scan_times: np.ndarray
    fusion_scans: np.ndarray
    target_ids: np.ndarray
    truth: np.ndarray  # (K_scans, T, 4)
    sensors: tuple[RangeBearingSensor, ...]

    @property
    def fusion_times(self) -> np.ndarray:
        return self.scan_times[self.fusion_scans]


def clutter_rate(params: dict) -> float:
    """Expected false alarms per scan: density per resolution cell times the number of cells."""
    cells = (params["coverage_m"] / params["clutter_cell_range_m"]) * (360.0 / params["clutter_cell_bearing_deg"])
    return float(params["clutter_density"] * cells)


def build_geometry(params: dict) -> SurveillanceGeometry:
    dt, duration = float(params["scan_interval_s"]), float(params["duration_s"])
    tf = float(params["fusion_interval_s"])
    if dt <= 0 or tf <= 0 or duration <= 0:
        raise ConfigError("time intervals must be positive")
    ratio = tf / dt
    if abs(ratio - round(ratio)) > 1e-9:
        raise ConfigError("fusion interval must be a whole number of scans")
    scan_times = np.arange(0.0, duration + 1e-9, dt)
    fusion_scans = np.arange(int(round(ratio)), len(scan_times), int(round(ratio)))
    origin = tuple(params["radars"][params["fusion_center"]])
    ids = np.array(sorted(int(k) for k in params["targets"]))
    frac = scan_times / duration
    pos = []
    for tid in ids:
        start, end = params["targets"][str(tid)]
        lat, lon = surface_interpolate(tuple(start), tuple(end), frac)
        pos.append(geodetic_to_enu(lat, lon, origin))
    pos = np.stack(pos, axis=1)  # (K, T, 2)
    vel = np.gradient(pos, scan_times, axis=0)
    truth = np.concatenate([pos, vel], axis=-1)
    rate = clutter_rate(params)
    sensors = tuple(
        RangeBearingSensor(
            geodetic_to_enu(lat, lon, origin),
            float(params["sigma_range_m"]),
            np.deg2rad(float(params["sigma_bearing_deg"])),
            float(params["coverage_m"]),
            float(params["p_detect"]),
            rate,
            float(params["gate_mass"]),
            name,
        )
        for name, (lat, lon) in params["radars"].items()
    )
    return SurveillanceGeometry(scan_times, fusion_scans, ids, truth, sensors)


def simulate_scan(sensor: RangeBearingSensor, positions: np.ndarray, rng: np.random.Generator):
    """Detections ``(m, 2)`` and their origins (target index or ``-1``) for one scan."""
    z = sensor.measure(positions)
    inside = z[:, 0] <= sensor.coverage
    detected = inside & (rng.random(len(z)) < sensor.p_detect)
    idx = np.flatnonzero(detected)
    noise = rng.standard_normal((len(idx), 2)) * [sensor.sigma_r, sensor.sigma_theta]
    zt = z[idx] + noise
    nc = rng.poisson(sensor.clutter_rate)
    zc = np.stack([rng.uniform(0.0, sensor.coverage, nc), rng.uniform(-np.pi, np.pi, nc)], axis=-1)
    Z = np.concatenate([zt, zc])
    origins = np.concatenate([idx, np.full(nc, -1)])
    Z[:, 1] = np.mod(Z[:, 1] + np.pi, 2.0 * np.pi) - np.pi
    perm = rng.permutation(len(Z))
    return Z[perm], origins[perm]


@dataclass
class LocalSnapshot:
    """Confirmed tracks of one sensor at a fusion instant."""

    x: np.ndarray
    P: np.ndarray
    label: np.ndarray


def run_local_tracking(geom: SurveillanceGeometry, params: dict, seed: int, run: int) -> list[list[LocalSnapshot]]:
    """Track every sensor over the whole run; returns snapshots ``[fusion instant][sensor]``."""
    model = MotionModel.ncv(float(params["scan_interval_s"]), float(params["process_noise_intensity"]))
    mgmt = TrackManagementConfig(int(params["deletion_misses"]), int(params["confirm_window"]),
                                 float(params["max_speed_mps"]), float(params["init_gate_mass"]))
    trackers = [LocalTracker(s, model, mgmt, id_start=1000 * i) for i, s in enumerate(geom.sensors)]
    rngs = [run_rng(seed, run, i) for i in range(len(geom.sensors))]
    snaps: list[list[LocalSnapshot]] = []
    fusion_set = set(int(k) for k in geom.fusion_scans)
    for k, t in enumerate(geom.scan_times):
        pos = geom.truth[k, :, :2]
        for trk, sensor, rng in zip(trackers, geom.sensors, rngs):
            Z, origins = simulate_scan(sensor, pos, rng)
            trk.step(float(t), Z, origins)
        if k in fusion_set:
            row = []
            for trk in trackers:
                c = trk.confirmed()
                lab = np.where(trk.label[c] >= 0, geom.target_ids[np.maximum(trk.label[c], 0)], -1)
                row.append(LocalSnapshot(trk.x[c].copy(), trk.P[c].copy(), lab))
            snaps.append(row)
    return snaps


class FusionCenter:
    """Global track store with memory across fusion instants."""

    def __init__(self, method: str, model: MotionModel, objective: str = "trace",
                 gate: float | None = None, deletion_cycles: int = 6):
        self.method = method
        self.model = model
        self.objective = objective
        self.gate = default_gate(4) if gate is None else gate
        self.deletion_cycles = deletion_cycles
        self.x = np.zeros((0, 4))
        self.P = np.zeros((0, 4, 4))
        self.label = np.zeros(0, dtype=int)
        self.updates = np.zeros(0, dtype=int)
        self.stale = np.zeros(0, dtype=int)
        self.failures = 0
        self.fusions = 0
        self._started = False

    def __len__(self) -> int:
        return len(self.x)

    def cycle(self, snapshots: list[LocalSnapshot]) -> None:
        if self._started and len(self):
            self.x, self.P = kf_predict_arrays(self.x, self.P, self.model)
        self._started = True
        touched = np.zeros(len(self), dtype=bool)
        for snap in snapshots:
            if len(snap.x) == 0:
                continue
            if len(self):
                m = associate(self.x, self.P, snap.x, snap.P, self.gate)
                rows = np.array([r for r, _ in m.pairs], dtype=int)
                cols = np.array([c for _, c in m.pairs], dtype=int)
                unmatched = np.array(m.unmatched_cols, dtype=int)
            else:
                rows = cols = np.zeros(0, dtype=int)
                unmatched = np.arange(len(snap.x))
            if len(rows):
                x, P, _, failed = robust_fuse(self.method, self.x[rows], self.P[rows],
                                              snap.x[cols], snap.P[cols], self.objective)
                self.failures += int(failed.sum())
                self.fusions += len(rows)
                self.x[rows], self.P[rows] = x, P
                self.label[rows] = np.where(snap.label[cols] >= 0, snap.label[cols], self.label[rows])
                self.updates[rows] += 1
                touched[rows] = True
            if len(unmatched):
                n = len(unmatched)
                self.x = np.concatenate([self.x, snap.x[unmatched]])
                self.P = np.concatenate([self.P, snap.P[unmatched]])
                self.label = np.concatenate([self.label, snap.label[unmatched]])
                self.updates = np.concatenate([self.updates, np.ones(n, dtype=int)])
                self.stale = np.concatenate([self.stale, np.zeros(n, dtype=int)])
                touched = np.concatenate([touched, np.ones(n, dtype=bool)])
        self.stale = np.where(touched, 0, self.stale + 1)
        keep = self.stale < self.deletion_cycles
        if not keep.all():
            self.x, self.P, self.label = self.x[keep], self.P[keep], self.label[keep]
            self.updates, self.stale = self.updates[keep], self.stale[keep]

    def best_tracks(self, target_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per target, the labelled global track with the most fusion updates (``NaN`` if none)."""
        x = np.full((len(target_ids), 4), np.nan)
        P = np.full((len(target_ids), 4, 4), np.nan)
        for i, tid in enumerate(target_ids):
            cand = np.flatnonzero(self.label == tid)
            if len(cand):
                j = cand[np.argmax(self.updates[cand])]
                x[i], P[i] = self.x[j], self.P[j]
        return x, P


def _nanmean0(a: np.ndarray) -> np.ndarray:
    ok = np.isfinite(a)
    n = ok.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, np.where(ok, a, 0.0).sum(axis=0) / np.maximum(n, 1), np.nan)


def _finite_mean(a: np.ndarray) -> float:
    ok = np.isfinite(a)
    return float(np.mean(a[ok])) if ok.any() else float("nan")


def run_surveillance(cfg: ScenarioConfig, threads: int = 1) -> RunReport:
    """Monte-Carlo evaluation of the fusers on the surveillance scenario.

    Per target and fuser the report holds position RMSE over all runs with a
    labelled global track, the same RMSE with lost tracks (position error
    above the loss threshold) excluded, the lost fraction, 4-D NEES with 95%
    bounds, the reported position-covariance trace and the fraction of runs
    in which the target had a global track.

    Args:
        cfg: Surveillance configuration.
        threads: Worker threads for Monte-Carlo runs. Every run draws from
            its own ``(seed, run)`` stream, so results do not depend on it.
    """
    p = cfg.params
    if "centralized" in cfg.fusers:
        raise ConfigError("centralized fusion is not defined for the surveillance scenario")
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    geom = build_geometry(p)
    fc_model = MotionModel.ncv(float(p["fusion_interval_s"]), float(p["process_noise_intensity"]))
    gate = default_gate(4, float(p["association_gate_mass"]))
    objective = p.get("weight_objective", "trace")
    excluded = set(int(t) for t in p.get("excluded_targets", []))
    keep = np.array([t not in excluded for t in geom.target_ids])
    tids = geom.target_ids[keep]
    K, T, M = len(geom.fusion_scans), len(tids), cfg.mc_runs
    truth = geom.truth[geom.fusion_scans][:, keep]  # (K, T, 4)
    est = {f: np.full((M, K, T, 4), np.nan) for f in cfg.fusers}
    cov = {f: np.full((M, K, T, 4, 4), np.nan) for f in cfg.fusers}
    report = RunReport(cfg)
    timings = {f: 0.0 for f in cfg.fusers}
    timings["local_tracking"] = 0.0
    failures = {f: [0, 0] for f in cfg.fusers}

    def one_run(run: int) -> dict:
        out = {}
        t0 = time.perf_counter()
        snaps = run_local_tracking(geom, p, cfg.seed, run)
        out["local_tracking"] = time.perf_counter() - t0
        for f in cfg.fusers:
            t0 = time.perf_counter()
            fc = FusionCenter(f, fc_model, objective, gate, int(p["global_deletion_cycles"]))
            for k, row in enumerate(snaps):
                fc.cycle(row)
                est[f][run, k], cov[f][run, k] = fc.best_tracks(tids)
            out[f] = (time.perf_counter() - t0, fc.failures, fc.fusions)
        log.info("surveillance run %d/%d done", run + 1, M)
        return out

    if threads == 1:
        results = [one_run(r) for r in range(M)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_run, range(M)))
    for res in results:
        timings["local_tracking"] += res["local_tracking"]
        for f in cfg.fusers:
            dt, nf, nt = res[f]
            timings[f] += dt
            failures[f][0] += nf
            failures[f][1] += nt
    loss = float(p["track_loss_m"])
    times = geom.fusion_times
    for f in cfg.fusers:
        failure_guard(*failures[f], f"surveillance/{f}")
        report.failures[f] = failures[f][0]
        report.timings[f] = timings[f]
        perr = np.linalg.norm(est[f][..., :2] - truth[None, ..., :2], axis=-1)
        lost = perr > loss
        kept = np.where(lost[..., None], np.nan, est[f])
        summary = {}
        for i, tid in enumerate(tids):
            r = rmse_metric(est[f][:, :, i], truth[:, i])
            r_unlost = rmse_metric(kept[:, :, i], truth[:, i])
            ns = nees_metric(est[f][:, :, i], cov[f][:, :, i], truth[:, i])
            tr = _nanmean0(np.trace(cov[f][:, :, i, :2, :2], axis1=-2, axis2=-1))
            tracked = np.isfinite(perr[:, :, i]).mean(axis=0)
            report.add(f, f"rmse_t{tid:02d}", r, times)
            report.add(f, f"rmse_unlost_t{tid:02d}", r_unlost, times)
            report.add(f, f"lost_t{tid:02d}", _nanmean0(np.where(np.isfinite(perr[:, :, i]), lost[:, :, i], np.nan)), times)
            report.add(f, f"nees_t{tid:02d}", ns.value, times, ns.lower, ns.upper)
            report.add(f, f"trace_t{tid:02d}", tr, times)
            report.add(f, f"tracked_t{tid:02d}", tracked, times)
            summary[int(tid)] = {
                "rmse_mean": _finite_mean(r),
                "rmse_unlost_mean": _finite_mean(r_unlost),
                "nees_mean": _finite_mean(ns.value),
                "nees_fraction_above": ns.fraction_above(),
                "trace_mean": _finite_mean(tr),
                "tracked_fraction": float(np.mean(tracked)),
                "lost_fraction": _finite_mean(np.where(np.isfinite(perr[:, :, i]), lost[:, :, i], np.nan)),
            }
        report.summary[f] = summary
    report.timings["local_tracking"] = timings["local_tracking"]
    return report
