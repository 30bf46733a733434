"""Local tracking: Kalman and range-bearing EKF updates, PDA, and track management.

State vectors are ``[x, y, vx, vy]`` in a shared east-north plane (x east,
y north). Measurements are ``(r, θ)`` relative to a sensor position with
``θ = atan2(y, x)``.

:class:`LocalTracker` keeps all tracks of one sensor in stacked arrays so
that prediction, gating and the PDA update run as batched numpy operations.

Track management:

* two detections in consecutive scans that are kinematically compatible
  start a tentative track (two-point differencing plus a speed prior);
* a tentative track is confirmed by a hit in either of the next two scans and
  deleted otherwise;
* a confirmed track is deleted after ``deletion_misses`` consecutive scans
  with an empty gate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import chi2

from .gaussian import GaussianEstimate, NotPositiveDefiniteError, spd_inverse, symmetrize

MIN_RANGE = 1.0


class SingularGeometryError(ValueError):
    """Predicted target position coincides with the sensor."""


class TrackStatus(str, Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


def wrap_angle(a):
    """Map angles to ``(-π, π]``."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


@dataclass(frozen=True)
class MotionModel:
    """Linear Gaussian transition ``x' = F x + w`` with ``w ~ N(0, Q)``."""

    F: np.ndarray
    Q: np.ndarray
    dt: float = 1.0
    q: float | None = None

    def __post_init__(self):
        F, Q = np.asarray(self.F, float), symmetrize(self.Q)
        if F.shape != Q.shape or F.shape[0] != F.shape[1]:
            raise ValueError("F and Q must be square and of equal size")
        if np.linalg.eigvalsh(Q)[0] < -1e-12:
            raise NotPositiveDefiniteError("process noise covariance is not PSD")
        if abs(np.linalg.det(F)) < 1e-12:
            raise ValueError("transition matrix must be invertible")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def ncv(cls, dt: float, q: float, dim: int = 2) -> "MotionModel":
        """Nearly-constant-velocity model with white-acceleration intensity ``q`` (m²/s³)."""
        eye = np.eye(dim)
        F = np.block([[eye, dt * eye], [np.zeros((dim, dim)), eye]])
        Q = q * np.block([[dt**3 / 3 * eye, dt**2 / 2 * eye], [dt**2 / 2 * eye, dt * eye]])
        return cls(F, Q, dt, q)


@dataclass(frozen=True)
class RangeBearingSensor:
    """Monostatic 2-D radar.

    Attributes:
        position: Sensor location in the common east-north plane (m).
        sigma_r: Range noise standard deviation (m).
        sigma_theta: Bearing noise standard deviation (rad).
        coverage: Maximum range (m); the field of view is a full circle.
        p_detect: Probability of detecting a target inside coverage.
        clutter_rate: Expected number of false alarms per scan.
        gate_mass: Probability mass of the validation gate.
    """

    position: np.ndarray
    sigma_r: float
    sigma_theta: float
    coverage: float = 300_000.0
    p_detect: float = 0.99
    clutter_rate: float = 0.0
    gate_mass: float = 0.95
    name: str = "sensor"

    def __post_init__(self):
        if self.sigma_r <= 0 or self.sigma_theta <= 0:
            raise ValueError("sensor noise standard deviations must be positive")
        if not 0.0 < self.p_detect <= 1.0:
            raise ValueError("p_detect must lie in (0, 1]")
        if not 0.0 < self.gate_mass < 1.0:
            raise ValueError("gate_mass must lie in (0, 1)")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))

    @property
    def R(self) -> np.ndarray:
        return np.diag([self.sigma_r**2, self.sigma_theta**2])

    @property
    def clutter_density(self) -> float:
        """False alarms per unit measurement volume (per m·rad)."""
        return self.clutter_rate / (self.coverage * 2.0 * np.pi)

    @property
    def gate_threshold(self) -> float:
        return float(chi2.ppf(self.gate_mass, 2))

    def measure(self, pos: np.ndarray) -> np.ndarray:
        """Noise-free ``(r, θ)`` of positions ``(..., 2)``."""
        d = np.asarray(pos, dtype=float)[..., :2] - self.position
        return np.stack([np.hypot(d[..., 0], d[..., 1]), np.arctan2(d[..., 1], d[..., 0])], axis=-1)

    def jacobian(self, state: np.ndarray) -> np.ndarray:
        """Jacobian of ``(r, θ)`` with respect to ``[x, y, vx, vy]``; shape ``(..., 2, 4)``."""
        state = np.asarray(state, dtype=float)
        d = state[..., :2] - self.position
        r2 = np.sum(d * d, axis=-1)
        if np.any(r2 < MIN_RANGE**2):
            raise SingularGeometryError("predicted position is within 1 m of the sensor")
        r = np.sqrt(r2)
        H = np.zeros(state.shape[:-1] + (2, state.shape[-1]))
        H[..., 0, 0] = d[..., 0] / r
        H[..., 0, 1] = d[..., 1] / r
        H[..., 1, 0] = -d[..., 1] / r2
        H[..., 1, 1] = d[..., 0] / r2
        return H

    def to_cartesian(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Converted position and its linearized covariance for measurements ``(m, 2)``."""
        z = np.atleast_2d(z)
        r, th = z[:, 0], z[:, 1]
        c, s = np.cos(th), np.sin(th)
        pos = self.position + np.stack([r * c, r * s], axis=-1)
        J = np.zeros((len(z), 2, 2))
        J[:, 0, 0], J[:, 0, 1] = c, -r * s
        J[:, 1, 0], J[:, 1, 1] = s, r * c
        return pos, J @ self.R @ np.swapaxes(J, -1, -2)


# ---------------------------------------------------------------------------
# filter primitives
# ---------------------------------------------------------------------------


def kf_predict_arrays(x: np.ndarray, P: np.ndarray, model: MotionModel):
    return x @ model.F.T, symmetrize(model.F @ P @ model.F.T + model.Q)


def kf_update_arrays(x, P, nu, H, R):
    """Joseph-form update given innovations ``nu``; all arrays may carry a batch axis."""
    S = symmetrize(H @ P @ np.swapaxes(H, -1, -2) + R)
    K = P @ np.swapaxes(H, -1, -2) @ spd_inverse(S, "innovation covariance")
    IKH = np.eye(P.shape[-1]) - K @ H
    P_new = IKH @ P @ np.swapaxes(IKH, -1, -2) + K @ R @ np.swapaxes(K, -1, -2)
    return x + (K @ nu[..., None])[..., 0], symmetrize(P_new)


def kf_predict(est: GaussianEstimate, model: MotionModel) -> GaussianEstimate:
    x, P = kf_predict_arrays(est.mean, est.cov, model)
    return GaussianEstimate(x, P)


def kf_update(est: GaussianEstimate, z, H, R) -> GaussianEstimate:
    z = np.atleast_1d(np.asarray(z, float))
    H = np.atleast_2d(np.asarray(H, float))
    R = np.atleast_2d(np.asarray(R, float))
    x, P = kf_update_arrays(est.mean, est.cov, z - H @ est.mean, H, R)
    return GaussianEstimate(x, P)


def ekf_update_range_bearing(est: GaussianEstimate, z, sensor: RangeBearingSensor) -> GaussianEstimate:
    """EKF update with one ``(r, θ)`` measurement; the bearing innovation is wrapped."""
    H = sensor.jacobian(est.mean)
    nu = np.asarray(z, float) - sensor.measure(est.mean)
    nu[1] = wrap_angle(nu[1])
    x, P = kf_update_arrays(est.mean, est.cov, nu, H, sensor.R)
    return GaussianEstimate(x, P)


@dataclass
class PDAResult:
    """Batched PDA outcome: updated states and per-detection association weights."""

    x: np.ndarray
    P: np.ndarray
    beta: np.ndarray
    beta0: np.ndarray
    gated: np.ndarray
    d2: np.ndarray


def pda_update_arrays(x: np.ndarray, P: np.ndarray, Z: np.ndarray, sensor: RangeBearingSensor) -> PDAResult:
    """Probabilistic data association update of ``T`` predicted tracks with one scan.

    Args:
        x, P: Predicted states ``(T, 4)`` and covariances ``(T, 4, 4)``.
        Z: Detections ``(m, 2)`` as ``(r, θ)``.
        sensor: Sensor model providing ``R``, ``p_detect``, gate and clutter density.

    Returns:
        Updated states with the association weights ``beta`` ``(T, m)``
        (zero outside the gate) and the no-detection weight ``beta0``.
    """
    T, m = x.shape[0], Z.shape[0]
    if T == 0:
        return PDAResult(x, P, np.zeros((0, m)), np.zeros(0), np.zeros((0, m), bool), np.zeros((0, m)))
    H = sensor.jacobian(x)
    R = sensor.R
    S = symmetrize(H @ P @ np.swapaxes(H, -1, -2) + R)
    Sinv = spd_inverse(S, "innovation covariance")
    zhat = sensor.measure(x)
    nu = Z[None, :, :] - zhat[:, None, :]
    nu[..., 1] = wrap_angle(nu[..., 1])
    d2 = np.einsum("tmi,tij,tmj->tm", nu, Sinv, nu)
    gated = d2 <= sensor.gate_threshold
    pd, pg = sensor.p_detect, sensor.gate_mass
    lam = sensor.clutter_density
    det_S = np.linalg.det(S)
    # likelihood ratio normalization: clutter density against detection likelihood
    b = lam * 2.0 * np.pi * np.sqrt(det_S) * (1.0 - pd * pg) / pd
    e = np.where(gated, np.exp(-0.5 * np.minimum(d2, 700.0)), 0.0)
    if lam == 0.0:
        b = np.where(gated.any(axis=1), 0.0, 1.0)
    denom = b + e.sum(axis=1)
    beta = e / denom[:, None]
    beta0 = b / denom
    nu_c = np.einsum("tm,tmi->ti", beta, nu)
    K = P @ np.swapaxes(H, -1, -2) @ Sinv
    x_new = x + (K @ nu_c[..., None])[..., 0]
    IKH = np.eye(x.shape[1]) - K @ H
    Pc = IKH @ P @ np.swapaxes(IKH, -1, -2) + K @ R @ np.swapaxes(K, -1, -2)
    spread = np.einsum("tm,tmi,tmj->tij", beta, nu, nu) - nu_c[:, :, None] * nu_c[:, None, :]
    P_new = beta0[:, None, None] * P + (1.0 - beta0)[:, None, None] * Pc + K @ spread @ np.swapaxes(K, -1, -2)
    any_gated = gated.any(axis=1)
    x_new = np.where(any_gated[:, None], x_new, x)
    P_new = np.where(any_gated[:, None, None], symmetrize(P_new), P)
    return PDAResult(x_new, P_new, beta, beta0, gated, d2)


# ---------------------------------------------------------------------------
# track management
# ---------------------------------------------------------------------------


@dataclass
class Track:
    id: int
    estimate: GaussianEstimate
    status: TrackStatus
    miss_count: int = 0
    last_update: float = 0.0
    label: int = -1
    hits: int = 0


def pda_update(track: Track, measurements: np.ndarray, sensor: RangeBearingSensor, time: float | None = None) -> Track:
    """Single-track PDA update; the track's miss counter follows the gate outcome."""
    Z = np.asarray(measurements, dtype=float).reshape(-1, 2)
    res = pda_update_arrays(track.estimate.mean[None], track.estimate.cov[None], Z, sensor)
    hit = bool(res.gated[0].any())
    return Track(
        track.id,
        GaussianEstimate(res.x[0], res.P[0]),
        track.status,
        0 if hit else track.miss_count + 1,
        track.last_update if time is None or not hit else time,
        track.label,
        track.hits + int(hit),
    )


@dataclass(frozen=True)
class TrackManagementConfig:
    deletion_misses: int = 6
    confirm_window: int = 2
    max_speed: float = 30.0
    init_gate_mass: float = 0.99
    exclusion_gate_mass: float = 0.999
    label_streak: int = 3


def two_point_initialize(p1, R1, p2, R2, dt: float, max_speed: float) -> GaussianEstimate:
    """State from two converted position fixes one scan apart.

    Differencing gives velocity ``(p2 - p1) / dt`` with covariance
    ``(R1 + R2) / dt²``; this is then combined with a zero-mean speed prior of
    standard deviation ``max_speed`` per axis so that far-range fixes with
    kilometer-level cross-range noise do not produce absurd velocities.
    """
    x = np.concatenate([p2, (p2 - p1) / dt])
    P = np.block([[R2, R2 / dt], [R2 / dt, (R1 + R2) / dt**2]])
    H = np.hstack([np.zeros((2, 2)), np.eye(2)])
    x, P = kf_update_arrays(x, P, -x[2:], H, max_speed**2 * np.eye(2))
    return GaussianEstimate(x, P)


class LocalTracker:
    """Multi-target tracker of one sensor: PDA per track plus track management.

    Tracks are stored as stacked arrays ``x (T, 4)`` and ``P (T, 4, 4)``.
    Detection origins (target index or ``-1`` for clutter) are carried along
    only to label tracks for evaluation; they never influence estimation.
    """

    def __init__(self, sensor: RangeBearingSensor, model: MotionModel,
                 config: TrackManagementConfig | None = None, id_start: int = 0):
        self.sensor = sensor
        self.model = model
        self.config = config or TrackManagementConfig()
        self._ids = itertools.count(id_start)
        self.x = np.zeros((0, 4))
        self.P = np.zeros((0, 4, 4))
        self.id = np.zeros(0, dtype=int)
        self.confirmed_mask = np.zeros(0, dtype=bool)
        self.misses = np.zeros(0, dtype=int)
        self.label = np.zeros(0, dtype=int)
        self._cand = np.zeros(0, dtype=int)
        self._streak = np.zeros(0, dtype=int)
        self.last_update = np.zeros(0)
        self._pending: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._init_gate = float(chi2.ppf(self.config.init_gate_mass, 2))
        self._exclusion_gate = float(chi2.ppf(self.config.exclusion_gate_mass, 2))

    def __len__(self) -> int:
        return self.x.shape[0]

    def step(self, time: float, Z: np.ndarray, origins: np.ndarray | None = None) -> None:
        """Process one scan of detections ``Z (m, 2)`` taken at ``time``."""
        Z = np.asarray(Z, dtype=float).reshape(-1, 2)
        origins = np.full(len(Z), -1) if origins is None else np.asarray(origins)
        used = np.zeros(len(Z), dtype=bool)
        if len(self):
            self.x, self.P = kf_predict_arrays(self.x, self.P, self.model)
            res = pda_update_arrays(self.x, self.P, Z, self.sensor)
            self.x, self.P = res.x, res.P
            hit = res.gated.any(axis=1)
            # detections close to an existing track never seed a new one
            used |= (res.d2 <= self._exclusion_gate).any(axis=0)
            self.misses = np.where(hit, 0, self.misses + 1)
            self.last_update = np.where(hit, time, self.last_update)
            if len(Z):
                best = np.argmax(res.beta, axis=1)
                strong = hit & (res.beta[np.arange(len(self)), best] > res.beta0)
                seen = np.where(strong, origins[best], -1)
                self._streak = np.where(seen == self._cand, self._streak + 1, 1)
                self._cand = seen
                # relabel only after the same origin dominated several scans in a row
                switch = (self._cand >= 0) & (self._streak >= self.config.label_streak)
                self.label = np.where(switch, self._cand, self.label)
            self._manage(hit)
        self._initiate(time, Z[~used], origins[~used])

    def _manage(self, hit: np.ndarray) -> None:
        tentative = ~self.confirmed_mask
        self.confirmed_mask = self.confirmed_mask | hit
        drop = (tentative & ~hit & (self.misses >= self.config.confirm_window)) | (
            ~tentative & (self.misses >= self.config.deletion_misses)
        )
        if drop.any():
            keep = ~drop
            self.x, self.P = self.x[keep], self.P[keep]
            self.id, self.confirmed_mask = self.id[keep], self.confirmed_mask[keep]
            self.misses, self.label = self.misses[keep], self.label[keep]
            self._cand, self._streak = self._cand[keep], self._streak[keep]
            self.last_update = self.last_update[keep]

    def _initiate(self, time: float, Z: np.ndarray, origins: np.ndarray) -> None:
        pos, Rc = self.sensor.to_cartesian(Z) if len(Z) else (np.zeros((0, 2)), np.zeros((0, 2, 2)))
        prev = self._pending
        self._pending = (pos, Rc, origins)
        if prev is None or len(prev[0]) == 0 or len(pos) == 0:
            return
        p0, R0, o0 = prev
        dt = self.model.dt
        d = pos[None, :, :] - p0[:, None, :]
        dist = np.linalg.norm(d, axis=-1)
        # displacement beyond what the maximum speed allows must be explained by noise
        excess = d * np.clip(1.0 - self.config.max_speed * dt / np.maximum(dist, 1e-12), 0.0, None)[..., None]
        C = R0[:, None] + Rc[None, :]
        a, b, c = C[..., 0, 0], C[..., 0, 1], C[..., 1, 1]
        ex, ey = excess[..., 0], excess[..., 1]
        cost = (c * ex * ex - 2.0 * b * ex * ey + a * ey * ey) / (a * c - b * b)
        feasible = cost <= self._init_gate
        if not feasible.any():
            return
        rows, cols = linear_sum_assignment(np.where(feasible, cost, 1e9))
        ok = feasible[rows, cols]
        rows, cols = rows[ok], cols[ok]
        new_x, new_P = [], []
        for a, b in zip(rows, cols):
            est = two_point_initialize(p0[a], R0[a], pos[b], Rc[b], dt, self.config.max_speed)
            new_x.append(est.mean)
            new_P.append(est.cov)
        n = len(new_x)
        self.x = np.concatenate([self.x, np.array(new_x)])
        self.P = np.concatenate([self.P, np.array(new_P)])
        self.id = np.concatenate([self.id, [next(self._ids) for _ in range(n)]]).astype(int)
        self.confirmed_mask = np.concatenate([self.confirmed_mask, np.zeros(n, dtype=bool)])
        self.misses = np.concatenate([self.misses, np.zeros(n, dtype=int)])
        lab = np.where(o0[rows] == origins[cols], origins[cols], -1)
        self.label = np.concatenate([self.label, lab]).astype(int)
        self._cand = np.concatenate([self._cand, lab]).astype(int)
        self._streak = np.concatenate([self._streak, np.where(lab >= 0, 2, 0)]).astype(int)
        self.last_update = np.concatenate([self.last_update, np.full(n, time)])
        keep = np.ones(len(pos), dtype=bool)
        keep[cols] = False
        self._pending = (pos[keep], Rc[keep], origins[keep])

    def confirmed(self) -> np.ndarray:
        return self.confirmed_mask.copy()

    def tracks(self) -> list[Track]:
        return [
            Track(int(i), GaussianEstimate(x, P), TrackStatus.CONFIRMED if s else TrackStatus.TENTATIVE, int(m), float(t), int(lab))
            for i, x, P, s, m, t, lab in zip(self.id, self.x, self.P, self.confirmed_mask, self.misses,
                                             self.last_update, self.label)
        ]
