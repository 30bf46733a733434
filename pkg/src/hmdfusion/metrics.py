"""Error and consistency metrics, covariance ellipses and fuser benchmarking."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import chi2

from .fusion import CorrelatedPair, fuse_arrays
from .gaussian import GaussianEstimate

ELLIPSE_CONFIDENCE = 0.865


def rmse(estimates: np.ndarray, truth: np.ndarray, components: Sequence[int] | None = (0, 1)) -> np.ndarray:
    """Root-mean-square error over Monte-Carlo runs.

    Args:
        estimates: ``(M, K, n)`` estimates of ``M`` runs over ``K`` steps (``NaN`` for missing).
        truth: ``(K, n)`` common truth or ``(M, K, n)`` per-run truth.
        components: State components included; position ``(0, 1)`` by default,
            ``None`` for all.

    Returns:
        ``(K,)`` series; steps without any estimate are ``NaN``.
    """
    est = np.asarray(estimates, dtype=float)
    tru = np.broadcast_to(np.asarray(truth, dtype=float), est.shape)
    if components is not None:
        est, tru = est[..., list(components)], tru[..., list(components)]
    sq = np.sum((est - tru) ** 2, axis=-1)
    valid = np.isfinite(sq)
    n = valid.sum(axis=0)
    total = np.where(valid, sq, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, np.sqrt(total / np.maximum(n, 1)), np.nan)


def nees_bounds(runs, dim: int, confidence: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """Two-sided χ² acceptance interval for the run-averaged NEES."""
    runs = np.asarray(runs, dtype=float)
    a = 0.5 * (1.0 - confidence)
    with np.errstate(invalid="ignore", divide="ignore"):
        lo = np.where(runs > 0, chi2.ppf(a, runs * dim) / np.maximum(runs, 1), np.nan)
        hi = np.where(runs > 0, chi2.ppf(1.0 - a, runs * dim) / np.maximum(runs, 1), np.nan)
    return lo, hi


@dataclass(frozen=True)
class NeesSeries:
    value: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    runs: np.ndarray

    def fraction_above(self) -> float:
        ok = np.isfinite(self.value)
        return float(np.mean(self.value[ok] > self.upper[ok])) if ok.any() else float("nan")

    def fraction_inside(self) -> float:
        ok = np.isfinite(self.value)
        inside = (self.value[ok] >= self.lower[ok]) & (self.value[ok] <= self.upper[ok])
        return float(np.mean(inside)) if ok.any() else float("nan")


def nees(estimates: np.ndarray, covariances: np.ndarray, truth: np.ndarray,
         confidence: float = 0.95) -> NeesSeries:
    """Run-averaged normalized estimation error squared with χ² bounds.

    Args:
        estimates: ``(M, K, n)`` (``NaN`` rows are skipped).
        covariances: ``(M, K, n, n)``.
        truth: ``(K, n)`` or ``(M, K, n)``.
    """
    est = np.asarray(estimates, dtype=float)
    cov = np.asarray(covariances, dtype=float)
    err = est - np.broadcast_to(np.asarray(truth, dtype=float), est.shape)
    valid = np.all(np.isfinite(err), axis=-1)
    safe_cov = np.where(valid[..., None, None], cov, np.eye(cov.shape[-1]))
    safe_err = np.where(valid[..., None], err, 0.0)
    sol = np.linalg.solve(safe_cov, safe_err[..., None])[..., 0]
    e2 = np.where(valid, np.sum(safe_err * sol, axis=-1), 0.0)
    n = valid.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        value = np.where(n > 0, e2.sum(axis=0) / np.maximum(n, 1), np.nan)
    lo, hi = nees_bounds(n, est.shape[-1], confidence)
    return NeesSeries(value, lo, hi, n)


@dataclass(frozen=True)
class EllipseSummary:
    center: np.ndarray
    semi_axes: tuple[float, float]
    orientation: float
    confidence: float

    def __post_init__(self):
        a, b = self.semi_axes
        if not a >= b > 0:
            raise ValueError("semi-axes must satisfy a >= b > 0")

    def to_dict(self) -> dict:
        return {
            "center": [float(c) for c in self.center],
            "semi_axes": [float(self.semi_axes[0]), float(self.semi_axes[1])],
            "orientation_rad": float(self.orientation),
            "confidence": float(self.confidence),
        }

    def boundary(self, n: int = 100) -> np.ndarray:
        t = np.linspace(0.0, 2.0 * np.pi, n)
        c, s = np.cos(self.orientation), np.sin(self.orientation)
        pts = np.stack([self.semi_axes[0] * np.cos(t), self.semi_axes[1] * np.sin(t)], axis=-1)
        return self.center + pts @ np.array([[c, s], [-s, c]])


def ellipse_from_cov(est: GaussianEstimate | np.ndarray, confidence: float = ELLIPSE_CONFIDENCE,
                     center=None) -> EllipseSummary:
    """Confidence ellipse of the 2-D (position) marginal.

    Semi-axes are ``sqrt(χ²₂(confidence) λ)`` for the covariance eigenvalues
    ``λ``; the orientation is the angle of the major axis from the x axis,
    folded into ``(-π/2, π/2]``.
    """
    if isinstance(est, GaussianEstimate):
        cov, mean = est.cov[:2, :2], est.mean[:2]
    else:
        cov, mean = np.asarray(est, dtype=float)[:2, :2], np.zeros(2)
    if center is not None:
        mean = np.asarray(center, dtype=float)
    lam, vec = np.linalg.eigh(0.5 * (cov + cov.T))
    if lam[0] <= 0:
        raise ValueError("covariance must be positive definite")
    k = chi2.ppf(confidence, 2)
    angle = float(np.arctan2(vec[1, 1], vec[0, 1]))
    if angle <= -np.pi / 2:
        angle += np.pi
    elif angle > np.pi / 2:
        angle -= np.pi
    return EllipseSummary(mean, (float(np.sqrt(k * lam[1])), float(np.sqrt(k * lam[0]))), angle, confidence)


@dataclass(frozen=True)
class BenchResult:
    relative: dict
    seconds_per_call: dict
    calls: int


def bench_fusers(pairs: Sequence[CorrelatedPair] | Sequence[tuple[GaussianEstimate, GaussianEstimate]],
                 fusers: Sequence[str] = ("naive", "ci", "ici", "hmd-ga"), min_calls: int = 10_000,
                 repeats: int = 7, objective: str = "trace") -> BenchResult:
    """Best-of-``repeats`` wall-clock time per fusion, normalized to naive fusion.

    Each fuser fuses the same batch of pairs, including its own weight
    optimization, ``repeats`` times after one warm-up pass; the batch is
    tiled until it has at least ``min_calls`` pairs. The minimum is used
    because background load only ever adds time.
    """
    e1 = [p.est1 if isinstance(p, CorrelatedPair) else p[0] for p in pairs]
    e2 = [p.est2 if isinstance(p, CorrelatedPair) else p[1] for p in pairs]
    reps = int(np.ceil(min_calls / len(e1)))
    x1 = np.tile(np.stack([e.mean for e in e1]), (reps, 1))
    P1 = np.tile(np.stack([e.cov for e in e1]), (reps, 1, 1))
    x2 = np.tile(np.stack([e.mean for e in e2]), (reps, 1))
    P2 = np.tile(np.stack([e.cov for e in e2]), (reps, 1, 1))
    n = len(x1)
    per_call = {}
    fusers = list(dict.fromkeys(["naive", *fusers]))
    for f in fusers:
        fuse_arrays(f, x1[:64], P1[:64], x2[:64], P2[:64], objective=objective)
    times = {f: [] for f in fusers}
    # interleave fusers so slow drifts in machine load affect all equally
    for _ in range(repeats):
        for f in fusers:
            t0 = time.perf_counter()
            fuse_arrays(f, x1, P1, x2, P2, objective=objective)
            times[f].append(time.perf_counter() - t0)
    for f in fusers:
        per_call[f] = float(np.min(times[f])) / n
    rel = {f: per_call[f] / per_call["naive"] for f in fusers}
    return BenchResult(rel, per_call, n)
