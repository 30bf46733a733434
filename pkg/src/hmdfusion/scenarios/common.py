"""Helpers shared by the Monte-Carlo harnesses."""

from __future__ import annotations

import logging

import numpy as np

from ..fusion import fuse_arrays
from ..gaussian import NotPositiveDefiniteError

log = logging.getLogger("hmdfusion.scenarios")


def run_rng(seed: int, run: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one Monte-Carlo run (schedule-independent)."""
    return np.random.default_rng([int(seed), int(run), int(stream)])


def robust_fuse(method, x1, P1, x2, P2, objective="trace", omega=None):
    """Batched fusion that survives individual numerical failures.

    When the batched call fails, pairs are fused one at a time; a failed pair
    keeps its first input and is counted.

    Returns:
        ``(x, P, omega, failed_mask)``.
    """
    try:
        x, P, w = fuse_arrays(method, x1, P1, x2, P2, omega=omega, objective=objective)
        return x, P, w, np.zeros(len(x1), dtype=bool)
    except (NotPositiveDefiniteError, np.linalg.LinAlgError):
        pass
    x, P = np.array(x1, dtype=float), np.array(P1, dtype=float)
    w = np.full(len(x1), np.nan)
    failed = np.zeros(len(x1), dtype=bool)
    for k in range(len(x1)):
        om = None if omega is None else np.broadcast_to(omega, (len(x1),))[k]
        try:
            xk, Pk, wk = fuse_arrays(method, x1[k], P1[k], x2[k], P2[k], omega=om, objective=objective)
            x[k], P[k], w[k] = xk, Pk, wk
        except (NotPositiveDefiniteError, np.linalg.LinAlgError) as exc:
            failed[k] = True
            log.warning("fusion %s failed for batch element %d: %s", method, k, exc)
    return x, P, w, failed


def nees_values(err: np.ndarray, P: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...ij,...j->...", err, np.linalg.inv(P), err)
