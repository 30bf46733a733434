"""Track-to-track association by optimal 2-D assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import chi2

from .gaussian import GaussianEstimate, spd_inverse

DEFAULT_GATE_MASS = 0.99


def default_gate(dim: int = 4, mass: float = DEFAULT_GATE_MASS) -> float:
    return float(chi2.ppf(mass, dim))


def t2t_cost(g: GaussianEstimate, l: GaussianEstimate) -> float:
    """Mahalanobis distance ``d^T (Γg + Γl)^-1 d`` ignoring the unknown cross-covariance."""
    if g.dim != l.dim:
        raise ValueError("track dimensions differ")
    d = g.mean - l.mean
    return float(d @ spd_inverse(g.cov + l.cov, "summed track covariance") @ d)


def t2t_cost_matrix(xg: np.ndarray, Pg: np.ndarray, xl: np.ndarray, Pl: np.ndarray) -> np.ndarray:
    """Batched :func:`t2t_cost` for all global/local pairs; shape ``(Ng, Nl)``."""
    if len(xg) == 0 or len(xl) == 0:
        return np.zeros((len(xg), len(xl)))
    d = xg[:, None, :] - xl[None, :, :]
    Sinv = spd_inverse(Pg[:, None] + Pl[None, :], "summed track covariance")
    return np.einsum("abi,abij,abj->ab", d, Sinv, d)


@dataclass(frozen=True)
class AssignmentProblem:
    """Cost matrix (rows: global tracks, columns: local tracks) and admissible maximum."""

    cost: np.ndarray
    gate: float

    def __post_init__(self):
        cost = np.atleast_2d(np.asarray(self.cost, dtype=float)) if np.size(self.cost) else np.zeros(np.shape(self.cost))
        if np.any(np.isnan(cost)) or np.any(cost < 0):
            raise ValueError("assignment costs must be nonnegative (use +inf to forbid a pair)")
        object.__setattr__(self, "cost", cost)


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    unmatched_rows: tuple[int, ...]
    unmatched_cols: tuple[int, ...]
    total_cost: float


def solve_assignment(problem: AssignmentProblem) -> Matching:
    """Minimum-cost assignment where any row or column may stay unmatched.

    The cost matrix is augmented so that leaving a row or a column unmatched
    costs ``gate / 2`` each; a pair is therefore only matched when its cost is
    below ``gate``. Pairs above the gate are never matched. The objective is
    the sum of matched costs plus ``gate / 2`` per unmatched row and column.
    """
    C = problem.cost
    n, m = C.shape if C.ndim == 2 else (0, 0)
    if n == 0 or m == 0:
        return Matching((), tuple(range(n)), tuple(range(m)), 0.5 * problem.gate * (n + m))
    half = 0.5 * problem.gate
    big = 1e6 * (1.0 + problem.gate + float(np.max(np.where(np.isfinite(C), C, 0.0))))
    aug = np.full((n + m, m + n), big)
    aug[:n, :m] = np.where(C < problem.gate, C, big)
    aug[:n, m:] = np.where(np.eye(n, dtype=bool), half, big)
    aug[n:, :m] = np.where(np.eye(m, dtype=bool), half, big)
    aug[n:, m:] = 0.0
    rows, cols = linear_sum_assignment(aug)
    pairs = tuple((int(r), int(c)) for r, c in zip(rows, cols) if r < n and c < m)
    mr = {r for r, _ in pairs}
    mc = {c for _, c in pairs}
    ur = tuple(i for i in range(n) if i not in mr)
    uc = tuple(j for j in range(m) if j not in mc)
    total = float(sum(C[r, c] for r, c in pairs) + half * (len(ur) + len(uc)))
    return Matching(pairs, ur, uc, total)


def associate(xg, Pg, xl, Pl, gate: float | None = None) -> Matching:
    """Gated optimal association of local tracks to global tracks."""
    gate = default_gate(np.shape(xg)[-1] if len(xg) else np.shape(xl)[-1]) if gate is None else gate
    return solve_assignment(AssignmentProblem(t2t_cost_matrix(xg, Pg, xl, Pl), gate))
