"""Closed-form track fusers and fusion-weight optimization.

Weight convention used everywhere in the package: ``ω1 = ω`` and
``ω2 = 1 - ω``.

* CI:      ``Γ^-1 = ω Γ1^-1 + (1-ω) Γ2^-1`` (ω = 1 returns the first input).
* ICI:     mutual component ``(ω x1 + (1-ω) x2, ω Γ1 + (1-ω) Γ2)``.
* HMD-GA:  mutual component is the moment-matched Gaussian of the
  denominator mixture ``(1-ω) p1 + ω p2``, i.e.
  ``((1-ω) x1 + ω x2, (1-ω) Γ1 + ω Γ2 + ω(1-ω) d d^T)`` with ``d = x1 - x2``.

ICI and HMD-GA therefore put the weights on opposite inputs for the same ω;
the two coincide in their mutual covariance (up to the spread term) when
ICI is run at ``1 - ω``.

Every fuser has an array core that accepts a leading batch axis so that
Monte-Carlo harnesses can fuse thousands of pairs in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .gaussian import (
    DimensionMismatchError,
    GaussianEstimate,
    NotPositiveDefiniteError,
    loewner_leq,
    spd_inverse,
    symmetrize,
)

OMEGA_GRID_POINTS = 25
OMEGA_TOL = 1e-4
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_FLAT_RTOL = 1e-12


class Method(str, Enum):
    NAIVE = "naive"
    CI = "ci"
    ICI = "ici"
    HMD_GA = "hmd-ga"
    CENTRALIZED = "centralized"
    KNOWN_PRIOR = "known-prior"

    @classmethod
    def parse(cls, name: "str | Method") -> "Method":
        if isinstance(name, Method):
            return name
        key = str(name).strip().lower().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown fusion method {name!r}")


WEIGHTED_METHODS = (Method.CI, Method.ICI, Method.HMD_GA)


class Objective(str, Enum):
    TRACE = "trace"
    DETERMINANT = "determinant"


@dataclass(frozen=True)
class FusionWeight:
    omega: float
    objective: Objective = Objective.TRACE
    how_found: str = "fixed"

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"fusion weight must lie in [0, 1], got {self.omega}")
        object.__setattr__(self, "objective", Objective(self.objective))
        if self.how_found not in ("fixed", "optimized"):
            raise ValueError("how_found must be 'fixed' or 'optimized'")

    @property
    def w1(self) -> float:
        return self.omega

    @property
    def w2(self) -> float:
        return 1.0 - self.omega


@dataclass(frozen=True)
class FusedResult:
    estimate: GaussianEstimate
    method: Method
    weight: FusionWeight | None = None
    mutual: GaussianEstimate | None = None

    @property
    def mean(self) -> np.ndarray:
        return self.estimate.mean

    @property
    def cov(self) -> np.ndarray:
        return self.estimate.cov


@dataclass(frozen=True)
class CorrelatedPair:
    """Two estimates with a known error cross-covariance ``Γ12``."""

    est1: GaussianEstimate
    est2: GaussianEstimate
    cross: np.ndarray

    def __post_init__(self):
        cross = np.asarray(self.cross, dtype=float)
        n = self.est1.dim
        if self.est2.dim != n or cross.shape != (n, n):
            raise DimensionMismatchError("pair dimensions do not match")
        joint = np.block([[self.est1.cov, cross], [cross.T, self.est2.cov]])
        if np.linalg.eigvalsh(symmetrize(joint))[0] < -1e-9:
            raise NotPositiveDefiniteError("joint covariance of the pair is not PSD")
        object.__setattr__(self, "cross", cross)


# ---------------------------------------------------------------------------
# array cores: x (B, n), P (B, n, n), w (B,)
# ---------------------------------------------------------------------------


def _mv(a, x):
    return (a @ x[..., None])[..., 0]


def _naive_arrays(x1, P1, x2, P2, I1=None, I2=None):
    I1 = spd_inverse(P1, "Γ1") if I1 is None else I1
    I2 = spd_inverse(P2, "Γ2") if I2 is None else I2
    P = spd_inverse(I1 + I2, "naive information")
    return _mv(P, _mv(I1, x1) + _mv(I2, x2)), P


def _ci_arrays(x1, P1, x2, P2, w, I1=None, I2=None):
    I1 = spd_inverse(P1, "Γ1") if I1 is None else I1
    I2 = spd_inverse(P2, "Γ2") if I2 is None else I2
    ww = w[..., None, None]
    P = spd_inverse(ww * I1 + (1.0 - ww) * I2, "CI information")
    x = _mv(P, w[..., None] * _mv(I1, x1) + (1.0 - w[..., None]) * _mv(I2, x2))
    # exact endpoints: ω = 1 returns input 1, ω = 0 returns input 2
    x = np.where((w == 1.0)[..., None], x1, np.where((w == 0.0)[..., None], x2, x))
    P = np.where((w == 1.0)[..., None, None], P1, np.where((w == 0.0)[..., None, None], P2, P))
    return x, P


def ici_mutual_arrays(x1, P1, x2, P2, w):
    ww = w[..., None, None]
    return w[..., None] * x1 + (1.0 - w[..., None]) * x2, ww * P1 + (1.0 - ww) * P2


def hmd_mutual_arrays(x1, P1, x2, P2, w):
    """Moment-matched Gaussian of the mixture ``(1-ω) N(x1, Γ1) + ω N(x2, Γ2)``."""
    ww = w[..., None, None]
    d = x1 - x2
    spread = (ww * (1.0 - ww)) * (d[..., :, None] * d[..., None, :])
    gamma = (1.0 - w[..., None]) * x1 + w[..., None] * x2
    return gamma, (1.0 - ww) * P1 + ww * P2 + spread


def _subtract_mutual(x1, x2, I1, I2, gm, Pm_inv, label):
    P = spd_inverse(I1 + I2 - Pm_inv, label)
    x = _mv(P, _mv(I1, x1) + _mv(I2, x2) - _mv(Pm_inv, gm))
    return x, P


def _ici_arrays(x1, P1, x2, P2, w, I1=None, I2=None):
    I1 = spd_inverse(P1, "Γ1") if I1 is None else I1
    I2 = spd_inverse(P2, "Γ2") if I2 is None else I2
    gm, Pm = ici_mutual_arrays(x1, P1, x2, P2, w)
    x, P = _subtract_mutual(x1, x2, I1, I2, gm, spd_inverse(Pm, "ICI mutual covariance"),
                            "ICI information")
    return x, P, gm, Pm


def _hmd_arrays(x1, P1, x2, P2, w, I1=None, I2=None):
    I1 = spd_inverse(P1, "Γ1") if I1 is None else I1
    I2 = spd_inverse(P2, "Γ2") if I2 is None else I2
    gm, Pm = hmd_mutual_arrays(x1, P1, x2, P2, w)
    try:
        Pm_inv = spd_inverse(Pm, "HMD mutual covariance")
        x, P = _subtract_mutual(x1, x2, I1, I2, gm, Pm_inv, "HMD-GA information")
    except NotPositiveDefiniteError as exc:
        eig = np.linalg.eigvalsh(Pm)
        raise NotPositiveDefiniteError(
            f"{exc}; mutual covariance eigenvalues {np.array2string(eig, precision=4)}"
        ) from exc
    return x, P, gm, Pm


def _reduce_inverse(mats: np.ndarray, objective: Objective, name: str) -> np.ndarray:
    """``tr(M⁻¹)`` or ``det(M⁻¹)`` of SPD matrices from one Cholesky factor.

    With ``M = L Lᵀ``, ``tr(M⁻¹) = ‖L⁻¹‖²_F`` and ``det(M⁻¹) = ∏ diag(L)⁻²``,
    which skips forming the inverse itself.
    """
    try:
        chol = np.linalg.cholesky(mats)
    except np.linalg.LinAlgError:
        spd_inverse(mats, name)  # raises with the offending batch index
        raise
    if objective is Objective.TRACE:
        chol_inv = np.linalg.inv(chol)
        return np.einsum("...ij,...ij->...", chol_inv, chol_inv)
    diag = np.diagonal(chol, axis1=-2, axis2=-1)
    return 1.0 / np.prod(diag, axis=-1) ** 2


def weight_objective(method, x1, P1, x2, P2, objective="trace", I1=None, I2=None) -> Callable:
    """Scalar cost ``f(ω)`` minimized by :func:`optimize_weight_arrays`.

    CI and ICI score their fused covariance; HMD-GA scores the inverse of its
    mutual covariance and so needs a single inversion per evaluation.
    The returned callable accepts ``ω`` of shape ``(B,)`` or ``(B, K)``.
    """
    method = Method.parse(method)
    objective = Objective(objective)
    if method not in WEIGHTED_METHODS:
        raise ValueError(f"{method.value} has no fusion weight")
    if method is not Method.HMD_GA:
        I1 = spd_inverse(P1, "Γ1") if I1 is None else I1
        I2 = spd_inverse(P2, "Γ2") if I2 is None else I2
    else:
        d = x1 - x2
        dd = d[..., :, None] * d[..., None, :]

    def expand(a, w):
        extra = w.ndim - 1
        return a.reshape(a.shape[:1] + (1,) * extra + a.shape[1:])

    def cost(w):
        w = np.asarray(w, dtype=float)
        ww = w[..., None, None]
        if method is Method.CI:
            info = ww * expand(I1, w) + (1.0 - ww) * expand(I2, w)
            # tr/det of the fused covariance are those of the inverse information
            return _reduce_inverse(info, objective, "CI information")
        if method is Method.ICI:
            Pm = ww * expand(P1, w) + (1.0 - ww) * expand(P2, w)
            info = expand(I1, w) + expand(I2, w) - spd_inverse(Pm, "ICI mutual covariance")
            return _reduce_inverse(info, objective, "ICI information")
        Pm = (1.0 - ww) * expand(P1, w) + ww * expand(P2, w) + (ww * (1.0 - ww)) * expand(dd, w)
        return _reduce_inverse(Pm, objective, "HMD mutual covariance")

    return cost


def golden_section(cost: Callable, lo: np.ndarray, hi: np.ndarray, tol: float = OMEGA_TOL) -> np.ndarray:
    """Vectorized golden-section minimization on per-element brackets."""
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    width = float(np.max(b - a)) if a.size else 0.0
    if width <= tol:
        return 0.5 * (a + b)
    n_iter = int(math.ceil(math.log(tol / width) / math.log(_INV_PHI)))
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = cost(c), cost(d)
    for _ in range(n_iter):
        left = fc < fd
        # keep [a, d] where f(c) < f(d), else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _INV_PHI * (b - a)
        new_d = a + _INV_PHI * (b - a)
        c_keep = np.where(left, new_c, d)
        d_keep = np.where(left, c, new_d)
        c, d = c_keep, d_keep
        probe = np.where(left, c, d)
        fp = cost(probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
    return 0.5 * (a + b)


def optimize_weight_arrays(method, x1, P1, x2, P2, objective="trace", I1=None, I2=None) -> np.ndarray:
    """Batched ω* search: 25-point scan, golden-section refinement, boundary check.

    Flat objectives (relative spread below 1e-12) return ω = 0.5.
    """
    cost = weight_objective(method, x1, P1, x2, P2, objective, I1, I2)
    B = P1.shape[0]
    grid = np.linspace(0.0, 1.0, OMEGA_GRID_POINTS)
    vals = cost(np.broadcast_to(grid, (B, OMEGA_GRID_POINTS)))
    k = np.argmin(vals, axis=1)
    vmax, vmin = vals.max(axis=1), vals.min(axis=1)
    flat = (vmax - vmin) <= _FLAT_RTOL * np.maximum(np.abs(vals).max(axis=1), 1e-300)
    h = 1.0 / (OMEGA_GRID_POINTS - 1)
    best = grid[k]
    refined = golden_section(cost, np.clip(best - h, 0.0, 1.0), np.clip(best + h, 0.0, 1.0))
    cands = np.stack([refined, best, np.zeros(B), np.ones(B)], axis=1)
    cvals = cost(cands)
    omega = cands[np.arange(B), np.argmin(cvals, axis=1)]
    return np.where(flat, 0.5, omega)


def _as_batch(x1, P1, x2, P2):
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    P1, P2 = np.asarray(P1, float), np.asarray(P2, float)
    single = x1.ndim == 1
    if single:
        x1, x2, P1, P2 = x1[None], x2[None], P1[None], P2[None]
    n = x1.shape[-1]
    if x1.shape != x2.shape or P1.shape != P2.shape or P1.shape != x1.shape + (n,):
        raise DimensionMismatchError("estimate dimensions do not match")
    return x1, P1, x2, P2, single


def fuse_arrays(method, x1, P1, x2, P2, omega=None, objective="trace"):
    """Fuse a batch of estimate pairs with one method.

    Args:
        method: ``naive``, ``ci``, ``ici`` or ``hmd-ga``.
        x1, P1, x2, P2: means ``(B, n)`` and covariances ``(B, n, n)``
            (a single unbatched pair is also accepted).
        omega: scalar or ``(B,)`` fusion weights; optimized when ``None``.
        objective: ``trace`` or ``determinant`` for the weight search.

    Returns:
        ``(x, P, omega)`` with ``omega`` NaN for naive fusion.
    """
    method = Method.parse(method)
    x1, P1, x2, P2, single = _as_batch(x1, P1, x2, P2)
    B = x1.shape[0]
    I1 = spd_inverse(P1, "Γ1")
    I2 = spd_inverse(P2, "Γ2")
    if method is Method.NAIVE:
        x, P = _naive_arrays(x1, P1, x2, P2, I1, I2)
        w = np.full(B, np.nan)
    elif method in WEIGHTED_METHODS:
        if omega is None:
            w = optimize_weight_arrays(method, x1, P1, x2, P2, objective, I1, I2)
        else:
            w = np.broadcast_to(np.asarray(omega, dtype=float), (B,)).copy()
            if np.any((w < 0) | (w > 1)):
                raise ValueError("fusion weight must lie in [0, 1]")
        if method is Method.CI:
            x, P = _ci_arrays(x1, P1, x2, P2, w, I1, I2)
        elif method is Method.ICI:
            x, P, _, _ = _ici_arrays(x1, P1, x2, P2, w, I1, I2)
        else:
            x, P, _, _ = _hmd_arrays(x1, P1, x2, P2, w, I1, I2)
    else:
        raise ValueError(f"{method.value} is not a pairwise track fuser")
    P = symmetrize(P)
    if single:
        return x[0], P[0], float(w[0])
    return x, P, w


# ---------------------------------------------------------------------------
# estimate-level API
# ---------------------------------------------------------------------------


def _check_dims(e1: GaussianEstimate, e2: GaussianEstimate) -> None:
    if e1.dim != e2.dim:
        raise DimensionMismatchError(f"cannot fuse dimensions {e1.dim} and {e2.dim}")


def _resolve_weight(method, e1, e2, omega, objective) -> FusionWeight:
    if isinstance(omega, FusionWeight):
        return omega
    if omega is None:
        return optimize_weight(e1, e2, method, objective)
    return FusionWeight(float(omega), objective, "fixed")


def naive(e1: GaussianEstimate, e2: GaussianEstimate) -> FusedResult:
    """Information-form product of two Gaussians, ignoring correlation."""
    _check_dims(e1, e2)
    x, P = _naive_arrays(e1.mean[None], e1.cov[None], e2.mean[None], e2.cov[None])
    return FusedResult(GaussianEstimate(x[0], P[0]), Method.NAIVE)


def ci(e1: GaussianEstimate, e2: GaussianEstimate, omega=None, objective="trace") -> FusedResult:
    """Covariance intersection; ω is optimized on the fused covariance when omitted."""
    _check_dims(e1, e2)
    weight = _resolve_weight(Method.CI, e1, e2, omega, objective)
    x, P = _ci_arrays(e1.mean[None], e1.cov[None], e2.mean[None], e2.cov[None],
                      np.array([weight.omega]))
    return FusedResult(GaussianEstimate(x[0], P[0]), Method.CI, weight)


def ici(e1: GaussianEstimate, e2: GaussianEstimate, omega=None, objective="trace") -> FusedResult:
    """Inverse covariance intersection with mutual component ``(ω x1 + (1-ω) x2, ω Γ1 + (1-ω) Γ2)``."""
    _check_dims(e1, e2)
    weight = _resolve_weight(Method.ICI, e1, e2, omega, objective)
    x, P, gm, Pm = _ici_arrays(e1.mean[None], e1.cov[None], e2.mean[None], e2.cov[None],
                               np.array([weight.omega]))
    return FusedResult(GaussianEstimate(x[0], P[0]), Method.ICI, weight, GaussianEstimate(gm[0], Pm[0]))


def hmd_ga(e1: GaussianEstimate, e2: GaussianEstimate, omega=None, objective="trace") -> FusedResult:
    """Harmonic-mean fusion with the denominator mixture replaced by its moment-matched Gaussian.

    When ``omega`` is omitted it is chosen to minimize ``f(Γ_m^-1)``, i.e. to
    maximize the mutual-information component.
    """
    _check_dims(e1, e2)
    weight = _resolve_weight(Method.HMD_GA, e1, e2, omega, objective)
    x, P, gm, Pm = _hmd_arrays(e1.mean[None], e1.cov[None], e2.mean[None], e2.cov[None],
                               np.array([weight.omega]))
    return FusedResult(GaussianEstimate(x[0], P[0]), Method.HMD_GA, weight, GaussianEstimate(gm[0], Pm[0]))


def known_prior_fusion(e1: GaussianEstimate, e2: GaussianEstimate,
                       mutual: GaussianEstimate | None) -> FusedResult:
    """Exact fusion when the common (mutual) Gaussian is known and divided out once.

    ``mutual=None`` means no shared information (``Γ_m^-1 = 0``), which
    reduces to naive fusion.
    """
    _check_dims(e1, e2)
    if mutual is None:
        res = naive(e1, e2)
        return FusedResult(res.estimate, Method.KNOWN_PRIOR)
    I1, I2 = e1.information, e2.information
    x, P = _subtract_mutual(e1.mean, e2.mean, I1, I2, mutual.mean, mutual.information,
                            "known-prior information")
    return FusedResult(GaussianEstimate(x, P), Method.KNOWN_PRIOR, None, mutual)


def centralized(prior: GaussianEstimate, measurements: Sequence[tuple]) -> GaussianEstimate:
    """Optimal linear update of one prior with every raw measurement ``(z, H, R)``.

    Uses the information form, so the result does not depend on the order of
    ``measurements``.
    """
    info = prior.information
    vec = info @ prior.mean
    for z, H, R in measurements:
        z = np.atleast_1d(np.asarray(z, float))
        H = np.atleast_2d(np.asarray(H, float))
        R = np.atleast_2d(np.asarray(R, float))
        if H.shape != (z.shape[0], prior.dim) or R.shape != (z.shape[0], z.shape[0]):
            raise DimensionMismatchError("measurement, H and R dimensions do not agree")
        Rinv = spd_inverse(R, "measurement covariance")
        info = info + H.T @ Rinv @ H
        vec = vec + H.T @ Rinv @ z
    P = spd_inverse(info, "centralized information")
    return GaussianEstimate(P @ vec, P)


def fuse(method, e1: GaussianEstimate, e2: GaussianEstimate, omega=None, objective="trace") -> FusedResult:
    method = Method.parse(method)
    if method is Method.NAIVE:
        return naive(e1, e2)
    if method is Method.CI:
        return ci(e1, e2, omega, objective)
    if method is Method.ICI:
        return ici(e1, e2, omega, objective)
    if method is Method.HMD_GA:
        return hmd_ga(e1, e2, omega, objective)
    raise ValueError(f"{method.value} is not a pairwise track fuser")


def optimize_weight(e1: GaussianEstimate, e2: GaussianEstimate, method="hmd-ga",
                    objective="trace") -> FusionWeight:
    """Optimal fusion weight for one pair; see :func:`optimize_weight_arrays`."""
    _check_dims(e1, e2)
    w = optimize_weight_arrays(method, e1.mean[None], e1.cov[None], e2.mean[None], e2.cov[None],
                               objective)
    return FusionWeight(float(w[0]), objective, "optimized")


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def consistency_residual_hmd(pair: CorrelatedPair, omega: float) -> np.ndarray:
    """Residual of the HMD-GA MSE-matching condition (zero means exact consistency).

    ``ω2 Γ1^-1 Γ12 Γm^-1 + ω1 Γm^-1 Γ12 Γ2^-1 - Γ1^-1 Γ12 Γ2^-1`` with the
    HMD-GA mutual covariance ``Γm``.
    """
    w1, w2 = omega, 1.0 - omega
    e1, e2 = pair.est1, pair.est2
    _, Pm = hmd_mutual_arrays(e1.mean, e1.cov, e2.mean, e2.cov, np.asarray(omega))
    I1, I2, Im = e1.information, e2.information, spd_inverse(Pm, "HMD mutual covariance")
    G = pair.cross
    return w2 * I1 @ G @ Im + w1 * Im @ G @ I2 - I1 @ G @ I2


@dataclass(frozen=True)
class ICIStructureReport:
    """Loewner tests of the ICI mutual covariance against its structural requirements."""

    mutual_cov: np.ndarray
    dominates_first: bool
    dominates_second: bool
    within_upper_bound: bool
    min_eig_minus_first: float
    min_eig_minus_second: float

    @property
    def contradiction(self) -> bool:
        """The upper bound holds while a lower bound ``Γm ⪰ Γi`` fails."""
        return self.within_upper_bound and not (self.dominates_first and self.dominates_second)


def ici_structure_check(e1: GaussianEstimate, e2: GaussianEstimate, omega: float,
                        tol: float = 1e-9) -> ICIStructureReport:
    _, Pm = ici_mutual_arrays(e1.mean, e1.cov, e2.mean, e2.cov, np.asarray(omega))
    upper = omega * e1.cov + (1.0 - omega) * e2.cov
    m1 = float(np.linalg.eigvalsh(symmetrize(Pm - e1.cov))[0])
    m2 = float(np.linalg.eigvalsh(symmetrize(Pm - e2.cov))[0])
    return ICIStructureReport(
        mutual_cov=Pm,
        dominates_first=m1 >= -tol,
        dominates_second=m2 >= -tol,
        within_upper_bound=loewner_leq(Pm, upper, tol),
        min_eig_minus_first=m1,
        min_eig_minus_second=m2,
    )


@dataclass(frozen=True)
class PairSamples:
    truth: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    gamma_m: np.ndarray | None


@dataclass(frozen=True)
class StructuredPair:
    """Local estimates built from independent parts plus one shared Gaussian part.

    Each local track is the information-form product of its own independent
    component and the common component, giving ``Γi^-1 = Γm^-1 + Γi,ind^-1``
    and error cross-covariance ``Γ12 = Γ1 Γm^-1 Γ2``.
    """

    ind1: GaussianEstimate
    ind2: GaussianEstimate
    mutual: GaussianEstimate | None

    @property
    def _mutual_info(self) -> np.ndarray:
        n = self.ind1.dim
        return np.zeros((n, n)) if self.mutual is None else self.mutual.information

    def _local(self, ind: GaussianEstimate) -> GaussianEstimate:
        Im = self._mutual_info
        P = spd_inverse(ind.information + Im, "local information")
        vec = ind.information @ ind.mean
        if self.mutual is not None:
            vec = vec + Im @ self.mutual.mean
        return GaussianEstimate(P @ vec, P)

    @property
    def est1(self) -> GaussianEstimate:
        return self._local(self.ind1)

    @property
    def est2(self) -> GaussianEstimate:
        return self._local(self.ind2)

    @property
    def cross(self) -> np.ndarray:
        return self.est1.cov @ self._mutual_info @ self.est2.cov

    @property
    def pair(self) -> CorrelatedPair:
        return CorrelatedPair(self.est1, self.est2, self.cross)

    def draw(self, rng: np.random.Generator, size: int, truth_cov=None) -> PairSamples:
        """Sample truths and the two correlated local estimates around them."""
        n = self.ind1.dim
        truth_cov = np.eye(n) if truth_cov is None else np.asarray(truth_cov, float)
        x = rng.multivariate_normal(np.zeros(n), truth_cov, size=size)
        P1, P2 = self.est1.cov, self.est2.cov
        I1ind, I2ind, Im = self.ind1.information, self.ind2.information, self._mutual_info
        g1 = x + rng.multivariate_normal(np.zeros(n), self.ind1.cov, size=size)
        g2 = x + rng.multivariate_normal(np.zeros(n), self.ind2.cov, size=size)
        if self.mutual is None:
            gm = None
            x1 = g1 @ (P1 @ I1ind).T
            x2 = g2 @ (P2 @ I2ind).T
        else:
            gm = x + rng.multivariate_normal(np.zeros(n), self.mutual.cov, size=size)
            x1 = g1 @ (P1 @ I1ind).T + gm @ (P1 @ Im).T
            x2 = g2 @ (P2 @ I2ind).T + gm @ (P2 @ Im).T
        return PairSamples(x, x1, x2, gm)


def correlated_pair_from_structure(ind1: GaussianEstimate, ind2: GaussianEstimate,
                                   mutual: GaussianEstimate | None) -> StructuredPair:
    return StructuredPair(ind1, ind2, mutual)


@dataclass(frozen=True)
class EigenComparison:
    hmd: np.ndarray
    ici: np.ndarray
    interlaced: bool


def hmd_vs_ici_eigen_compare(e1: GaussianEstimate, e2: GaussianEstimate, omega: float,
                             rtol: float = 1e-9) -> EigenComparison:
    """Descending eigenvalues of the HMD-GA and ICI fused covariances.

    ICI is evaluated at ``1 - ω`` so both fusers subtract the same weighted
    covariance mixture and differ only by the rank-one spread term. The chain
    ``λn(HMD) ≤ λn(ICI) ≤ λn-1(HMD) ≤ … ≤ λ1(HMD) ≤ λ1(ICI)`` is then checked.
    """
    P_h = hmd_ga(e1, e2, omega).cov
    P_i = ici(e1, e2, 1.0 - omega).cov
    lh = np.linalg.eigvalsh(P_h)[::-1]
    li = np.linalg.eigvalsh(P_i)[::-1]
    return EigenComparison(lh, li, eigen_interlaced(lh, li, rtol))


def eigen_interlaced(lam_low: np.ndarray, lam_high: np.ndarray, rtol: float = 1e-9) -> bool:
    """``lam_low[i] ≤ lam_high[i] ≤ lam_low[i-1]`` for descending spectra."""
    tol = rtol * max(float(np.max(np.abs(lam_high))), 1e-300)
    ok = np.all(lam_low <= lam_high + tol)
    ok &= np.all(lam_high[1:] <= lam_low[:-1] + tol)
    return bool(ok)
