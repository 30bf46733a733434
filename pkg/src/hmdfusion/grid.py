"""Dense-grid density engine for 1-D and 2-D verification.

Densities are tabulated on a rectilinear grid and integrated with the
trapezoid rule. This is the numerical reference for normalization
constants, fused moments and divergence integrals; it is deliberately
independent of the closed-form and sampling fusers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import Density, GaussianEstimate, as_mixture

DEFAULT_RESOLUTION = 401
DEFAULT_SIGMAS = 6.0


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class GridDensity:
    """Nonnegative values tabulated on a 1-D or 2-D rectilinear grid."""

    axes: tuple[np.ndarray, ...]
    values: np.ndarray

    def __post_init__(self):
        shape = tuple(len(a) for a in self.axes)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {shape}")
        if np.any(self.values < 0):
            raise ValueError("grid density values must be nonnegative")

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return tuple((float(a[0]), float(a[-1])) for a in self.axes)

    @property
    def resolution(self) -> int:
        return len(self.axes[0])

    def points(self) -> np.ndarray:
        """Grid nodes with shape ``values.shape + (ndim,)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def integrate(self, f: np.ndarray | None = None) -> float:
        """Trapezoid integral of ``values`` (times ``f`` if given)."""
        vals = self.values if f is None else self.values * f
        return trapezoid_nd(vals, self.axes)

    def normalize(self) -> tuple["GridDensity", float]:
        z = self.integrate()
        if not z > 0:
            raise ValueError("cannot normalize a density with zero mass")
        return GridDensity(self.axes, self.values / z), z

    def same_grid(self, other: "GridDensity") -> bool:
        return len(self.axes) == len(other.axes) and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.axes, other.axes)
        )

    def mean(self) -> np.ndarray:
        pts = self.points()
        z = self.integrate()
        return np.array([self.integrate(pts[..., i]) for i in range(self.ndim)]) / z

    def cov(self) -> np.ndarray:
        pts = self.points()
        z = self.integrate()
        mu = self.mean()
        d = pts - mu
        out = np.empty((self.ndim, self.ndim))
        for i in range(self.ndim):
            for j in range(i, self.ndim):
                out[i, j] = out[j, i] = self.integrate(d[..., i] * d[..., j]) / z
        return out

    def moments(self) -> GaussianEstimate:
        return GaussianEstimate(self.mean(), self.cov())


def trapezoid_nd(values: np.ndarray, axes) -> float:
    out = values
    for ax in reversed(axes):
        out = np.trapezoid(out, ax, axis=-1)
    return float(out)


def default_bounds(*densities: Density, sigmas: float = DEFAULT_SIGMAS) -> tuple[tuple[float, float], ...]:
    """``mean ± sigmas·σ`` envelope over every component of every input."""
    comps = [c for d in densities for c in as_mixture(d).components]
    lo = np.min([c.mean - sigmas * np.sqrt(np.diag(c.cov)) for c in comps], axis=0)
    hi = np.max([c.mean + sigmas * np.sqrt(np.diag(c.cov)) for c in comps], axis=0)
    return tuple((float(a), float(b)) for a, b in zip(lo, hi))


def grid_eval(density: Density, bounds=None, resolution: int = DEFAULT_RESOLUTION) -> GridDensity:
    """Tabulate a Gaussian or Gaussian mixture pdf on a grid."""
    if density.dim > 2:
        raise UnsupportedDimensionError(
            f"grid oracle supports 1-D and 2-D densities, got dimension {density.dim}"
        )
    if bounds is None:
        bounds = default_bounds(density)
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    if bounds.shape != (density.dim, 2):
        raise ValueError(f"bounds must have shape ({density.dim}, 2)")
    axes = tuple(np.linspace(lo, hi, resolution) for lo, hi in bounds)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return GridDensity(axes, density.pdf(mesh))


def _check_pair(p1: GridDensity, p2: GridDensity, omega: float) -> None:
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"fusion weight must lie in [0, 1], got {omega}")
    if not p1.same_grid(p2):
        raise ValueError("densities must share a grid")


def harmonic_mean_values(v1: np.ndarray, v2: np.ndarray, omega: float) -> np.ndarray:
    """Unnormalized ω-weighted harmonic mean ``v1 v2 / ((1-ω) v1 + ω v2)``."""
    den = (1.0 - omega) * v1 + omega * v2
    num = v1 * v2
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def geometric_mean_values(v1: np.ndarray, v2: np.ndarray, omega: float) -> np.ndarray:
    """Unnormalized ω-weighted geometric mean ``v1^ω v2^(1-ω)``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.power(v1, omega) * np.power(v2, 1.0 - omega)
    return np.nan_to_num(out, nan=0.0)


def grid_hmd(p1: GridDensity, p2: GridDensity, omega: float) -> tuple[GridDensity, float]:
    """Normalized harmonic-mean fusion on a grid; returns ``(density, zeta_h)``."""
    _check_pair(p1, p2, omega)
    fused = GridDensity(p1.axes, harmonic_mean_values(p1.values, p2.values, omega))
    return fused.normalize()


def grid_gmd(p1: GridDensity, p2: GridDensity, omega: float) -> tuple[GridDensity, float]:
    """Normalized geometric-mean fusion on a grid; returns ``(density, zeta_g)``."""
    _check_pair(p1, p2, omega)
    fused = GridDensity(p1.axes, geometric_mean_values(p1.values, p2.values, omega))
    return fused.normalize()


def grid_product(p1: GridDensity, p2: GridDensity) -> tuple[GridDensity, float]:
    """Normalized product density (naive fusion reference)."""
    if not p1.same_grid(p2):
        raise ValueError("densities must share a grid")
    return GridDensity(p1.axes, p1.values * p2.values).normalize()


def pearson_chi2(q: GridDensity, p: GridDensity) -> float:
    """Pearson χ² divergence ``½ ∫ (q - p)² / p`` evaluated on the grid."""
    ratio = np.zeros_like(q.values)
    np.divide((q.values - p.values) ** 2, p.values, out=ratio, where=p.values > 0)
    return 0.5 * trapezoid_nd(ratio, q.axes)


def average_pearson_chi2(q: GridDensity, p1: GridDensity, p2: GridDensity, omega: float) -> float:
    """ω-weighted average Pearson divergence of ``q`` from ``p1`` and ``p2``."""
    return omega * pearson_chi2(q, p1) + (1.0 - omega) * pearson_chi2(q, p2)


def perturbation_gaps(p1: GridDensity, p2: GridDensity, omega: float, directions: np.ndarray,
                      eps: np.ndarray) -> np.ndarray:
    """Change of the average Pearson divergence when the normalized HMD is perturbed.

    Each direction ``h`` (values on the grid, bounded by one in magnitude) gives
    a zero-mass perturbation ``g = q (h - c)`` of the normalized HMD ``q``;
    ``c`` is chosen so that ``g`` integrates to zero. ``q + ε g`` stays
    nonnegative for ``|ε| < 1/2``.

    Returns:
        Array ``(len(directions), len(eps))`` of ``J(q + ε g) - J(q)``.
    """
    q, _ = grid_hmd(p1, p2, omega)
    base = average_pearson_chi2(q, p1, p2, omega)
    eps = np.asarray(eps, dtype=float)
    if np.any(np.abs(eps) >= 0.5):
        raise ValueError("perturbation size must satisfy |ε| < 1/2")
    out = np.empty((len(directions), eps.size))
    for i, h in enumerate(directions):
        h = np.asarray(h, dtype=float)
        if h.shape != q.values.shape or np.max(np.abs(h)) > 1.0:
            raise ValueError("directions must match the grid and be bounded by one")
        c = q.integrate(h)
        g = q.values * (h - c)
        for j, e in enumerate(eps):
            pert = GridDensity(q.axes, q.values + e * g)
            out[i, j] = average_pearson_chi2(pert, p1, p2, omega) - base
    return out
