"""Gaussian and Gaussian-mixture track densities plus SPD matrix helpers.

Every estimate that moves between trackers, fusers and metrics is a
:class:`GaussianEstimate`. Covariances are symmetrized on construction and
checked for positive definiteness so that repeated fusion cannot silently
drift into an indefinite matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp

SYMMETRY_TOL = 1e-9
JITTER = 1e-10
_JITTER_FLOOR = 1e-12
_NEGATIVE_LIMIT = -1e-10
_LOG_2PI = np.log(2.0 * np.pi)


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a covariance (or information) matrix is not SPD."""


class DimensionMismatchError(ValueError):
    pass


def symmetrize(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def make_spd(cov, name: str = "covariance") -> np.ndarray:
    """Symmetrize ``cov`` and enforce positive definiteness.

    A smallest eigenvalue in ``(-1e-10, 1e-12]`` is repaired by adding
    ``1e-10 * I``; anything more negative raises
    :class:`NotPositiveDefiniteError`.
    """
    cov = symmetrize(np.atleast_2d(np.asarray(cov, dtype=float)))
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise NotPositiveDefiniteError(f"{name} has non-finite entries")
    lam_min = np.linalg.eigvalsh(cov)[0]
    if lam_min <= _JITTER_FLOOR:
        if lam_min > _NEGATIVE_LIMIT:
            cov = cov + JITTER * np.eye(cov.shape[0])
        else:
            raise NotPositiveDefiniteError(
                f"{name} is not positive definite (smallest eigenvalue {lam_min:.3e})"
            )
    return cov


def spd_inverse(cov: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Invert a symmetric positive-definite matrix through its Cholesky factor.

    Accepts a single ``(n, n)`` matrix or a stack ``(..., n, n)``. The result
    is symmetric to machine precision.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 2:
        try:
            c = cho_factor(cov, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NotPositiveDefiniteError(
                f"cannot invert {name}: not positive definite"
            ) from exc
        return symmetrize(cho_solve(c, np.eye(cov.shape[0])))
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        flat = cov.reshape(-1, *cov.shape[-2:])
        bad = int(np.argmin(np.linalg.eigvalsh(flat)[:, 0]))
        idx = tuple(int(i) for i in np.unravel_index(bad, cov.shape[:-2]))
        raise NotPositiveDefiniteError(
            f"cannot invert {name} at batch index {idx}: not positive definite"
        ) from exc
    chol_inv = np.linalg.inv(chol)
    return symmetrize(np.swapaxes(chol_inv, -1, -2) @ chol_inv)


def loewner_leq(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """``a ⪯ b``: every eigenvalue of ``b - a`` is at least ``-tol``."""
    return bool(np.linalg.eigvalsh(symmetrize(np.asarray(b) - np.asarray(a)))[0] >= -tol)


@dataclass(frozen=True)
class GaussianEstimate:
    """Mean vector and SPD covariance of a Gaussian track density."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float)).copy()
        if mean.ndim != 1:
            raise DimensionMismatchError(f"mean must be a vector, got shape {mean.shape}")
        cov = make_spd(self.cov)
        if cov.shape[0] != mean.shape[0]:
            raise DimensionMismatchError(
                f"mean has dimension {mean.shape[0]} but covariance is {cov.shape}"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def information(self) -> np.ndarray:
        return spd_inverse(self.cov, "covariance")

    def logpdf(self, x) -> np.ndarray:
        """Log density at points ``x`` of shape ``(..., n)``."""
        x = np.asarray(x, dtype=float)
        chol = np.linalg.cholesky(self.cov)
        diff = (x - self.mean).reshape(-1, self.dim)
        sol = np.linalg.solve(chol, diff.T)
        maha = np.sum(sol * sol, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        out = -0.5 * (maha + logdet + self.dim * _LOG_2PI)
        return out.reshape(x.shape[:-1]) if x.ndim > 1 else out.reshape(())

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def sample(self, rng: np.random.Generator, size: int, inflation: float = 1.0) -> np.ndarray:
        """Draw ``size`` points, optionally from the covariance scaled by ``inflation``."""
        chol = np.linalg.cholesky(inflation * self.cov)
        z = rng.standard_normal((size, self.dim))
        return self.mean + z @ chol.T

    def mahalanobis2(self, x) -> float:
        d = np.asarray(x, dtype=float) - self.mean
        return float(d @ np.linalg.solve(self.cov, d))

    def allclose(self, other: "GaussianEstimate", rtol: float = 1e-9, atol: float = 1e-12) -> bool:
        return bool(
            np.allclose(self.mean, other.mean, rtol=rtol, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=rtol, atol=atol)
        )

    @classmethod
    def scalar(cls, mean: float, var: float) -> "GaussianEstimate":
        return cls(np.array([mean]), np.array([[var]]))


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted sum of Gaussian components with weights summing to one."""

    weights: np.ndarray
    components: tuple[GaussianEstimate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        comps = tuple(self.components)
        if len(comps) == 0 or w.shape != (len(comps),):
            raise DimensionMismatchError("need one weight per component")
        if np.any(w <= 0) or np.any(w > 1):
            raise ValueError("mixture weights must lie in (0, 1]")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {w.sum():.15f}, not 1")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise DimensionMismatchError(f"components have differing dimensions {sorted(dims)}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, GaussianEstimate]]) -> "GaussianMixture":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs]), tuple(p[1] for p in pairs))

    @classmethod
    def single(cls, est: GaussianEstimate) -> "GaussianMixture":
        return cls(np.array([1.0]), (est,))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def __len__(self) -> int:
        return len(self.components)

    def logpdf(self, x) -> np.ndarray:
        terms = np.stack([c.logpdf(x) for c in self.components], axis=0)
        return logsumexp(terms, axis=0, b=self.weights.reshape((-1,) + (1,) * (terms.ndim - 1)))

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def sample(self, rng: np.random.Generator, size: int, inflation: float = 1.0) -> np.ndarray:
        counts = rng.multinomial(size, self.weights)
        parts = [c.sample(rng, k, inflation) for c, k in zip(self.components, counts) if k]
        pts = np.concatenate(parts, axis=0)
        return pts[rng.permutation(size)]


Density = GaussianEstimate | GaussianMixture


def as_mixture(d: Density) -> GaussianMixture:
    return d if isinstance(d, GaussianMixture) else GaussianMixture.single(d)


def moment_match(mix: GaussianMixture | Sequence[tuple[float, GaussianEstimate]]) -> GaussianEstimate:
    """Single Gaussian with the first two moments of a mixture.

    ``cov = Σ w_i Γ_i + Σ w_i (x_i - m)(x_i - m)^T``; for two components the
    spread term equals ``w_1 w_2 (x_1 - x_2)(x_1 - x_2)^T``.
    """
    if not isinstance(mix, GaussianMixture):
        mix = GaussianMixture.from_pairs(mix)
    if len(mix) == 1:
        return mix.components[0]
    w = mix.weights
    means = np.stack([c.mean for c in mix.components])
    covs = np.stack([c.cov for c in mix.components])
    mean = w @ means
    d = means - mean
    cov = np.einsum("i,ijk->jk", w, covs) + np.einsum("i,ij,ik->jk", w, d, d)
    return GaussianEstimate(mean, cov)


def spread_of_means(x1, x2, w1: float, w2: float) -> np.ndarray:
    d = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    return w1 * w2 * np.outer(d, d)
