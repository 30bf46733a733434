"""Sample-based harmonic- and geometric-mean density fusion.

Samples are drawn directly from the two input densities (no third proposal
density) and reweighted towards the unnormalized fused density

* HMD: ``t(x) = p1(x) p2(x) / ((1-ω) p1(x) + ω p2(x))``
* GMD: ``t(x) = p1(x)^ω p2(x)^(1-ω)``

so a draw from ``p1`` carries weight ``t/p1`` and a draw from ``p2`` weight
``t/p2``. The mean of the raw weights estimates the normalization ``ζ``.

With the adaptive source rule, ``S`` candidates are drawn from each input and,
index by index, the candidate with the larger weight is kept (ties keep the
``p1`` draw). Keeping the larger weight changes the density the kept points
follow, so by default the weights are divided by an estimate of that
selection density built from the empirical distribution of the candidate
weights (see :func:`selection_density`). Without that correction the
moments are biased toward the overlap region.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .gaussian import Density, GaussianEstimate, GaussianMixture, as_mixture, symmetrize

MIN_SAMPLES = 100
MIN_PAIR_SAMPLES = 200
NEGLIGIBLE_ZETA = 1e-12


class DegenerateOverlapError(ValueError):
    """All importance weights vanished: the inputs do not overlap at sample resolution."""


class SourceRule(str, Enum):
    FROM_P1 = "from_p1"
    FROM_P2 = "from_p2"
    ADAPTIVE = "adaptive"


class FusionKind(str, Enum):
    HMD = "hmd"
    GMD = "gmd"


@dataclass(frozen=True)
class SampleFusionConfig:
    """Sampling settings.

    Attributes:
        sample_count: Number of retained samples ``S`` (at least 100).
        inflation: Covariance inflation ``α ≥ 1`` applied when drawing; the
            weights are still computed with the uninflated densities, which
            widens the fused estimate as ``α`` grows.
        source_rule: Which input density the samples come from.
        rng_seed: Seed for :func:`numpy.random.default_rng`.
        selection_correction: Reweight adaptively selected samples by their
            estimated selection density.
    """

    sample_count: int = 5000
    inflation: float = 1.0
    source_rule: SourceRule = SourceRule.ADAPTIVE
    rng_seed: int = 0
    selection_correction: bool = True

    def __post_init__(self):
        if int(self.sample_count) < MIN_SAMPLES:
            raise ValueError(f"sample_count must be at least {MIN_SAMPLES}")
        if not self.inflation >= 1.0:
            raise ValueError("inflation factor must be >= 1")
        object.__setattr__(self, "sample_count", int(self.sample_count))
        object.__setattr__(self, "source_rule", SourceRule(self.source_rule))

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([int(self.rng_seed) % 2**64, stream])


@dataclass(frozen=True)
class WeightedSampleSet:
    """Points with nonnegative importance weights and the implied normalization."""

    points: np.ndarray
    weights: np.ndarray
    zeta: float
    from_p1: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        if not self.zeta > 0:
            raise DegenerateOverlapError("normalization constant is not positive")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def fraction_from_p1(self) -> float:
        return float(np.mean(self.from_p1))

    @property
    def normalized_weights(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    @property
    def effective_sample_size(self) -> float:
        w = self.normalized_weights
        return float(1.0 / np.sum(w * w))

    def expectation(self, f: Callable[[np.ndarray], np.ndarray] | np.ndarray) -> np.ndarray:
        vals = f(self.points) if callable(f) else np.asarray(f)
        return np.tensordot(self.normalized_weights, vals, axes=(0, 0))

    def standard_error(self, f: Callable[[np.ndarray], np.ndarray] | np.ndarray) -> np.ndarray:
        """Delta-method standard error of the self-normalized expectation."""
        vals = f(self.points) if callable(f) else np.asarray(f)
        w = self.normalized_weights
        centered = vals - np.tensordot(w, vals, axes=(0, 0))
        return np.sqrt(np.tensordot(w * w, centered * centered, axes=(0, 0)))

    @property
    def zeta_standard_error(self) -> float:
        return float(np.std(self.weights) / np.sqrt(self.size))

    def mean(self) -> np.ndarray:
        return self.expectation(lambda x: x)

    def cov(self) -> np.ndarray:
        """Weighted second central moment (no small-sample correction)."""
        d = self.points - self.mean()
        return symmetrize(np.einsum("s,si,sj->ij", self.normalized_weights, d, d))

    def moments(self) -> GaussianEstimate:
        return GaussianEstimate(self.mean(), self.cov())

    def moment_standard_errors(self) -> tuple[np.ndarray, np.ndarray]:
        """Standard errors of the mean vector and of each covariance entry."""
        mu = self.mean()
        d = self.points - mu
        outer = d[:, :, None] * d[:, None, :]
        return self.standard_error(self.points), self.standard_error(outer)


def _log_target(kind: FusionKind, l1: np.ndarray, l2: np.ndarray, omega: float) -> np.ndarray:
    if kind is FusionKind.GMD:
        return omega * l1 + (1.0 - omega) * l2
    # log of 1 / ((1-ω)/p2 + ω/p1)
    return -np.logaddexp(np.log1p(-omega) - l2, np.log(omega) - l1)


def _log_hmd_pair(la: np.ndarray, lb: np.ndarray, l1: np.ndarray, l2: np.ndarray,
                  omega: float) -> np.ndarray:
    """``log(pa pb / ((1-ω) p1 + ω p2))`` for mixture component pairs."""
    return la + lb - np.logaddexp(np.log1p(-omega) + l1, np.log(omega) + l2)


def selection_density(log_p1: np.ndarray, log_p2: np.ndarray, logw1: np.ndarray,
                      logw2: np.ndarray, cand_logw1: np.ndarray,
                      cand_logw2: np.ndarray) -> np.ndarray:
    """Estimated density of points kept by the larger-weight rule.

    A point ``x`` is kept from the ``p1`` stream when its weight beats the
    paired ``p2`` candidate, which happens with probability
    ``P(w2(X2) ≤ w1(x))``; symmetrically for the ``p2`` stream with a strict
    inequality. Both probabilities are read off the empirical distribution of
    the candidate weights.

    Returns:
        ``log q(x)`` at the points whose densities and weights are given.
    """
    s2 = np.sort(cand_logw2)
    s1 = np.sort(cand_logw1)
    keep1 = np.searchsorted(s2, logw1, side="right") / s2.size
    keep2 = np.searchsorted(s1, logw2, side="left") / s1.size
    with np.errstate(divide="ignore"):
        return np.logaddexp(log_p1 + np.log(keep1), log_p2 + np.log(keep2))


def _draw(d: Density, rng: np.random.Generator, size: int, inflation: float) -> np.ndarray:
    return d.sample(rng, size, inflation)


def weighted_samples(log_target: Callable[[np.ndarray], np.ndarray], q1: Density, q2: Density,
                     cfg: SampleFusionConfig, rng: np.random.Generator | None = None) -> WeightedSampleSet:
    """Importance-weighted samples of ``exp(log_target)`` drawn from ``q1`` and/or ``q2``.

    Args:
        log_target: Log of the unnormalized fused density at points ``(S, n)``.
        q1, q2: The two sampling densities.
        cfg: Sample count, inflation and source rule.
        rng: Generator; a fresh one from ``cfg.rng_seed`` when omitted.

    Raises:
        DegenerateOverlapError: If every weight is zero.
    """
    rng = cfg.rng() if rng is None else rng
    S = cfg.sample_count
    rule = cfg.source_rule
    if rule is SourceRule.FROM_P1 or rule is SourceRule.FROM_P2:
        q = q1 if rule is SourceRule.FROM_P1 else q2
        pts = _draw(q, rng, S, cfg.inflation)
        logw = log_target(pts) - q.logpdf(pts)
        src = np.full(S, rule is SourceRule.FROM_P1)
    else:
        x1 = _draw(q1, rng, S, cfg.inflation)
        x2 = _draw(q2, rng, S, cfg.inflation)
        lt1, lt2 = log_target(x1), log_target(x2)
        l11, l21 = q1.logpdf(x1), q2.logpdf(x1)
        l12, l22 = q1.logpdf(x2), q2.logpdf(x2)
        lw1, lw2 = lt1 - l11, lt2 - l22
        src = lw1 >= lw2
        pts = np.where(src[:, None], x1, x2)
        logw = np.where(src, lw1, lw2)
        if cfg.selection_correction:
            lt = np.where(src, lt1, lt2)
            lp1 = np.where(src, l11, l12)
            lp2 = np.where(src, l21, l22)
            # weights of the kept point under either stream
            w_as1 = lt - lp1
            w_as2 = lt - lp2
            logq = selection_density(lp1, lp2, w_as1, w_as2, lw1, lw2)
            logw = lt - logq
    if not np.any(np.isfinite(logw)):
        raise DegenerateOverlapError("inputs do not overlap at sample resolution")
    w = np.exp(logw)
    w[~np.isfinite(w)] = 0.0
    zeta = float(np.mean(w))
    if not zeta > 0:
        raise DegenerateOverlapError("all importance weights are zero")
    return WeightedSampleSet(pts, w, zeta, src)


def choose_sample_source(x1s: np.ndarray, x2s: np.ndarray, p1: Density, p2: Density, omega: float,
                         kind: FusionKind | str = FusionKind.HMD) -> tuple[np.ndarray, np.ndarray]:
    """Per-index choice between paired candidates by larger importance weight.

    Returns:
        ``(points, from_p1)``; ties keep the ``p1`` candidate.
    """
    kind = FusionKind(kind)
    x1s, x2s = np.asarray(x1s, float), np.asarray(x2s, float)

    def logw(x, own):
        l1, l2 = p1.logpdf(x), p2.logpdf(x)
        return _log_target(kind, l1, l2, omega) - (l1 if own == 1 else l2)

    src = logw(x1s, 1) >= logw(x2s, 2)
    return np.where(src[:, None], x1s, x2s), src


def _check_omega(omega: float) -> None:
    if not 0.0 < omega < 1.0:
        raise ValueError(f"sampling fusion needs ω in (0, 1), got {omega}")


def fused_samples(p1: Density, p2: Density, omega: float, cfg: SampleFusionConfig,
                  kind: FusionKind | str = FusionKind.HMD) -> WeightedSampleSet:
    """Weighted samples of the normalized HMD or GMD of two densities."""
    _check_omega(omega)
    kind = FusionKind(kind)
    if p1.dim != p2.dim:
        raise ValueError("densities must have the same dimension")
    return weighted_samples(lambda x: _log_target(kind, p1.logpdf(x), p2.logpdf(x), omega),
                            p1, p2, cfg)


def sample_expectation(f: Callable[[np.ndarray], np.ndarray], p1: Density, p2: Density, omega: float,
                       cfg: SampleFusionConfig, kind: FusionKind | str = FusionKind.HMD):
    """``E[f]`` under the fused density together with its normalization ``ζ``."""
    ws = fused_samples(p1, p2, omega, cfg, kind)
    return ws.expectation(f), ws.zeta


def hmd_s_gaussian(e1: GaussianEstimate, e2: GaussianEstimate, omega: float,
                   cfg: SampleFusionConfig | None = None) -> GaussianEstimate:
    """Moment-matched sampled harmonic-mean fusion of two Gaussians."""
    return fused_samples(e1, e2, omega, cfg or SampleFusionConfig(), FusionKind.HMD).moments()


def gmd_s_gaussian(e1: GaussianEstimate, e2: GaussianEstimate, omega: float,
                   cfg: SampleFusionConfig | None = None) -> GaussianEstimate:
    """Moment-matched sampled geometric-mean fusion of two Gaussians."""
    return fused_samples(e1, e2, omega, cfg or SampleFusionConfig(), FusionKind.GMD).moments()


@dataclass(frozen=True)
class MixtureFusionResult:
    mixture: GaussianMixture
    pair_zetas: np.ndarray
    dropped: tuple[tuple[int, int], ...]


def hmd_s_mixture_detail(m1: Density, m2: Density, omega: float,
                         cfg: SampleFusionConfig | None = None) -> MixtureFusionResult:
    """Harmonic-mean fusion of two Gaussian mixtures, one Gaussian per component pair.

    The fused density is ``Σ_mn a_m b_n p1m p2n / ((1-ω) p1 + ω p2)`` with the
    full mixtures in the denominator. Each term is sampled from its own two
    components with ``max(S / (M N), 200)`` samples, moment matched, and given
    weight proportional to ``a_m b_n ζ_mn``. Pairs with ``ζ_mn`` below
    ``1e-12`` of the largest are dropped.
    """
    cfg = cfg or SampleFusionConfig()
    _check_omega(omega)
    m1, m2 = as_mixture(m1), as_mixture(m2)
    if m1.dim != m2.dim:
        raise ValueError("mixtures must have the same dimension")
    M, N = len(m1), len(m2)
    per_pair = max(cfg.sample_count // (M * N), MIN_PAIR_SAMPLES)
    pair_cfg = SampleFusionConfig(per_pair, cfg.inflation, cfg.source_rule, cfg.rng_seed,
                                  cfg.selection_correction)
    comps, weights, zetas, idx = [], [], np.zeros((M, N)), []
    for i, (a, c1) in enumerate(zip(m1.weights, m1.components)):
        for j, (b, c2) in enumerate(zip(m2.weights, m2.components)):
            def log_t(x, c1=c1, c2=c2):
                return _log_hmd_pair(c1.logpdf(x), c2.logpdf(x), m1.logpdf(x), m2.logpdf(x), omega)

            try:
                ws = weighted_samples(log_t, c1, c2, pair_cfg, pair_cfg.rng(i * N + j))
            except DegenerateOverlapError:
                continue
            zetas[i, j] = ws.zeta
            comps.append(ws.moments())
            weights.append(a * b * ws.zeta)
            idx.append((i, j))
    if not weights:
        raise DegenerateOverlapError("no component pair overlaps")
    weights = np.array(weights)
    keep = weights >= NEGLIGIBLE_ZETA * weights.max()
    dropped = tuple(p for p, k in zip(idx, keep) if not k) + tuple(
        (i, j) for i in range(M) for j in range(N) if (i, j) not in idx
    )
    w = weights[keep] / weights[keep].sum()
    w = w / w.sum()
    mix = GaussianMixture(w, tuple(c for c, k in zip(comps, keep) if k))
    return MixtureFusionResult(mix, zetas, dropped)


def hmd_s_mixture(m1: Density, m2: Density, omega: float,
                  cfg: SampleFusionConfig | None = None) -> GaussianMixture:
    return hmd_s_mixture_detail(m1, m2, omega, cfg).mixture
