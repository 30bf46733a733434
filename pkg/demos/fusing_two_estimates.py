"""
Fusing two correlated Gaussian estimates
========================================

Two tracks of the same 2-D state arrive with unknown cross-correlation.
We fuse them with every rule in the package and compare the fused
covariances through their trace and their 86.5% ellipses.
"""

import numpy as np

from hmdfusion.fusion import ci, hmd_ga, ici, naive
from hmdfusion.gaussian import GaussianEstimate
from hmdfusion.metrics import ellipse_from_cov
from hmdfusion.sampling import SampleFusionConfig, gmd_s_gaussian, hmd_s_gaussian

e1 = GaussianEstimate([0.5, 1.0], [[2.5, -1.0], [-1.0, 1.2]])
e2 = GaussianEstimate([2.0, 1.0], [[0.8, -0.5], [-0.5, 4.0]])

# %%
# Closed-form rules. Naive fusion treats the tracks as independent, so its
# covariance is the smallest and, with correlated inputs, overconfident.
# The weighted rules pick their own weight when none is given.
results = {
    "naive": naive(e1, e2),
    "ci": ci(e1, e2),
    "ici": ici(e1, e2),
    "hmd-ga": hmd_ga(e1, e2),
}
for name, res in results.items():
    w = "" if res.weight is None else f"  omega={res.weight.omega:.4f}"
    print(f"{name:7s} trace={np.trace(res.cov):.4f}{w}")

# %%
# The sampled harmonic-mean fuser works on the densities themselves. With
# Gaussian inputs it should land close to, and a little above, HMD-GA at the
# same weight; the geometric-mean fuser reproduces CI.
cfg = SampleFusionConfig(sample_count=5000, rng_seed=0)
sampled = {
    "hmd-ga(0.5)": hmd_ga(e1, e2, omega=0.5).estimate,
    "hmd-s(0.5)": hmd_s_gaussian(e1, e2, 0.5, cfg),
    "ci(0.5)": ci(e1, e2, omega=0.5).estimate,
    "gmd-s(0.5)": gmd_s_gaussian(e1, e2, 0.5, cfg),
}
print()
for name, est in sampled.items():
    ell = ellipse_from_cov(est)
    a, b = ell.semi_axes
    print(f"{name:12s} mean={np.round(est.mean, 3)}  ellipse axes=({a:.3f}, {b:.3f}) "
          f"tilt={np.rad2deg(ell.orientation):6.1f} deg")

# %%
# Inflating the sampling distributions (alpha > 1) widens the sampled
# result; by alpha = 2 it is wider than the geometric-mean fusion.
print()
for alpha in (1.0, 1.25, 1.5, 2.0):
    est = hmd_s_gaussian(e1, e2, 0.5, SampleFusionConfig(5000, alpha, rng_seed=0))
    print(f"alpha={alpha:4.2f}  hmd-s trace={np.trace(est.cov):.4f}")
