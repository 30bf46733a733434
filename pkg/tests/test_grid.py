from __future__ import annotations

import numpy as np
import pytest

from hmdfusion.fusion import ci, naive
from hmdfusion.gaussian import GaussianEstimate, GaussianMixture
from hmdfusion.grid import (
    GridDensity,
    UnsupportedDimensionError,
    default_bounds,
    grid_eval,
    grid_gmd,
    grid_hmd,
    grid_product,
    harmonic_mean_values,
    perturbation_gaps,
)

N01 = GaussianEstimate([0.0], [[1.0]])


def test_standard_normal_integrates_to_one():
    g = grid_eval(N01, [(-8, 8)], 4001)
    assert abs(g.integrate() - 1.0) < 1e-6


def test_2d_density_integrates_to_one(pair52):
    g = grid_eval(pair52[0], [(-10, 10), (-10, 10)], 401)
    assert abs(g.integrate() - 1.0) < 1e-4


def test_bimodal_mixture_integrates_to_one():
    m = GaussianMixture([0.5, 0.5], (GaussianEstimate([-3.0], [[1.0]]), GaussianEstimate([3.0], [[1.0]])))
    assert abs(grid_eval(m, [(-12, 12)], 4001).integrate() - 1.0) < 1e-6


def test_three_dimensional_rejected():
    with pytest.raises(UnsupportedDimensionError):
        grid_eval(GaussianEstimate(np.zeros(3), np.eye(3)))


def test_normalize():
    g = GridDensity((np.linspace(0, 1, 11),), np.full(11, 3.0))
    n, z = g.normalize()
    assert z == pytest.approx(3.0)
    assert n.integrate() == pytest.approx(1.0)


def test_negative_values_rejected():
    with pytest.raises(ValueError):
        GridDensity((np.linspace(0, 1, 3),), np.array([0.1, -0.1, 0.2]))


class TestGridFusion:
    def test_identical_inputs(self):
        g = grid_eval(N01, [(-8, 8)], 801)
        h, zh = grid_hmd(g, g, 0.3)
        np.testing.assert_allclose(h.values, g.values / g.integrate(), atol=1e-10)
        assert zh == pytest.approx(g.integrate(), abs=1e-10)
        gm, zg = grid_gmd(g, g, 0.3)
        np.testing.assert_allclose(gm.values, h.values, atol=1e-10)

    def test_zeta_h_below_zeta_g(self, pair52):
        b = default_bounds(*pair52)
        g1, g2 = grid_eval(pair52[0], b), grid_eval(pair52[1], b)
        for w in (0.2, 0.5, 0.8):
            _, zh = grid_hmd(g1, g2, w)
            _, zg = grid_gmd(g1, g2, w)
            assert 0 < zh <= zg <= 1 + 1e-9

    def test_hmd_above_min_1d(self):
        a, b = GaussianEstimate([0.0], [[1.0]]), GaussianEstimate([1.0], [[2.0]])
        bounds = default_bounds(a, b)
        g1, g2 = grid_eval(a, bounds, 2001), grid_eval(b, bounds, 2001)
        h, _ = grid_hmd(g1, g2, 0.4)
        assert np.all(h.values >= np.minimum(g1.values, g2.values) - 1e-12)

    def test_unnormalized_between_min_and_max(self):
        v1, v2 = np.random.default_rng(0).random((2, 500))
        for w in (0.1, 0.5, 0.9):
            h = harmonic_mean_values(v1, v2, w)
            assert np.all(h >= np.minimum(v1, v2) - 1e-15)
            assert np.all(h <= np.maximum(v1, v2) + 1e-15)

    def test_gmd_endpoints(self, pair52):
        b = default_bounds(*pair52)
        g1, g2 = grid_eval(pair52[0], b), grid_eval(pair52[1], b)
        np.testing.assert_allclose(grid_gmd(g1, g2, 1.0)[0].values, g1.normalize()[0].values, atol=1e-12)
        np.testing.assert_allclose(grid_gmd(g1, g2, 0.0)[0].values, g2.normalize()[0].values, atol=1e-12)

    def test_gmd_moments_match_ci(self, pair52):
        b = default_bounds(*pair52)
        g1, g2 = grid_eval(pair52[0], b), grid_eval(pair52[1], b)
        for w in (0.3, 0.5):
            m = grid_gmd(g1, g2, w)[0].moments()
            ref = ci(*pair52, omega=w).estimate
            np.testing.assert_allclose(m.mean, ref.mean, atol=1e-3)
            np.testing.assert_allclose(m.cov, ref.cov, atol=1e-3)

    def test_product_matches_naive(self, pair52):
        b = default_bounds(*pair52)
        m = grid_product(grid_eval(pair52[0], b), grid_eval(pair52[1], b))[0].moments()
        ref = naive(*pair52).estimate
        np.testing.assert_allclose(m.mean, ref.mean, atol=1e-3)
        np.testing.assert_allclose(m.cov, ref.cov, atol=1e-3)

    def test_bad_weight(self):
        g = grid_eval(N01)
        with pytest.raises(ValueError):
            grid_hmd(g, g, 1.5)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            grid_hmd(grid_eval(N01, [(-5, 5)]), grid_eval(N01, [(-6, 6)]), 0.5)


def test_hmd_minimizes_average_pearson(pair52):
    b = default_bounds(*pair52)
    g1, g2 = grid_eval(pair52[0], b, 201), grid_eval(pair52[1], b, 201)
    rng = np.random.default_rng(5)
    pts = g1.points()
    dirs = []
    for _ in range(5):
        k = rng.normal(size=2)
        dirs.append(np.sin(pts @ k + rng.uniform(0, 2 * np.pi)))
    gaps = perturbation_gaps(g1, g2, 0.35, dirs, [-0.1, -0.01, 0.01, 0.1])
    assert np.all(gaps >= -1e-8)
    assert np.all(gaps[:, [0, 3]] > gaps[:, [1, 2]])
