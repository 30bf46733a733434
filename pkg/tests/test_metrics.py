from __future__ import annotations

import numpy as np
import pytest

from hmdfusion.gaussian import GaussianEstimate
from hmdfusion.metrics import (
    EllipseSummary,
    bench_fusers,
    ellipse_from_cov,
    nees,
    nees_bounds,
    rmse,
)

from conftest import random_estimate


class TestRMSE:
    def test_perfect(self):
        truth = np.arange(12.0).reshape(3, 4)
        assert np.all(rmse(np.broadcast_to(truth, (5, 3, 4)), truth) == 0)

    def test_hand_value(self):
        est = np.array([[[3.0, 4.0]], [[0.0, 0.0]]])
        assert rmse(est, np.zeros((1, 2)))[0] == pytest.approx(np.sqrt(12.5))

    def test_worse_run_increases(self):
        rng = np.random.default_rng(0)
        est = rng.normal(size=(10, 1, 2))
        base = rmse(est, np.zeros((1, 2)))[0]
        worse = np.concatenate([est, np.full((1, 1, 2), 2 * np.abs(est).max() + 1)])
        assert rmse(worse, np.zeros((1, 2)))[0] > base

    def test_nan_runs_skipped(self):
        est = np.array([[[3.0, 4.0]], [[np.nan, np.nan]]])
        assert rmse(est, np.zeros((1, 2)))[0] == pytest.approx(5.0)
        assert np.isnan(rmse(np.full((2, 1, 2), np.nan), np.zeros((1, 2)))[0])

    def test_rotation_invariant(self):
        rng = np.random.default_rng(1)
        est, truth = rng.normal(size=(20, 7, 2)), rng.normal(size=(7, 2))
        c, s = np.cos(0.7), np.sin(0.7)
        Rot = np.array([[c, -s], [s, c]])
        np.testing.assert_allclose(rmse(est @ Rot.T, truth @ Rot.T), rmse(est, truth))

    def test_components(self):
        est = np.array([[[1.0, 0.0, 10.0, 0.0]]])
        assert rmse(est, np.zeros((1, 4)))[0] == 1.0
        assert rmse(est, np.zeros((1, 4)), components=None)[0] == pytest.approx(np.sqrt(101))


class TestNEES:
    def test_bounds_hand_value(self):
        lo, hi = nees_bounds(200, 2)
        assert float(lo) == pytest.approx(1.73, abs=0.01)
        assert float(hi) == pytest.approx(2.29, abs=0.01)

    def test_consistent_estimator(self):
        M, K = 5000, 40
        rng = np.random.default_rng(2)
        P = np.array([[2.0, 0.6], [0.6, 1.0]])
        truth = rng.normal(size=(K, 2))
        est = truth + rng.multivariate_normal(np.zeros(2), P, size=(M, K))
        s = nees(est, np.broadcast_to(P, (M, K, 2, 2)), truth)
        assert np.mean(s.value) == pytest.approx(2.0, abs=0.1)
        assert s.fraction_inside() >= 0.9

    def test_halved_covariance_doubles(self):
        M = 5000
        rng = np.random.default_rng(3)
        P = np.eye(2)
        est = rng.multivariate_normal(np.zeros(2), P, size=(M, 1))
        full = nees(est, np.broadcast_to(P, (M, 1, 2, 2)), np.zeros((1, 2))).value[0]
        half = nees(est, np.broadcast_to(P / 2, (M, 1, 2, 2)), np.zeros((1, 2))).value[0]
        assert half == pytest.approx(2 * full)
        assert half == pytest.approx(4.0, abs=0.2)

    def test_missing_runs_shrink_bounds_sample(self):
        est = np.zeros((4, 2, 2))
        est[:2, 1] = np.nan
        s = nees(est, np.broadcast_to(np.eye(2), (4, 2, 2, 2)), np.zeros((2, 2)))
        np.testing.assert_array_equal(s.runs, [4, 2])


class TestEllipse:
    def test_identity(self):
        e = ellipse_from_cov(np.eye(2))
        assert e.semi_axes == pytest.approx((2.0, 2.0), abs=2e-3)
        assert e.semi_axes[0] == pytest.approx(np.sqrt(-2 * np.log(1 - 0.865)))

    def test_axis_aligned(self):
        e = ellipse_from_cov(np.diag([4.0, 1.0]))
        assert e.orientation == pytest.approx(0.0)
        assert e.semi_axes[0] == pytest.approx(2 * e.semi_axes[1])

    def test_rotation_equivariant(self):
        rng = np.random.default_rng(4)
        est = random_estimate(rng, 2)
        base = ellipse_from_cov(est)
        t = 0.4
        Rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        rot = ellipse_from_cov(GaussianEstimate(Rot @ est.mean, Rot @ est.cov @ Rot.T))
        assert rot.semi_axes == pytest.approx(base.semi_axes)
        d = (rot.orientation - base.orientation - t) % np.pi
        assert min(d, np.pi - d) < 1e-9
        np.testing.assert_allclose(rot.center, Rot @ est.mean)

    def test_boundary_on_contour(self):
        cov = np.array([[2.5, -1.0], [-1.0, 1.2]])
        e = ellipse_from_cov(GaussianEstimate([1.0, -1.0], cov))
        pts = e.boundary(50) - e.center
        q = np.einsum("ni,ij,nj->n", pts, np.linalg.inv(cov), pts)
        np.testing.assert_allclose(q, -2 * np.log(1 - 0.865), rtol=1e-9)

    def test_invalid_axes(self):
        with pytest.raises(ValueError):
            EllipseSummary(np.zeros(2), (1.0, 2.0), 0.0, 0.865)


def test_bench_normalized_to_naive():
    rng = np.random.default_rng(5)
    pairs = [(random_estimate(rng, 4), random_estimate(rng, 4)) for _ in range(8)]
    r = bench_fusers(pairs, ("ci", "hmd-ga"), min_calls=64, repeats=2)
    assert r.relative["naive"] == 1.0
    assert set(r.relative) == {"naive", "ci", "hmd-ga"}
    assert r.calls == 64
