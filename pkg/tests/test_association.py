from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.stats import chi2

from hmdfusion.association import (
    AssignmentProblem,
    associate,
    default_gate,
    solve_assignment,
    t2t_cost,
    t2t_cost_matrix,
)
from hmdfusion.gaussian import GaussianEstimate, NotPositiveDefiniteError

from conftest import random_estimate


class TestCost:
    def test_identical_is_zero(self):
        e = GaussianEstimate([1.0, 2.0], np.eye(2))
        assert t2t_cost(e, e) == 0.0

    def test_scalar_hand_value(self):
        assert t2t_cost(GaussianEstimate([0.0], [[1.0]]), GaussianEstimate([2.0], [[1.0]])) == pytest.approx(2.0)

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        a, b = random_estimate(rng, 4), random_estimate(rng, 4)
        assert t2t_cost(a, b) == pytest.approx(t2t_cost(b, a))

    def test_matrix_matches_pairwise(self):
        rng = np.random.default_rng(1)
        g = [random_estimate(rng, 4) for _ in range(3)]
        loc = [random_estimate(rng, 4) for _ in range(5)]
        C = t2t_cost_matrix(np.stack([e.mean for e in g]), np.stack([e.cov for e in g]),
                            np.stack([e.mean for e in loc]), np.stack([e.cov for e in loc]))
        ref = np.array([[t2t_cost(a, b) for b in loc] for a in g])
        np.testing.assert_allclose(C, ref, rtol=1e-10)

    def test_non_pd_sum(self):
        e = GaussianEstimate([0.0, 0.0], np.eye(2))
        with pytest.raises(NotPositiveDefiniteError):
            t2t_cost_matrix(e.mean[None], -2 * np.eye(2)[None], e.mean[None], e.cov[None])

    def test_default_gate(self):
        assert default_gate() == pytest.approx(chi2.ppf(0.99, 4))


class TestAssignment:
    def test_diagonal_dominant(self):
        C = np.array([[0.1, 5, 5], [5, 0.2, 5], [5, 5, 0.3]])
        m = solve_assignment(AssignmentProblem(C, 100.0))
        assert m.pairs == ((0, 0), (1, 1), (2, 2))

    def test_two_by_two(self):
        m = solve_assignment(AssignmentProblem([[1.0, 10.0], [10.0, 1.0]], 100.0))
        assert m.pairs == ((0, 0), (1, 1))
        assert m.total_cost == 2.0

    def test_gated_pairs_never_matched(self):
        m = solve_assignment(AssignmentProblem([[1.0, 20.0], [30.0, 25.0]], 13.0))
        assert m.pairs == ((0, 0),)
        assert m.unmatched_rows == (1,) and m.unmatched_cols == (1,)

    def test_infinite_costs_allowed(self):
        m = solve_assignment(AssignmentProblem([[np.inf, 1.0]], 10.0))
        assert m.pairs == ((0, 1),)

    def test_negative_cost_rejected(self):
        with pytest.raises(ValueError):
            AssignmentProblem([[-1.0]], 1.0)

    def test_empty(self):
        m = solve_assignment(AssignmentProblem(np.zeros((0, 3)), 4.0))
        assert m.pairs == () and m.unmatched_cols == (0, 1, 2)

    @pytest.mark.parametrize("shape", [(6, 6), (4, 7), (7, 3)])
    def test_matches_brute_force(self, shape):
        rng = np.random.default_rng(sum(shape))
        n, m = shape
        for _ in range(100 if shape == (6, 6) else 20):
            C = rng.uniform(0, 10, size=shape)
            best = _brute_force(C, np.inf)
            got = solve_assignment(AssignmentProblem(C, 1e9))
            assert sum(C[r, c] for r, c in got.pairs) == pytest.approx(best)
            assert len(got.pairs) == min(n, m)

    def test_gated_brute_force(self):
        rng = np.random.default_rng(9)
        gate = 6.0
        for _ in range(30):
            C = rng.uniform(0, 10, size=(5, 5))
            got = solve_assignment(AssignmentProblem(C, gate))
            assert got.total_cost == pytest.approx(_brute_force_gated(C, gate))


def _brute_force(C, gate):
    n, m = C.shape
    if n > m:
        return _brute_force(C.T, gate)
    return min(sum(C[i, p[i]] for i in range(n)) for p in itertools.permutations(range(m), n))


def _brute_force_gated(C, gate):
    """Enumerate every partial matching; each unmatched row or column costs gate/2."""
    n, m = C.shape
    best = np.inf

    def rec(i, used, acc, matched):
        nonlocal best
        if i == n:
            best = min(best, acc + 0.5 * gate * ((n - matched) + (m - matched)))
            return
        rec(i + 1, used, acc, matched)
        for j in range(m):
            if j not in used and C[i, j] < gate:
                rec(i + 1, used | {j}, acc + C[i, j], matched + 1)

    rec(0, frozenset(), 0.0, 0)
    return best


def test_associate_end_to_end():
    rng = np.random.default_rng(4)
    truth = rng.uniform(-1e4, 1e4, size=(4, 4))
    P = np.broadcast_to(np.diag([100.0, 100.0, 4.0, 4.0]), (4, 4, 4))
    local = truth[[2, 0, 3]] + rng.normal(0, 3, size=(3, 4))
    m = associate(truth, P, local, P[:3])
    assert set(m.pairs) == {(2, 0), (0, 1), (3, 2)}
    assert m.unmatched_rows == (1,)
