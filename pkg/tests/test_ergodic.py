import math

import numpy as np
import pytest
from scipy import optimize

from ergonode import (ConnectivityError, Geometric, Graph, HardWindow, InputError,
                      InverseFactorial, LimitCoefficients, clip_pmi, degrees, double_limits,
                      empirical_pmi, ergodic_limits, finite_r_limits, gram_ergo_pmi,
                      project_psd_rank, stationary_distribution, weighted_ergodic_limits)
from ergonode.errors import EmptyInputError
from ergonode.ergodic import resolve_weights

from conftest import random_connected, single_edge, triangle


def _two_components():
    A = np.zeros((5, 5))
    A[:3, :3] = 1 - np.eye(3)
    A[3, 4] = A[4, 3] = 1
    return Graph(A)


class TestErgodicLimits:
    def test_single_edge_w1(self):
        lim = ergodic_limits(single_edge(), 1, 5)
        assert np.allclose(lim.positive, [[0, 0.5], [0.5, 0]], atol=1e-15)
        assert np.allclose(lim.negative, 1.25, atol=1e-15)

    def test_single_edge_w2(self):
        lim = ergodic_limits(single_edge(), 2, 1)
        assert np.allclose(lim.positive, 0.5, atol=1e-15)
        assert np.allclose(lim.negative, 0.5, atol=1e-15)

    def test_triangle_w1(self):
        lim = ergodic_limits(triangle(), 1, 1)
        assert np.allclose(lim.positive, (np.ones((3, 3)) - np.eye(3)) / 6, atol=1e-15)

    @pytest.mark.parametrize("w", [1, 3, 8])
    def test_symmetry_and_sums(self, rng, w):
        g = random_connected(12, rng)
        lim = ergodic_limits(g, w, 5)
        pi = stationary_distribution(g)
        assert np.max(np.abs(lim.positive - lim.positive.T)) <= 1e-12
        assert np.max(np.abs(lim.negative - lim.negative.T)) <= 1e-12
        assert np.allclose(lim.positive.sum(axis=1), w * pi, atol=1e-12, rtol=0)
        assert lim.positive.sum() == pytest.approx(w, abs=1e-12)
        assert lim.negative.sum() == pytest.approx(5 * w, abs=1e-12)

    def test_disconnected(self):
        lim = ergodic_limits(_two_components(), 2, 1)
        assert np.all(lim.positive[:3, 3:] == 0)
        assert np.all(lim.negative > 0)
        assert lim.positive.sum() == pytest.approx(2.0)
        X = gram_ergo_pmi(lim).values
        assert np.all(np.isneginf(X[:3, 3:]))
        assert np.array_equal(np.isneginf(X), np.isneginf(X.T))

    def test_modularity_form(self, rng):
        g = random_connected(10, rng)
        d = degrees(g)
        vol = d.sum()
        lim = ergodic_limits(g, 1, 3)
        assert np.allclose(lim.positive * vol, g.adjacency, atol=1e-12, rtol=0)
        assert np.allclose(lim.negative * vol, 3 * np.outer(d, d) / vol, atol=1e-12, rtol=0)


class TestWeightedLimits:
    def test_hard_window_specialization(self, rng):
        g = random_connected(7, rng)
        a = weighted_ergodic_limits(g, np.ones(4), 5)
        b = ergodic_limits(g, 4, 5)
        assert np.allclose(a.positive, b.positive, atol=1e-15)
        assert np.allclose(a.negative, b.negative, atol=1e-15)

    def test_inverse_factorial_single_edge(self):
        # oracle: 20-term truncated series of pi_i sum_v (W^v)_{01} / v!
        series = sum(1 / math.factorial(v) for v in range(1, 21) if v % 2 == 1)
        lim = weighted_ergodic_limits(single_edge(), InverseFactorial(), 1)
        assert lim.positive[0, 1] == pytest.approx(0.5 * series, abs=1e-12)
        assert lim.positive[0, 1] == pytest.approx(0.587600, abs=1e-6)
        assert np.allclose(lim.negative, 0.25 * (math.e - 1), atol=1e-12)
        assert lim.negative[0, 0] == pytest.approx(0.429570, abs=1e-6)

    def test_single_term(self, rng):
        g = random_connected(5, rng)
        assert np.allclose(weighted_ergodic_limits(g, [1.0], 2).positive,
                           ergodic_limits(g, 1, 2).positive)

    def test_geometric_truncation(self):
        alpha = resolve_weights(Geometric(0.5))
        tail = 0.5 ** (alpha.size + 1) / 0.5
        assert tail < 1e-12
        assert alpha[0] == 0.5 and alpha[-1] == 0.5 ** alpha.size

    def test_requires_connected(self):
        with pytest.raises(ConnectivityError):
            weighted_ergodic_limits(_two_components(), [1.0], 1)

    def test_double_limit_identical(self, rng):
        g = random_connected(6, rng)
        a = weighted_ergodic_limits(g, Geometric(0.5), 2)
        b = double_limits(g, Geometric(0.5), 2)
        assert np.array_equal(a.positive, b.positive)
        assert np.array_equal(a.negative, b.negative)
        assert b.regime == "double"


class TestFiniteR:
    def test_single_edge_length_two(self):
        # walks 0->1 and 1->0, one per start: N+_01 / (l n) = 1 / 4
        lim = finite_r_limits(single_edge(), [1.0], 1, 2)
        assert lim.positive[0, 1] == pytest.approx(0.25, abs=1e-15)
        assert lim.positive[0, 0] == 0

    def test_empty_sums(self, rng):
        g = random_connected(4, rng)
        lim = finite_r_limits(g, [0.0, 0.0, 1.0], 1, 3)
        assert np.all(lim.positive == 0)

    def test_long_walk_matches_ergodic(self):
        g = single_edge()
        a = finite_r_limits(g, [1.0], 1, 500).positive
        b = weighted_ergodic_limits(g, [1.0], 1).positive
        assert np.linalg.norm(a - b) / np.linalg.norm(b) <= 0.01

    def test_against_monte_carlo(self, rng):
        from ergonode import sample_walks
        from ergonode.walks import count_positive

        g = random_connected(5, rng)
        length = 6
        lim = finite_r_limits(g, [1.0, 0.5], 1, length)
        ws = sample_walks(g, 4000, length, 0)
        emp = count_positive(ws, [1.0, 0.5]) / (4000 * 5 * length)
        assert np.linalg.norm(emp - lim.positive) / np.linalg.norm(lim.positive) < 0.03


class TestPmi:
    def test_independent_joint(self):
        a = np.array([1.0, 2.0, 3.0])
        pmi = empirical_pmi(np.outer(a, a))
        assert np.allclose(pmi.values, 0.0, atol=1e-14)

    def test_zero_entry(self):
        N = np.array([[0.0, 2.0], [2.0, 1.0]])
        pmi = empirical_pmi(N)
        assert np.isneginf(pmi.values[0, 0])
        assert not pmi.finite_mask[0, 0] and pmi.finite_mask[0, 1]

    def test_all_zero(self):
        with pytest.raises(EmptyInputError):
            empirical_pmi(np.zeros((2, 2)), 1, 1, 10)

    def test_single_edge_long_walk(self):
        from ergonode import sample_walks
        from ergonode.walks import count_positive

        ws = sample_walks(single_edge(), 5, 2000, 0)
        pmi = empirical_pmi(count_positive(ws, HardWindow(1)), 1, 5, 2000)
        assert pmi.values[0, 1] == pytest.approx(np.log(2), abs=1e-2)

    def test_equal_coefficients(self):
        P = np.full((3, 3), 0.4)
        assert np.all(gram_ergo_pmi(LimitCoefficients(P, P)).values == 0)

    def test_single_edge_closed_form(self):
        X = gram_ergo_pmi(ergodic_limits(single_edge(), 1, 5)).values
        assert X[0, 1] == pytest.approx(np.log(0.4), abs=1e-15)
        assert X[0, 1] == pytest.approx(-0.916291, abs=1e-6)
        assert np.all(np.isneginf(np.diag(X)))

    def test_scalar_minimizer(self, rng):
        P = rng.uniform(0.1, 1, (3, 3))
        N = rng.uniform(0.1, 1, (3, 3))
        X = gram_ergo_pmi(LimitCoefficients(P, N)).values
        for i in range(3):
            for j in range(3):
                f = lambda x: P[i, j] * np.logaddexp(0, -x) + N[i, j] * np.logaddexp(0, x)
                res = optimize.minimize_scalar(f, bounds=(-20, 20), method="bounded",
                                               options={"xatol": 1e-12})
                assert res.x == pytest.approx(X[i, j], abs=1e-6)

    def test_nonpositive_negative_rejected(self):
        with pytest.raises(InputError):
            gram_ergo_pmi(LimitCoefficients(np.ones((2, 2)), np.zeros((2, 2))))

    def test_clip(self):
        assert clip_pmi(np.array([-np.inf, 1.0])).tolist() == [-30.0, 1.0]


class TestProjection:
    def test_fixed_point(self, rng):
        U = rng.normal(size=(5, 2))
        X = U @ U.T
        assert np.allclose(project_psd_rank(X, 2), X, atol=1e-12)

    def test_hand_cases(self):
        assert np.allclose(project_psd_rank(np.diag([2.0, -1.0]), 2), np.diag([2.0, 0.0]))
        assert np.allclose(project_psd_rank(np.diag([3.0, 2.0, 1.0]), 1),
                           np.diag([3.0, 0.0, 0.0]))

    def test_nearest_among_random(self, rng):
        S = rng.normal(size=(6, 6))
        X = (S + S.T) / 2
        G = project_psd_rank(X, 2)
        best = np.linalg.norm(X - G)
        assert np.linalg.matrix_rank(G, tol=1e-10) <= 2
        assert np.linalg.eigvalsh(G).min() >= -1e-12
        for _ in range(1000):
            U = rng.normal(size=(6, 2)) * rng.uniform(0, 2)
            assert best <= np.linalg.norm(X - U @ U.T) + 1e-12

    def test_rejects_bad_input(self):
        with pytest.raises(InputError):
            project_psd_rank(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)
        with pytest.raises(InputError):
            project_psd_rank(np.array([[-np.inf, 0.0], [0.0, 0.0]]), 1)


def test_empirical_pmi_checks_pair_total():
    with pytest.raises(InputError):
        empirical_pmi(np.ones((2, 2)), 1, 1, 10)
    # r=1 walk from each of n=2 nodes, l=10, w=1: |D+| = 18 pairs
    N = np.array([[0.0, 9.0], [9.0, 0.0]])
    assert empirical_pmi(N, 1, 1, 10).values[0, 1] == pytest.approx(np.log(2))
