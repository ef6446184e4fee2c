import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergonode import (AssumptionError, DbcMatrix, NucConfig, dbc_eigen, dbc_nuclear_norm,
                      dbc_to_dense, ergodic_limits, expected_coefficients,
                      expected_pmi_solution, expected_psd_solution, expected_sbm_graph,
                      gram_ergo_pmi, transition_matrix)
from ergonode.expected import (check_conjecture_scaling, dbc_from_dense, dbc_from_eigen,
                               geometric_sum, transition_eigenvalues)

reals = st.floats(-5, 5, allow_nan=False)
sizes = st.integers(2, 12)


class TestDense:
    def test_identity_and_ones(self):
        assert np.array_equal(dbc_to_dense(DbcMatrix(3, 0, 0, 1)), np.eye(6))
        assert np.array_equal(dbc_to_dense(DbcMatrix(3, 1, 1, 1)), np.ones((6, 6)))

    def test_expected_graph(self):
        assert np.array_equal(dbc_to_dense(DbcMatrix(4, 0.6, 0.06, 0.0)),
                              expected_sbm_graph(4, 0.6, 0.06).adjacency)

    def test_json_round_trip(self):
        Z = DbcMatrix(5, 0.25, -1.5, 3.0)
        assert DbcMatrix.from_json(Z.to_json()) == Z


class TestEigen:
    def test_hand_cases(self):
        assert dbc_eigen(DbcMatrix(2, 0, 0, 1)) == (1, 1, 1)
        assert dbc_eigen(DbcMatrix(2, 1, 1, 1)) == (4, 0, 0)
        nu = 0.7
        assert dbc_eigen(DbcMatrix(3, nu, -nu, nu)) == pytest.approx((0, 6 * nu, 0))

    @pytest.mark.parametrize("lams,m", [((1, 1, 1), 2), ((4, 0, 0), 2), ((0, 4.2, 0), 3)])
    def test_inverse(self, lams, m):
        Z = dbc_from_eigen(*lams, m)
        assert dbc_eigen(Z) == pytest.approx(lams, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(sizes, reals, reals, reals)
    def test_agrees_with_dense_solver(self, m, c1, c2, c3):
        Z = DbcMatrix(m, c1, c2, c3)
        l1, l2, l3 = dbc_eigen(Z)
        expected = np.sort([l1, l2] + [l3] * (2 * m - 2))
        assert np.allclose(np.linalg.eigvalsh(dbc_to_dense(Z)), expected, atol=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(sizes, reals, reals, reals)
    def test_round_trip(self, m, c1, c2, c3):
        Z = dbc_from_eigen(*dbc_eigen(DbcMatrix(m, c1, c2, c3)), m)
        assert (Z.c1, Z.c2, Z.c3) == pytest.approx((c1, c2, c3), abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(sizes, reals, reals, reals, reals, reals, reals)
    def test_closure(self, m, a1, a2, a3, b1, b2, b3):
        A, B = DbcMatrix(m, a1, a2, a3), DbcMatrix(m, b1, b2, b3)
        la, lb = np.array(dbc_eigen(A)), np.array(dbc_eigen(B))
        for dense, lam in ((dbc_to_dense(A) + dbc_to_dense(B), la + lb),
                           (dbc_to_dense(A) @ dbc_to_dense(B), la * lb)):
            Z, dev = dbc_from_dense(dense)
            assert dev <= 1e-12 * max(1.0, np.abs(dense).max())
            ref = dbc_from_eigen(*lam, m)
            assert (Z.c1, Z.c2, Z.c3) == pytest.approx((ref.c1, ref.c2, ref.c3),
                                                       abs=1e-12 * max(1, np.abs(lam).max()))

    @settings(max_examples=100, deadline=None)
    @given(sizes, reals, reals, st.floats(0, 5))
    def test_psd_condition(self, m, c1, c2, extra):
        c3 = c1 + extra
        c13 = ((m - 1) * c1 + c3) / m
        small = DbcMatrix(m, c13, c2, c13)
        if min(dbc_eigen(small)) >= 0:
            assert np.linalg.eigvalsh(dbc_to_dense(DbcMatrix(m, c1, c2, c3))).min() >= -1e-9


class TestNuclearNorm:
    def test_hand_cases(self):
        nu = 0.3
        assert dbc_nuclear_norm(DbcMatrix(4, nu, -nu, nu)) == pytest.approx(8 * nu)
        assert dbc_nuclear_norm(DbcMatrix(4, 0, 0, 1)) == 8
        assert dbc_nuclear_norm(DbcMatrix(2, 1, 1, 1)) == 4

    def test_matches_singular_values(self, rng):
        for _ in range(20):
            Z = DbcMatrix(int(rng.integers(2, 8)), *rng.normal(size=3))
            s = np.linalg.svd(dbc_to_dense(Z), compute_uv=False)
            assert dbc_nuclear_norm(Z) == pytest.approx(s.sum(), rel=1e-10)


class TestCoefficients:
    def test_transition_eigenvalues(self):
        _, l2, l3 = transition_eigenvalues(2, 0.6, 0.06)
        dense = np.sort(np.linalg.eigvals(transition_matrix(expected_sbm_graph(2, 0.6, 0.06))).real)
        assert l2 == pytest.approx(0.666667, abs=1e-6)
        assert l3 == pytest.approx(-0.833333, abs=1e-6)
        assert np.allclose(dense, sorted([1.0, l2, l3, l3]), atol=1e-12)

    def test_beta(self):
        assert expected_coefficients(50, 0.6, 0.06, 8, 5).beta == pytest.approx(0.004)

    @pytest.mark.parametrize("a,b", [(0.6, 0.06), (0.3, 0.2), (0.9, 0.0)])
    def test_match_ergodic_limits(self, a, b):
        m = 50
        c = expected_coefficients(m, a, b, 8, 5)
        lim = ergodic_limits(expected_sbm_graph(m, a, b), 8, 5)
        Z, dev = dbc_from_dense(lim.positive)
        assert dev <= 1e-12
        assert (Z.c1, Z.c2, Z.c3) == pytest.approx((c.alpha1, c.alpha2, c.alpha3), abs=1e-12)
        assert np.allclose(lim.negative, c.beta, atol=1e-12, rtol=0)

    def test_geometric_sum(self):
        assert geometric_sum(0.5, 3) == pytest.approx(0.875)
        assert geometric_sum(1.0, 4) == 4.0
        assert geometric_sum(1 - 1e-13, 3) == pytest.approx(3.0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 60), st.floats(0.05, 1.0), st.floats(0.01, 0.99),
           st.integers(2, 12), st.integers(1, 10))
    def test_ordering(self, m, a, frac, w, k):
        b = frac * a * (m - 1) / m
        c = expected_coefficients(m, a, b, w, k)
        assert c.alpha1 > c.alpha3 > 0
        assert c.alpha1 > c.alpha2 > 0
        assert c.alpha2 < c.beta
        assert c.nu1 > 0

    def test_degenerate_corners(self):
        # one step never returns to its start, so alpha3 = pi_i W_ii = 0
        assert expected_coefficients(5, 0.6, 0.06, 1, 5).alpha3 == pytest.approx(0, abs=1e-15)
        # without cross edges the walk never changes community
        c = expected_coefficients(5, 0.6, 0.0, 4, 5)
        assert c.alpha2 == pytest.approx(0, abs=1e-15) and c.nu1 > 0

    def test_assumptions(self):
        with pytest.raises(AssumptionError):
            expected_coefficients(10, 0.1, 0.2, 8, 5)
        with pytest.raises(AssumptionError):
            expected_coefficients(10, 0.6, 0.06, 8, 0)


class TestSolutions:
    def test_pmi_zero(self):
        from ergonode.expected import ExpectedCoefficients

        Z = expected_pmi_solution(ExpectedCoefficients(3, 0.2, 0.2, 0.2, 0.2))
        assert (Z.c1, Z.c2, Z.c3) == (0.0, 0.0, 0.0)

    def test_pmi_matches_general_path(self):
        m = 50
        c = expected_coefficients(m, 0.6, 0.06, 8, 5)
        X = gram_ergo_pmi(ergodic_limits(expected_sbm_graph(m, 0.6, 0.06), 8, 5)).values
        assert np.allclose(dbc_to_dense(expected_pmi_solution(c)), X, atol=1e-10, rtol=0)
        l1, l2, l3 = dbc_eigen(expected_pmi_solution(c))
        assert l3 != 0

    def test_psd_solution(self):
        c = expected_coefficients(50, 0.6, 0.06, 8, 5)
        nu1, Z = expected_psd_solution(c)
        assert dbc_eigen(Z) == pytest.approx((0, 100 * nu1, 0), abs=1e-12)
        assert dbc_nuclear_norm(Z) == pytest.approx(nu1 * 100, rel=1e-14)
        assert nu1 == pytest.approx(np.log((c.alpha13 + c.beta) / (c.alpha2 + c.beta)))

    def test_conjecture_report(self):
        c = expected_coefficients(10, 0.6, 0.06, 8, 5)
        at_boundary = check_conjecture_scaling(c, c.nu1)
        assert at_boundary["relative_deviation"] <= 1e-2
        half = check_conjecture_scaling(c, c.nu1 / 2, NucConfig(nu=1.0, max_iter=200))
        assert set(half) >= {"relative_deviation", "trace", "eigenvalue_ratio"}
        tiny = check_conjecture_scaling(c, 1e-4)
        assert tiny["trace"] <= 1e-4 * 20 * (1 + 1e-9)
