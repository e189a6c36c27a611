"""Numeric kernel: SPD solves, seeded draws, nearest-rank quantiles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessband.errors import DefinitenessError, DimensionError, DomainError, EmptyInputError
from hessband.linalg import Rng, dense_sym_solve, derive_seed, gaussian_vector, quantile
from oracles import gaussian_elimination_solve


class TestDenseSymSolve:
    def test_two_by_two(self):
        x = dense_sym_solve(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 3.0]))
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-14)

    def test_identity(self):
        b = np.array([4.0, -2.0, 7.0])
        np.testing.assert_allclose(dense_sym_solve(np.eye(3), b), b, atol=1e-15)

    def test_matches_gaussian_elimination(self):
        rng = np.random.default_rng(42)
        for size in (3, 10, 40, 120):
            q, _ = np.linalg.qr(rng.standard_normal((size, size)))
            eigs = 10.0 ** rng.uniform(-2, 2, size)
            a = (q * eigs) @ q.T
            a = 0.5 * (a + a.T)
            b = rng.standard_normal(size)
            np.testing.assert_allclose(
                dense_sym_solve(a, b),
                gaussian_elimination_solve(a, b),
                rtol=1e-8,
                atol=1e-10,
            )

    def test_rejects_asymmetric(self):
        with pytest.raises(DefinitenessError):
            dense_sym_solve(np.array([[1.0, 0.5], [0.0, 1.0]]), np.array([1.0, 1.0]))

    def test_rejects_indefinite(self):
        with pytest.raises(DefinitenessError):
            dense_sym_solve(np.diag([1.0, -1.0]), np.array([1.0, 1.0]))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            dense_sym_solve(np.ones((2, 3)), np.array([1.0, 1.0]))

    def test_rejects_rhs_mismatch(self):
        with pytest.raises(DimensionError):
            dense_sym_solve(np.eye(2), np.array([1.0, 1.0, 1.0]))

    def test_tolerates_roundoff_asymmetry(self):
        a = np.array([[2.0, 1.0], [1.0 + 1e-16, 2.0]])
        dense_sym_solve(a, np.array([1.0, 1.0]))


class TestGaussianVector:
    def test_deterministic_per_seed(self):
        a = gaussian_vector(Rng(7), 100)
        b = gaussian_vector(Rng(7), 100)
        assert np.array_equal(a, b)

    def test_seeds_differ(self):
        assert not np.array_equal(gaussian_vector(Rng(1), 50), gaussian_vector(Rng(2), 50))

    def test_moments(self):
        draws = gaussian_vector(Rng(123), 100_000)
        assert abs(draws.mean()) < 0.02
        assert 0.97 < draws.var() < 1.03

    def test_rejects_bad_dim(self):
        with pytest.raises(DomainError):
            gaussian_vector(Rng(0), 0)

    def test_unknown_algorithm(self):
        with pytest.raises(DomainError):
            Rng(0, algorithm="mt19937")


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(5, "noise", 2) == derive_seed(5, "noise", 2)

    def test_labels_separate_streams(self):
        assert derive_seed(5, "noise") != derive_seed(5, "design")
        assert derive_seed(5, "noise", 0) != derive_seed(5, "noise", 1)

    def test_fits_in_63_bits(self):
        assert 0 <= derive_seed(2**63, "x") < 2**63


class TestQuantile:
    def test_median_even(self):
        assert quantile(np.array([1.0, 2.0, 3.0, 4.0]), 0.5) == 2.0

    def test_unsorted_high_rank(self):
        assert quantile(np.array([3.0, 1.0, 2.0]), 0.99) == 3.0

    def test_extremes(self):
        values = np.array([5.0, -1.0, 2.0])
        assert quantile(values, 0.0) == -1.0
        assert quantile(values, 1.0) == 5.0

    def test_bootstrap_default_ranks(self):
        # ten replicates at level 0.01: the band collapses to min/max
        values = np.arange(10.0)
        assert quantile(values, 0.005) == 0.0
        assert quantile(values, 0.995) == 9.0

    def test_exact_integer_products(self):
        # 0.2 * 5 must hit rank 1, not round up through float noise
        assert quantile(np.array([10.0, 20.0, 30.0, 40.0, 50.0]), 0.2) == 10.0

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            quantile(np.array([]), 0.5)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            quantile(np.array([1.0]), 1.5)

    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30),
        st.floats(0.0, 1.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_returns_an_element(self, values, q):
        result = quantile(np.array(values), q)
        assert result in values

    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30),
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_level(self, values, q1, q2):
        lo, hi = sorted((q1, q2))
        arr = np.array(values)
        assert quantile(arr, lo) <= quantile(arr, hi)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20), st.floats(0.0, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_permutation_invariant(self, values, q):
        arr = np.array(values)
        rng = np.random.default_rng(0)
        shuffled = arr.copy()
        rng.shuffle(shuffled)
        assert quantile(arr, q) == quantile(shuffled, q)
