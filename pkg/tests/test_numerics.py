import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expsums import (
    HankelSpec,
    IllPosedError,
    PronyPolynomial,
    build_hankel,
    log_branch,
    numerical_rank,
    polynomial_roots,
    svd,
    vandermonde_lsq,
)
from conftest import exponential_samples, random_coefficients, well_separated_roots


class TestBuildHankel:
    def test_constant_sequence(self):
        h = build_hankel(HankelSpec((1, 1, 1, 1), 2, 3))
        assert np.array_equal(h, np.ones((2, 3)))

    def test_definition_unrolled(self):
        h = build_hankel(HankelSpec((0, 1, 2, 3, 4), 3, 3))
        expected = np.array([[0, 1, 2], [1, 2, 3], [2, 3, 4]], dtype=complex)
        assert np.array_equal(h, expected)

    def test_esprit_shape(self):
        # 2N samples with N=15, L=10 give a (2N-L) x (L+1) = 20 x 11 matrix
        values = tuple(range(30))
        h = build_hankel(HankelSpec(values, 20, 11))
        assert h.shape == (20, 11)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            HankelSpec((1, 2, 3), 3, 3)

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2025))
    def test_antidiagonals_reproduce_input(self, rows, cols, seed):
        rng = np.random.default_rng(seed)
        values = rng.standard_normal(rows + cols - 1) + 1j * rng.standard_normal(
            rows + cols - 1
        )
        h = build_hankel(HankelSpec(tuple(values), rows, cols))
        for s in range(rows + cols - 1):
            anti = [h[m, s - m] for m in range(max(0, s - cols + 1), min(rows, s + 1))]
            assert np.allclose(anti, values[s], rtol=0, atol=0)


class TestSvd:
    def test_zero_matrix(self):
        res = svd(np.zeros((3, 4)))
        assert np.all(res.singular_values == 0)

    def test_identity(self):
        res = svd(np.eye(3))
        assert np.allclose(res.singular_values, 1.0)

    def test_reconstruction(self, rng):
        a = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        res = svd(a)
        d = np.zeros((5, 3))
        np.fill_diagonal(d, res.singular_values)
        err = np.linalg.norm(a - res.left @ d @ res.right)
        assert err <= 1e-10 * np.linalg.norm(a)

    def test_exact_two_term_hankel_is_rank_two(self):
        # 8 samples of 0.5^l + 2^l arranged as a 6x3 Hankel matrix
        f = 0.5 ** np.arange(8) + 2.0 ** np.arange(8)
        res = svd(build_hankel(HankelSpec(tuple(f), 6, 3)))
        s = res.singular_values
        assert s[2] <= 1e-10 * s[0]

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            svd(np.array([[1.0, np.nan]]))


class TestNumericalRank:
    def test_simple(self):
        est = numerical_rank([5.0, 3.0, 1e-12], 1e-8)
        assert est.rank == 2
        assert est.gap_ratio == pytest.approx(3e12)

    def test_full_rank(self):
        est = numerical_rank([4.0, 3.0, 2.0], 1e-8)
        assert est.rank == 3
        assert est.gap_ratio == math.inf

    def test_relative_mode(self):
        # threshold scales with sigma_1: 1e-4 * 1e6 = 100
        est = numerical_rank([1e6, 1e3, 1.0], 1e-4, relative=True)
        assert est.rank == 2
        est = numerical_rank([1e6, 1e3, 1.0], 1e-4, relative=False)
        assert est.rank == 3

    def test_exact_hankel_rank_matches_term_count(self, rng):
        for M in range(1, 7):
            z = well_separated_roots(rng, M)
            c = random_coefficients(rng, M)
            f = exponential_samples(z, c, 2 * M + 4)
            cols = M + 1
            rows = len(f) - cols + 1
            s = svd(build_hankel(HankelSpec(tuple(f), rows, cols))).singular_values
            est = numerical_rank(s, 1e-8 * s[0])
            assert est.rank == M


class TestPolynomialRoots:
    def test_linear(self):
        roots = polynomial_roots(PronyPolynomial((-1.0, 1.0)))
        assert np.allclose(roots, [1.0])

    def test_hand_factorization(self):
        # z^2 - 5z + 6 = (z - 2)(z - 3)
        roots = np.sort_complex(polynomial_roots(PronyPolynomial((6.0, -5.0, 1.0))))
        assert np.allclose(roots, [2.0, 3.0], atol=1e-12)

    def test_roundtrip_from_known_roots(self, rng):
        true = well_separated_roots(rng, 4, min_sep=0.3)
        coeffs = np.poly(true)[::-1]  # ascending, monic
        got = polynomial_roots(PronyPolynomial(tuple(coeffs)))
        # nearest-neighbor matching on sorted-by-angle roots
        for r in true:
            assert np.min(np.abs(got - r)) < 1e-10

    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            PronyPolynomial((1.0,))

    def test_monic_required(self):
        with pytest.raises(ValueError):
            PronyPolynomial((1.0, 2.0))


class TestVandermondeLsq:
    def test_single_node(self):
        c, resid = vandermonde_lsq([1.0], [4.0, 4.0, 4.0, 4.0])
        assert np.allclose(c, [4.0])
        assert resid < 1e-12

    def test_two_nodes_exact(self):
        rhs = [2.0 ** l + 3.0 ** l for l in range(4)]
        c, resid = vandermonde_lsq([2.0, 3.0], rhs)
        assert np.allclose(c, [1.0, 1.0], atol=1e-10)
        assert resid <= 1e-10

    def test_prefactors(self):
        # solve rhs_l = sum_j c_j * p_j * z_j^l with a known prefactor
        z = np.array([0.5, 2.0])
        pref = z ** 1.5
        rhs = (z[None, :] ** np.arange(6)[:, None]) @ (pref * np.array([1.0, -2.0]))
        c, resid = vandermonde_lsq(z, rhs, pref)
        assert np.allclose(c, [1.0, -2.0], atol=1e-10)

    def test_repeated_nodes(self):
        with pytest.raises(IllPosedError):
            vandermonde_lsq([1.0, 1.0 + 1e-14], [1.0, 2.0])


class TestLogBranch:
    def test_unit(self):
        assert log_branch(1.0, 1.0) == 0.0

    def test_quarter_turn(self):
        alpha = log_branch(np.exp(0.25j * np.pi), 1.0)
        assert abs(alpha - 0.25j * np.pi) < 1e-14

    def test_fractional_step(self):
        alpha = log_branch(math.exp(-0.5), 0.5)
        assert abs(alpha - (-1.0)) < 1e-14

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            log_branch(0.0, 1.0)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(-2.0, 2.0),
        st.floats(-0.999, 0.999),
        st.sampled_from([-2.0, -0.5, 0.5, 1.0, 3.0]),
    )
    def test_roundtrip_in_strip(self, re, im_frac, h):
        strip = math.pi / abs(h)
        alpha = complex(re, im_frac * strip)
        got = log_branch(np.exp(alpha * h), h)
        assert abs(got - alpha) < 1e-12 * max(1.0, abs(alpha))

    def test_boundary_maps_into_half_open_strip(self):
        # z = -1 sits exactly on the branch cut
        for h in (1.0, -1.0, 0.5, -0.25):
            strip = math.pi / abs(h)
            got = log_branch(-1.0 + 0.0j, h)
            assert -strip < got.imag <= strip
            assert abs(np.exp(got * h) - (-1.0)) < 1e-12
