import numpy as np
import pytest

from expsums import (
    IllPosedError,
    NumericalFailureError,
    VarproConfig,
    gauss_newton_step,
    levenberg_marquardt,
    objective_gradient,
    projection_apply,
    residual_jacobian,
    root_update_iterate,
    stationarity_residual,
    vandermonde_pair,
)
from conftest import random_coefficients, well_separated_roots


def model_matrix(z, L):
    z = np.asarray(z, dtype=complex)
    return z[None, :] ** np.arange(L + 1)[:, None]


def exact_data(z, c, L):
    return model_matrix(z, L) @ np.asarray(c, dtype=complex)


class TestVandermondePair:
    def test_single_unit_node(self):
        pair = vandermonde_pair([1.0], 2)
        assert np.allclose(pair.V.ravel(), [1.0, 1.0, 1.0])
        assert np.allclose(pair.dV.ravel(), [0.0, 1.0, 2.0])

    def test_powers_of_two(self):
        pair = vandermonde_pair([2.0], 3)
        assert np.allclose(pair.V.ravel(), [1.0, 2.0, 4.0, 8.0])
        assert np.allclose(pair.dV.ravel(), [0.0, 1.0, 4.0, 12.0])

    def test_shapes_and_first_rows(self, rng):
        z = well_separated_roots(rng, 4)
        pair = vandermonde_pair(z, 9)
        assert pair.V.shape == (10, 4)
        assert pair.dV.shape == (10, 4)
        assert np.allclose(pair.V[0], 1.0)
        assert np.allclose(pair.dV[0], 0.0)

    def test_duplicate_nodes(self):
        with pytest.raises(IllPosedError):
            vandermonde_pair([0.5, 0.5 + 1e-13], 4)


class TestProjectionApply:
    def test_exact_data_has_no_orthogonal_part(self, rng):
        z = well_separated_roots(rng, 3)
        c = random_coefficients(rng, 3)
        y = exact_data(z, c, 9)
        split = projection_apply(z, y)
        assert np.linalg.norm(split.orthogonal) < 1e-10 * np.linalg.norm(y)
        assert np.allclose(split.coefficients, c, atol=1e-9)

    def test_hand_projection(self):
        split = projection_apply([1.0], [1.0, 0.0])
        assert np.allclose(split.fitted, [0.5, 0.5])
        assert np.allclose(split.orthogonal, [0.5, -0.5])
        assert np.allclose(split.coefficients, [0.5])

    def test_pythagoras(self, rng):
        for _ in range(20):
            m = int(rng.integers(1, 5))
            z = well_separated_roots(rng, m)
            y = rng.standard_normal(12) + 1j * rng.standard_normal(12)
            split = projection_apply(z, y)
            lhs = np.linalg.norm(split.fitted) ** 2 + np.linalg.norm(split.orthogonal) ** 2
            assert lhs == pytest.approx(np.linalg.norm(y) ** 2, rel=1e-10)

    def test_projector_algebra(self, rng):
        z = well_separated_roots(rng, 3)
        pair = vandermonde_pair(z, 9)
        v = pair.V
        pinv = np.linalg.pinv(v)
        p = v @ pinv
        assert np.linalg.norm(p - p.conj().T) < 1e-10
        assert np.linalg.norm(p @ p - p) < 1e-10
        assert np.linalg.norm(p @ v - v) < 1e-10
        assert np.linalg.norm(pinv @ p - pinv) < 1e-10

    def test_objective_equivalence(self, rng):
        z = well_separated_roots(rng, 3)
        y = rng.standard_normal(11) + 1j * rng.standard_normal(11)
        pair = vandermonde_pair(z, 10)
        c, *_ = np.linalg.lstsq(pair.V, y, rcond=None)
        direct = np.linalg.norm(y - pair.V @ c) ** 2
        split = projection_apply(z, y)
        assert direct == pytest.approx(np.linalg.norm(split.orthogonal) ** 2,
                                       rel=1e-10, abs=1e-12)


class TestJacobian:
    def test_second_summand_vanishes_on_exact_data(self, rng):
        z = well_separated_roots(rng, 3)
        c = random_coefficients(rng, 3)
        y = exact_data(z, c, 8)
        pair = vandermonde_pair(z, 8)
        split = projection_apply(z, y)
        second_scale = np.linalg.norm(pair.dV.conj().T @ split.orthogonal)
        assert second_scale < 1e-9 * np.linalg.norm(y)

    def test_hand_case(self):
        j = residual_jacobian([1.0], [1.0, 0.0])
        assert np.allclose(j.ravel(), [-0.5, 0.0], atol=1e-12)

    def test_matches_central_differences(self, rng):
        for _ in range(10):
            m = int(rng.integers(1, 5))
            L = int(rng.integers(max(2 * m, 4), 13))
            z = well_separated_roots(rng, m, min_sep=0.25)
            y = rng.standard_normal(L + 1) + 1j * rng.standard_normal(L + 1)
            j = residual_jacobian(z, y)
            t = 1e-6
            for k in range(m):
                e = np.zeros(m)
                e[k] = 1.0
                fd = (projection_apply(z + t * e, y).fitted
                      - projection_apply(z - t * e, y).fitted) / (2 * t)
                denom = max(np.linalg.norm(j[:, k]), 1e-12)
                assert np.linalg.norm(j[:, k] - fd) / denom < 1e-5


class TestGradient:
    def test_zero_on_exact_data(self, rng):
        z = well_separated_roots(rng, 3)
        c = random_coefficients(rng, 3)
        y = exact_data(z, c, 9)
        g = objective_gradient(z, y)
        assert np.linalg.norm(g) <= 1e-9 * np.linalg.norm(y)

    def test_identity_with_jacobian(self, rng):
        for _ in range(10):
            m = int(rng.integers(1, 5))
            z = well_separated_roots(rng, m)
            y = rng.standard_normal(12) + 1j * rng.standard_normal(12)
            g = objective_gradient(z, y)
            j = residual_jacobian(z, y)
            r = projection_apply(z, y).fitted
            assert np.linalg.norm(g - 2.0 * (j.conj().T @ r)) < 1e-10 * max(
                1.0, np.linalg.norm(g)
            )

    def test_ascent_direction_on_real_instance(self, rng):
        z = np.array([0.7, 1.1], dtype=complex)
        y = rng.standard_normal(9).astype(complex)
        g = objective_gradient(z, y).real
        t = 1e-7
        q0 = np.linalg.norm(projection_apply(z, y).fitted) ** 2
        q1 = np.linalg.norm(projection_apply(z + t * g, y).fitted) ** 2
        assert q1 > q0


class TestStationarity:
    def test_zero_on_exact_data(self, rng):
        z = well_separated_roots(rng, 2)
        c = random_coefficients(rng, 2)
        y = exact_data(z, c, 7)
        assert stationarity_residual(z, y) <= 1e-9 * np.linalg.norm(y)

    def test_positive_when_perturbed(self, rng):
        z = well_separated_roots(rng, 2)
        c = random_coefficients(rng, 2)
        y = exact_data(z, c, 7)
        assert stationarity_residual(z + 1e-3, y) > 1e-6


class TestGaussNewton:
    def test_zero_step_at_solution(self, rng):
        z = well_separated_roots(rng, 2)
        c = random_coefficients(rng, 2)
        y = exact_data(z, c, 8)
        delta = gauss_newton_step(z, y)
        assert np.linalg.norm(delta) < 1e-8

    def test_step_reduces_distance(self):
        z_true = np.array([0.55, 0.9, 1.3], dtype=complex)
        y = exact_data(z_true, [1.0, -2.0, 0.7], 12)
        z0 = z_true + 1e-4
        delta = gauss_newton_step(z0, y)
        assert np.max(np.abs(z0 + delta - z_true)) < np.max(np.abs(z0 - z_true))

    def test_lm_with_zero_damping_matches(self, rng):
        z = np.array([0.6, 1.2], dtype=complex)
        y = (exact_data(z, [1.0, 0.5], 9)
             + 0.05 * rng.standard_normal(10)).astype(complex)
        delta = gauss_newton_step(z, y)
        j = residual_jacobian(z, y)
        r = projection_apply(z, y).fitted
        lm = np.linalg.solve(j.conj().T @ j + 0.0 * np.eye(2),
                             np.real(j.conj().T @ r).astype(complex))
        assert np.allclose(delta, lm, atol=1e-10)


class TestLevenbergMarquardt:
    def test_terminates_immediately_at_solution(self, rng):
        z = well_separated_roots(rng, 2)
        c = random_coefficients(rng, 2)
        y = exact_data(z, c, 9)
        z_out, c_out, trace = levenberg_marquardt(z, y)
        assert len(trace.steps) == 1  # only the initial record
        assert trace.termination in ("gradient", "step")
        assert np.allclose(z_out, z)

    def test_reconverges_from_perturbation(self):
        z_true = np.array([0.55, 0.9, 1.3], dtype=complex)
        y = exact_data(z_true, [1.0, -2.0, 0.7], 12)
        z0 = z_true + 1e-3 * np.array([1.0, -1.0, 1.0])
        z, c, trace = levenberg_marquardt(z0, y)
        assert len(trace.steps) - 1 <= 20
        assert np.max(np.abs(z - z_true)) < 1e-8
        assert np.allclose(c, [1.0, -2.0, 0.7], atol=1e-6)

    def test_noisy_seeded_instance(self):
        rng = np.random.default_rng(77)
        z_true = np.array([0.6, 0.95, 1.25], dtype=complex)
        y = (exact_data(z_true, [1.2, -0.8, 0.5], 21).real
             + 0.01 * rng.standard_normal(22)).astype(complex)
        z0 = z_true + 0.01 * rng.standard_normal(3)
        s0 = stationarity_residual(z0, y)
        z, _, trace = levenberg_marquardt(z0, y)
        objectives = trace.objectives()
        assert objectives[-1] <= objectives[0]
        assert np.all(np.diff(objectives) <= 0)
        assert stationarity_residual(z, y) <= s0 / 10.0

    def test_gradient_termination_meets_stationarity_bound(self):
        rng = np.random.default_rng(5)
        z_true = np.array([0.7, 1.15], dtype=complex)
        y = (exact_data(z_true, [1.0, 0.8], 15).real
             + 0.002 * rng.standard_normal(16)).astype(complex)
        z, _, trace = levenberg_marquardt(z_true + 0.005, y)
        if trace.termination == "gradient":
            assert stationarity_residual(z, y) <= 1e-6 * np.linalg.norm(y)

    def test_nonfinite_data_raises_with_trace(self):
        with pytest.raises(NumericalFailureError) as err:
            levenberg_marquardt([0.9], [np.nan + 0j, 1.0, 2.0])
        assert err.value.trace is not None

    def test_config_validation(self):
        with pytest.raises(ValueError):
            VarproConfig(damping0=-1.0)
        with pytest.raises(ValueError):
            VarproConfig(damping_increase=0.5)

    def test_full_gradient_exposed(self, rng):
        z = well_separated_roots(rng, 2)
        c = random_coefficients(rng, 2)
        y = exact_data(z, c, 9)
        _, _, trace = levenberg_marquardt(z, y)
        assert len(trace.final_gradient) == 2


class TestRootUpdate:
    def test_exact_fit_is_fixed_point(self, rng):
        z = well_separated_roots(rng, 3)
        c = random_coefficients(rng, 3)
        y = exact_data(z, c, 10)
        z_out = root_update_iterate(z, y)
        assert np.allclose(np.asarray(z_out), z, atol=0)

    def test_stationarity_never_increases(self):
        rng = np.random.default_rng(31002)
        z_true = np.array([0.6 + 0.2 * rng.random(), 1.05 + 0.2 * rng.random()],
                          dtype=complex)
        y = (exact_data(z_true, 0.8 + rng.random(2), 12).real
             + 0.01 * rng.standard_normal(13)).astype(complex)
        z0 = z_true + 0.01 * rng.standard_normal(2)
        s0 = stationarity_residual(z0, y)
        z1 = root_update_iterate(z0, y, max_iter=50)
        assert stationarity_residual(np.asarray(z1), y) <= s0

    def test_agrees_with_lm_near_optimum(self):
        rng = np.random.default_rng(31002)
        z_true = np.array([0.6 + 0.2 * rng.random(), 1.05 + 0.2 * rng.random()],
                          dtype=complex)
        y = (exact_data(z_true, 0.8 + rng.random(2), 12).real
             + 0.01 * rng.standard_normal(13)).astype(complex)
        z0 = z_true + 0.01 * rng.standard_normal(2)
        z_lm, _, _ = levenberg_marquardt(z0, y)
        z_ru = root_update_iterate(z_lm + 3e-5, y, max_iter=100)
        assert np.max(np.abs(np.sort_complex(np.asarray(z_ru))
                             - np.sort_complex(z_lm))) <= 1e-4
