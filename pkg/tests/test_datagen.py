# File: tests/test_datagen.py

import math

import numpy as np
import pandas as pd
import pytest

from services.covkern import kernel_distance_sq, second_moment_kernel
from services.datagen import (
    DGPSpec,
    EIGENVALUE_SHIFT,
    ROTATION,
    apply_eigenvalue_break,
    apply_rotation_break,
    conditional_covariance,
    day_nodes,
    default_tau,
    eigenvalue_shift_distance,
    fma1_coefficients,
    generate,
    population_kernels,
    psi_for_order,
    rotation_distance,
    rotation_matrix,
    rotation_weighted_eigenfunction_distance,
    to_daily_frame,
    year_dates,
)
from services.eigensys import aligned_distance, eigendecompose
from services.funcspace import CoeffSeries, fourier_basis


class TestDGPSpec:
    def test_defaults(self):
        spec = DGPSpec(N=100)

        np.testing.assert_allclose(spec.eigenvalues, 1.0 / np.arange(1, 22) ** 2)
        assert spec.grid_size == 200
        assert spec.psi == 0.0

    def test_fma_psi(self):
        spec = DGPSpec(N=100, dependence="fma1")

        assert spec.psi == pytest.approx(math.pi / (2 * 21 ** 4))

    @pytest.mark.parametrize("kwargs", [
        {"N": 3},
        {"N": 100, "dependence": "ar1"},
        {"N": 100, "break_kind": "shift"},
        {"N": 100, "break_kind": EIGENVALUE_SHIFT, "magnitude": 1.5},
        {"N": 100, "theta0": 1.0},
        {"N": 100, "innovations": "student_t", "df": 2.0},
        {"N": 100, "T": 3, "tau": (1.0, 2.0, 0.5)},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DGPSpec(**kwargs)


class TestGenerate:
    def test_shape_and_determinism(self):
        spec = DGPSpec(N=50, seed=4)

        first = generate(spec)
        second = generate(spec)

        assert first.coeffs.shape == (50, 21)
        np.testing.assert_array_equal(first.coeffs, second.coeffs)

    def test_iid_covariance_is_diag_tau(self):
        spec = DGPSpec(N=20_000, T=5, seed=1, M=16)

        kernel = second_moment_kernel(generate(spec))

        np.testing.assert_allclose(kernel.matrix, np.diag(default_tau(5)), atol=0.03)

    def test_student_t_has_unit_variance_scaling(self):
        spec = DGPSpec(N=40_000, T=3, seed=2, M=8, innovations="student_t", df=6.0)

        kernel = second_moment_kernel(generate(spec))

        np.testing.assert_allclose(np.diag(kernel.matrix), default_tau(3), rtol=0.08)

    def test_fma_recursion(self):
        rng = np.random.default_rng(0)
        eps = rng.normal(size=(6, 3))
        Psi = rng.normal(size=(3, 3))

        actual = fma1_coefficients(eps, Psi, 0.2)

        for n in range(5):
            np.testing.assert_allclose(actual[n], (eps[n + 1] + Psi @ eps[n]) / math.sqrt(1.2))

    def test_fma_conditional_covariance(self):
        tau = default_tau(3)
        Psi = np.eye(3) * 0.5

        actual = conditional_covariance(tau, Psi, 0.25)

        np.testing.assert_allclose(actual, np.diag(tau * 1.25 / 1.25))

    def test_fma_autocovariance_ends_after_lag_one(self):
        rng = np.random.default_rng(12)
        tau = default_tau(3)
        psi = 0.5
        Psi = np.array([[0.6, 0.2, 0.0], [-0.3, 0.5, 0.1], [0.0, 0.4, -0.5]])
        eps = rng.standard_normal((400_001, 3)) * np.sqrt(tau)

        a = fma1_coefficients(eps, Psi, psi)

        lag1 = a[1:].T @ a[:-1] / (len(a) - 1)
        lag2 = a[2:].T @ a[:-2] / (len(a) - 2)
        expected = Psi @ np.diag(tau) / (1 + psi)
        assert expected[0, 0] == pytest.approx(0.4)
        np.testing.assert_allclose(lag1, expected, atol=0.015)
        np.testing.assert_allclose(lag2, np.zeros((3, 3)), atol=0.015)

    def test_psi_calibration(self):
        T = 21
        psi = psi_for_order(T)

        assert T * T * math.sqrt(2 * psi / math.pi) == pytest.approx(1.0)


class TestBreaks:
    def test_eigenvalue_break_scales_after_floor(self):
        basis = fourier_basis(5, 16)
        series = CoeffSeries(np.ones((10, 5)), basis)

        broken = apply_eigenvalue_break(series, 0.25, 0.5)

        factor = math.sqrt(1 - math.sqrt(0.25))
        np.testing.assert_allclose(broken.coeffs[:5], 1.0)
        np.testing.assert_allclose(broken.coeffs[5:, :4], factor)
        np.testing.assert_allclose(broken.coeffs[5:, 4], 1.0)

    def test_rotation_break(self):
        basis = fourier_basis(3, 8)
        series = CoeffSeries(np.tile([1.0, 0.0, 2.0], (4, 1)), basis)

        broken = apply_rotation_break(series, math.pi / 2, 0.5)

        np.testing.assert_allclose(broken.coeffs[:2], [[1, 0, 2]] * 2, atol=1e-15)
        np.testing.assert_allclose(broken.coeffs[2:], [[0, 1, 2]] * 2, atol=1e-15)

    def test_rotation_matrix_is_orthogonal(self):
        R = rotation_matrix(21, 0.7)

        np.testing.assert_allclose(R @ R.T, np.eye(21), atol=1e-15)

    def test_zero_magnitude_has_no_break(self):
        spec = DGPSpec(N=30, seed=5)
        broken = DGPSpec(N=30, seed=5, break_kind=ROTATION, magnitude=0.0)

        np.testing.assert_allclose(generate(spec).coeffs, generate(broken).coeffs)


class TestPopulationKernels:
    @pytest.mark.parametrize("E", [0.1, 0.5, 1.0])
    def test_eigenvalue_shift_distance(self, E):
        spec = DGPSpec(N=10, break_kind=EIGENVALUE_SHIFT, magnitude=E)
        before, after = population_kernels(spec)

        assert kernel_distance_sq(before, after) == pytest.approx(eigenvalue_shift_distance(E, spec.eigenvalues),
                                                                  rel=1e-12)
        assert eigenvalue_shift_distance(E, spec.eigenvalues) == pytest.approx(1.07875 * E, rel=5e-6)

    @pytest.mark.parametrize("phi", [math.pi / 8, math.pi / 4])
    def test_rotation_distances(self, phi):
        spec = DGPSpec(N=10, break_kind=ROTATION, magnitude=phi)
        before, after = population_kernels(spec)
        e1 = eigendecompose(before)
        e2 = eigendecompose(after)
        weighted = sum(
            spec.eigenvalues[k] * aligned_distance(e1.eigenfunction(k + 1), e2.eigenfunction(k + 1)) ** 2
            for k in range(2)
        )

        assert kernel_distance_sq(before, after) == pytest.approx(rotation_distance(phi, spec.eigenvalues), rel=1e-9)
        assert rotation_weighted_eigenfunction_distance(phi, spec.eigenvalues) == pytest.approx(
            5 * (1 - math.cos(phi)) / 2, rel=1e-12)
        assert weighted == pytest.approx(5 * (1 - math.cos(phi)) / 2, rel=1e-9)

    def test_eigenvalues_after_shift(self):
        spec = DGPSpec(N=10, break_kind=EIGENVALUE_SHIFT, magnitude=0.36)
        _, after = population_kernels(spec)

        actual = eigendecompose(after).eigenvalues

        np.testing.assert_allclose(actual[:3], 0.4 * default_tau(21)[:3])
        assert actual[3] == pytest.approx(1 / 25)


class TestDailyFrame:
    def test_day_nodes(self):
        nodes = day_nodes()

        assert nodes.size == 365
        assert nodes[0] == pytest.approx(0.5 / 365)

    def test_leap_year_without_feb_29(self):
        dates = year_dates(2020)

        assert len(dates) == 365
        assert pd.Timestamp("2020-02-29") not in dates

    def test_frame_layout(self):
        series = generate(DGPSpec(N=4, seed=1))

        frame = to_daily_frame(series, 2000, mean_curve=np.full(365, 10.0))

        assert list(frame.columns) == ["date", "value"]
        assert len(frame) == 4 * 365
        assert frame["date"].iloc[0] == "2000-01-01"
        assert frame["date"].iloc[-1] == "2003-12-31"
        assert frame["value"].mean() == pytest.approx(10.0, abs=1.0)
