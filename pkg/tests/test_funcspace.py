# File: tests/test_funcspace.py

import math

import numpy as np
import pytest

from services.funcspace import (
    CoeffSeries,
    GridFunction,
    fourier_basis,
    fourier_design,
    inner_product,
    midpoint_nodes,
    norm,
    project,
    synthesize,
)
from utils.errors import DimensionError, InvalidOrderError, ProjectionError, ResolutionError


class TestFourierBasis:
    def test_order_one_is_constant(self):
        basis = fourier_basis(1, 8)

        assert basis.eval.shape == (8, 1)
        np.testing.assert_array_equal(basis.eval[:, 0], np.ones(8))

    def test_first_sine_column(self):
        x = np.array([0.25])
        expected = math.sqrt(2.0)

        actual = fourier_design(3, x)[0, 1]

        assert actual == pytest.approx(expected, abs=1e-14)

    def test_column_order_sines_then_cosines(self):
        x = midpoint_nodes(40)
        design = fourier_design(7, x)

        np.testing.assert_allclose(design[:, 3], math.sqrt(2) * np.sin(6 * np.pi * x), atol=1e-13)
        np.testing.assert_allclose(design[:, 4], math.sqrt(2) * np.cos(2 * np.pi * x), atol=1e-13)
        np.testing.assert_allclose(design[:, 6], math.sqrt(2) * np.cos(6 * np.pi * x), atol=1e-13)

    def test_discrete_gram_is_identity(self):
        basis = fourier_basis(21, 200)

        gram = basis.eval.T @ basis.eval / basis.M

        assert np.max(np.abs(gram - np.eye(21))) <= 1e-10

    def test_gram_at_minimum_resolution(self):
        basis = fourier_basis(11, 20)

        gram = basis.eval.T @ basis.eval / basis.M

        assert np.max(np.abs(gram - np.eye(11))) <= 1e-10

    @pytest.mark.parametrize("T", [0, 2, 20, -3])
    def test_invalid_order(self, T):
        with pytest.raises(InvalidOrderError):
            fourier_basis(T, 200)

    def test_grid_too_coarse(self):
        with pytest.raises(ResolutionError):
            fourier_basis(21, 39)

    def test_grid_of_one_node(self):
        with pytest.raises(ResolutionError):
            fourier_basis(1, 1)


class TestInnerProduct:
    def test_constants(self):
        one = GridFunction(np.ones(10))

        assert inner_product(one, one) == pytest.approx(1.0)

    def test_orthonormal_columns(self):
        basis = fourier_basis(21, 200)
        f2, f3 = basis.column(2), basis.column(3)

        assert inner_product(f2, f2) == pytest.approx(1.0, abs=1e-10)
        assert inner_product(f2, f3) == pytest.approx(0.0, abs=1e-10)
        assert norm(f3) == pytest.approx(1.0, abs=1e-10)

    def test_mismatched_grids(self):
        with pytest.raises(DimensionError):
            inner_product(GridFunction(np.ones(10)), GridFunction(np.ones(12)))


class TestGridFunction:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            GridFunction(np.array([1.0, np.nan, 2.0]))

    def test_rejects_single_node(self):
        with pytest.raises(DimensionError):
            GridFunction(np.array([1.0]))

    def test_values_are_read_only(self):
        f = GridFunction(np.arange(4.0))

        with pytest.raises(ValueError):
            f.values[0] = 5.0


class TestSynthesisAndProjection:
    def test_synthesize_basis_vector(self):
        basis = fourier_basis(5, 32)
        a = np.zeros(5)
        a[3] = 1.0

        f = synthesize(a, basis)

        np.testing.assert_allclose(f.values, basis.eval[:, 3])

    @pytest.mark.parametrize("T, M", [(21, 200), (41, 365), (5, 8)])
    def test_norm_of_synthesis_is_coefficient_norm(self, T, M):
        a = np.random.default_rng(T).normal(size=T)

        f = synthesize(a, fourier_basis(T, M))

        assert norm(f) ** 2 == pytest.approx(np.sum(a ** 2), rel=1e-10)

    def test_inner_product_of_syntheses(self):
        rng = np.random.default_rng(3)
        basis = fourier_basis(11, 64)
        a, b = rng.normal(size=11), rng.normal(size=11)

        actual = inner_product(synthesize(a, basis), synthesize(b, basis))

        assert actual == pytest.approx(float(a @ b), abs=1e-10)

    def test_synthesize_wrong_length(self):
        with pytest.raises(DimensionError):
            synthesize(np.ones(4), fourier_basis(5, 32))

    def test_project_recovers_coefficients(self):
        rng = np.random.default_rng(7)
        basis = fourier_basis(21, 200)
        a = rng.normal(size=21)

        actual = project(synthesize(a, basis).values, basis.nodes, basis)

        np.testing.assert_allclose(actual, a, atol=1e-10)

    def test_project_on_irregular_nodes(self):
        rng = np.random.default_rng(3)
        basis = fourier_basis(9, 32)
        nodes = np.sort(rng.uniform(0, 1, size=60))
        a = rng.normal(size=9)

        actual = project(fourier_design(9, nodes) @ a, nodes, basis)

        np.testing.assert_allclose(actual, a, atol=1e-9)

    def test_project_underdetermined(self):
        basis = fourier_basis(9, 32)

        with pytest.raises(ProjectionError):
            project(np.ones(5), np.linspace(0.1, 0.9, 5), basis)

    def test_project_nodes_outside_interval(self):
        basis = fourier_basis(3, 8)

        with pytest.raises(ProjectionError):
            project(np.ones(5), np.array([0.1, 0.2, 0.3, 0.4, 1.5]), basis)

    def test_project_rank_deficient(self):
        basis = fourier_basis(3, 8)

        with pytest.raises(ProjectionError):
            project(np.ones(6), np.full(6, 0.3), basis)


class TestCoeffSeries:
    def test_to_grid(self):
        basis = fourier_basis(5, 16)
        coeffs = np.arange(10.0).reshape(2, 5)
        series = CoeffSeries(coeffs, basis)

        np.testing.assert_allclose(series.to_grid(), coeffs @ basis.eval.T)
        assert series.N == 2
        assert series.T == 5
        assert len(series) == 2

    def test_width_must_match_basis(self):
        with pytest.raises(DimensionError):
            CoeffSeries(np.ones((3, 4)), fourier_basis(5, 16))

    def test_rejects_non_finite(self):
        coeffs = np.ones((2, 3))
        coeffs[1, 2] = np.inf

        with pytest.raises(ValueError):
            CoeffSeries(coeffs, fourier_basis(3, 8))
