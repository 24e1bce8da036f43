import numpy as np
import pytest

from signorinilab.field import (
    ScalarField,
    cyl_integral,
    cyl_measure,
    cyl_mean,
    dirichlet_energy,
    gradient,
    oscillation_double,
    stiffness_matrix,
    thin_normal_derivatives,
    time_derivative,
)
from signorinilab.grid import Cylinder, PPoint, build_grid, cylinder_nodes


def test_field_values_are_read_only(tiny_grid):
    f = ScalarField.zeros(tiny_grid)
    with pytest.raises(ValueError):
        f.values[0, 0, 0] = 1.0


def test_field_rejects_wrong_shape_and_nan(tiny_grid):
    with pytest.raises(ValueError, match="shape"):
        ScalarField(tiny_grid, np.zeros((2, 2)))
    values = np.zeros(tiny_grid.shape)
    values[1, 2, 3] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        ScalarField(tiny_grid, values)


def test_field_arithmetic(tiny_grid):
    f = ScalarField.from_function(tiny_grid, lambda t, x1, x2: x1 + t)
    g = ScalarField.from_function(tiny_grid, lambda t, x1, x2: x2)
    total = 2 * (f + g) - 1.0
    expected = 2 * (f.values + g.values) - 1.0
    assert np.array_equal(total.values, expected)
    other = ScalarField.zeros(build_grid(2, 17, 16))
    with pytest.raises(ValueError, match="different grids"):
        f + other


def test_gradient_of_affine_field_is_exact(small_grid):
    f = ScalarField.from_function(small_grid, lambda t, x1, x2: 2 * x1 - x2 + t)
    grad = gradient(f)
    assert np.allclose(grad.values[0], 2.0, atol=1e-12)
    assert np.allclose(grad.values[1], -1.0, atol=1e-12)
    assert np.allclose(time_derivative(f).values, 1.0, atol=1e-12)


def test_one_sided_thin_derivatives(small_grid):
    f = ScalarField.from_function(small_grid, lambda t, x1, x2: np.abs(x2) + 0 * x1 + 0 * t)
    below, above = thin_normal_derivatives(f)
    assert np.allclose(below, -1.0)
    assert np.allclose(above, 1.0)
    m = small_grid.thin_index
    assert np.allclose(gradient(f).values[1][..., m], 0.0)
    assert np.allclose(gradient(f, side="above").values[1][..., m], 1.0)
    assert np.allclose(gradient(f, side="below").values[1][..., m], -1.0)
    with pytest.raises(ValueError, match="side"):
        gradient(f, side="left")


def test_oscillation_double_matches_brute_force(tiny_grid, rng):
    f = ScalarField(tiny_grid, rng.standard_normal(tiny_grid.shape))
    c = Cylinder(PPoint((0.0, 0.0), 0.0), 0.5)
    mask = cylinder_nodes(tiny_grid, c)
    assert mask.sum() <= 200
    vals = f.values[mask]
    brute = tiny_grid.cell_volume**2 * float(np.sum((vals[:, None] - vals[None, :]) ** 2))
    assert oscillation_double(f, c) == pytest.approx(brute, rel=1e-10)


def test_cylinder_quadrature(small_grid):
    c = Cylinder(PPoint((0.0, 0.0), -0.2), 0.5)
    one = ScalarField.from_function(small_grid, lambda t, x1, x2: 1.0 + 0 * t + 0 * x1 + 0 * x2)
    assert cyl_integral(one, c) == pytest.approx(cyl_measure(small_grid, c))
    assert cyl_mean(one * 3.0, c) == pytest.approx(3.0)


def test_identity_stiffness_is_five_point_laplacian(small_grid):
    K = stiffness_matrix(small_grid)
    assert abs(K - K.T).max() < 1e-12
    x1, x2 = np.meshgrid(small_grid.axis, small_grid.axis, indexing="ij")
    assert np.allclose(K @ np.ones(x1.size), 0.0, atol=1e-9)
    q = (x1**2 + x2**2).ravel()
    laplace = (K @ q).reshape(x1.shape)
    assert np.allclose(laplace[1:-1, 1:-1], -4.0, atol=1e-9)
    h = small_grid.h
    center = 8 * 17 + 8
    row = K.getrow(center).toarray().ravel()
    assert row[center] == pytest.approx(4 / h**2)
    assert row[center + 1] == pytest.approx(-1 / h**2)
    assert row[center + 17 + 1] == pytest.approx(0.0, abs=1e-9)


def test_constant_coefficient_stiffness_is_exact_on_quadratics(small_grid):
    A = np.array([[1.5, 0.4], [0.4, 0.8]])
    K = stiffness_matrix(small_grid, A)
    assert abs(K - K.T).max() < 1e-9
    x1, x2 = np.meshgrid(small_grid.axis, small_grid.axis, indexing="ij")
    q = (x1**2 + x1 * x2 + x2**2).ravel()
    result = (K @ q).reshape(x1.shape)
    # -div(A grad q) = -(2 A11 + 2 A12 + 2 A22)
    assert np.allclose(result[1:-1, 1:-1], -5.4, atol=1e-8)


def test_dirichlet_energy_of_linear_field(small_grid):
    f = ScalarField.from_function(small_grid, lambda t, x1, x2: x1 + 0 * x2 + 0 * t)
    mask = np.ones(small_grid.shape, dtype=bool)
    mask[0] = False
    # |grad f| = 1 over [-1, 1]^2 x (-1, 0]
    assert dirichlet_energy(f, mask) == pytest.approx(4.0)
    assert dirichlet_energy(f, mask, np.diag([2.0, 1.0])) == pytest.approx(8.0)
    with pytest.raises(ValueError, match="empty"):
        dirichlet_energy(f, np.zeros(small_grid.shape, dtype=bool))
