"""Difference operators: trig-mode exactness, order, summation by parts.

Central differences on single trig modes are exact up to a known factor
(sin(kh)/(kh) per derivative), which gives frozen oracles that hold to
round-off; genuine second-order convergence is then measured on a
smooth periodic function that is not a trig polynomial.
"""

import numpy as np
import pytest

from qins.fields import ScalarField, VectorField, inner_product, l2_norm, make_grid
from qins.operators import (
    convection,
    directional_derivative,
    divergence,
    grad_div,
    gradient,
    laplacian,
    strain_frobenius_sq,
)


def _noise_scalar(grid, seed=0):
    rng = np.random.default_rng(seed)
    return ScalarField(grid, rng.standard_normal((grid.n, grid.n)))


def _noise_vector(grid, seed=1):
    rng = np.random.default_rng(seed)
    return VectorField(
        grid,
        rng.standard_normal((grid.n, grid.n)),
        rng.standard_normal((grid.n, grid.n)),
    )


def test_gradient_exact_on_single_mode():
    g = make_grid(32)
    h = g.spacing
    s = ScalarField.from_function(g, lambda X, Y: np.sin(X))
    grad = gradient(s)
    X, _ = g.mesh()
    np.testing.assert_allclose(grad.x, np.sin(h) / h * np.cos(X), atol=1e-13)
    np.testing.assert_allclose(grad.y, 0.0, atol=1e-13)


def test_divergence_exact_on_single_modes():
    g = make_grid(32)
    h = g.spacing
    v = VectorField.from_function(g, lambda X, Y: np.sin(X), lambda X, Y: np.sin(Y))
    X, Y = g.mesh()
    np.testing.assert_allclose(
        divergence(v).values, np.sin(h) / h * (np.cos(X) + np.cos(Y)), atol=1e-13
    )


def test_laplacian_exact_on_single_mode():
    # the 5-point stencil scales a unit mode by -4 sin^2(h/2) / h^2
    g = make_grid(32)
    h = g.spacing
    s = ScalarField.from_function(g, lambda X, Y: np.sin(X))
    factor = -4.0 * np.sin(h / 2.0) ** 2 / h**2
    np.testing.assert_allclose(laplacian(s).values, factor * s.values, atol=1e-13)


def test_gradient_second_order_on_smooth_data():
    def err(n: int) -> float:
        g = make_grid(n)
        s = ScalarField.from_function(g, lambda X, Y: np.exp(np.sin(X)) * np.cos(Y))
        exact = VectorField.from_function(
            g,
            lambda X, Y: np.cos(X) * np.exp(np.sin(X)) * np.cos(Y),
            lambda X, Y: -np.exp(np.sin(X)) * np.sin(Y),
        )
        return l2_norm(gradient(s) - exact)

    order = np.log2(err(32) / err(64))
    assert 1.8 < order < 2.2


def test_laplacian_second_order_on_smooth_data():
    def err(n: int) -> float:
        g = make_grid(n)
        s = ScalarField.from_function(g, lambda X, Y: np.exp(np.sin(X)) * np.cos(Y))
        exact = ScalarField.from_function(
            g,
            lambda X, Y: (np.cos(X) ** 2 - np.sin(X) - 1.0)
            * np.exp(np.sin(X))
            * np.cos(Y),
        )
        return l2_norm(laplacian(s) - exact)

    order = np.log2(err(32) / err(64))
    assert 1.8 < order < 2.2


def test_vector_laplacian_applies_componentwise():
    g = make_grid(16)
    v = _noise_vector(g)
    lap = laplacian(v)
    np.testing.assert_array_equal(lap.x, laplacian(v.component(0)).values)
    np.testing.assert_array_equal(lap.y, laplacian(v.component(1)).values)


def test_summation_by_parts_holds_for_rough_data():
    # the roll-based central difference is exactly skew-adjoint under the
    # uniform inner product, so the identity needs no smoothness at all
    g = make_grid(24)
    s = _noise_scalar(g)
    v = _noise_vector(g)
    lhs = inner_product(s, divergence(v))
    rhs = inner_product(gradient(s), v)
    scale = max(abs(lhs), abs(rhs), 1.0)
    assert abs(lhs + rhs) / scale < 1e-12


def test_convection_is_quadratically_homogeneous():
    g = make_grid(16)
    v = _noise_vector(g, seed=3)
    c1 = convection(v)
    c3 = convection(3.0 * v)
    np.testing.assert_allclose(c3.x, 9.0 * c1.x, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(c3.y, 9.0 * c1.y, rtol=1e-12, atol=1e-12)


def test_skew_convection_is_energy_neutral():
    g = make_grid(24)
    v = _noise_vector(g, seed=4)
    skew_power = inner_product(v, convection(v, form="skew"))
    advective_power = inner_product(v, convection(v, form="advective"))
    assert abs(skew_power) < 1e-12 * l2_norm(v) ** 2
    # the advective form has no such cancellation on rough data
    assert abs(advective_power) > 1e-6


def test_convection_rejects_unknown_form():
    v = VectorField.zeros(make_grid(8))
    with pytest.raises(ValueError):
        convection(v, form="rotational")


def test_grad_div_is_the_operator_composition():
    g = make_grid(16)
    v = _noise_vector(g, seed=5)
    composed = gradient(divergence(v))
    gd = grad_div(v)
    np.testing.assert_array_equal(gd.x, composed.x)
    np.testing.assert_array_equal(gd.y, composed.y)


def test_directional_derivative_matches_gradient_contraction():
    g = make_grid(16)
    s = _noise_scalar(g, seed=6)
    w = (2.0, -0.5)
    grad = gradient(s)
    expected = w[0] * grad.x + w[1] * grad.y
    np.testing.assert_allclose(directional_derivative(w, s).values, expected, atol=1e-14)


def test_directional_derivative_on_vector_fields():
    g = make_grid(16)
    v = _noise_vector(g, seed=7)
    w = (1.0, 2.0)
    dv = directional_derivative(w, v)
    np.testing.assert_allclose(
        dv.x, directional_derivative(w, v.component(0)).values, atol=1e-14
    )
    np.testing.assert_allclose(
        dv.y, directional_derivative(w, v.component(1)).values, atol=1e-14
    )


def test_strain_frobenius_sq_on_single_mode():
    g = make_grid(32)
    h = g.spacing
    v = VectorField.from_function(g, lambda X, Y: np.sin(X), lambda X, Y: 0.0 * X)
    X, _ = g.mesh()
    expected = (np.sin(h) / h * np.cos(X)) ** 2
    np.testing.assert_allclose(strain_frobenius_sq(v).values, expected, atol=1e-13)
