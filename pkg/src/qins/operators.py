"""Second-order central difference operators on the periodic grid.

All stencils wrap around via ``np.roll``, so there is no boundary code
anywhere.  The first-derivative operator is antisymmetric under the
discrete inner product, which gives summation by parts exactly (up to
round-off):

    integrate(s * divergence(v)) + inner_product(gradient(s), v) == 0

``laplacian`` is the compact 5-point stencil.  Note that it is *not* the
composition divergence(gradient(.)); that composition is the wide
stencil used by the pressure projection in :mod:`qins.models`.
"""

from __future__ import annotations

import numpy as np

from .fields import ScalarField, VectorField


def _ddx(a: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2.0 * h)


def _ddy(a: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2.0 * h)


def _lap(a: np.ndarray, h: float) -> np.ndarray:
    return (
        np.roll(a, -1, axis=0) + np.roll(a, 1, axis=0)
        + np.roll(a, -1, axis=1) + np.roll(a, 1, axis=1)
        - 4.0 * a
    ) / (h * h)


def gradient(s: ScalarField) -> VectorField:
    """Central-difference gradient of a scalar field."""
    h = s.grid.spacing
    return VectorField(s.grid, _ddx(s.values, h), _ddy(s.values, h))


def divergence(v: VectorField) -> ScalarField:
    """Central-difference divergence of a vector field."""
    h = v.grid.spacing
    return ScalarField(v.grid, _ddx(v.x, h) + _ddy(v.y, h))


def laplacian(field):
    """Compact 5-point Laplacian of a scalar or vector field."""
    h = field.grid.spacing
    if isinstance(field, ScalarField):
        return ScalarField(field.grid, _lap(field.values, h))
    return VectorField(field.grid, _lap(field.x, h), _lap(field.y, h))


def convection(v: VectorField, form: str = "advective") -> VectorField:
    """Self-convection (v . grad) v.

    ``advective`` is the plain form v_j d_j v_i.  ``skew`` averages the
    advective and divergence forms; its discrete inner product with v
    vanishes identically, which makes it the right choice when a kinetic
    energy budget has to close without a convective contribution.
    """
    h = v.grid.spacing
    adv_x = v.x * _ddx(v.x, h) + v.y * _ddy(v.x, h)
    adv_y = v.x * _ddx(v.y, h) + v.y * _ddy(v.y, h)
    if form == "advective":
        return VectorField(v.grid, adv_x, adv_y)
    if form == "skew":
        div_x = _ddx(v.x * v.x, h) + _ddy(v.y * v.x, h)
        div_y = _ddx(v.x * v.y, h) + _ddy(v.y * v.y, h)
        return VectorField(v.grid, 0.5 * (adv_x + div_x), 0.5 * (adv_y + div_y))
    raise ValueError(f"unknown convection form {form!r}")


def grad_div(v: VectorField) -> VectorField:
    """Gradient of the divergence, as the composition of the two stencils."""
    return gradient(divergence(v))


def strain_frobenius_sq(v: VectorField) -> ScalarField:
    """Squared Frobenius norm of the velocity gradient, |grad v|^2."""
    h = v.grid.spacing
    return ScalarField(
        v.grid,
        _ddx(v.x, h) ** 2 + _ddy(v.x, h) ** 2 + _ddx(v.y, h) ** 2 + _ddy(v.y, h) ** 2,
    )


def directional_derivative(w: tuple[float, float], s) -> "ScalarField | VectorField":
    """(w . grad) of a field for a constant direction w."""
    h = s.grid.spacing
    wx, wy = float(w[0]), float(w[1])
    if isinstance(s, ScalarField):
        return ScalarField(s.grid, wx * _ddx(s.values, h) + wy * _ddy(s.values, h))
    return VectorField(
        s.grid,
        wx * _ddx(s.x, h) + wy * _ddy(s.x, h),
        wx * _ddx(s.y, h) + wy * _ddy(s.y, h),
    )
