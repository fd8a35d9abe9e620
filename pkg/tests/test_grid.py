"""Spectral grid primitives against closed forms."""

import numpy as np
import pytest

from zvonkin_lab.grid import (
    SpectralField,
    TimeField,
    TorusGrid,
    dealiased_product,
    differentiate,
    eval_physical,
    evaluate,
    gradient,
    heat_semigroup,
    hessian,
    laplacian,
    mollify,
    time_derivative,
    time_slice_physical,
)

L = 2 * np.pi


def test_from_physical_round_trip():
    grid = TorusGrid(1, 64, L, 1.0, 8)
    samples = np.sin(3 * grid.x[0]) + 0.25 * np.cos(5 * grid.x[0])
    f = SpectralField.from_physical(grid, samples)
    np.testing.assert_allclose(f.physical(), samples, atol=1e-13)
    assert f.hermitian_defect() < 1e-13


def test_derivative_of_sine_is_cosine():
    grid = TorusGrid(1, 64, L, 1.0, 8)
    f = SpectralField.from_physical(grid, np.sin(grid.x[0]))
    df = differentiate(f, 0)
    np.testing.assert_allclose(df.physical(), np.cos(grid.x[0]), atol=1e-12)


def test_gradient_and_laplacian_two_dimensional():
    grid = TorusGrid(2, 32, L, 1.0, 4)
    X, Y = grid.meshgrid()
    f = SpectralField.from_physical(grid, np.sin(X) * np.cos(Y))
    g = gradient(f)
    np.testing.assert_allclose(g.component(0).physical(), np.cos(X) * np.cos(Y), atol=1e-12)
    np.testing.assert_allclose(g.component(1).physical(), -np.sin(X) * np.sin(Y), atol=1e-12)
    lap = laplacian(f)
    np.testing.assert_allclose(lap.physical(), -2 * np.sin(X) * np.cos(Y), atol=1e-12)


def test_hessian_is_symmetric():
    grid = TorusGrid(2, 32, L, 1.0, 4)
    X, Y = grid.meshgrid()
    f = SpectralField.from_physical(grid, np.sin(X + 0.3) * np.sin(2 * Y))
    H = hessian(f)
    np.testing.assert_allclose(
        H.component(0, 1).physical(), H.component(1, 0).physical(), atol=1e-12
    )


def test_heat_semigroup_damps_each_mode():
    grid = TorusGrid(1, 64, L, 1.0, 8)
    r = 0.37
    f = SpectralField.from_physical(grid, np.cos(4 * grid.x[0]))
    warmed = heat_semigroup(f, r)
    np.testing.assert_allclose(
        warmed.physical(), np.exp(-0.5 * 16 * r) * np.cos(4 * grid.x[0]), atol=1e-13
    )


def test_mollify_removes_high_modes():
    grid = TorusGrid(1, 128, L, 1.0, 4)
    f = SpectralField.from_physical(grid, np.cos(3 * grid.x[0]) + np.cos(40 * grid.x[0]))
    fn = mollify(f, 8)
    # coefficient factor exp(-|k|^2/n): mode 40 crushed, mode 3 damped mildly
    c = np.abs(fn.coeff)
    assert c[40] < 1e-8
    np.testing.assert_allclose(c[3], 0.5 * np.exp(-9.0 / 8.0), rtol=1e-12)


def test_dealiased_product_matches_pointwise_for_band_limited_fields():
    grid = TorusGrid(1, 64, L, 1.0, 8)
    f = SpectralField.from_physical(grid, np.cos(3 * grid.x[0]))
    g = SpectralField.from_physical(grid, np.sin(5 * grid.x[0]))
    prod = dealiased_product(f, g)
    np.testing.assert_allclose(
        prod.physical(), np.cos(3 * grid.x[0]) * np.sin(5 * grid.x[0]), atol=1e-12
    )


def test_eval_physical_interpolation_converges_fast():
    # cubic kernel: the off-grid error drops by ~an order per refinement
    pts = np.array([[0.123], [1.9], [4.457], [6.2]])
    errs = []
    for N in (64, 128):
        grid = TorusGrid(1, N, L, 1.0, 8)
        f = SpectralField.from_physical(grid, np.sin(2 * grid.x[0]))
        vals = eval_physical(f.physical(), grid, pts)
        errs.append(np.max(np.abs(vals - np.sin(2 * pts[:, 0]))))
    assert errs[0] < 5e-4
    assert errs[1] < errs[0] / 6.0


def test_time_field_linear_interpolation_between_slices():
    grid = TorusGrid(1, 32, L, 1.0, 4)
    coeff = np.stack([k * SpectralField.from_physical(grid, np.cos(grid.x[0])).coeff for k in range(5)])
    tf = TimeField(grid, "scalar", coeff)
    mid = time_slice_physical(tf, 0.125)  # halfway between slices 0 and 1
    np.testing.assert_allclose(mid, 0.5 * np.cos(grid.x[0]), atol=1e-12)
    v = evaluate(tf, 0.125, np.array([[0.4]]))
    np.testing.assert_allclose(v, [0.5 * np.cos(0.4)], atol=1e-4)


def test_time_derivative_exact_for_linear_coefficients():
    grid = TorusGrid(1, 32, L, 1.0, 8)
    base = SpectralField.from_physical(grid, np.sin(grid.x[0])).coeff
    coeff = np.stack([(1.0 + 2.0 * t) * base for t in grid.times])
    dt = time_derivative(TimeField(grid, "scalar", coeff))
    phys = dt.physical()
    expect = np.broadcast_to(2.0 * np.sin(grid.x[0]), phys.shape)
    np.testing.assert_allclose(phys, expect, atol=1e-11)
