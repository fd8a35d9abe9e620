"""Transform map: inversion, gradient gate, conjugated generator."""

import numpy as np
import pytest

from zvonkin_lab.drift import DriftSpec, synthesize_drift
from zvonkin_lab.grid import SpectralField, TimeField, TorusGrid, eval_physical
from zvonkin_lab.pde import solve_u
from zvonkin_lab.zvonkin import (
    GradientBoundError,
    apply_Ltilde,
    build_map,
    conjugation_residual,
)

L = 2 * np.pi


@pytest.fixture(scope="module")
def desk_map():
    grid = TorusGrid(1, 128, L, 1.0, 128)
    b = synthesize_drift(DriftSpec(beta=0.25, seed=101), grid)
    res = solve_u(b, 512.0)
    return grid, b, res, build_map(res)


def test_forward_is_identity_plus_u(desk_map):
    grid, _, res, zm = desk_map
    rng = np.random.default_rng(1)
    x = rng.random((200, 1)) * L
    t = grid.times[37]
    shift = zm.forward(t, x) - x
    u_here = eval_physical(res.field.physical()[37, 0], grid, x)
    np.testing.assert_allclose(shift[:, 0], u_here, atol=1e-9)


def test_inversion_round_trip(desk_map):
    grid, _, _, zm = desk_map
    rng = np.random.default_rng(2)
    worst = 0.0
    for k in (0, 64, 128):
        y = rng.random((2000, 1)) * L
        x = zm.invert(grid.times[k], y)
        back = zm.forward(grid.times[k], x)
        worst = max(worst, float(np.max(np.abs(back - y))))
    assert worst <= 1e-9


def test_warm_start_agrees_with_cold_inversion(desk_map):
    grid, _, _, zm = desk_map
    rng = np.random.default_rng(3)
    y = rng.random((100, 1)) * L
    t = grid.times[50]
    cold = zm.invert(t, y)
    warm = zm.invert(t, y, warm=cold + 1e-3)
    np.testing.assert_allclose(cold, warm, atol=1e-8)


def test_pushforward_initial_is_the_time_zero_map(desk_map):
    _, _, _, zm = desk_map
    x0 = np.array([[0.5], [2.0], [5.5]])
    np.testing.assert_allclose(zm.pushforward_initial(x0), zm.forward(0.0, x0), atol=1e-12)


def test_psi_jacobian_inverts_the_forward_jacobian(desk_map):
    grid, _, _, zm = desk_map
    rng = np.random.default_rng(4)
    y = rng.random((50, 1)) * L
    t = grid.times[80]
    x = zm.invert(t, y)
    Jpsi = zm.psi_jacobian(t, y)
    Jphi = 1.0 + eval_physical(zm.Ju_slice(t), grid, x)[0, 0]
    np.testing.assert_allclose(Jpsi[:, 0, 0] * Jphi, 1.0, atol=1e-8)


def test_gradient_bound_violation_is_rejected():
    grid = TorusGrid(1, 64, L, 1.0, 32)
    x = grid.x[0]
    smooth = TimeField(grid, "vector", np.tile(SpectralField.from_physical(grid, 2.0 * np.sin(x)).coeff, (33, 1, 1)))
    res = solve_u(smooth, 1.0)
    assert res.grad_sup > 0.5
    with pytest.raises(GradientBoundError):
        build_map(res)


def test_conjugated_generator_reduces_to_heat_for_zero_drift():
    grid = TorusGrid(1, 64, L, 1.0, 256)
    bz = synthesize_drift(DriftSpec(sigma=0.0, seed=1), grid)
    zm = build_map(solve_u(bz, 8.0))
    tau = (1.0 - grid.times).reshape(-1, 1)
    base = SpectralField.from_physical(grid, np.cos(grid.x[0])).coeff
    f = TimeField(grid, "scalar", np.exp(-0.5 * grid.ksq * tau) * base)
    # f solves the backward heat equation, so Ltilde f vanishes off the
    # time boundary (centred differences are one-sided there)
    g = apply_Ltilde(f, zm)
    interior = g.physical()[1:-1]
    assert np.max(np.abs(interior)) < 1e-4


def test_conjugation_residual_is_small_for_zero_drift():
    grid = TorusGrid(1, 64, L, 1.0, 256)
    bz = synthesize_drift(DriftSpec(sigma=0.0, seed=1), grid)
    zm = build_map(solve_u(bz, 8.0))
    w = 2 * np.pi / L
    samp = np.sin(w * grid.x[0]) + 0.5 * np.cos(2 * w * grid.x[0])
    f0 = SpectralField.from_physical(grid, samp)
    tdep = np.cos(np.linspace(0.0, 2.0, grid.K + 1))
    ft = TimeField.from_coeff(grid, tdep[:, None] * f0.coeff[None])
    out = conjugation_residual(ft, bz, zm, margin=32)
    assert out["rel_sup"] < 1e-2
    assert len(out["per_slice"]) == grid.K + 1
