"""Backward PDE solver: exactness cases, oracle agreement, lambda selection."""

import numpy as np
import pytest

from zvonkin_lab.drift import DriftSpec, smoothing_family, synthesize_drift
from zvonkin_lab.fd_reference import solve_terminal_cn
from zvonkin_lab.grid import SpectralField, TimeField, TorusGrid
from zvonkin_lab.pde import (
    NonContractionError,
    PdeProblem,
    SolverParams,
    _march_terminal,
    grad_sup_norm,
    select_lambda,
    solve_terminal,
    solve_u,
)

L = 2 * np.pi


def static_problem(grid, b_nodes, g_nodes, vT_nodes):
    K = grid.K
    b = TimeField(grid, "vector", np.tile(SpectralField.from_physical(grid, b_nodes).coeff, (K + 1, 1, 1)))
    g = TimeField(grid, "scalar", np.tile(SpectralField.from_physical(grid, g_nodes).coeff, (K + 1, 1)))
    vT = SpectralField.from_physical(grid, vT_nodes)
    return PdeProblem(b, g, vT)


def test_zero_drift_zero_source_is_the_heat_flow():
    grid = TorusGrid(1, 64, L, 1.0, 32)
    x = grid.x[0]
    prob = static_problem(grid, 0 * x, 0 * x, np.cos(3 * x))
    v = solve_terminal(prob).field.physical()
    expect = np.exp(-0.5 * 9 * (1.0 - grid.times))[:, None] * np.cos(3 * x)[None, :]
    np.testing.assert_allclose(v, expect, atol=1e-12)


def test_static_source_hits_the_exact_resolvent_value():
    # with b = 0 and static g the integrator uses the exact per-step kernel
    # mass, so every slice matches the closed form, stiff modes included
    grid = TorusGrid(1, 128, L, 1.0, 16)
    x = grid.x[0]
    modes = [(2, 1.0), (40, 1.0)]
    g_nodes = sum(a * np.cos(m * x) for m, a in modes)
    prob = static_problem(grid, 0 * x, g_nodes, 0 * x)
    v = solve_terminal(prob).field.physical()
    tau = (1.0 - grid.times)[:, None]
    expect = sum(
        -a / (0.5 * m**2) * (1.0 - np.exp(-0.5 * m**2 * tau)) * np.cos(m * x)[None, :]
        for m, a in modes
    )
    np.testing.assert_allclose(v, expect, atol=1e-11)


def test_terminal_solver_matches_finite_difference_oracle():
    grid = TorusGrid(1, 128, L, 1.0, 128)
    x = grid.x[0]
    prob = static_problem(grid, np.sin(x), np.cos(x), np.sin(x))
    v = solve_terminal(prob).field.physical()
    ref = solve_terminal_cn(np.sin(x), np.cos(x), np.sin(x), L, 1.0, 128)
    assert np.max(np.abs(v - ref)) < 5e-4


def test_backward_marching_matches_the_single_window_solve():
    grid = TorusGrid(1, 128, L, 1.0, 128)
    x = grid.x[0]
    prob = static_problem(grid, np.sin(x), np.cos(x), np.sin(x))
    params = SolverParams()
    v1, _, _ = _march_terminal(grid, prob.b.coeff, prob.g.coeff, prob.v_T.coeff, params, 1)
    v4, _, _ = _march_terminal(grid, prob.b.coeff, prob.g.coeff, prob.v_T.coeff, params, 4)
    gap = np.max(np.abs(np.fft.ifft(v1 - v4, axis=-1).real * grid.N))
    assert gap < 1e-8


def test_rough_two_dimensional_terminal_problem_completes():
    # strong transport at lambda = 0 forces the windowed fallback
    grid = TorusGrid(2, 32, L, 1.0, 32)
    b = synthesize_drift(DriftSpec(beta=0.25, seed=101), grid)
    X, Y = grid.meshgrid()
    g = TimeField(grid, "scalar", np.tile(SpectralField.from_physical(grid, np.cos(X) * np.cos(Y)).coeff, (33, 1, 1)))
    vT = SpectralField.from_physical(grid, np.sin(X) * np.sin(Y))
    res = solve_terminal(PdeProblem(b, g, vT))
    assert res.iterations > 0
    np.testing.assert_allclose(res.field.coeff[-1], vT.coeff, atol=1e-12)


def test_solve_u_requires_positive_lambda():
    grid = TorusGrid(1, 64, L, 1.0, 8)
    b = synthesize_drift(DriftSpec(seed=1), grid)
    with pytest.raises(ValueError):
        solve_u(b, 0.0)


def test_larger_lambda_shrinks_the_gradient():
    grid = TorusGrid(1, 128, L, 1.0, 32)
    b = synthesize_drift(DriftSpec(seed=101), grid)
    g4 = solve_u(b, 4.0).grad_sup
    g64 = solve_u(b, 64.0).grad_sup
    assert g64 < g4


def test_non_contraction_is_detected():
    grid = TorusGrid(1, 64, L, 1.0, 32)
    x = grid.x[0]
    big = TimeField(grid, "vector", np.tile(SpectralField.from_physical(grid, 50.0 * np.sin(x)).coeff, (33, 1, 1)))
    with pytest.raises(NonContractionError):
        solve_u(big, 1.0)


def test_select_lambda_returns_a_tame_family():
    grid = TorusGrid(1, 128, L, 1.0, 64)
    b = synthesize_drift(DriftSpec(seed=101), grid)
    fam = smoothing_family(b, [4, 16])
    lam, results, trace = select_lambda(b, fam)
    assert set(results) == {"b", "n0", "n1"}
    assert all(r.grad_sup <= 0.5 for r in results.values())
    assert all(r.lam == lam for r in results.values())
    assert trace[-1].get("accepted") is True


def test_gradient_sup_norm_matches_brute_force_in_two_dimensions():
    grid = TorusGrid(2, 32, L, 1.0, 2)
    rng = np.random.default_rng(0)
    X, Y = grid.meshgrid()
    comps = []
    for _ in range(2):
        a = rng.normal(size=4)
        comps.append(
            SpectralField.from_physical(
                grid,
                a[0] * np.sin(X) + a[1] * np.cos(Y) + a[2] * np.sin(X + Y) + a[3] * np.cos(2 * X - Y),
            ).coeff
        )
    u = TimeField(grid, "vector", np.tile(np.stack(comps), (3, 1, 1, 1)))
    got = grad_sup_norm(u)

    # operator norm of the Jacobian node by node
    from zvonkin_lab.grid import gradient

    worst = 0.0
    sl = u.slice(0)
    J = np.stack(
        [
            np.stack([gradient(sl.component(i)).component(j).physical() for j in range(2)])
            for i in range(2)
        ]
    )
    J = np.moveaxis(J, (0, 1), (2, 3))
    worst = np.linalg.norm(J.reshape(-1, 2, 2), ord=2, axis=(1, 2)).max()
    assert got == pytest.approx(worst, rel=1e-10)
