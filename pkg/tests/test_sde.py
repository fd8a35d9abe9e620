"""Path simulation: seeding, laws, channels, local time."""

import numpy as np
import pytest
import scipy.stats

from zvonkin_lab.drift import DriftSpec, synthesize_drift
from zvonkin_lab.grid import SpectralField, TimeField, TorusGrid
from zvonkin_lab.pde import solve_u
from zvonkin_lab.sde import (
    PathEnsemble,
    dirac,
    gaussian,
    local_time_A,
    mixture,
    path_increments,
    recover_X,
    sample_initial,
    simulate_X_direct,
    simulate_Y,
    uniform,
)
from zvonkin_lab.zvonkin import build_map

L = 2 * np.pi


def test_increments_are_keyed_per_path():
    # path i is a function of (master_seed, i) alone, so growing the
    # ensemble extends it without reshuffling
    a = path_increments(5, 8, 16, 1, 0.01)
    b = path_increments(5, 4, 16, 1, 0.01)
    np.testing.assert_array_equal(a[:4], b)
    c = path_increments(6, 4, 16, 1, 0.01)
    assert np.max(np.abs(b - c)) > 1e-6


def test_increment_moments_match_the_step():
    dW = path_increments(9, 2000, 8, 2, 0.25)
    assert abs(dW.mean()) < 5 * np.sqrt(0.25 / (2000 * 16))
    assert abs(dW.var() - 0.25) < 5 * 0.25 * np.sqrt(2.0 / (2000 * 16))


def test_initial_law_sampling():
    pt = sample_initial(dirac([1.5]), 7, 1, L, 0)
    np.testing.assert_array_equal(pt, np.full((7, 1), 1.5))
    u = sample_initial(uniform([0.0], [L]), 4000, 1, L, 1)
    assert u.min() >= 0.0 and u.max() < L
    assert abs(u.mean() - np.pi) < 5 * L / np.sqrt(12 * 4000)
    g = sample_initial(gaussian([3.0], 0.1), 4000, 1, L, 2)
    assert abs(g.mean() - 3.0) < 5 * 0.1 / np.sqrt(4000)
    mix = mixture([(0.5, dirac([1.0])), (0.5, dirac([2.0]))])
    m = sample_initial(mix, 4000, 1, L, 3)
    assert set(np.unique(m)) == {1.0, 2.0}
    assert abs((m == 1.0).mean() - 0.5) < 0.05


def test_out_of_cell_mean_wraps_with_warning():
    with pytest.warns(UserWarning):
        pts = sample_initial(gaussian([L + 1.0], 1e-6), 10, 1, L, 0)
    assert np.all((pts >= 0) & (pts < L))


def test_zero_drift_terminal_law_is_gaussian():
    grid = TorusGrid(1, 64, L, 1.0, 256)
    bz = synthesize_drift(DriftSpec(sigma=0.0, seed=1), grid)
    ens = simulate_X_direct(bz, dirac([0.0]), 20000, 31)
    stat = scipy.stats.kstest(ens.X[:, -1, 0], "norm").statistic
    assert stat < 3.0 / np.sqrt(20000)


def test_transformed_channel_recovers_the_original():
    grid = TorusGrid(1, 128, L, 1.0, 128)
    b = synthesize_drift(DriftSpec(beta=0.25, seed=101), grid)
    zm = build_map(solve_u(b, 512.0))
    ens = simulate_Y(zm, uniform([0.0], [L]), 50, 17)
    assert ens.Y.shape == (50, 129, 1)
    assert ens.X.shape == (50, 129, 1)
    assert ens.lam == 512.0
    # the stored X satisfies phi(t, X) = Y at every node
    worst = 0.0
    for k in (0, 64, 128):
        back = zm.forward(grid.times[k], ens.X[:, k])
        worst = max(worst, float(np.max(np.abs(back - ens.Y[:, k]))))
    assert worst < 1e-8
    again = recover_X(zm, ens)
    np.testing.assert_allclose(again.X, ens.X, atol=1e-10)


def test_direct_and_transformed_start_from_the_same_noise():
    grid = TorusGrid(1, 128, L, 1.0, 128)
    b = synthesize_drift(DriftSpec(beta=0.25, seed=101), grid)
    zm = build_map(solve_u(b, 512.0))
    e1 = simulate_Y(zm, dirac([2.0]), 20, 5)
    e2 = simulate_X_direct(b, dirac([2.0]), 20, 5)
    np.testing.assert_array_equal(e1.dW, e2.dW)


def test_increment_gate_flags_doctored_noise():
    h = 1.0 / 16
    dW = 3.0 * path_increments(2, 400, 16, 1, h)
    x0 = np.zeros((400, 1))
    with pytest.warns(UserWarning):
        ens = PathEnsemble(T=1.0, K=16, d=1, M=400, seed=2, x0=x0, dW=dW)
    assert ens.increment_flag != "ok"


def test_boundary_fraction_counts_paths_near_the_edge():
    h = 1.0 / 8
    dW = np.zeros((10, 8, 1))
    x0 = np.full((10, 1), 0.01)
    X = np.tile(x0[:, None, :], (1, 9, 1))
    near = PathEnsemble(T=1.0, K=8, d=1, M=10, seed=0, x0=x0, dW=dW, X=X)
    assert near.boundary_fraction(L) == 1.0
    mid = PathEnsemble(T=1.0, K=8, d=1, M=10, seed=0, x0=x0, dW=dW, X=X + np.pi)
    assert mid.boundary_fraction(L) == 0.0


def test_local_time_of_a_constant_is_time_itself():
    grid = TorusGrid(1, 64, L, 1.0, 32)
    bz = synthesize_drift(DriftSpec(sigma=0.0, seed=1), grid)
    ens = simulate_X_direct(bz, uniform([0.0], [L]), 30, 3)
    c = TimeField(grid, "scalar", np.tile(SpectralField.from_physical(grid, np.full(64, 2.0)).coeff, (33, 1)))
    A = local_time_A(c, ens)
    np.testing.assert_allclose(A, 2.0 * ens.times[None, :], atol=1e-10)
