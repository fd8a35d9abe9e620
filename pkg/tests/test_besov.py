"""Dyadic decomposition and paraproduct against hand-derived values."""

import numpy as np
import pytest

from zvonkin_lab.besov import (
    DyadicPartition,
    besov_norm,
    besov_norm_time,
    bony_product,
    bony_ratio,
    dyadic_blocks,
    paraproduct_parts,
)
from zvonkin_lab.drift import random_spectral_field
from zvonkin_lab.grid import SpectralField, TimeField, TorusGrid

L = 2 * np.pi


def grid1(N):
    return TorusGrid(1, N, L, 1.0, 1)


def test_cutoff_plateau_and_support():
    # chi is exactly 1 up to 3/4 and exactly 0 from 4/3 on
    assert DyadicPartition.chi(0.75) == 1.0
    assert DyadicPartition.chi(0.5) == 1.0
    assert DyadicPartition.chi(4.0 / 3.0) == 0.0
    assert 0.0 < DyadicPartition.chi(1.0) < 1.0


def test_block_assignment_of_single_modes():
    # rho(xi) = chi(xi/2) - chi(xi): mode 3 sits entirely in block 1,
    # mode 12 in block 3, the constant in block -1
    g = grid1(128)
    f3 = SpectralField.from_physical(g, np.cos(3 * g.x[0]))
    blocks = dyadic_blocks(f3)
    sups = np.array([b.sup() for b in blocks])
    assert sups[2] == pytest.approx(1.0, abs=1e-12)  # index 0 is block -1
    assert np.all(np.delete(sups, 2) < 1e-12)

    f12 = SpectralField.from_physical(g, np.cos(12 * g.x[0]))
    sups12 = np.array([b.sup() for b in dyadic_blocks(f12)])
    assert sups12[4] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.delete(sups12, 4) < 1e-12)

    const = SpectralField.from_physical(g, np.full(128, 2.5))
    supsc = np.array([b.sup() for b in dyadic_blocks(const)])
    assert supsc[0] == pytest.approx(2.5, abs=1e-12)
    assert np.all(supsc[1:] < 1e-12)


def test_besov_norm_frozen_values():
    g = grid1(128)
    # single mode 12 in block j=3: norm = 2^(3*gamma) * 1
    f12 = SpectralField.from_physical(g, np.cos(12 * g.x[0]))
    assert besov_norm(f12, -0.25) == pytest.approx(0.5946035575013605, abs=1e-12)
    f3 = SpectralField.from_physical(g, np.cos(3 * g.x[0]))
    assert besov_norm(f3, 1.0) == pytest.approx(2.0, abs=1e-12)
    # block -1 enters at weight 2^(-gamma)
    const = SpectralField.from_physical(g, np.full(128, 1.0))
    assert besov_norm(const, -0.5) == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_besov_norm_rejects_extreme_exponent():
    g = grid1(64)
    f = SpectralField.from_physical(g, np.cos(g.x[0]))
    with pytest.raises(ValueError):
        besov_norm(f, 5.0)


def test_blocks_reconstruct_the_field():
    g = grid1(256)
    f = random_spectral_field(g, -0.3, seed=11)
    total = np.sum([b.coeff for b in dyadic_blocks(f)], axis=0)
    np.testing.assert_allclose(total, f.coeff, atol=1e-12)


def test_norm_is_positively_homogeneous():
    g = grid1(256)
    f = random_spectral_field(g, 0.4, seed=3)
    n1 = besov_norm(f, 0.4)
    n3 = besov_norm(SpectralField(g, "scalar", 3.0 * f.coeff), 0.4)
    assert n3 == pytest.approx(3.0 * n1, rel=1e-12)


def test_block_assignment_stable_under_embedding():
    # the same mode content lands in the same blocks on a finer grid
    gA, gB = grid1(64), grid1(256)
    f = np.cos(12 * gA.x[0]) + 0.3 * np.sin(5 * gA.x[0])
    nA = besov_norm(SpectralField.from_physical(gA, f), -0.25)
    nB = besov_norm(SpectralField.from_physical(gB, np.cos(12 * gB.x[0]) + 0.3 * np.sin(5 * gB.x[0])), -0.25)
    assert nA == pytest.approx(nB, rel=1e-12)


def test_paraproduct_parts_sum_to_product():
    g = grid1(256)
    f = random_spectral_field(g, 0.45, seed=5, tag=1)
    h = random_spectral_field(g, -0.25, seed=6, tag=2)
    lo_hi, hi_lo, resonant = paraproduct_parts(f, h)
    total = lo_hi.coeff + hi_lo.coeff + resonant.coeff
    np.testing.assert_allclose(total, bony_product(f, h).coeff, atol=1e-12)


def test_bony_ratio_is_finite_and_positive():
    g = grid1(256)
    f = random_spectral_field(g, 0.45, seed=9, tag=1)
    h = random_spectral_field(g, -0.25, seed=10, tag=2)
    r = bony_ratio(f, h, 0.45, 0.25)
    assert 0.0 < r < 100.0


def test_besov_norm_time_takes_sup_over_slices():
    g = TorusGrid(1, 64, L, 1.0, 2)
    base = SpectralField.from_physical(g, np.cos(3 * g.x[0])).coeff
    coeff = np.stack([0.5 * base, 2.0 * base, base])
    tf = TimeField(g, "scalar", coeff)
    assert besov_norm_time(tf, 1.0) == pytest.approx(4.0, abs=1e-12)
