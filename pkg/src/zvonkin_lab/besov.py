"""Dyadic frequency analysis on the grid.

Hoelder-Zygmund norms of negative (and positive) order are computed from a
Littlewood-Paley decomposition adapted to the finite frequency lattice.  The
partition profiles are polynomial smoothsteps; the annulus profile is the
telescoped difference rho(xi) = chi(xi/2) - chi(xi), so the partition of
unity is exact by construction and only adjacent blocks overlap.

Frequencies are measured in integer lattice units (the mode index n), which
for the default box L = 2*pi coincides with physical wavenumber.
"""

from __future__ import annotations

import numpy as np

from .grid import SpectralField, dealiased_product, product_coeff


def _smoothstep(t):
    """C^2 ramp: 0 for t<=0, 1 for t>=1, 6t^5-15t^4+10t^3 between."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


class DyadicPartition:
    """Smooth dyadic partition of unity on the grid frequencies.

    chi equals 1 on |xi| <= 3/4 and vanishes for |xi| >= 4/3; the annulus
    profile rho(xi) = chi(xi/2) - chi(xi) is supported in 3/4 <= |xi| <= 8/3.
    Block j carries rho(2^-j xi) for 0 <= j < j_max; block -1 carries chi;
    the final block j_max absorbs the remainder 1 - chi(2^-j_max xi) so the
    reconstruction is exact up to the lattice edge.
    """

    def __init__(self, grid):
        self.grid = grid
        self.j_max = int(np.log2(grid.N // 2)) - 1
        # |n| on the grid, integer frequency units
        absn = np.sqrt(sum((k * grid.L / (2 * np.pi)) ** 2 for k in grid.k) + np.zeros(grid.shape))
        self._absn = absn
        self.weights = self._block_weights(absn)

    @staticmethod
    def chi(xi):
        """Low-pass profile: 1 on |xi|<=3/4, 0 beyond 4/3."""
        return _smoothstep((4.0 / 3.0 - np.abs(xi)) / (4.0 / 3.0 - 3.0 / 4.0))

    @classmethod
    def rho(cls, xi):
        """Annulus profile, supported in 3/4 <= |xi| <= 8/3."""
        return cls.chi(np.asarray(xi) / 2.0) - cls.chi(xi)

    def _block_weights(self, absn):
        ws = [self.chi(absn)]
        for j in range(self.j_max):
            ws.append(self.rho(absn / 2.0**j))
        ws.append(1.0 - self.chi(absn / 2.0**self.j_max))
        return np.stack(ws)  # (j_max+2,) + grid.shape, index 0 is block -1

    def block_index(self):
        """Iterator of block labels, -1 .. j_max."""
        return range(-1, self.j_max + 1)

    def weight(self, j):
        return self.weights[j + 1]


def dyadic_blocks(f, partition=None):
    """Littlewood-Paley pieces of a scalar field; their sum reproduces f.

    Returns a list of SpectralFields indexed by block label -1 .. j_max.
    """
    if f.arity != "scalar":
        raise ValueError("dyadic_blocks expects a scalar field")
    part = partition or DyadicPartition(f.grid)
    return [SpectralField(f.grid, "scalar", f.coeff * part.weight(j)) for j in part.block_index()]


def besov_norm(f, gamma, partition=None):
    """Hoelder-Zygmund norm sup_j 2^(j*gamma) sup |Delta_j f|.

    The j = -1 block enters with weight 2^-gamma.  |gamma| <= 4 is enforced;
    outside that range the finite-lattice norm is not meaningful here.
    """
    if abs(gamma) > 4:
        raise ValueError("|gamma| must be <= 4")
    part = partition or DyadicPartition(f.grid)
    best = 0.0
    for j, blk in zip(part.block_index(), dyadic_blocks(f, part)):
        best = max(best, 2.0 ** (j * gamma) * blk.sup())
    return best


def besov_norm_time(tf, gamma, partition=None):
    """sup over slices of besov_norm."""
    part = partition or DyadicPartition(tf.grid)
    return max(besov_norm(tf.slice(k), gamma, part) for k in range(tf.grid.K + 1))


def bony_product(f, g):
    """Dealiased pointwise product of two scalar fields."""
    return dealiased_product(f, g)


def paraproduct_parts(f, g, partition=None):
    """Bony decomposition (T_f g, T_g f, R(f, g)) of the product f*g.

    T_f g collects low-f against high-g pairs (block gap >= 2), T_g f the
    mirror, and R the diagonal |j - j'| <= 1.  All pairwise products are
    dealiased, so the three parts sum to bony_product(f, g) exactly up to
    roundoff.
    """
    if f.arity != "scalar" or g.arity != "scalar":
        raise ValueError("paraproduct_parts expects scalar fields")
    part = partition or DyadicPartition(f.grid)
    grid = f.grid
    fb = [b.coeff for b in dyadic_blocks(f, part)]
    gb = [b.coeff for b in dyadic_blocks(g, part)]
    nb = len(fb)  # blocks -1 .. j_max at list index j+1

    # cumulative low-pass sums S_m = sum of blocks <= m
    cum_f = np.cumsum(np.stack(fb), axis=0)
    cum_g = np.cumsum(np.stack(gb), axis=0)

    zero = np.zeros(grid.shape, dtype=np.complex128)
    t_fg = zero.copy()
    t_gf = zero.copy()
    reso = zero.copy()
    for j in range(nb):  # list index; block label j - 1
        if j >= 2:
            t_fg = t_fg + product_coeff(grid, cum_f[j - 2], gb[j])
            t_gf = t_gf + product_coeff(grid, cum_g[j - 2], fb[j])
        for jp in range(max(0, j - 1), min(nb, j + 2)):
            reso = reso + product_coeff(grid, fb[j], gb[jp])
    mk = lambda c: SpectralField(grid, "scalar", c)
    return mk(t_fg), mk(t_gf), mk(reso)


def bony_ratio(f, g, alpha, beta, partition=None):
    """Diagnostic ratio ||f g||_(-beta) / (||f||_alpha ||g||_(-beta)).

    The product estimate needs alpha - beta > 0; the ratio over a corpus of
    samples gives an empirical constant for it.
    """
    if alpha - beta <= 0:
        raise ValueError("need alpha > beta for the product estimate")
    part = partition or DyadicPartition(f.grid)
    num = besov_norm(bony_product(f, g), -beta, part)
    den = besov_norm(f, alpha, part) * besov_norm(g, -beta, part)
    return num / den
