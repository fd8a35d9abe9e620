"""The drift-removing change of coordinates phi = id + u.

With u solving L u_i = lambda u_i - b_i and sup_t ||grad u|| <= 1/2, the
map phi(t, .) = id + u(t, .) is a bi-Lipschitz deformation of the torus
lattice: phi(t, x + Lm) = phi(t, x) + Lm.  Its inverse psi is computed by
fixed-point iteration, and the transformed process Y = phi(t, X) has
coefficients built from u alone, with no derivative of b anywhere.
"""

from __future__ import annotations

import numpy as np

from .grid import (
    SpectralField,
    TimeField,
    eval_physical,
    gradient,
    hessian,
    time_derivative,
)
from .pde import SolveResult, grad_sup_norm

GRAD_BOUND = 0.5


class GradientBoundError(ValueError):
    """The Jacobian bound certifying invertibility fails."""


class ZvonkinMap:
    """phi(t, x) = x + u(t, x) with certified contraction of u.

    Construction checks sup_t ||grad u|| <= 1/2 (operator norm on the
    grid), which makes x -> y - u(t, x) a 1/2-contraction, hence phi
    invertible with Lipschitz inverse.
    """

    def __init__(self, u: TimeField, lam: float, inv_tol: float = 1e-10, max_iter: int = 60):
        if u.arity != "vector":
            raise ValueError("u must be a vector TimeField")
        gs = grad_sup_norm(u)
        if gs > GRAD_BOUND:
            raise GradientBoundError(f"sup ||grad u|| = {gs:.4f} exceeds {GRAD_BOUND}")
        self.u = u
        self.Ju = gradient(u)
        self.lam = float(lam)
        self.grid = u.grid
        self.grad_sup = gs
        self.inv_tol = inv_tol
        self.max_iter = max_iter
        # physical caches, materialised once
        self._u_phys = u.physical()
        self._Ju_phys = self.Ju.physical()

    # -- time slicing ------------------------------------------------------

    def _slice(self, t, stack):
        g = self.grid
        if t < -1e-12 or t > g.T + 1e-12:
            raise ValueError(f"t={t} outside [0, {g.T}]")
        pos = min(max(t, 0.0), g.T) / g.dt
        j = min(int(np.floor(pos)), g.K - 1)
        th = pos - j
        if th == 0.0:
            return stack[j]
        if self.u.interp == "const-left":
            return stack[j] if th < 1.0 else stack[j + 1]
        return (1.0 - th) * stack[j] + th * stack[j + 1]

    def u_slice(self, t):
        return self._slice(t, self._u_phys)

    def Ju_slice(self, t):
        return self._slice(t, self._Ju_phys)

    # -- map operations ----------------------------------------------------

    def forward(self, t, x):
        """phi(t, x) = x + u(t, x); x of shape (P, d)."""
        x = np.atleast_2d(np.asarray(x, float))
        return x + eval_physical(self.u_slice(t), self.grid, x).T

    def invert(self, t, y, warm=None):
        """psi(t, y) by iterating x <- y - u(t, x) from x = y (or warm start).

        Converges geometrically at rate grad_sup <= 1/2; the returned x
        satisfies |phi(t, x) - y| <= 2 * inv_tol.
        """
        y = np.atleast_2d(np.asarray(y, float))
        u_phys = self.u_slice(t)
        x = y.copy() if warm is None else np.array(warm, float)
        for _ in range(self.max_iter):
            x_new = y - eval_physical(u_phys, self.grid, x).T
            delta = float(np.max(np.abs(x_new - x)))
            x = x_new
            if delta < self.inv_tol:
                return x
        raise RuntimeError(f"inversion stalled: last update {delta:.2e} > tol {self.inv_tol:.1e}")

    def y_coefficients(self, t, y):
        """Drift and diffusion of Y at (t, y): (lam * u, I + Ju) at psi(t, y).

        Returns (drift (P, d), diffusion (P, d, d)).
        """
        x = self.invert(t, y)
        drift = self.lam * eval_physical(self.u_slice(t), self.grid, x).T
        J = eval_physical(self.Ju_slice(t), self.grid, x)  # (d, d, P)
        eye = np.eye(self.grid.d)[:, :, None]
        return drift, np.moveaxis(J + eye, -1, 0)

    def pushforward_initial(self, x0):
        """Initial condition for Y: phi(0, x0)."""
        return self.forward(0.0, x0)

    def psi_jacobian(self, t, y):
        """grad psi via the closed-form inverse of I + Ju at psi(t, y); (P, d, d)."""
        x = self.invert(t, y)
        J = np.moveaxis(eval_physical(self.Ju_slice(t), self.grid, x), -1, 0)
        d = self.grid.d
        A = J + np.eye(d)
        if d == 1:
            return 1.0 / A
        det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
        inv = np.empty_like(A)
        inv[:, 0, 0] = A[:, 1, 1]
        inv[:, 1, 1] = A[:, 0, 0]
        inv[:, 0, 1] = -A[:, 0, 1]
        inv[:, 1, 0] = -A[:, 1, 0]
        return inv / det[:, None, None]


def build_map(result: SolveResult, inv_tol: float = 1e-10, max_iter: int = 60) -> ZvonkinMap:
    """Wrap a solve_u result; rejects maps violating the gradient bound."""
    if result.lam is None:
        raise ValueError("SolveResult does not carry lambda; use solve_u output")
    return ZvonkinMap(result.field, result.lam, inv_tol=inv_tol, max_iter=max_iter)


def _band_cut(grid, stack, band):
    """Zero every mode with a per-axis integer frequency above band."""
    axes = tuple(range(1, 1 + grid.d))
    c = np.fft.fftn(stack, axes=axes)
    mask = np.ones(grid.shape, dtype=bool)
    for a in range(grid.d):
        sh = [1] * grid.d
        sh[a] = grid.N
        mask &= (np.abs(grid.n_axis) <= band).reshape(sh)
    c *= mask[None]
    return np.real(np.fft.ifftn(c, axes=axes))


def conjugation_residual(
    f_tilde: TimeField,
    b: TimeField,
    zmap: ZvonkinMap,
    margin: int = 1,
    band: int | None = None,
):
    """Compare (Ltilde f_tilde) o phi against L (f_tilde o phi) slice by slice.

    f_tilde is a smooth observable of the transformed coordinate.  The
    composed route evaluates the transformed generator at y = phi(t, x),

        d_t f_tilde + lam grad(f_tilde).u + Tr[(grad phi)^T Hess(f_tilde) grad phi] / 2,

    with every rough factor (u, grad u) read at grid nodes and only the
    smooth f_tilde derivatives interpolated off-grid.  The direct route
    samples f = f_tilde o phi on the grid and applies the generator with
    the drift transport.

    For rough drift the two sides agree as distributions, not pointwise:
    the tails of Laplacian and transport cancel only in the limit, so both
    routes are projected to the modes with per-axis frequency <= band
    (default N // 3, the resolved band) before taking the sup.  To compare
    runs at different N, pass the same explicit band to both.  The first
    and last ``margin`` time slices are skipped, where the one-sided time
    stencils differ most.
    """
    from .pde import apply_L

    g = f_tilde.grid
    if f_tilde.arity != "scalar":
        raise ValueError("conjugation_residual expects a scalar observable")
    if not g.same_box(zmap.grid):
        raise ValueError("observable and map live on different grids")
    if band is None:
        band = g.N // 3

    pts = np.stack([np.broadcast_to(g.x[a], g.shape).reshape(-1) for a in range(g.d)], axis=-1)
    dft = time_derivative(f_tilde).physical()
    grad_t = gradient(f_tilde).physical()
    hess_t = hessian(f_tilde).physical()
    ft_phys = f_tilde.physical()
    eye = np.eye(g.d)[:, :, None]

    composed = np.empty((g.K + 1,) + g.shape)
    f_slices = []
    for k in range(g.K + 1):
        t = g.times[k]
        u = zmap.u_slice(t).reshape(g.d, -1)  # rough factors on nodes
        J = zmap.Ju_slice(t).reshape(g.d, g.d, -1) + eye
        y = pts + u.T
        gf = eval_physical(grad_t[k], g, y)  # smooth factors at phi(x)
        H = eval_physical(hess_t[k], g, y)
        drift_term = zmap.lam * np.einsum("ip,ip->p", gf, u)
        diff_term = 0.5 * np.einsum("kip,klp,lip->p", J, H, J)
        dt_term = eval_physical(dft[k], g, y)
        composed[k] = (dt_term + drift_term + diff_term).reshape(g.shape)
        f_slices.append(
            SpectralField.from_physical(g, eval_physical(ft_phys[k], g, y).reshape(g.shape))
        )
    f = TimeField.from_slices(f_slices, interp=f_tilde.interp)
    direct = apply_L(f, b).physical()

    composed = _band_cut(g, composed, band)
    direct = _band_cut(g, direct, band)

    lo, hi = margin, g.K + 1 - margin
    scale = float(np.max(np.abs(composed[lo:hi])))
    per_slice = np.max(
        np.abs(composed - direct).reshape(g.K + 1, -1), axis=1
    ) / max(scale, 1e-30)
    return {
        "rel_sup": float(np.max(per_slice[lo:hi])),
        "per_slice": per_slice,
        "scale": scale,
        "band": band,
        "interior": (lo, hi),
    }


def apply_Ltilde(ft: TimeField, zmap: ZvonkinMap) -> TimeField:
    """Transformed generator applied to a smooth observable of Y.

    (Ltilde f)(t, y) = d_t f + lam * grad(f).(y - psi(t, y))
                      + (1/2) Tr[ J J^T Hess f ](t, y),
    with J = (I + Ju)(t, psi(t, y)) the Jacobian of phi at the preimage,
    evaluated on grid points y.  Note y - psi(t, y) = u(t, psi(t, y)).
    """
    if ft.arity != "scalar":
        raise ValueError("apply_Ltilde expects a scalar TimeField")
    g = ft.grid
    if not g.same_box(zmap.grid):
        raise ValueError("observable and map live on different grids")
    pts = np.stack([np.broadcast_to(g.x[a], g.shape).reshape(-1) for a in range(g.d)], axis=-1)
    dft = time_derivative(ft).physical()
    grad_phys = gradient(ft).physical()  # (K+1, d) + shape
    hess_phys = hessian(ft).physical()  # (K+1, d, d) + shape
    out = np.empty((g.K + 1,) + g.shape)
    eye = np.eye(g.d)[:, :, None]
    warm = None
    for k in range(g.K + 1):
        t = g.times[k]
        x = zmap.invert(t, pts, warm=warm)
        warm = x
        uval = eval_physical(zmap.u_slice(t), g, x)  # (d, P)
        J = eval_physical(zmap.Ju_slice(t), g, x) + eye  # (d, d, P)
        gf = grad_phys[k].reshape(g.d, -1)
        H = hess_phys[k].reshape(g.d, g.d, -1)
        drift_term = zmap.lam * np.einsum("ip,ip->p", gf, uval)
        A = np.einsum("iap,jap->ijp", J, J)  # J J^T
        diff_term = 0.5 * np.einsum("ijp,ijp->p", A, H)
        out[k] = (dft[k].reshape(-1) + drift_term + diff_term).reshape(g.shape)
    slices = [SpectralField.from_physical(g, out[k]) for k in range(g.K + 1)]
    return TimeField.from_slices(slices, interp=ft.interp)
