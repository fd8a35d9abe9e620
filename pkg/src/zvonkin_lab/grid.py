"""Spectral fields on a periodic box.

Everything downstream works with trigonometric polynomials on the torus
(R/LZ)^d sampled on a uniform N^d grid, plus a uniform time grid of K steps
on [0, T].  Coefficients follow the convention

    f(x) = sum_k c_k exp(i k.x),      k = 2*pi*n/L,  n in {-N/2, ..., N/2-1},

stored in numpy's standard FFT layout, so c = fftn(samples)/N^d.  The
Nyquist mode n = -N/2 is kept identically zero on every axis; this makes
Hermitian symmetry exact and keeps odd derivatives well defined.
"""

from __future__ import annotations

import numpy as np

_ARITIES = ("scalar", "vector", "matrix")


def _comp_shape(arity, d):
    if arity == "scalar":
        return ()
    if arity == "vector":
        return (d,)
    if arity == "matrix":
        return (d, d)
    raise ValueError(f"unknown arity {arity!r}")


class TorusGrid:
    """Uniform space-time grid on [0, L)^d x [0, T].

    Parameters
    ----------
    d : int
        Spatial dimension, 1 or 2.
    N : int
        Modes per axis, a power of two, at least 16.
    L : float
        Box side length.
    T : float
        Time horizon.
    K : int
        Number of uniform time steps (K+1 slice times).
    """

    def __init__(self, d=1, N=512, L=2 * np.pi, T=1.0, K=512):
        if d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if N < 16 or (N & (N - 1)) != 0:
            raise ValueError("N must be a power of two >= 16")
        if L <= 0 or T <= 0:
            raise ValueError("L and T must be positive")
        if K < 1:
            raise ValueError("K must be >= 1")
        self.d = d
        self.N = N
        self.L = float(L)
        self.T = float(T)
        self.K = K
        self.shape = (N,) * d
        self.cell = self.L / N
        self.dt = self.T / K
        self.times = np.linspace(0.0, self.T, K + 1)
        # integer frequencies in fft order, one axis
        self.n_axis = np.fft.fftfreq(N, 1.0 / N).astype(np.int64)
        self.k_axis = 2 * np.pi / self.L * self.n_axis
        # per-axis physical wavenumber arrays broadcast to self.shape
        self.k = []
        for a in range(d):
            sh = [1] * d
            sh[a] = N
            self.k.append(self.k_axis.reshape(sh))
        self.ksq = sum(ka**2 for ka in self.k) + np.zeros(self.shape)
        x_axis = np.arange(N) * self.cell
        self.x = [x_axis.reshape([N if a == b else 1 for b in range(d)]) for a in range(d)]
        # mask of retained modes (Nyquist row/col excluded on every axis)
        mask = np.ones(self.shape, dtype=bool)
        ny = N // 2
        for a in range(d):
            idx = [slice(None)] * d
            idx[a] = np.where(self.n_axis == -ny)[0]
            mask[tuple(idx)] = False
        self.mode_mask = mask

    def same_box(self, other):
        return (
            self.d == other.d
            and self.N == other.N
            and self.L == other.L
            and self.T == other.T
            and self.K == other.K
        )

    def meshgrid(self):
        """Physical grid points, shape (d,) + shape."""
        return np.stack(np.broadcast_arrays(*self.x)) if self.d == 2 else np.stack([self.x[0]])

    def __repr__(self):
        return f"TorusGrid(d={self.d}, N={self.N}, L={self.L:g}, T={self.T:g}, K={self.K})"


def _project(grid, coeff):
    """Zero the Nyquist modes; returns a new array."""
    out = np.array(coeff, dtype=np.complex128)
    out[..., ~grid.mode_mask] = 0.0
    return out


class SpectralField:
    """A scalar, vector, or matrix valued trigonometric polynomial.

    Coefficients have shape comp_shape + grid.shape with component axes
    leading.  Instances are immutable by convention; operations return new
    fields.
    """

    __slots__ = ("grid", "arity", "coeff", "_phys")

    def __init__(self, grid, arity, coeff):
        cs = _comp_shape(arity, grid.d)
        coeff = np.asarray(coeff, dtype=np.complex128)
        if coeff.shape != cs + grid.shape:
            raise ValueError(f"coefficient shape {coeff.shape} != {cs + grid.shape}")
        self.grid = grid
        self.arity = arity
        self.coeff = coeff
        self._phys = None

    @classmethod
    def from_coeff(cls, grid, coeff, arity="scalar"):
        return cls(grid, arity, _project(grid, coeff))

    @classmethod
    def from_physical(cls, grid, samples, arity="scalar"):
        samples = np.asarray(samples, dtype=np.float64)
        cs = _comp_shape(arity, grid.d)
        if samples.shape != cs + grid.shape:
            raise ValueError(f"sample shape {samples.shape} != {cs + grid.shape}")
        axes = tuple(range(-grid.d, 0))
        coeff = np.fft.fftn(samples, axes=axes) / grid.N**grid.d
        return cls(grid, arity, _project(grid, coeff))

    @classmethod
    def zeros(cls, grid, arity="scalar"):
        return cls(grid, arity, np.zeros(_comp_shape(arity, grid.d) + grid.shape, dtype=np.complex128))

    def physical(self):
        """Real samples on the grid; cached."""
        if self._phys is None:
            axes = tuple(range(-self.grid.d, 0))
            self._phys = np.fft.ifftn(self.coeff, axes=axes).real * self.grid.N**self.grid.d
        return self._phys

    def hermitian_defect(self):
        """Max |c(-n) - conj(c(n))| over retained modes."""
        c = self.coeff
        flipped = c
        for a in range(-self.grid.d, 0):
            flipped = np.flip(np.roll(flipped, -1, axis=a), axis=a)
        return float(np.max(np.abs(flipped.conj() - c)))

    def sup(self):
        return float(np.max(np.abs(self.physical())))

    def component(self, *idx):
        return SpectralField(self.grid, "scalar", self.coeff[idx])

    def __add__(self, other):
        _check_pair(self, other)
        return SpectralField(self.grid, self.arity, self.coeff + other.coeff)

    def __sub__(self, other):
        _check_pair(self, other)
        return SpectralField(self.grid, self.arity, self.coeff - other.coeff)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.arity, self.coeff * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SpectralField({self.arity}, {self.grid!r})"


def _check_pair(f, g):
    if f.grid is not g.grid and not f.grid.same_box(g.grid):
        raise ValueError("fields live on different grids")
    if f.arity != g.arity:
        raise ValueError("arity mismatch")


_INTERP_RULES = ("linear", "const-left")


class TimeField:
    """K+1 spectral slices on the shared time grid.

    ``interp`` fixes how values between slice times are defined:
    ``"linear"`` interpolates coefficients (hence samples) linearly,
    ``"const-left"`` holds the left slice.
    """

    __slots__ = ("grid", "arity", "coeff", "interp", "_phys")

    def __init__(self, grid, arity, coeff, interp="linear"):
        cs = _comp_shape(arity, grid.d)
        coeff = np.asarray(coeff, dtype=np.complex128)
        want = (grid.K + 1,) + cs + grid.shape
        if coeff.shape != want:
            raise ValueError(f"coefficient shape {coeff.shape} != {want}")
        if interp not in _INTERP_RULES:
            raise ValueError(f"interp must be one of {_INTERP_RULES}")
        self.grid = grid
        self.arity = arity
        self.coeff = coeff
        self.interp = interp
        self._phys = None

    @classmethod
    def from_slices(cls, slices, interp="linear"):
        g = slices[0].grid
        if len(slices) != g.K + 1:
            raise ValueError(f"need K+1={g.K + 1} slices, got {len(slices)}")
        for s in slices:
            if not g.same_box(s.grid) or s.arity != slices[0].arity:
                raise ValueError("inconsistent slices")
        return cls(g, slices[0].arity, np.stack([s.coeff for s in slices]), interp)

    @classmethod
    def constant_in_time(cls, field, interp="linear"):
        g = field.grid
        coeff = np.broadcast_to(field.coeff, (g.K + 1,) + field.coeff.shape).copy()
        return cls(g, field.arity, coeff, interp)

    @classmethod
    def from_coeff(cls, grid, coeff, arity="scalar", interp="linear"):
        return cls(grid, arity, _project(grid, coeff), interp)

    def physical(self):
        if self._phys is None:
            axes = tuple(range(-self.grid.d, 0))
            self._phys = np.fft.ifftn(self.coeff, axes=axes).real * self.grid.N**self.grid.d
        return self._phys

    def slice(self, k):
        f = SpectralField(self.grid, self.arity, self.coeff[k])
        if self._phys is not None:
            f._phys = self._phys[k]
        return f

    def slices(self):
        return [self.slice(k) for k in range(self.grid.K + 1)]

    def map_slices(self, fn, arity=None):
        """Apply a SpectralField -> SpectralField op to every slice."""
        out = [fn(self.slice(k)) for k in range(self.grid.K + 1)]
        return TimeField(self.grid, arity or out[0].arity, np.stack([f.coeff for f in out]), self.interp)

    def sup(self):
        return float(np.max(np.abs(self.physical())))

    def __add__(self, other):
        return TimeField(self.grid, self.arity, self.coeff + other.coeff, self.interp)

    def __sub__(self, other):
        return TimeField(self.grid, self.arity, self.coeff - other.coeff, self.interp)

    def __mul__(self, scalar):
        return TimeField(self.grid, self.arity, self.coeff * scalar, self.interp)

    __rmul__ = __mul__

    def __repr__(self):
        return f"TimeField({self.arity}, {self.grid!r}, interp={self.interp!r})"


# ---------------------------------------------------------------------------
# operators


def heat_semigroup(f, r):
    """Apply exp(r*Laplacian/2): multiply mode k by exp(-|k|^2 r / 2).

    Rejects r < 0 (backward heat flow).  Works on SpectralField and
    TimeField alike; the k = 0 mode (mass) is untouched.
    """
    if r < 0:
        raise ValueError("heat_semigroup requires r >= 0")
    mult = np.exp(-0.5 * f.grid.ksq * r)
    if isinstance(f, TimeField):
        return TimeField(f.grid, f.arity, f.coeff * mult, f.interp)
    return SpectralField(f.grid, f.arity, f.coeff * mult)


def mollify(f, n):
    """Smooth with the n-th mollifier: coefficient factor exp(-|k|^2/n)."""
    if n < 1:
        raise ValueError("mollify requires n >= 1")
    return heat_semigroup(f, 2.0 / n)


def differentiate(f, axis):
    """Partial derivative along a spatial axis (0-based)."""
    if not 0 <= axis < f.grid.d:
        raise ValueError(f"axis {axis} out of range for d={f.grid.d}")
    mult = 1j * f.grid.k[axis]
    if isinstance(f, TimeField):
        return TimeField(f.grid, f.arity, f.coeff * mult, f.interp)
    return SpectralField(f.grid, f.arity, f.coeff * mult)


def gradient(f):
    """Gradient of a scalar field; Jacobian (dv_i/dx_j at [i, j]) of a vector field."""
    g = f.grid
    parts = [differentiate(f, a).coeff for a in range(g.d)]
    if f.arity == "scalar":
        out_arity = "vector"
        coeff = np.stack(parts, axis=1 if isinstance(f, TimeField) else 0)
    elif f.arity == "vector":
        out_arity = "matrix"
        if isinstance(f, TimeField):
            coeff = np.stack(parts, axis=2)
        else:
            coeff = np.stack(parts, axis=1)
    else:
        raise ValueError("gradient of a matrix field is not supported")
    if isinstance(f, TimeField):
        return TimeField(g, out_arity, coeff, f.interp)
    return SpectralField(g, out_arity, coeff)


def laplacian(f):
    mult = -f.grid.ksq
    if isinstance(f, TimeField):
        return TimeField(f.grid, f.arity, f.coeff * mult, f.interp)
    return SpectralField(f.grid, f.arity, f.coeff * mult)


def hessian(f):
    """Hessian of a scalar field, matrix arity."""
    if f.arity != "scalar":
        raise ValueError("hessian expects a scalar field")
    g = f.grid
    rows = []
    for a in range(g.d):
        rows.append([f.coeff * (-g.k[a] * g.k[b]) for b in range(g.d)])
    if isinstance(f, TimeField):
        coeff = np.stack([np.stack(r, axis=1) for r in rows], axis=1)
        return TimeField(g, "matrix", coeff, f.interp)
    coeff = np.stack([np.stack(r, axis=0) for r in rows], axis=0)
    return SpectralField(g, "matrix", coeff)


def time_derivative(tf):
    """d/dt by centred differences; second order one-sided at the endpoints."""
    c = tf.coeff
    dt = tf.grid.dt
    out = np.empty_like(c)
    out[1:-1] = (c[2:] - c[:-2]) / (2 * dt)
    out[0] = (-3 * c[0] + 4 * c[1] - c[2]) / (2 * dt)
    out[-1] = (3 * c[-1] - 4 * c[-2] + c[-3]) / (2 * dt)
    return TimeField(tf.grid, tf.arity, out, tf.interp)


# ---------------------------------------------------------------------------
# off-grid evaluation


def _cubic_weights(s):
    # Keys cubic with a = -1/2 (Catmull-Rom); s in [0, 1)
    s2 = s * s
    s3 = s2 * s
    w0 = 0.5 * (-s3 + 2 * s2 - s)
    w1 = 0.5 * (3 * s3 - 5 * s2 + 2)
    w2 = 0.5 * (-3 * s3 + 4 * s2 + s)
    w3 = 0.5 * (s3 - s2)
    return w0, w1, w2, w3


def eval_physical(phys, grid, pts):
    """Cubic interpolation of grid samples at points, periodic in each axis.

    phys : array (comp..., N) or (comp..., N, N)
    pts : array (P, d); any real coordinates, wrapped mod L internally.
    Returns (comp..., P).
    """
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    N = grid.N
    u = pts / grid.cell
    base = np.floor(u).astype(np.int64)
    s = u - base
    if grid.d == 1:
        idx = (base[:, 0, None] + np.arange(-1, 3)) % N  # (P, 4)
        vals = phys[..., idx]  # (comp..., P, 4)
        w = np.stack(_cubic_weights(s[:, 0]), axis=-1)  # (P, 4)
        return np.einsum("...pj,pj->...p", vals, w)
    ix = (base[:, 0, None] + np.arange(-1, 3)) % N
    iy = (base[:, 1, None] + np.arange(-1, 3)) % N
    vals = phys[..., ix[:, :, None], iy[:, None, :]]  # (comp..., P, 4, 4)
    wx = np.stack(_cubic_weights(s[:, 0]), axis=-1)
    wy = np.stack(_cubic_weights(s[:, 1]), axis=-1)
    return np.einsum("...pij,pi,pj->...p", vals, wx, wy)


def _eval_fourier(coeff, grid, pts, chunk=2048):
    """Exact trigonometric summation; reference path, O(P * N^d)."""
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    P = pts.shape[0]
    comp = coeff.shape[: coeff.ndim - grid.d]
    flat = coeff.reshape((-1,) + grid.shape)
    out = np.empty((flat.shape[0], P))
    for lo in range(0, P, chunk):
        hi = min(lo + chunk, P)
        if grid.d == 1:
            E = np.exp(1j * np.outer(pts[lo:hi, 0], grid.k_axis))  # (p, N)
            out[:, lo:hi] = (flat[:, None, :] * E[None]).sum(-1).real
        else:
            Ex = np.exp(1j * np.outer(pts[lo:hi, 0], grid.k_axis))
            Ey = np.exp(1j * np.outer(pts[lo:hi, 1], grid.k_axis))
            # sum_ab c[ab] Ex[p,a] Ey[p,b]
            tmp = np.einsum("cab,pa->cpb", flat, Ex)
            out[:, lo:hi] = np.einsum("cpb,pb->cp", tmp, Ey).real
    return out.reshape(comp + (P,))


def time_slice_physical(tf, t):
    """Physical samples of tf at time t per its interpolation rule."""
    g = tf.grid
    if t < -1e-12 or t > g.T + 1e-12:
        raise ValueError(f"t={t} outside [0, {g.T}]")
    t = min(max(t, 0.0), g.T)
    pos = t / g.dt
    j = min(int(np.floor(pos)), g.K - 1)
    th = pos - j
    phys = tf.physical()
    if tf.interp == "const-left":
        return phys[j] if th < 1.0 else phys[j + 1]
    if th == 0.0:
        return phys[j]
    return (1.0 - th) * phys[j] + th * phys[j + 1]


def _time_slice_coeff(tf, t):
    g = tf.grid
    pos = min(max(t, 0.0), g.T) / g.dt
    j = min(int(np.floor(pos)), g.K - 1)
    th = pos - j
    if tf.interp == "const-left":
        return tf.coeff[j] if th < 1.0 else tf.coeff[j + 1]
    if th == 0.0:
        return tf.coeff[j]
    return (1.0 - th) * tf.coeff[j] + th * tf.coeff[j + 1]


def evaluate(tf, t, x, mode="interp"):
    """Evaluate a TimeField at time t and points x.

    x has shape (P, d) (or (P,) in d=1); coordinates are wrapped into the
    box.  mode "interp" uses separable periodic cubic interpolation of the
    physical samples; "exact-fourier" sums the series directly.  The two
    agree to O(N^-3) for fields with three bounded spatial derivatives.
    """
    g = tf.grid
    if t < -1e-12 or t > g.T + 1e-12:
        raise ValueError(f"t={t} outside [0, {g.T}]")
    if mode == "interp":
        return eval_physical(time_slice_physical(tf, t), g, x)
    if mode == "exact-fourier":
        return _eval_fourier(_time_slice_coeff(tf, t), g, x)
    raise ValueError(f"unknown mode {mode!r}")


def dealiased_product(f, g):
    """Pointwise product of two scalar fields via 3/2-rule zero padding.

    Both inputs are band limited to |n| <= N/2 - 1; the product is computed
    on a 3N/2 grid and truncated back, so every retained mode is free of
    aliasing.
    """
    if f.arity != "scalar" or g.arity != "scalar":
        raise ValueError("dealiased_product expects scalar fields")
    _check_box(f, g)
    coeff = product_coeff(f.grid, f.coeff, g.coeff)
    return SpectralField(f.grid, "scalar", coeff)


def _check_box(f, g):
    if f.grid is not g.grid and not f.grid.same_box(g.grid):
        raise ValueError("fields live on different grids")


def _pad_indices(N, M):
    # rows of the centered band |n| <= N/2-1 inside an M-point fft layout
    n = np.fft.fftfreq(N, 1.0 / N).astype(np.int64)
    return np.where(n >= 0, n, n + M)


def product_coeff(grid, ca, cb):
    """Dealiased product at coefficient level; supports leading component axes."""
    N = grid.N
    M = 3 * N // 2
    d = grid.d
    idx = _pad_indices(N, M)
    axes = tuple(range(-d, 0))

    def embed(c):
        shape = c.shape[:-d] + (M,) * d
        out = np.zeros(shape, dtype=np.complex128)
        if d == 1:
            out[..., idx] = c
        else:
            out[..., idx[:, None], idx[None, :]] = c
        return out

    pa = np.fft.ifftn(embed(ca), axes=axes) * M**d
    pb = np.fft.ifftn(embed(cb), axes=axes) * M**d
    prod = np.fft.fftn(pa * pb, axes=axes) / M**d
    if d == 1:
        out = prod[..., idx]
    else:
        out = prod[..., idx[:, None], idx[None, :]]
    return _project(grid, out)


def transport_coeff(grid, grad_coeff, b_coeff):
    """sum_j (d_j f) b_j with dealiased products.

    grad_coeff : (d,) + spatial (gradient of a scalar) coefficients
    b_coeff    : (d,) + spatial vector field coefficients
    """
    acc = None
    for a in range(grid.d):
        term = product_coeff(grid, grad_coeff[a], b_coeff[a])
        acc = term if acc is None else acc + term
    return acc
