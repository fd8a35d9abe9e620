"""Mild-solution solvers for the backward generator equation.

The generator on [0, T] x torus is

    L v = dv/dt + (1/2) Lap v + grad(v) . b,

with terminal data.  Solutions are constructed by Picard iteration on the
Duhamel (mild) form, with exact heat-semigroup factors between time nodes
and the midpoint rule for the source quadrature.

For the resolvent problem L u_i = lambda u_i - b_i the iteration runs on
the damped form of the same fixed point, with exp(-lambda s) folded into
the semigroup factors.  The undamped iteration cannot converge once
lambda dt is large, while the damped one is exactly equivalent at the
fixed point and contracts for large lambda.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    TimeField,
    gradient,
    laplacian,
    product_coeff,
    time_derivative,
)

LAMBDA_LADDER = tuple(2**j for j in range(21))


@dataclass
class SolverParams:
    """Knobs for the Picard iteration.

    tol : sup-norm tolerance on successive iterates.
    max_iter : hard cap on sweeps.
    quadrature : time rule between nodes; only "midpoint" is implemented
        (midpoint source average weighted by the exact per-mode kernel
        mass of the step, so stiff modes keep their stationary value).
    ratio_alarm : declared non-contraction once the observed ratio of
        successive corrections stabilises at or above this value.
    """

    tol: float = 1e-9
    max_iter: int = 200
    quadrature: str = "midpoint"
    ratio_alarm: float = 0.9

    def __post_init__(self):
        if self.quadrature != "midpoint":
            raise ValueError("only the midpoint quadrature rule is implemented")
        if not 0 < self.ratio_alarm <= 1:
            raise ValueError("ratio_alarm must be in (0, 1]")


class NonContractionError(RuntimeError):
    """Picard sweep failed to contract; carries the ratio history."""

    def __init__(self, message, ratios):
        super().__init__(message)
        self.ratios = list(ratios)


@dataclass
class SolveResult:
    """Converged field plus iteration telemetry."""

    field: TimeField
    iterations: int
    ratios: list = field(default_factory=list)
    grad_sup: float | None = None
    lam: float | None = None

    @property
    def final_ratio(self):
        return self.ratios[-1] if self.ratios else 0.0


def _transport(grid, vc, bc):
    """(grad v . b) per slice at coefficient level; vc (K+1, spatial) scalar."""
    acc = None
    for a in range(grid.d):
        dv = vc * (1j * grid.k[a])
        term = product_coeff(grid, dv, bc[:, a])
        acc = term if acc is None else acc + term
    return acc


def _backward_sweep(grid, h, terminal, lam):
    """One Duhamel integration given source slices h (K+1, spatial).

    v(t_k) = E_dt v(t_{k+1}) + w (h_k + h_{k+1})/2, where E_r acts mode by
    mode as exp(-(|k|^2/2 + lam) r) and w = (1 - E_dt)/(|k|^2/2 + lam) is
    the exact kernel mass of the step.  Using the exact mass instead of
    dt E_{dt/2} keeps the stiff modes (|k|^2 dt large) at their correct
    stationary amplitude; a static source then gets the exact per-mode
    resolvent value at every interior slice.
    """
    dt = grid.dt
    damp = 0.5 * grid.ksq + lam
    E_full = np.exp(-damp * dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(damp > 0, -np.expm1(-damp * dt) / np.where(damp > 0, damp, 1.0), dt)
    out = np.empty_like(h)
    out[-1] = terminal
    for k in range(h.shape[0] - 2, -1, -1):
        mid = 0.5 * (h[k] + h[k + 1])
        out[k] = E_full * out[k + 1] + w * mid
    return out


def _sup(grid, coeff):
    axes = tuple(range(-grid.d, 0))
    return float(np.max(np.abs(np.fft.ifftn(coeff, axes=axes).real * grid.N**grid.d)))


def _contraction_alarm(deltas, params):
    # ratio of corrections has stabilised at or above the alarm level
    if len(deltas) < 6:
        return False
    r = [deltas[i] / deltas[i - 1] for i in range(len(deltas) - 4, len(deltas)) if deltas[i - 1] > 0]
    return len(r) == 4 and min(r) >= params.ratio_alarm


def _picard(grid, make_source, terminal, lam, params, x0=None):
    """Shared Picard driver.  make_source maps iterate coeffs to h slices."""
    v = np.zeros_like(make_source.zero) if x0 is None else x0
    deltas = []
    ratios = []
    for it in range(1, params.max_iter + 1):
        h = make_source(v)
        v_new = _backward_sweep(grid, h, terminal, lam)
        delta = _sup(grid, v_new - v)
        if deltas:
            ratios.append(delta / deltas[-1] if deltas[-1] > 0 else 0.0)
        deltas.append(delta)
        v = v_new
        scale = 1.0 + _sup(grid, v)
        if delta <= params.tol * scale:
            return v, it, ratios
        if _contraction_alarm(deltas, params):
            raise NonContractionError(
                f"no contraction after {it} sweeps (ratio ~ {ratios[-1]:.3f})", ratios
            )
    raise NonContractionError(f"not converged in {params.max_iter} sweeps", ratios)


class _TerminalSource:
    """h = grad(v).b - g for the terminal-value problem."""

    def __init__(self, grid, bc, gc):
        self.grid = grid
        self.bc = bc
        self.gc = gc
        self.zero = np.zeros_like(gc)

    def __call__(self, vc):
        return _transport(self.grid, vc, self.bc) - self.gc


class _ResolventSource:
    """h = b_i + grad(u_i).b for one component of the resolvent problem."""

    def __init__(self, grid, bc, i):
        self.grid = grid
        self.bc = bc
        self.i = i
        self.zero = np.zeros_like(bc[:, i])

    def __call__(self, uc):
        return self.bc[:, self.i] + _transport(self.grid, uc, self.bc)


@dataclass
class PdeProblem:
    """Terminal-value problem data: drift b, source g, terminal v_T."""

    b: TimeField
    g: TimeField
    v_T: object  # SpectralField

    def __post_init__(self):
        if self.b.arity != "vector" or self.g.arity != "scalar":
            raise ValueError("b must be a vector TimeField and g a scalar TimeField")
        if self.v_T.arity != "scalar":
            raise ValueError("v_T must be a scalar field")


def _march_terminal(grid, bc, gc, terminal, params, windows):
    """Backward-march the terminal problem over `windows` equal time slabs.

    Each slab [t_a, t_b] is solved by the mild Picard iteration with the
    already-computed v(t_b) as terminal data and the free flow from it as
    the starting iterate.  With windows = 1 this is the plain full-horizon
    solve.  Returns (coeffs, total iterations, worst slab ratio history).
    """
    edges = np.round(np.linspace(0, grid.K, windows + 1)).astype(int)
    vc = np.empty((grid.K + 1,) + grid.shape, complex)
    vc[-1] = terminal
    its_total = 0
    worst_its, worst_ratios = -1, []
    for j in range(windows - 1, -1, -1):
        a, b = int(edges[j]), int(edges[j + 1])
        src = _TerminalSource(grid, bc[a : b + 1], gc[a : b + 1])
        tau = (grid.times[b] - grid.times[a : b + 1]).reshape((-1,) + (1,) * grid.d)
        x0 = np.exp(-0.5 * grid.ksq * tau) * vc[b]
        slab, its, ratios = _picard(grid, src, vc[b], 0.0, params, x0=x0)
        vc[a : b + 1] = slab
        its_total += its
        if its > worst_its:
            worst_its, worst_ratios = its, ratios
    return vc, its_total, worst_ratios


def solve_terminal(problem: PdeProblem, params: SolverParams | None = None) -> SolveResult:
    """Solve L v = g, v(T) = v_T by mild Picard iteration from the free flow.

    The whole horizon is attempted first.  If the transport term is too
    strong for the fixed point to contract over [0, T], the horizon is
    split into 2, 4, ... slabs (down to single time steps) and solved by
    backward marching; short slabs always restore the contraction.
    """
    params = params or SolverParams()
    grid = problem.b.grid
    windows = 1
    while True:
        try:
            vc, its, ratios = _march_terminal(
                grid, problem.b.coeff, problem.g.coeff, problem.v_T.coeff, params, windows
            )
        except NonContractionError:
            if windows >= grid.K:
                raise
            windows = min(2 * windows, grid.K)
            continue
        return SolveResult(TimeField(grid, "scalar", vc), its, ratios)


def grad_sup_norm(u: TimeField) -> float:
    """sup over slices and grid points of the operator 2-norm of the Jacobian."""
    J = gradient(u)  # (K+1, d, d) + spatial
    phys = J.physical()
    d = u.grid.d
    if d == 1:
        return float(np.max(np.abs(phys)))
    a, b_, c, e = phys[:, 0, 0], phys[:, 0, 1], phys[:, 1, 0], phys[:, 1, 1]
    frob2 = a * a + b_ * b_ + c * c + e * e
    det = a * e - b_ * c
    disc = np.sqrt(np.maximum(frob2 * frob2 - 4 * det * det, 0.0))
    return float(np.sqrt(np.max(0.5 * (frob2 + disc))))


def solve_u(b: TimeField, lam: float, params: SolverParams | None = None) -> SolveResult:
    """Solve L u_i = lambda u_i - b_i, u_i(T) = 0, componentwise.

    Fixed point: u_i(t) = int_t^T e^(-lambda (s-t)) P_(s-t)
    [b_i + grad(u_i).b](s) ds, iterated from u = 0.  Reports the max over
    components of the iteration count and the worst contraction history,
    plus sup_t of the Jacobian operator norm.
    """
    params = params or SolverParams()
    if lam <= 0:
        raise ValueError("lambda must be positive")
    grid = b.grid
    comps = []
    its = 0
    ratios = []
    for i in range(grid.d):
        src = _ResolventSource(grid, b.coeff, i)
        uc, it_i, r_i = _picard(grid, src, np.zeros(grid.shape, complex), lam, params)
        comps.append(uc)
        if it_i >= its:
            its, ratios = it_i, r_i
    coeff = np.stack(comps, axis=1)  # (K+1, d) + spatial
    u = TimeField(grid, "vector", coeff)
    return SolveResult(u, its, ratios, grad_sup=grad_sup_norm(u), lam=lam)


def select_lambda(b: TimeField, family, params: SolverParams | None = None):
    """Smallest dyadic lambda for which the whole family is tame.

    Walks lambda through 1, 2, 4, ..., 2^20 and returns the first value for
    which solve_u contracts (observed ratio < ratio_alarm) and the Jacobian
    bound sup_t ||grad u|| <= 1/2 holds for b and every family member, with
    one shared lambda.  Returns (lam, {label: SolveResult}, trace).
    """
    params = params or SolverParams()
    members = [("b", b)] + [(f"n{i}", f) for i, f in enumerate(family)]
    trace = []
    for lam in LAMBDA_LADDER:
        results = {}
        ok = True
        for label, member in members:
            try:
                res = solve_u(member, lam, params)
            except NonContractionError as err:
                trace.append({"lam": lam, "member": label, "fail": "no-contraction",
                              "ratio": err.ratios[-1] if err.ratios else None})
                ok = False
                break
            if res.final_ratio >= params.ratio_alarm:
                trace.append({"lam": lam, "member": label, "fail": "ratio",
                              "ratio": res.final_ratio})
                ok = False
                break
            if res.grad_sup > 0.5:
                trace.append({"lam": lam, "member": label, "fail": "grad-bound",
                              "grad_sup": res.grad_sup})
                ok = False
                break
            results[label] = res
        if ok:
            trace.append({"lam": lam, "accepted": True})
            return lam, results, trace
    raise NonContractionError("lambda ladder exhausted", [])


def apply_L(f: TimeField, b: TimeField) -> TimeField:
    """L f = df/dt + (1/2) Lap f + grad(f).b on the grid.

    Time derivative by centred differences (one-sided at the endpoints);
    the transport product is dealiased.  Works componentwise on vector f.
    """
    grid = f.grid
    ft = time_derivative(f).coeff
    lap = laplacian(f).coeff
    if f.arity == "scalar":
        tr = _transport(grid, f.coeff, b.coeff)
        return TimeField(grid, "scalar", ft + 0.5 * lap + tr)
    if f.arity == "vector":
        parts = [
            _transport(grid, f.coeff[:, i], b.coeff) for i in range(grid.d)
        ]
        return TimeField(grid, "vector", ft + 0.5 * lap + np.stack(parts, axis=1))
    raise ValueError("apply_L expects scalar or vector f")
