"""Euler-Maruyama path ensembles, coupled across drift representations.

Per-path randomness is keyed by (master seed, path index) through a
counter-based generator, so ensembles of different sizes share path
prefixes and simulations of the transformed and direct dynamics under the
same seed are driven by identical increments.  Paths live in R^d and are
never wrapped; field evaluation wraps into the box internally.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import TimeField, eval_physical, time_slice_physical
from .io import read_ensemble, write_ensemble
from .zvonkin import ZvonkinMap

_X0_STREAM = 1 << 62  # reserved path-index key for initial samples


@dataclass(frozen=True)
class InitialLaw:
    """Initial distribution on the cell.

    kind "dirac": params {"point": (d,)}
    kind "gaussian": params {"mean": (d,), "std": scalar or (d,)}
    kind "uniform": params {"lo": (d,), "hi": (d,)}
    kind "mixture": params {"components": [(weight, InitialLaw), ...]}
    """

    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in ("dirac", "gaussian", "uniform", "mixture"):
            raise ValueError(f"unknown law kind {self.kind!r}")


def dirac(point):
    return InitialLaw("dirac", {"point": tuple(np.atleast_1d(point).astype(float))})


def gaussian(mean, std):
    return InitialLaw(
        "gaussian",
        {"mean": tuple(np.atleast_1d(mean).astype(float)), "std": float(std)},
    )


def uniform(lo, hi):
    return InitialLaw(
        "uniform",
        {"lo": tuple(np.atleast_1d(lo).astype(float)), "hi": tuple(np.atleast_1d(hi).astype(float))},
    )


def mixture(components):
    return InitialLaw("mixture", {"components": tuple((float(w), law) for w, law in components)})


def _law_sample(law, M, d, rng):
    if law.kind == "dirac":
        return np.tile(np.asarray(law.params["point"], float), (M, 1))
    if law.kind == "gaussian":
        mean = np.asarray(law.params["mean"], float)
        return mean + law.params["std"] * rng.standard_normal((M, d))
    if law.kind == "uniform":
        lo = np.asarray(law.params["lo"], float)
        hi = np.asarray(law.params["hi"], float)
        return lo + (hi - lo) * rng.random((M, d))
    weights = np.array([w for w, _ in law.params["components"]])
    weights = weights / weights.sum()
    choice = rng.choice(len(weights), size=M, p=weights)
    out = np.empty((M, d))
    for i, (_, sub) in enumerate(law.params["components"]):
        mask = choice == i
        out[mask] = _law_sample(sub, int(mask.sum()), d, rng)
    return out


def sample_initial(law: InitialLaw, M: int, d: int, L: float, seed: int):
    """Draw M initial points, reduced to the fundamental cell [0, L)^d.

    Out-of-cell draws are wrapped; a warning reports how many were moved.
    """
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(_X0_STREAM)]))
    x0 = _law_sample(law, M, d, rng)
    wrapped = x0 % L
    moved = int(np.sum(np.any(np.abs(wrapped - x0) > 1e-12, axis=1)))
    if moved:
        warnings.warn(f"{moved}/{M} initial samples fell outside the cell and were wrapped")
    return wrapped


def path_increments(master_seed: int, M: int, K: int, d: int, h: float):
    """Brownian increments (M, K, d), path i keyed by (master_seed, i)."""
    out = np.empty((M, K, d))
    root = np.sqrt(h)
    for i in range(M):
        g = np.random.Generator(np.random.Philox(key=[np.uint64(master_seed), np.uint64(i)]))
        out[i] = root * g.standard_normal((K, d))
    return out


@dataclass
class PathEnsemble:
    """Simulated paths with their driving noise.

    X and Y are (M, K+1, d) when present; dW is (M, K, d).  h = T / K.
    """

    T: float
    K: int
    d: int
    M: int
    seed: int
    x0: np.ndarray
    dW: np.ndarray
    X: np.ndarray | None = None
    Y: np.ndarray | None = None
    lam: float | None = None
    meta: dict = dc_field(default_factory=dict)
    increment_flag: str = ""

    def __post_init__(self):
        self.h = self.T / self.K
        self.times = np.linspace(0.0, self.T, self.K + 1)
        if self.increment_flag == "":
            self.increment_flag = self._gate()

    def _gate(self):
        # per-step increment moments within 5 standard errors of (0, h)
        m = self.dW.mean(axis=0)
        v = self.dW.var(axis=0)
        se_m = np.sqrt(self.h / self.M)
        se_v = self.h * np.sqrt(2.0 / self.M)
        bad_m = int(np.sum(np.abs(m) > 5 * se_m))
        bad_v = int(np.sum(np.abs(v - self.h) > 5 * se_v))
        if bad_m or bad_v:
            warnings.warn(
                f"increment sanity gate: {bad_m} mean and {bad_v} variance outliers past 5 SE"
            )
            return f"mean:{bad_m},var:{bad_v}"
        return "ok"

    def boundary_fraction(self, L):
        """Fraction of path samples within L/10 of the cell boundary."""
        P = self.X if self.X is not None else self.Y
        w = P % L
        near = np.minimum(w, L - w) < L / 10.0
        return float(np.mean(np.any(near, axis=2)))


def simulate_Y(zmap: ZvonkinMap, law: InitialLaw, M: int, seed: int, K: int | None = None):
    """Transformed dynamics: Y_{k+1} = Y_k + lam u(t_k, x_k) h + (I + Ju)(t_k, x_k) dW_k,
    with x_k = psi(t_k, Y_k).  Stores both Y and the recovered X = psi(Y).
    """
    g = zmap.grid
    K = K or g.K
    h = g.T / K
    d = g.d
    x0 = sample_initial(law, M, d, g.L, seed)
    dW = path_increments(seed, M, K, d, h)
    Y = np.empty((M, K + 1, d))
    X = np.empty((M, K + 1, d))
    Y[:, 0] = zmap.pushforward_initial(x0)
    x = x0.copy()
    for k in range(K):
        t = k * h
        x = zmap.invert(t, Y[:, k], warm=x)
        X[:, k] = x
        u = eval_physical(zmap.u_slice(t), g, x)  # (d, P)
        J = eval_physical(zmap.Ju_slice(t), g, x)  # (d, d, P)
        if d == 1:
            step = zmap.lam * u[0] * h + (1.0 + J[0, 0]) * dW[:, k, 0]
            Y[:, k + 1, 0] = Y[:, k, 0] + step
        else:
            drift = zmap.lam * u.T * h
            diff = np.einsum("iap,pa->pi", J, dW[:, k]) + dW[:, k]
            Y[:, k + 1] = Y[:, k] + drift + diff
    X[:, K] = zmap.invert(g.T, Y[:, K], warm=x)
    return PathEnsemble(
        T=g.T, K=K, d=d, M=M, seed=seed, x0=x0, dW=dW, X=X, Y=Y, lam=zmap.lam,
        meta={"kind": "zvonkin"},
    )


def recover_X(zmap: ZvonkinMap, ens: PathEnsemble):
    """X_k = psi(t_k, Y_k) slice by slice; round-trips stored X when present."""
    if ens.Y is None:
        raise ValueError("ensemble carries no Y paths")
    X = np.empty_like(ens.Y)
    warm = None
    for k in range(ens.K + 1):
        X[:, k] = zmap.invert(ens.times[k], ens.Y[:, k], warm=warm)
        warm = X[:, k]
    return PathEnsemble(
        T=ens.T, K=ens.K, d=ens.d, M=ens.M, seed=ens.seed, x0=ens.x0, dW=ens.dW,
        X=X, Y=ens.Y, lam=ens.lam, meta=dict(ens.meta, recovered=True),
        increment_flag=ens.increment_flag,
    )


def simulate_X_direct(b: TimeField, law: InitialLaw, M: int, seed: int, K: int | None = None):
    """Direct dynamics X_{k+1} = X_k + b(t_k, X_k) h + dW_k.

    Under the same seed the increments and initial points coincide with
    simulate_Y's, which couples the two representations pathwise.
    """
    g = b.grid
    K = K or g.K
    h = g.T / K
    d = g.d
    x0 = sample_initial(law, M, d, g.L, seed)
    dW = path_increments(seed, M, K, d, h)
    X = np.empty((M, K + 1, d))
    X[:, 0] = x0
    for k in range(K):
        bv = eval_physical(time_slice_physical(b, k * h), g, X[:, k])  # (d, P)
        X[:, k + 1] = X[:, k] + bv.T * h + dW[:, k]
    return PathEnsemble(
        T=g.T, K=K, d=d, M=M, seed=seed, x0=x0, dW=dW, X=X, Y=None,
        meta={"kind": "direct"},
    )


def save_ensemble(path, ens: PathEnsemble):
    arrays = {"x0": ens.x0, "dW": ens.dW}
    if ens.X is not None:
        arrays["X"] = ens.X
    if ens.Y is not None:
        arrays["Y"] = ens.Y
    manifest = {
        "T": ens.T, "K": ens.K, "d": ens.d, "M": ens.M, "seed": ens.seed,
        "lam": ens.lam, "meta": ens.meta, "increment_flag": ens.increment_flag,
    }
    write_ensemble(path, manifest, arrays)


def load_ensemble(path):
    meta, arrays = read_ensemble(path)
    return PathEnsemble(
        T=meta["T"], K=meta["K"], d=meta["d"], M=meta["M"], seed=meta["seed"],
        x0=arrays["x0"], dW=arrays["dW"], X=arrays.get("X"), Y=arrays.get("Y"),
        lam=meta["lam"], meta=meta["meta"], increment_flag=meta["increment_flag"],
    )


def local_time_A(l: TimeField, ens: PathEnsemble):
    """Additive functional A_t(l) = int_0^t l(s, X_s) ds, trapezoid rule.

    Returns (M, K+1) cumulative values on the ensemble's time grid.
    """
    if l.arity != "scalar":
        raise ValueError("local_time_A expects a scalar field")
    P = ens.X if ens.X is not None else ens.Y
    g = l.grid
    vals = np.empty((ens.M, ens.K + 1))
    for k in range(ens.K + 1):
        vals[:, k] = eval_physical(time_slice_physical(l, ens.times[k]), g, P[:, k])
    out = np.zeros_like(vals)
    steps = 0.5 * ens.h * (vals[:, :-1] + vals[:, 1:])
    out[:, 1:] = np.cumsum(steps, axis=1)
    return out
