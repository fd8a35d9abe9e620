"""Finite-difference reference solver for the terminal-value problem, d = 1.

Crank-Nicolson in time, second-order central differences in space on the
periodic interval.  Deliberately shares nothing with the spectral stack:
inputs and outputs are plain sample arrays, so it serves as an independent
oracle for the mild solver.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def _operator(b_nodes, N, dx):
    """Sparse A with (A v)_i = v''_i / 2 + b_i v'_i, periodic stencil."""
    inv2 = 1.0 / (2 * dx)
    invh = 1.0 / (dx * dx)
    main = np.full(N, -invh)
    up = np.full(N, 0.5 * invh) + b_nodes * inv2
    dn = np.full(N, 0.5 * invh) - b_nodes * inv2
    A = sp.lil_matrix((N, N))
    A.setdiag(main)
    A.setdiag(up[:-1], 1)
    A.setdiag(dn[1:], -1)
    A[0, N - 1] = dn[0]
    A[N - 1, 0] = up[N - 1]
    return A.tocsc()


def solve_terminal_cn(b_nodes, g_nodes, vT_nodes, L, T, K):
    """March v' + v''/2 + b v' = g backward from v(T) = vT.

    b_nodes : (N,) static drift or (K+1, N) per time node
    g_nodes : (N,) or (K+1, N) source samples
    vT_nodes : (N,) terminal samples
    Returns v as a (K+1, N) array of node samples.
    """
    vT_nodes = np.asarray(vT_nodes, float)
    N = vT_nodes.shape[0]
    dx = L / N
    dt = T / K
    b_nodes = np.asarray(b_nodes, float)
    g_nodes = np.asarray(g_nodes, float)
    b_static = b_nodes.ndim == 1
    g_static = g_nodes.ndim == 1

    def b_at(k):
        return b_nodes if b_static else b_nodes[k]

    def g_at(k):
        return g_nodes if g_static else g_nodes[k]

    v = np.empty((K + 1, N))
    v[K] = vT_nodes
    I = sp.identity(N, format="csc")
    lu = None
    A_next = _operator(b_at(K), N, dx)
    for k in range(K - 1, -1, -1):
        A_here = A_next if b_static else _operator(b_at(k), N, dx)
        if lu is None or not b_static:
            lu = spla.splu((I - 0.5 * dt * A_here).tocsc())
        rhs = (I + 0.5 * dt * A_next) @ v[k + 1] - 0.5 * dt * (g_at(k) + g_at(k + 1))
        v[k] = lu.solve(rhs)
        A_next = A_here
    return v
