"""Shared fixtures: the full-scale corpus stack and the acceptance summary."""

import time
from types import SimpleNamespace

import numpy as np
import pytest

from zvonkin_lab.drift import DriftSpec, smoothing_family, synthesize_drift
from zvonkin_lab.grid import TorusGrid
from zvonkin_lab.pde import select_lambda
from zvonkin_lab.zvonkin import build_map

SEEDS = (101, 211, 307)
L = 2 * np.pi

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def full_stack():
    """Drift, mollification family, selected lambda, solutions and map per seed.

    Built once at full corpus scale (d=1, N=512, K=512); the build time is
    recorded so the gradient-bound criterion can charge it to its budget.
    """
    grid = TorusGrid(1, 512, L, 1.0, 512)
    out = {"grid": grid}
    t0 = time.monotonic()
    for seed in SEEDS:
        b = synthesize_drift(DriftSpec(beta=0.25, sigma=1.0, seed=seed), grid)
        fam = smoothing_family(b, [4, 16, 64])
        lam, results, trace = select_lambda(b, fam)
        out[seed] = SimpleNamespace(
            seed=seed,
            b=b,
            family=fam,
            lam=lam,
            results=results,
            zmap=build_map(results["b"]),
        )
    out["seconds"] = time.monotonic() - t0
    return out


@pytest.fixture(scope="session")
def record():
    """Collector for acceptance lines, one per criterion."""

    def add(num, name, passed, value, tolerance, detail=""):
        line = f"{'PASS' if passed else 'FAIL'} {num:02d} {name}: value={value} tolerance={tolerance}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return line

    return add


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
