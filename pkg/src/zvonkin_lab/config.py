"""Run configuration: JSON schema, dotted-path overrides, content hash.

A run is fully described by one JSON document with six sections (grid,
drift, pde, sde, analysis, output).  Any leaf can be overridden on the
command line by its dotted path, e.g. ``--sde.M 100000``.  The sha256 of
the canonical serialization names the run directory, so identical
configurations land in identical places and reruns can be compared file
by file.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .drift import DriftSpec
from .grid import TorusGrid
from .pde import SolverParams
from .sde import InitialLaw, dirac, gaussian, mixture, uniform

_DEFAULTS = {
    "grid": {"d": 1, "N": 512, "L": 2 * np.pi, "T": 1.0, "K": 512},
    "drift": {
        "beta": 0.25,
        "margin": 0.05,
        "sigma": 1.0,
        "seed": 101,
        "time_mode": "static",
        "omega": 2 * np.pi,
        "window": False,
    },
    "pde": {
        "tol": 1e-9,
        "max_iter": 200,
        "ratio_alarm": 0.9,
        # null means: walk the dyadic ladder until the gradient bound holds
        "lam": None,
    },
    "sde": {
        "M": 10000,
        "seed": 101,
        "law": {"kind": "uniform", "lo": [0.0], "hi": [2.0 * np.pi]},
    },
    "analysis": {
        "m_max": 4,
        "eps_steps": 10,
        "bandwidth": None,
        "n_list": [4, 16, 64],
    },
    "output": {"dir": "runs"},
}


class ConfigError(ValueError):
    """Malformed configuration or override."""


def default_config() -> dict:
    return copy.deepcopy(_DEFAULTS)


def _merge(base, extra, path=""):
    out = copy.deepcopy(base)
    for key, val in extra.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(base[key], dict) and key != "law":
            if not isinstance(val, dict):
                raise ConfigError(f"{here!r} must be a section object")
            out[key] = _merge(base[key], val, here)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path=None, overrides=()) -> "RunConfig":
    """Read a JSON config (or defaults when path is None) and apply overrides."""
    data = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
    merged = _merge(_DEFAULTS, data)
    for dotted, raw in overrides:
        _apply_override(merged, dotted, raw)
    return RunConfig(merged)


def _coerce(old, raw, dotted):
    if isinstance(old, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{dotted}: expected a boolean, got {raw!r}")
    if isinstance(old, int) and not isinstance(old, bool):
        return int(raw)
    if isinstance(old, float):
        return float(raw)
    if isinstance(old, str):
        return raw
    # null leaves and structured leaves accept JSON literals
    try:
        return json.loads(raw)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{dotted}: cannot parse {raw!r}") from err


def _apply_override(data, dotted, raw):
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"unknown config path {dotted!r}")
        node = node[key]
    leaf = keys[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"unknown config path {dotted!r}")
    node[leaf] = _coerce(node[leaf], raw, dotted)


def parse_override_tokens(tokens):
    """Pair up leftover CLI tokens of the form --grid.N 1024."""
    out = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or "." not in tok:
            raise ConfigError(f"unrecognized argument {tok!r}")
        if "=" in tok:
            dotted, raw = tok[2:].split("=", 1)
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"override {tok!r} is missing a value")
            dotted, raw = tok[2:], tokens[i + 1]
            i += 1
        out.append((dotted, raw))
        i += 1
    return out


def _law_from_dict(spec):
    kind = spec.get("kind")
    if kind == "dirac":
        return dirac(spec["point"])
    if kind == "gaussian":
        return gaussian(spec["mean"], spec["std"])
    if kind == "uniform":
        return uniform(spec["lo"], spec["hi"])
    if kind == "mixture":
        parts = [(w, _law_from_dict(sub)) for w, sub in spec["components"]]
        return mixture(parts)
    raise ConfigError(f"unknown initial law kind {kind!r}")


def _law_to_dict(law: InitialLaw):
    if law.kind == "mixture":
        return {
            "kind": "mixture",
            "components": [[w, _law_to_dict(sub)] for w, sub in law.params["components"]],
        }
    return {"kind": law.kind, **{k: list(v) if isinstance(v, tuple) else v
                                 for k, v in law.params.items()}}


@dataclass
class RunConfig:
    """Validated run description; build_* methods construct live objects."""

    data: dict = field(default_factory=default_config)

    def __post_init__(self):
        # constructing the domain objects performs all range checks
        self.grid()
        self.drift_spec()
        self.solver_params()
        self.initial_law()
        sde = self.data["sde"]
        if int(sde["M"]) < 1:
            raise ConfigError("sde.M must be at least 1")
        ana = self.data["analysis"]
        if int(ana["eps_steps"]) < 2:
            raise ConfigError("analysis.eps_steps must be at least 2")
        if list(ana["n_list"]) != sorted(set(int(n) for n in ana["n_list"])):
            raise ConfigError("analysis.n_list must be strictly increasing")

    # -- section constructors ---------------------------------------------

    def grid(self) -> TorusGrid:
        g = self.data["grid"]
        return TorusGrid(d=int(g["d"]), N=int(g["N"]), L=float(g["L"]),
                         T=float(g["T"]), K=int(g["K"]))

    def drift_spec(self) -> DriftSpec:
        d = self.data["drift"]
        return DriftSpec(
            beta=float(d["beta"]),
            margin=float(d["margin"]),
            sigma=float(d["sigma"]),
            seed=int(d["seed"]),
            time_mode=d["time_mode"],
            omega=float(d["omega"]),
            window=bool(d["window"]),
        )

    def solver_params(self) -> SolverParams:
        p = self.data["pde"]
        return SolverParams(tol=float(p["tol"]), max_iter=int(p["max_iter"]),
                            ratio_alarm=float(p["ratio_alarm"]))

    def initial_law(self) -> InitialLaw:
        return _law_from_dict(self.data["sde"]["law"])

    # -- identity ----------------------------------------------------------

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"),
                          allow_nan=False)

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)
