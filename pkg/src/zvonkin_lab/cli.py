"""Command-line orchestration: pipelines, run directories, reports.

Every invocation resolves a configuration, hashes it, and works inside
``<output.dir>/<hash>/``.  Data files (.fld, .ens, report.json, CSV) are
deterministic functions of the configuration; ``manifest.json`` is the
one file carrying timestamps and library versions.  Exit status is 0
exactly when every verdict in the emitted report passed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .analysis import (
    SmoothBump,
    TestFunctionBank,
    VerificationReport,
    bracket,
    chain_rule_check,
    convergence_study,
    density_series,
    fp_residual,
    kolmogorov_check,
    mf_check,
)
from .config import ConfigError, load_config, parse_override_tokens
from .drift import regularity_certificate, smoothing_family, synthesize_drift
from .figures import curves_figure, loglog_fit_figure, render_series_figures
from .grid import SpectralField, TimeField, TorusGrid, mollify
from .io import write_field
from .pde import PdeProblem, select_lambda, solve_terminal, solve_u
from .report import write_report
from .sde import save_ensemble, simulate_X_direct, simulate_Y
from .zvonkin import build_map, conjugation_residual

_SUBCOMMANDS = ("synth-drift", "solve", "simulate", "verify", "converge")
_VERIFY_KINDS = ("fp", "bracket", "mf", "chainrule", "kolmogorov", "lemma-ll")


def thread_cap():
    """Worker-count cap from ZVONKIN_LAB_THREADS (default: cpu count)."""
    raw = os.environ.get("ZVONKIN_LAB_THREADS", "")
    if raw.strip():
        n = int(raw)
        if n < 1:
            raise ConfigError("ZVONKIN_LAB_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


# -- run directory plumbing -------------------------------------------------


def _run_dir(cfg):
    path = os.path.join(cfg.data["output"]["dir"], cfg.hash())
    os.makedirs(path, exist_ok=True)
    cpath = os.path.join(path, "config.json")
    if not os.path.exists(cpath):
        with open(cpath, "w") as fh:
            json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return path


def _update_manifest(run_dir, stage, payload):
    mpath = os.path.join(run_dir, "manifest.json")
    manifest = {}
    if os.path.exists(mpath):
        with open(mpath) as fh:
            manifest = json.load(fh)
    manifest.setdefault("created", time.strftime("%Y-%m-%dT%H:%M:%S%z"))
    manifest["updated"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    manifest.setdefault("versions", _versions())
    manifest.setdefault("stages", {})
    manifest["stages"][stage] = payload
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _versions():
    import matplotlib
    import scipy

    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "zvonkin_lab": __import__("zvonkin_lab").__version__,
    }


# -- shared pipeline stages -------------------------------------------------


def _build_drift(cfg):
    grid = cfg.grid()
    b = synthesize_drift(cfg.drift_spec(), grid)
    return grid, b


def _solve_family(cfg, b):
    """(lam, {label: SolveResult}, [(label, b_n)], trace) under the lambda policy."""
    params = cfg.solver_params()
    n_list = [int(n) for n in cfg.data["analysis"]["n_list"]]
    family = smoothing_family(b, n_list)
    ladder = list(zip([str(n) for n in n_list], family))
    lam_cfg = cfg.data["pde"]["lam"]
    if lam_cfg is None:
        lam, results, trace = select_lambda(b, family, params)
        return lam, results, ladder, trace
    lam = float(lam_cfg)
    members = [("b", b)] + [(f"n{i}", f) for i, f in enumerate(family)]
    with ThreadPoolExecutor(max_workers=min(thread_cap(), len(members))) as ex:
        futs = {label: ex.submit(solve_u, member, lam, params)
                for label, member in members}
        results = {label: fut.result() for label, fut in futs.items()}
    return lam, results, ladder, []


def _zvonkin_ensemble(cfg, b, results, lam):
    zmap = build_map(results["b"])
    sde = cfg.data["sde"]
    ens = simulate_Y(zmap, cfg.initial_law(), int(sde["M"]), int(sde["seed"]))
    return zmap, ens


def _canonical_observables(grid):
    """Fixed smooth (g, v_T) pair used by the martingale-style checks."""
    w = 2 * np.pi / grid.L
    if grid.d == 1:
        gs = np.cos(w * grid.x[0])
        vs = np.sin(w * grid.x[0])
    else:
        gs = np.cos(w * grid.x[0]) * np.cos(w * grid.x[1])
        vs = np.sin(w * grid.x[0]) * np.sin(w * grid.x[1])
    g = TimeField.constant_in_time(SpectralField.from_physical(grid, gs))
    vT = SpectralField.from_physical(grid, vs)
    return g, vT


def _smooth_y_observable(grid):
    """Two-mode observable of the transformed coordinate, time modulated."""
    w = 2 * np.pi / grid.L
    if grid.d == 1:
        samp = np.sin(w * grid.x[0]) + 0.5 * np.cos(2 * w * grid.x[0])
    else:
        samp = (np.sin(w * grid.x[0]) + 0.5 * np.cos(2 * w * grid.x[0])) * np.cos(w * grid.x[1])
    f0 = SpectralField.from_physical(grid, samp)
    tdep = np.cos(np.linspace(0.0, 2.0, grid.K + 1))
    coeff = tdep.reshape((-1,) + (1,) * grid.d) * f0.coeff[None]
    return TimeField.from_coeff(grid, coeff)


# -- subcommands ------------------------------------------------------------


def cmd_synth_drift(cfg):
    t0 = time.time()
    grid, b = _build_drift(cfg)
    run_dir = _run_dir(cfg)
    fld = os.path.join(run_dir, "drift.fld")
    write_field(fld, b)

    spec = cfg.drift_spec()
    rows = regularity_certificate(spec, [grid.N // 2, grid.N, 2 * grid.N],
                                  L=grid.L, T=grid.T)
    below = [r["below"] for r in rows]
    above = [r["above"] for r in rows]
    spread = (max(below) / min(below)) if min(below) > 0 else 1.0
    rep = VerificationReport("synth-drift")
    rep.add("certificate-bounded", spread, 1.5, spread < 1.5,
            "norm below the class stays level across N")
    rep.scalars.update({
        "sigma": spec.sigma, "beta": spec.beta,
        "sup_b0": float(np.abs(b.physical()[0]).max()),
    })
    rep.series["certificate"] = {
        "N": [float(r["N"]) for r in rows], "above": above, "below": below,
    }
    rep.provenance["files"] = ["drift.fld"]
    stage_dir = os.path.join(run_dir, "synth-drift")
    paths = write_report(stage_dir, rep)
    paths += render_series_figures(stage_dir, rep)
    _update_manifest(run_dir, "synth-drift",
                     {"seconds": round(time.time() - t0, 3),
                      "files": sorted(os.path.basename(p) for p in paths)})
    return rep, run_dir


def cmd_solve(cfg):
    t0 = time.time()
    grid, b = _build_drift(cfg)
    run_dir = _run_dir(cfg)
    lam, results, family, trace = _solve_family(cfg, b)
    write_field(os.path.join(run_dir, "u.fld"), results["b"].field)

    rep = VerificationReport("solve")
    worst = max(r.grad_sup for r in results.values())
    rep.add("gradient-bound", worst, 0.5, worst <= 0.5,
            f"lambda={lam:g} over {len(results)} members")
    rep.scalars.update({
        "lambda": lam,
        "iterations": {label: r.iterations for label, r in results.items()},
        "grad_sup": {label: r.grad_sup for label, r in results.items()},
    })
    labels = sorted(results)
    rep.series["member_grad_sup"] = {
        "member": list(range(len(labels))),
        "grad_sup": [results[la].grad_sup for la in labels],
    }
    rep.provenance["files"] = ["u.fld"]
    rep.provenance["member_order"] = labels
    stage_dir = os.path.join(run_dir, "solve")
    paths = write_report(stage_dir, rep)
    paths += render_series_figures(stage_dir, rep)
    _update_manifest(run_dir, "solve", {
        "seconds": round(time.time() - t0, 3),
        "lambda": lam,
        "ladder_trace": trace,
        "files": sorted(os.path.basename(p) for p in paths),
    })
    return rep, run_dir


def cmd_simulate(cfg):
    t0 = time.time()
    grid, b = _build_drift(cfg)
    run_dir = _run_dir(cfg)
    lam, results, family, _ = _solve_family(cfg, b)
    zmap, ens_z = _zvonkin_ensemble(cfg, b, results, lam)
    sde = cfg.data["sde"]
    ens_d = simulate_X_direct(b, cfg.initial_law(), int(sde["M"]), int(sde["seed"]))
    save_ensemble(os.path.join(run_dir, "zvonkin.ens"), ens_z)
    save_ensemble(os.path.join(run_dir, "direct.ens"), ens_d)

    rep = VerificationReport("simulate")
    rep.add("increment-gate", 0.0 if ens_z.increment_flag == "ok" else 1.0,
            0.0, ens_z.increment_flag == "ok", ens_z.increment_flag)
    frac = max(ens_z.boundary_fraction(grid.L), ens_d.boundary_fraction(grid.L))
    rep.add("boundary-occupancy", frac, 0.5, frac < 0.5,
            "fraction of samples within L/10 of the seam")
    rep.scalars.update({"lambda": lam, "M": ens_z.M, "paths_wrapped": ens_z.meta.get("wrapped", 0)})
    v = density_series(ens_z, grid)
    if grid.d == 1:
        rep.series["density_T"] = {
            "x": list(map(float, grid.x[0])),
            "zvonkin": list(map(float, v.physical()[grid.K])),
        }
    rep.provenance["files"] = ["zvonkin.ens", "direct.ens"]
    stage_dir = os.path.join(run_dir, "simulate")
    paths = write_report(stage_dir, rep)
    paths += render_series_figures(stage_dir, rep)
    _update_manifest(run_dir, "simulate", {
        "seconds": round(time.time() - t0, 3),
        "files": sorted(os.path.basename(p) for p in paths),
    })
    return rep, run_dir


def _verify_fp(cfg, grid, b):
    n = int(cfg.data["analysis"]["n_list"][-1])
    bn = mollify(b, n)
    sde = cfg.data["sde"]
    M = int(sde["M"])
    seed = int(sde["seed"])
    law = cfg.initial_law()
    # A kernel near the grid cell keeps the drift-transport pairing
    # unbiased through the drift's whole band; wider kernels flatten the
    # high-mode resonance and freeze the residual above the sampling
    # error, which would defeat the scaling gate below.
    bw = cfg.data["analysis"]["bandwidth"]
    if bw is None:
        bw = 0.8 * grid.cell
    bank = TestFunctionBank(grid.d, grid.L, m_max=int(cfg.data["analysis"]["m_max"]))

    def bank_residuals(m):
        ens = simulate_X_direct(bn, law, m, seed)
        v = density_series(ens, grid, bandwidth=bw)
        return v, fp_residual(v, bn, bank, grid.T)

    # The residual mixes Monte Carlo, time-step, and kernel-width error;
    # no fixed constant bounds it, so the gate is the Monte Carlo
    # scaling itself: quadrupling the sample count must shrink it.
    v_small, values_small = bank_residuals(max(4, M // 4))
    v, values = bank_residuals(M)
    rep = VerificationReport("verify-fp")
    rep.add("fp-constant", abs(values[0]), 0.0, values[0] == 0.0,
            "weak residual of the constant test function")
    worst = float(np.abs(values[1:]).max())
    worst_small = float(np.abs(values_small[1:]).max())
    shrink = worst_small / max(worst, 1e-300)
    rep.add("fp-shrink", shrink, 1.5, shrink >= 1.5,
            f"max bank residual {worst_small:.3g} -> {worst:.3g} when samples x4, n={n}")
    rep.scalars.update({
        "bank_max": worst,
        "bank_max_quarter": worst_small,
        "labels": [tf.label for tf in bank.members],
        "M": M,
    })
    rep.series["bank_residuals"] = {
        "member": list(range(len(values))),
        "residual": [float(x) for x in values],
        "residual_quarter": [float(x) for x in values_small],
    }
    if grid.d == 1:
        rep.series["density_T"] = {
            "x": list(map(float, grid.x[0])),
            "estimate": list(map(float, v.physical()[grid.K])),
        }
    return rep


def _verify_bracket(cfg, grid, b):
    lam, results, family, _ = _solve_family(cfg, b)
    zmap, ens = _zvonkin_ensemble(cfg, b, results, lam)
    eps = int(cfg.data["analysis"]["eps_steps"]) * ens.h
    rep = VerificationReport("verify-bracket")
    series = {"t": list(map(float, ens.times))}
    worst_diag = 0.0
    for i in range(grid.d):
        est = bracket(ens.X[:, :, i], ens.X[:, :, i], eps, ens.h)
        err = abs(est.final - grid.T)
        worst_diag = max(worst_diag, err)
        series[f"diag{i}"] = list(map(float, est.mean))
    rep.add("bracket-diagonal", worst_diag, 0.05 * grid.T,
            worst_diag <= 0.05 * grid.T, f"epsilon = {eps:g}")
    if grid.d == 2:
        est = bracket(ens.X[:, :, 0], ens.X[:, :, 1], eps, ens.h)
        err = abs(est.final)
        rep.add("bracket-cross", err, 0.05 * grid.T, err <= 0.05 * grid.T,
                "off-diagonal bracket of the two coordinates")
        series["cross"] = list(map(float, est.mean))
    rep.series["bracket"] = series
    rep.scalars["lambda"] = lam
    return rep


def _verify_mf(cfg, grid, b):
    lam, results, family, _ = _solve_family(cfg, b)
    zmap, ens = _zvonkin_ensemble(cfg, b, results, lam)
    g, vT = _canonical_observables(grid)
    sol = solve_terminal(PdeProblem(b, g, vT), cfg.solver_params())
    rough = mf_check(sol.field, g, ens)

    # The rough problem carries an O(h) drift discretization bias in the
    # defect, so only the orthogonality gate applies to it; the defect
    # gate runs on a zero-drift control where D - S is pure Ito error.
    spec0 = replace(cfg.drift_spec(), sigma=0.0)
    b0 = synthesize_drift(spec0, grid)
    sde = cfg.data["sde"]
    ens0 = simulate_X_direct(b0, cfg.initial_law(), int(sde["M"]), int(sde["seed"]))
    sol0 = solve_terminal(PdeProblem(b0, g, vT), cfg.solver_params())
    control = mf_check(sol0.field, g, ens0)

    rep = VerificationReport("verify-mf")
    ctrl = next(v for v in control.verdicts if v.criterion == "mf-martingale")
    rep.add("mf-martingale", ctrl.value, ctrl.tolerance, ctrl.passed,
            "zero-drift control; " + ctrl.detail)
    orth = next(v for v in rough.verdicts if v.criterion == "mf-orthogonality")
    rep.add(orth.criterion, orth.value, orth.tolerance, orth.passed, orth.detail)
    rep.scalars.update({
        "lambda": lam,
        "defect_sup": rough.scalars["sup_abs_mean"],
        "defect_se": rough.scalars["se_at_sup"],
        "control_defect_sup": control.scalars["sup_abs_mean"],
    })
    rep.series["mean"] = rough.series["mean"]
    rep.series["se"] = rough.series["se"]
    return rep


def _verify_chainrule(cfg, grid, b):
    lam, results, family, _ = _solve_family(cfg, b)
    params = cfg.solver_params()
    sde = cfg.data["sde"]
    law = cfg.initial_law()
    n_list = [int(n) for n in cfg.data["analysis"]["n_list"]]

    # Joint refinement: each rung pairs mollification level n_i with a
    # time step halving toward the final grid, and is solved and
    # simulated with its own drift, so the residual is pure
    # discretization error at every rung.
    rungs = [(n, max(2, grid.K >> (len(n_list) - 1 - i)))
             for i, n in enumerate(n_list)]
    spec = cfg.drift_spec()
    sups, ses, reps = [], [], []
    for n, K_i in rungs:
        g_i = TorusGrid(grid.d, grid.N, grid.L, grid.T, K_i)
        b_i = synthesize_drift(spec, g_i)
        b_n = smoothing_family(b_i, [n])[0]
        g, vT = _canonical_observables(g_i)
        f_n = solve_terminal(PdeProblem(b_n, g, vT), params).field
        zm = build_map(solve_u(b_n, lam, params))
        ens = simulate_Y(zm, law, int(sde["M"]), int(sde["seed"]))
        rep_i = chain_rule_check(f_n, g, ens, ladder=[(str(n), b_n)], params=params)
        mart = next(v for v in rep_i.verdicts if v.criterion == "cr-martingale")
        sups.append(mart.value)
        ses.append(mart.tolerance / 3.0)
        reps.append(rep_i)

    rep = VerificationReport("verify-chainrule")
    top = next(v for v in reps[-1].verdicts if v.criterion == "cr-martingale")
    rep.add(top.criterion, top.value, top.tolerance, top.passed,
            f"rung n={rungs[-1][0]}, K={rungs[-1][1]} self-consistent; " + top.detail)
    worst = 0.0
    worst_slack = ses[0]
    ok = True
    for (a, sa), (bv, sb) in zip(zip(sups, ses), zip(sups[1:], ses[1:])):
        slack = float(np.hypot(sa, sb))
        step = bv - a
        if step > worst:
            worst, worst_slack = step, slack
        ok &= step <= slack
    rep.add("cr-ladder", worst, worst_slack, ok,
            "sup_t |mean rho| nonincreasing along joint (h, n) refinement "
            "within one combined standard error")
    quad = next(v for v in reps[-1].verdicts if v.criterion == "cr-quadrature")
    rep.add(quad.criterion, quad.value, quad.tolerance, quad.passed, quad.detail)
    rep.scalars.update({
        "lambda": lam,
        "rungs": [[int(n), int(k)] for n, k in rungs],
        "ladder_sup": [float(v) for v in sups],
        "ladder_se": [float(v) for v in ses],
    })
    rep.series["mean"] = reps[-1].series["mean"]
    rep.series["ladder_sup"] = np.array(sups)
    rep.series["ladder_se"] = np.array(ses)
    return rep


def _verify_kolmogorov(cfg, grid, b):
    lam, results, family, _ = _solve_family(cfg, b)
    sde = cfg.data["sde"]
    rep = VerificationReport("verify-kolmogorov")
    slopes, consts = [], []
    n_list = [int(n) for n in cfg.data["analysis"]["n_list"]]
    for i, n in enumerate(n_list):
        zmap_n = build_map(results[f"n{i}"])
        ens = simulate_Y(zmap_n, cfg.initial_law(), int(sde["M"]), int(sde["seed"]))
        out = kolmogorov_check(ens)
        slopes.append(out["slope"])
        consts.append(out["constant"])
        rep.series[f"moment_n{n}"] = {
            "lag": list(map(float, out["lags"])),
            "moment": list(map(float, out["moments"])),
        }
    worst = min(slopes)
    rep.add("kolmogorov-slope", worst, 1.9, worst >= 1.9,
            f"fourth-moment scaling over lags in [0.01, 0.1], n in {n_list}")
    spread = max(consts) / min(consts)
    rep.add("kolmogorov-constant", spread, 1.5, spread <= 1.5,
            "fitted constants agree across the ladder")
    rep.scalars.update({"slopes": slopes, "constants": consts, "lambda": lam})
    return rep


def _verify_lemma_ll(cfg, grid, b):
    lam, results, family, _ = _solve_family(cfg, b)
    zmap = build_map(results["b"])
    f_tilde = _smooth_y_observable(grid)
    out = conjugation_residual(f_tilde, b, zmap, margin=max(1, grid.K // 8))
    rep = VerificationReport("verify-lemma-ll")
    rep.add("conjugation", out["rel_sup"], 1e-2, out["rel_sup"] < 1e-2,
            f"band {out['band']}, interior slices {out['interior']}")
    rep.series["per_slice"] = {
        "t": list(map(float, grid.times)),
        "relative_residual": list(map(float, out["per_slice"])),
    }
    rep.scalars.update({"scale": out["scale"], "lambda": lam})
    return rep


_VERIFY_DISPATCH = {
    "fp": _verify_fp,
    "bracket": _verify_bracket,
    "mf": _verify_mf,
    "chainrule": _verify_chainrule,
    "kolmogorov": _verify_kolmogorov,
    "lemma-ll": _verify_lemma_ll,
}


def cmd_verify(cfg, which):
    t0 = time.time()
    grid, b = _build_drift(cfg)
    run_dir = _run_dir(cfg)
    rep = _VERIFY_DISPATCH[which](cfg, grid, b)
    stage = f"verify-{which}"
    stage_dir = os.path.join(run_dir, stage)
    paths = write_report(stage_dir, rep)
    if which == "kolmogorov":
        for i, n in enumerate([int(n) for n in cfg.data["analysis"]["n_list"]]):
            s = rep.series[f"moment_n{n}"]
            paths.append(loglog_fit_figure(
                os.path.join(stage_dir, f"fig_moment_n{n}.png"),
                f"fourth moment vs lag, n={n}", s["lag"], s["moment"],
                rep.scalars["slopes"][i],
                float(np.log(rep.scalars["constants"][i]))))
    else:
        paths += render_series_figures(stage_dir, rep)
    _update_manifest(run_dir, stage, {
        "seconds": round(time.time() - t0, 3),
        "files": sorted(os.path.basename(p) for p in paths),
    })
    return rep, run_dir


def cmd_converge(cfg):
    t0 = time.time()
    grid, b = _build_drift(cfg)
    run_dir = _run_dir(cfg)
    lam, results, family, _ = _solve_family(cfg, b)
    zmap = build_map(results["b"])
    sde = cfg.data["sde"]
    rep = convergence_study(family, zmap, cfg.initial_law(),
                            int(sde["M"]), int(sde["seed"]))
    rep.scalars["lambda"] = lam
    stage_dir = os.path.join(run_dir, "converge")
    paths = write_report(stage_dir, rep)
    paths += render_series_figures(stage_dir, rep)
    _update_manifest(run_dir, "converge", {
        "seconds": round(time.time() - t0, 3),
        "files": sorted(os.path.basename(p) for p in paths),
    })
    return rep, run_dir


# -- entry point ------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(
        prog="zvonkin-lab",
        description="Construct and verify SDE solutions with distributional drift.",
    )
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in _SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="JSON configuration file")
        if name == "verify":
            sp.add_argument("--which", required=True, choices=_VERIFY_KINDS)
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args, leftover = _parser().parse_known_args(argv)
    try:
        overrides = parse_override_tokens(leftover)
        cfg = load_config(args.config, overrides)
    except (ConfigError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    if args.subcommand == "synth-drift":
        rep, run_dir = cmd_synth_drift(cfg)
    elif args.subcommand == "solve":
        rep, run_dir = cmd_solve(cfg)
    elif args.subcommand == "simulate":
        rep, run_dir = cmd_simulate(cfg)
    elif args.subcommand == "verify":
        rep, run_dir = cmd_verify(cfg, args.which)
    else:
        rep, run_dir = cmd_converge(cfg)

    for line in rep.lines():
        print(line)
    print(f"run directory: {run_dir}")
    failed = [v.criterion for v in rep.verdicts if not v.passed]
    if failed:
        for name in failed:
            print(f"FAILED: {name}", file=sys.stderr)
        return min(len(failed), 120)
    return 0


if __name__ == "__main__":
    sys.exit(main())
