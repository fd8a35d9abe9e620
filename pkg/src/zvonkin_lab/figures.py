"""Small matplotlib renderers for run directories.

Each helper writes one PNG next to the delimited output and returns the
path.  Figures are a convenience view of the CSV data; nothing reads
them back.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be set first

_DPI = 130


def _finish(fig, ax, path, title, xlabel, ylabel, legend):
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if legend:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def curves_figure(path, title, curves, xlabel="t", ylabel="", band=None,
                  logy=False):
    """Line plot; curves is [(label, x, y)], band an optional (x, lo, hi)."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    if band is not None:
        bx, lo, hi = band
        ax.fill_between(bx, lo, hi, alpha=0.25, color="tab:gray",
                        label="3 SE band")
    for label, x, y in curves:
        ax.plot(x, y, lw=1.2, label=label)
    if logy:
        ax.set_yscale("log")
    return _finish(fig, ax, path, title, xlabel, ylabel, True)


def bars_figure(path, title, labels, values, ylabel=""):
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(labels)), 3.4))
    ax.bar(range(len(values)), values, color="tab:blue")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=60, fontsize=7, ha="right")
    return _finish(fig, ax, path, title, "", ylabel, False)


def loglog_fit_figure(path, title, x, y, slope, intercept,
                      xlabel="lag", ylabel="moment"):
    import numpy as np

    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    ax.loglog(x, y, "o", ms=4, label="measured")
    xs = np.asarray(x, float)
    ax.loglog(xs, np.exp(intercept) * xs ** slope, "-", lw=1.0,
              label=f"fit slope {slope:.3f}")
    return _finish(fig, ax, path, title, xlabel, ylabel, True)


def render_series_figures(run_dir, report):
    """Default rendering: one line plot per 1-d or columnar series."""
    import numpy as np

    out = []
    for name in sorted(report.series):
        val = report.series[name]
        target = os.path.join(run_dir, f"fig_{name}.png")
        if isinstance(val, dict):
            cols = list(val)
            x = np.atleast_1d(np.asarray(val[cols[0]], float))
            curves = [(c, x, np.atleast_1d(np.asarray(val[c], float)))
                      for c in cols[1:]]
            if not curves:
                continue
            out.append(curves_figure(target, name, curves, xlabel=cols[0]))
        else:
            arr = np.asarray(val, float)
            if arr.ndim == 1:
                out.append(curves_figure(
                    target, name, [(name, np.arange(len(arr)), arr)],
                    xlabel="index"))
            elif arr.ndim == 2:
                rows = np.arange(arr.shape[0])
                curves = [(f"col{j}", rows, arr[:, j])
                          for j in range(arr.shape[1])]
                out.append(curves_figure(target, name, curves, xlabel="row"))
    return out
