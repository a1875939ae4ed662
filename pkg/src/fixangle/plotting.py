"""Figures for the report command (matplotlib, Agg backend, imported lazily)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

PARAMS = {
    "font.size": 8,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "figure.figsize": (4.0, 2.8),
    "figure.dpi": 150,
    "savefig.bbox": "tight",
}


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update(PARAMS)
    return plt


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path


def sweep_ratios(s: Sequence[float], per_s: Sequence[float], path, rows: list[dict] | None = None) -> Path:
    """Max LHS/RHS ratio per s, with individual functions as faint points."""
    plt = _plt()
    fig, ax = plt.subplots()
    if rows:
        ax.semilogy([r["s"] for r in rows], [r["ratio"] for r in rows], ".", color="0.7", label="functions")
    ax.semilogy(s, per_s, "o-", color="C0", label="max over suite")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("s")
    ax.set_ylabel("LHS / RHS")
    ax.legend(loc="best")
    return _save(fig, path)


def stability_ratios(labels: Sequence[str], ratios: Sequence[float], C: float | None, path) -> Path:
    plt = _plt()
    fig, ax = plt.subplots()
    x = np.arange(len(ratios))
    ax.bar(x, ratios, color="C0")
    if C is not None:
        ax.axhline(C, color="C3", ls="--", label=f"C_emp = {C:.3g}")
        ax.legend(loc="best")
    ax.set_xticks(x, labels, rotation=45, ha="right")
    ax.set_ylabel(r"$\|\Delta V\|_{L^2(B)} / \|w\|_{H^1(\Sigma)}$")
    return _save(fig, path)


def hs_curve(s: Sequence[float], values: Sequence[float], path) -> Path:
    plt = _plt()
    fig, ax = plt.subplots()
    ax.loglog(s, values, "o-", label="h(s)")
    s = np.asarray(s, float)
    ax.loglog(s, values[0] * np.sqrt(s[0] / s), ":", color="0.5", label=r"$s^{-1/2}$")
    ax.set_xlabel("s")
    ax.set_ylabel("h(s)")
    ax.legend(loc="best")
    return _save(fig, path)


def field_pair(a: np.ndarray, b: np.ndarray, extent: float, titles: tuple[str, str], path) -> Path:
    """Two 2-D fields side by side on [-extent, extent]^2 with a shared colour scale."""
    plt = _plt()
    fig, axs = plt.subplots(1, 2, figsize=(6.0, 2.8))
    vmax = float(max(np.abs(a).max(), np.abs(b).max(), 1e-300))
    for ax, f, t in zip(axs, (a, b), titles):
        im = ax.imshow(f.T, origin="lower", extent=(-extent, extent, -extent, extent), cmap="RdBu_r",
                       vmin=-vmax, vmax=vmax)
        ax.set_title(t)
        ax.set_aspect("equal")
    fig.colorbar(im, ax=axs, shrink=0.8)
    return _save(fig, path)


def far_field_curves(theta: np.ndarray, values: dict[float, np.ndarray], path,
                     reference: dict[float, np.ndarray] | None = None) -> Path:
    """|u_inf| against angle for each k; optional reference curves dashed."""
    plt = _plt()
    fig, ax = plt.subplots()
    order = np.argsort(theta)
    for i, (k, v) in enumerate(sorted(values.items())):
        ax.plot(theta[order], np.abs(v)[order], "-", color=f"C{i}", label=f"k = {k:g}")
        if reference is not None and k in reference:
            ax.plot(theta[order], np.abs(reference[k])[order], "--", color=f"C{i}")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"$|u_\infty|$ (dashed: Born)")
    ax.legend(loc="best")
    return _save(fig, path)


def energy_ratios(names: Sequence[str], series: dict[str, Sequence[float]], path) -> Path:
    plt = _plt()
    fig, ax = plt.subplots()
    x = np.arange(len(names))
    for i, (lab, vals) in enumerate(series.items()):
        ax.semilogy(x, vals, "o", color=f"C{i}", label=lab)
    ax.set_xlabel("test function")
    ax.set_ylabel("LHS / RHS")
    ax.legend(loc="best")
    return _save(fig, path)


def residual_bars(names: Sequence[str], residuals: dict[str, Sequence[float]], path, tol: float | None = None) -> Path:
    plt = _plt()
    fig, ax = plt.subplots()
    x = np.arange(len(names))
    width = 0.8 / max(len(residuals), 1)
    for i, (lab, vals) in enumerate(residuals.items()):
        ax.bar(x + i * width, vals, width, label=lab, color=f"C{i}")
    if tol is not None:
        ax.axhline(tol, color="C3", ls="--", lw=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("test function")
    ax.set_ylabel("relative residual")
    ax.legend(loc="best")
    return _save(fig, path)


def trace_series(times: np.ndarray, series: np.ndarray, path, label: str = "w on Sigma") -> Path:
    plt = _plt()
    fig, ax = plt.subplots()
    ax.plot(times, series, lw=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel(label)
    return _save(fig, path)
