"""Figure rendering for bench and eval outputs.

Every renderer consumes the same in-memory results the CSV writers consume,
so figures and delimited outputs always agree.  The Agg backend is forced
before pyplot loads; PNGs are written without timestamps so repeat runs are
byte-identical.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
}

_PNG_META = {"Software": None}  # strip the version string for stable bytes

_IN_COLOR = "tab:blue"
_OOD_COLOR = "tab:red"


def _save(fig, path) -> None:
    fig.savefig(path, metadata=_PNG_META, bbox_inches="tight")
    plt.close(fig)


def plot_gaussian_summary(result: dict, path) -> None:
    """Histogram panels for the four statistics plus the p(u) overlay."""
    histograms = result["histograms"]
    dos = result["dos_curve"]
    origin = result["summary"]["origin_reference"]
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, 5, figsize=(16, 3))
        for ax, stat in zip(axes, ("norm", "nll", "coord0", "coordmax")):
            h = histograms[stat]
            widths = np.diff(h["edges"])
            ax.bar(h["edges"][:-1], h["counts"], width=widths, align="edge", color=_IN_COLOR)
            if stat in origin:
                ax.axvline(origin[stat], color="k", linestyle="--", linewidth=1)
            ax.set_title(stat)
            ax.set_xlabel(stat)
        ax = axes[4]
        ax.plot(dos["u"], dos["analytic"], color="k", label="analytic p(u)")
        ax.plot(dos["u"], dos["kde"], color=_IN_COLOR, linestyle="--", label="KDE")
        ax.set_title("density of states")
        ax.set_xlabel("u")
        ax.legend()
        _save(fig, path)


def plot_flow_toy(result: dict, path) -> None:
    """Decision regions per method with the test and OOD scatters."""
    grid = result["grid"]
    tables = result["tables"]
    methods = list(grid["scores"])
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, len(methods), figsize=(4 * len(methods), 3.6))
        if len(methods) == 1:
            axes = [axes]
        extent = (
            grid["latent"][0],
            grid["latent"][-1],
            grid["jac"][0],
            grid["jac"][-1],
        )
        for ax, method in zip(axes, methods):
            flagged = (
                grid["scores"][method].reshape(len(grid["latent"]), len(grid["jac"]))
                <= grid["thresholds"][method]
            )
            ax.imshow(
                flagged.T,
                origin="lower",
                extent=extent,
                aspect="auto",
                cmap="Greys",
                alpha=0.35,
                vmin=0,
                vmax=1,
            )
            for name, color in (("test", _IN_COLOR), ("ood", _OOD_COLOR)):
                t = tables[name]
                ax.scatter(
                    t.column("latent"), t.column("jac"), s=3, alpha=0.4,
                    color=color, label=name, linewidths=0,
                )
            auroc = result["reports"][method].auroc
            ax.set_title(f"{method} (AUROC {auroc:.3f})")
            ax.set_xlabel("latent")
            ax.set_ylabel("jac")
            ax.legend(loc="lower left")
        _save(fig, path)


def plot_degrade(result: dict, path) -> None:
    rows = result["rows"]
    scorers = sorted({r["scorer"] for r in rows})
    modes = [m for m in ("uninformative", "obfuscatory") if any(r["mode"] == m for r in rows)]
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, len(scorers), figsize=(4.5 * len(scorers), 3.2))
        if len(scorers) == 1:
            axes = [axes]
        for ax, scorer in zip(axes, scorers):
            base = [r["auroc"] for r in rows if r["scorer"] == scorer and r["mode"] == "base"]
            for mode, marker in zip(modes, "os"):
                pts = sorted(
                    (r["k"], r["auroc"])
                    for r in rows
                    if r["scorer"] == scorer and r["mode"] == mode
                )
                ax.plot(*zip(*pts), marker=marker, label=mode)
            if base:
                ax.axhline(base[0], color="k", linestyle="--", linewidth=1, label="base")
            ax.set_xscale("log")
            ax.set_ylim(-0.02, 1.02)
            ax.set_xlabel("injected statistics k")
            ax.set_ylabel("AUROC")
            ax.set_title(scorer)
            ax.legend()
        _save(fig, path)


def plot_bound(result: dict, path) -> None:
    records = result["records"]
    lhs = np.array([r["lhs"] for r in records])
    rhs = np.array([r["rhs"] for r in records])
    se3 = 3.0 * np.array([r["se"] for r in records])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        ax.errorbar(rhs, lhs, yerr=se3, fmt="o", markersize=4, linewidth=1)
        lim = max(rhs.max(), lhs.max()) * 1.1
        ax.plot([0, lim], [0, lim], color="k", linestyle="--", linewidth=1, label="lhs = rhs")
        ax.set_xlabel("analytic bound (rhs)")
        ax.set_ylabel("empirical atypicality mass (lhs)")
        ax.set_title("typicality bound, Monte Carlo vs closed form")
        ax.legend()
        _save(fig, path)


def plot_eval(in_scores, out_scores, threshold: float, path) -> None:
    """Oriented score histograms with the chosen threshold and ROC curve."""
    s_in = in_scores.oriented()
    s_out = out_scores.oriented()
    pooled = np.sort(np.unique(np.concatenate([s_in, s_out])))
    # ROC by sweeping every distinct score as a flag-at-or-below cut.
    tpr = [0.0]
    fpr = [0.0]
    for cut in pooled[::-1]:
        fpr.append(float(np.mean(s_in < cut)))
        tpr.append(float(np.mean(s_out < cut)))
    tpr.append(1.0)
    fpr.append(1.0)
    with plt.rc_context(_STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.2))
        bins = np.histogram_bin_edges(np.concatenate([s_in, s_out]), bins=60)
        ax1.hist(s_in, bins=bins, alpha=0.6, color=_IN_COLOR, label="in")
        ax1.hist(s_out, bins=bins, alpha=0.6, color=_OOD_COLOR, label="out")
        if np.isfinite(threshold):
            ax1.axvline(threshold, color="k", linestyle="--", linewidth=1, label="threshold")
        ax1.set_xlabel("oriented score")
        ax1.set_ylabel("count")
        ax1.legend()
        ax2.plot(fpr, tpr, color=_IN_COLOR)
        ax2.plot([0, 1], [0, 1], color="k", linestyle="--", linewidth=1)
        ax2.set_xlabel("in-distribution flagged (FPR)")
        ax2.set_ylabel("OOD flagged (TPR)")
        ax2.set_title("ROC")
        _save(fig, path)
