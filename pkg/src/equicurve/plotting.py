"""Figure rendering for the CLI report paths.

Each report command can write a PNG next to its delimited output.  Matplotlib
is imported lazily with the Agg backend so that library users and headless
runs never pay for a display stack.
"""

from __future__ import annotations

import math

import numpy as np

_METHOD_STYLE = {
    "log_optimal": {"color": "#0072B2", "label": "boundary mixture"},
    "tost": {"color": "#E69F00", "label": "TOST-E"},
    "ui": {"color": "#009E73", "label": "universal inference"},
    "fixed": {"color": "#555555", "label": "fixed-level test", "linestyle": "--"},
}


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def save_curve_figure(path, families, fixed_alpha: float = 0.05):
    """Two panels: equivalence curves over levels, e-values over margins."""
    plt = _plt()
    fig, (ax_left, ax_right) = plt.subplots(1, 2, figsize=(10, 4))
    for fam in families:
        style = dict(_METHOD_STYLE.get(fam.method, {"label": fam.method}))
        eq = fam.equivalence
        finite = np.isfinite(eq.margins)
        ax_left.step(eq.levels[finite], eq.margins[finite], where="post", **style)
        ax_right.step(fam.evalues.margins, fam.evalues.values, where="post", **style)
    ax_left.set_xscale("log")
    ax_left.set_xlabel("level")
    ax_left.set_ylabel("certified margin")
    ax_left.axvline(fixed_alpha, color="#bbbbbb", lw=0.6, zorder=0)
    ax_right.set_yscale("log")
    ax_right.set_xlabel("margin")
    ax_right.set_ylabel("e-value")
    ax_right.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_campaign_figure(path, result):
    """Two panels: mean e-value and rejection frequency per time point."""
    plt = _plt()
    fig, (ax_mean, ax_rej) = plt.subplots(1, 2, figsize=(10, 4))
    ns = np.arange(1, result.campaign.horizon + 1)
    for variant in result.variants:
        ax_mean.plot(ns, result.mean_e[variant], label=variant)
        ax_rej.plot(ns, result.reject[variant], label=variant)
    ax_mean.set_xlabel("n")
    ax_mean.set_ylabel("mean e-value")
    ax_mean.set_yscale("log")
    ax_rej.set_xlabel("n")
    ax_rej.set_ylabel(f"rejection frequency (level {result.campaign.alpha:g})")
    ax_rej.set_ylim(-0.02, 1.02)
    ax_mean.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_validity_figure(path, sweep):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sweep.grid, sweep.expectations, marker=".", lw=0.8)
    ax.axhline(1.0, color="#cc3311", lw=0.8)
    ax.set_xlabel("null parameter")
    ax.set_ylabel("expected e-value")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_frontier_figure(path, surface, frontier):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    vals = np.where(surface.valid_mask, surface.values, np.nan)
    mesh = ax.pcolormesh(
        surface.uppers, surface.lowers, np.log10(np.maximum(vals, 1e-12)), shading="nearest"
    )
    fig.colorbar(mesh, ax=ax, label="log10 e-value")
    if frontier.pairs:
        lows, ups = zip(*frontier.pairs)
        ax.plot(ups, lows, "o-", color="#cc3311", ms=4, lw=1.0, label="frontier")
        ax.legend(fontsize=8)
    ax.set_xlabel("upper margin")
    ax.set_ylabel("lower margin")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_spectrum_figure(path, rows):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    alphas = [r["alpha"] for r in rows]
    bounds = [r["bound"] for r in rows]
    ax.step(alphas, bounds, where="post", color="#0072B2")
    switches = [
        (rows[i]["alpha"], rows[i]["decision"])
        for i in range(len(rows))
        if i == 0 or rows[i]["decision"] != rows[i - 1]["decision"]
    ]
    for alpha, decision in switches:
        if math.isfinite(alpha):
            ax.axvline(alpha, color="#bbbbbb", lw=0.6)
            ax.text(alpha, max(bounds), decision, rotation=90, fontsize=7, va="top")
    ax.set_xscale("log")
    ax.set_xlabel("level")
    ax.set_ylabel("certified loss bound")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
