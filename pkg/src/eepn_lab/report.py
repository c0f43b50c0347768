"""Figure rendering for the CLI report paths.

Every function takes already-computed results and writes a PNG next to the
CSV artifacts. Uses the Agg backend so it runs headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .decomposition import EepnComponents
from .phase_noise import ResidualStats


def save_residual_stats_figure(stats: ResidualStats, path):
    """Two panels: residual ACF over lag and one-sided PSD over frequency."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(stats.lags, stats.acf, lw=1.0)
    ax1.set_xlabel("lag (samples)")
    ax1.set_ylabel("ACF (rad$^2$)")
    ax1.set_title(f"residual ACF, N={stats.N}")
    ax1.grid(alpha=0.3)

    pos = stats.freqs >= 0
    ax2.semilogy(stats.freqs[pos] / 1e6, np.maximum(stats.psd[pos], 1e-30),
                 lw=1.0)
    ax2.set_xlabel("frequency (MHz)")
    ax2.set_ylabel("PSD (rad$^2$/Hz)")
    ax2.set_title("residual PSD")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_components_figure(comp: EepnComponents, path, max_points: int = 20000):
    """2x2 constellation scatter of the four terms at symbol instants."""
    step = max(1, comp.x_terr.size // max_points)
    panels = [("timing error term", comp.x_terr),
              ("rotation term", comp.n_rot),
              ("receiver residual term", comp.n_rrn),
              ("cross residual term", comp.n_xrn)]
    fig, axes = plt.subplots(2, 2, figsize=(8, 8))
    for ax, (title, data) in zip(axes.flat, panels):
        d = data[::step]
        ax.scatter(d.real, d.imag, s=1, alpha=0.3, linewidths=0)
        ax.set_title(title)
        ax.set_aspect("equal")
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_penalty_figure(reports, path):
    """Heatmaps per term over the (TR, CPR) grid, or penalty-vs-linewidth
    lines when the reports span several linewidths."""
    terms = ("x_terr", "n_rot", "n_rrn", "n_xrn")
    linewidths = sorted({r.linewidth for r in reports})
    if len(linewidths) > 1:
        fig, ax = plt.subplots(figsize=(6, 4))
        for term in terms:
            rows = sorted((r.linewidth, r.penalty_db) for r in reports
                          if r.term == term)
            lw = [r[0] / 1e3 for r in rows]
            pen = [r[1] for r in rows]
            ax.plot(lw, pen, marker="o", label=term)
        ax.set_xlabel("linewidth (kHz)")
        ax.set_ylabel("SNR penalty (dB)")
        ax.legend()
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        return

    tr_vals = sorted({r.tr_avglen for r in reports})
    cpr_vals = sorted({r.cpr_avglen for r in reports})
    fig, axes = plt.subplots(2, 2, figsize=(9, 7))
    for ax, term in zip(axes.flat, terms):
        grid = np.full((len(cpr_vals), len(tr_vals)), np.nan)
        for r in reports:
            if r.term != term:
                continue
            grid[cpr_vals.index(r.cpr_avglen), tr_vals.index(r.tr_avglen)] = \
                r.penalty_db
        im = ax.imshow(grid, origin="lower", aspect="auto", cmap="Reds")
        ax.set_xticks(range(len(tr_vals)), [str(v) for v in tr_vals])
        ax.set_yticks(range(len(cpr_vals)), [str(v) for v in cpr_vals])
        ax.set_xlabel("TR averaging length")
        ax.set_ylabel("CPR averaging length")
        ax.set_title(f"penalty by {term}")
        fig.colorbar(im, ax=ax, label="dB")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_constellation_figure(symbols: np.ndarray, path, title="received symbols",
                              max_points: int = 20000):
    step = max(1, symbols.size // max_points)
    d = symbols[::step]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(d.real, d.imag, s=1, alpha=0.3, linewidths=0)
    ax.set_title(title)
    ax.set_aspect("equal")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
