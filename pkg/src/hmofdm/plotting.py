"""Optional SVG renderings of beam patterns and campaign CSVs."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> None:
    # fixed metadata keeps the SVG bytes reproducible
    fig.savefig(path, format="svg", metadata={"Date": None})


def beam_pattern_svg(theta_deg, gain, theta0: float, path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(theta_deg, gain)
    ax.axvline(theta0, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("|w^H a|")
    ax.set_xlim(0, 180)
    ax.set_title(f"beam pattern, steer {theta0:g} deg")
    fig.tight_layout()
    _save(fig, Path(path))
    plt.close(fig)


def campaign_svg(result, path, metric: str) -> None:
    """One curve per (mode, N_r) of ``metric`` against SNR, log scale."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode in result.modes():
        for n_r in sorted({r.n_r for r in result.rows}):
            rows = [r for r in result.rows if r.mode == mode and r.n_r == n_r]
            y = np.array([getattr(r, metric) for r in rows], dtype=float)
            if not np.any(np.isfinite(y) & (y > 0)):
                continue
            ax.semilogy([r.snr_db for r in rows], y, marker="o", label=f"{mode}, N_r={n_r}")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel(metric)
    ax.grid(True, which="both", alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, Path(path))
    plt.close(fig)
