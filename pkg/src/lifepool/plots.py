"""Matplotlib rendering for the report pipeline and series subcommands.

Everything draws through the Agg backend so figures render identically in
headless runs; each helper writes one PNG and returns its path.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .calibrate import ClamFit
from .ingest import PoolingReport

__all__ = ["plot_series", "plot_clam", "plot_report_figures"]

_FIGSIZE = (7.0, 4.5)


def plot_series(series: list[tuple[str, list[float], list[float]]],
                xlabel: str, ylabel: str, path: str | Path,
                title: str | None = None) -> Path:
    """Render one or more labelled (x, y) series to a PNG."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for label, xs, ys in series:
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_clam(points: list[tuple[float, float]], fit: ClamFit,
              path: str | Path, title: str) -> Path:
    """Scatter fitted (g, ln h) pairs with the regression line through them."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    gs = np.array([g for _, g in points])
    log_hs = np.array([lh for lh, _ in points])
    ax.scatter(gs, log_hs, s=18, zorder=3, label="cohort fits")
    grid = np.linspace(gs.min(), gs.max(), 50)
    ax.plot(grid, fit.L - fit.x_star * grid, color="crimson", linewidth=1.2,
            label=f"ln h = {fit.L:.3f} - {fit.x_star:.2f} g")
    ax.set_xlabel("mortality growth rate g")
    ax.set_ylabel("log age-zero hazard")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_report_figures(rows: list[PoolingReport],
                        clam_points: dict[str, list[tuple[float, float]]],
                        clam_fits: dict[str, ClamFit],
                        outdir: str | Path, suffix: str = "") -> list[Path]:
    """Render the report's companion figures; returns the written paths."""
    outdir = Path(outdir)
    written = []

    for gender, fit in sorted(clam_fits.items()):
        written.append(
            plot_clam(clam_points[gender], fit,
                      outdir / f"fig_clam_{gender}{suffix}.png",
                      f"hazard/growth trade-off ({gender})")
        )

    genders = sorted({row.gender for row in rows})
    delta_series = []
    covol_series = []
    for gender in genders:
        sub = [row for row in rows if row.gender == gender]
        pct = [row.percentile for row in sub]
        delta_series.append(
            (f"{gender}, fair", pct, [100 * row.delta_individual for row in sub])
        )
        delta_series.append(
            (f"{gender}, group", pct, [100 * row.delta_group for row in sub])
        )
        covol_series.append(
            (gender, pct, [100 * row.covol for row in sub])
        )
    written.append(
        plot_series(delta_series, "income percentile", "value of pooling (%)",
                    outdir / f"fig_delta_by_percentile{suffix}.png",
                    "value of longevity risk pooling")
    )
    written.append(
        plot_series(covol_series, "income percentile",
                    "coefficient of variation of longevity (%)",
                    outdir / f"fig_covol_by_percentile{suffix}.png",
                    "longevity risk by income percentile")
    )
    return written


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
