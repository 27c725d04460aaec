"""Figure rendering for the report paths.

Every CLI report that writes delimited data also renders a figure next to
it.  The Agg backend is forced so rendering works headless; figures go to
files only, nothing is shown interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import ScalarField

__all__ = [
    "save_field_plot",
    "save_sweep_plots",
    "save_overlay_plot",
    "save_histogram",
    "save_scatter_bound",
]


def save_field_plot(field: ScalarField, path, title: str | None = None) -> None:
    grid = field.grid
    fig, ax = plt.subplots(figsize=(6, 4))
    if grid.dim == 1:
        ax.plot(grid.centers(0), field.values, lw=1.2)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    else:
        im = ax.imshow(
            field.values.T,
            origin="lower",
            extent=(grid.lo[0], grid.hi[0], grid.lo[1], grid.hi[1]),
            aspect="equal",
        )
        fig.colorbar(im, ax=ax, label="u")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_sweep_plots(rows, v0: float, out_dir, c0: float | None = None) -> None:
    """Concentration trend and level trend over the eps ladder."""
    good = [r for r in rows if r.converged]
    if not good:
        return
    eps = np.array([r.eps for r in good])
    gaps = np.array([r.V_eta - v0 for r in good])
    levels = np.array([r.c_eps for r in good])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(eps, np.maximum(gaps, 0.0), "o-", lw=1.2)
    ax.set_xscale("log")
    if np.all(gaps > 0):
        ax.set_yscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("V(eta) - V0")
    ax.set_title("Concentration of the maximizer")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(f"{out_dir}/concentration.png", dpi=130)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(eps, levels, "s-", lw=1.2, label="c_eps")
    if c0 is not None:
        ax.axhline(c0, color="k", ls="--", lw=1.0, label="constant-potential level")
    ax.set_xscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("level")
    ax.set_title("Ground-state levels")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(f"{out_dir}/levels.png", dpi=130)
    plt.close(fig)


def save_overlay_plot(field: ScalarField, exact: np.ndarray, path) -> None:
    """Computed vs closed-form profile (1-D line plot or 2-D slices)."""
    grid = field.grid
    fig, ax = plt.subplots(figsize=(6, 4))
    if grid.dim == 1:
        x = grid.centers(0)
        ax.plot(x, field.values, lw=1.4, label="computed")
        ax.plot(x, exact, "--", lw=1.2, label="closed form")
        ax.set_xlabel("x")
    else:
        mid = grid.n_cells[1] // 2
        x = grid.centers(0)
        ax.plot(x, field.values[:, mid], lw=1.4, label="computed (mid slice)")
        ax.plot(x, exact[:, mid], "--", lw=1.2, label="closed form (mid slice)")
        ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend()
    ax.set_title("Ground state vs closed form")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_histogram(values, path, xlabel: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    v = np.asarray(values, dtype=float)
    v = v[v > 0]
    if v.size:
        ax.hist(np.log10(v), bins=24, color="tab:blue", alpha=0.8)
    ax.set_xlabel(f"log10({xlabel})")
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_scatter_bound(logn, lhs, a_hat: float, b_hat: float, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(logn, lhs, ".", ms=4, alpha=0.7, label="corpus")
    xs = np.linspace(min(logn), max(logn), 200)
    ax.plot(xs, a_hat + b_hat * xs, "r-", lw=1.2, label="fitted bound")
    ax.set_xlabel("log ||u||")
    ax.set_ylabel("integral u^2 log u^2")
    ax.set_title("Empirical logarithmic bound")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
