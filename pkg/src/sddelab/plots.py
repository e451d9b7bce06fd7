"""Figure rendering for the report paths.

Each CSV the command line emits has a matching PNG so a run's directory
is self-describing.  Rendering is headless (Agg) and pure output; the
delimited files remain the canonical data.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def convergence_figure(table, reports, path: str):
    """Log-log terminal errors per moment order with the fitted rate lines."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for report in reports:
        rows = table.for_q(report.q)
        deltas = np.array([r.delta for r in rows])
        errs = np.array([r.err_q for r in rows])
        ses = np.array([r.std_err for r in rows])
        label = f"q={report.q:g}"
        if not report.exact:
            label += f" (slope {report.slope:.3f})"
        ax.errorbar(deltas, errs, yerr=2 * ses, marker="o", ls="none",
                    capsize=3, label=label)
        if not report.exact:
            grid = np.array([deltas.min(), deltas.max()])
            ax.plot(grid, np.exp(report.intercept) * grid ** report.slope,
                    ls="--", lw=1)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("step size")
    ax.set_ylabel("terminal error moment")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def gap_figure(gap_table, path: str):
    """Interpolation gap moment over time; zero at every grid point."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    t, v, se = gap_table.times, gap_table.gap_p, gap_table.std_errs
    ax.plot(t, v, lw=0.8)
    ax.fill_between(t, np.maximum(v - 2 * se, 0.0), v + 2 * se, alpha=0.25)
    ax.set_xlabel("t")
    ax.set_ylabel(f"mean gap^{gap_table.p:g}")
    ax.set_title(f"M={gap_table.steps_per_delay}, "
                 f"fine={gap_table.lattice_resolution}, max={gap_table.max_gap:.3g}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def moments_figure(result, path: str):
    """The p-th moment curve over grid times with its sup marked."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    t, v, se = result.times, result.moments, result.std_errs
    ax.plot(t, v, lw=1.2)
    ax.fill_between(t, v - 2 * se, v + 2 * se, alpha=0.25)
    ax.axhline(result.sup_moment, color="tab:red", ls=":", lw=1,
               label=f"sup={result.sup_moment:.4g} at t={result.argmax_time:g}")
    ax.set_xlabel("t")
    ax.set_ylabel(f"mean |X|^{result.p:g}")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def trajectory_figure(traj, path: str):
    """Step plot of one path, history segment included."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    t = traj.times()
    for j in range(traj.grid_values.shape[1]):
        ax.step(t, traj.grid_values[:, j], where="post", lw=0.9,
                label=f"component {j + 1}" if traj.grid_values.shape[1] > 1 else None)
    ax.axvline(0.0, color="gray", lw=0.8, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("state")
    if traj.grid_values.shape[1] > 1:
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
