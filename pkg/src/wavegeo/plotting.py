"""Figure output for the CLI report paths (files only, no display)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from mpl_toolkits.mplot3d.art3d import Poly3DCollection  # noqa: E402

from .mesh import TriangleMesh  # noqa: E402

STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_calibration(runs: dict, path):
    """``runs`` maps delta -> dict(heights, epsilon, exponent).

    Left: max height and threshold against iteration (log-log).
    Right: fitted exponent against delta.
    """
    with plt.rc_context(STYLE):
        fig, (ax, bx) = plt.subplots(1, 2, figsize=(9, 3.8))
        for delta, run in sorted(runs.items()):
            i = np.arange(1, len(run["heights"]) + 1)
            line, = ax.loglog(i, run["heights"], label=f"h(i), δ={delta:g}")
            ax.loglog(i, run["epsilon"], "--", color=line.get_color(), lw=1)
        ax.set_xlabel("iteration i")
        ax.set_ylabel("max height / threshold")
        ax.legend(fontsize=8)
        deltas = sorted(runs)
        bx.plot(deltas, [runs[d]["exponent"] for d in deltas], "o-")
        bx.set_xlabel("δ")
        bx.set_ylabel("fitted exponent a")
        _save(fig, path)


def plot_comparison(rows: list[dict], scatter: dict, path):
    """Error summary for a compare run.

    ``scatter`` maps a label to ``(exact, approx)`` arrays for the left
    panel; the right panel plots mean relative error over whichever sweep
    variable (delta or noise) actually varies.
    """
    with plt.rc_context(STYLE):
        fig, (ax, bx) = plt.subplots(1, 2, figsize=(9, 3.8))
        for label, (exact, approx) in scatter.items():
            ax.plot(exact, approx, ".", ms=1.5, alpha=0.5, label=label)
        hi = max((float(np.max(e)) for e, _ in scatter.values()), default=1.0)
        ax.plot([0, hi], [0, hi], "k-", lw=0.8)
        ax.set_xlabel("reference distance")
        ax.set_ylabel("computed distance")
        ax.legend(fontsize=8, markerscale=6)
        key = "delta" if len({r["delta"] for r in rows}) > 1 else "noise"
        for k, method in enumerate(dict.fromkeys(r["method"] for r in rows)):
            sel = sorted((r for r in rows if r["method"] == method), key=lambda r: r[key])
            x = np.array([r[key] for r in sel], dtype=float)
            y = [r["mean_relative"] for r in sel]
            if np.isfinite(x).any():
                bx.plot(x, y, "o-", color=f"C{k}", label=method)
            else:  # method without a time step: one reference level
                bx.axhline(y[0], ls="--", lw=1, color=f"C{k}", label=method)
        bx.set_xlabel("δ" if key == "delta" else "noise scale s")
        bx.set_ylabel("mean relative error")
        bx.legend(fontsize=8)
        _save(fig, path)


def plot_field(mesh: TriangleMesh, values, path, cmap: str = "viridis"):
    """Flat-shaded 3-D view of a per-vertex scalar (face colour = corner mean)."""
    values = np.asarray(values, dtype=np.float64)
    v = mesh.vertices
    face_val = values[mesh.faces].mean(axis=1)
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(5, 4.5))
        ax = fig.add_subplot(projection="3d")
        norm = plt.Normalize(float(values.min()), float(values.max()))
        coll = Poly3DCollection(v[mesh.faces], facecolors=plt.get_cmap(cmap)(norm(face_val)),
                                edgecolor="none")
        ax.add_collection3d(coll)
        lo, hi = v.min(axis=0), v.max(axis=0)
        ax.set_xlim(lo[0], hi[0])
        ax.set_ylim(lo[1], hi[1])
        ax.set_zlim(lo[2], hi[2])
        ax.set_box_aspect(np.maximum(hi - lo, 1e-9 * max(mesh.bbox_diagonal, 1.0)))
        ax.set_axis_off()
        fig.colorbar(plt.cm.ScalarMappable(norm=norm, cmap=cmap), ax=ax, shrink=0.7, label="distance")
        _save(fig, path)
