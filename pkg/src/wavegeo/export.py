"""Plain-file outputs: per-vertex distance CSV, isocontours, diagnostics JSON."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .mesh import TriangleMesh


def write_distances_csv(values, path, digits: int = 12):
    """``vertex_id,distance`` rows, one per vertex, in vertex order."""
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex_id", "distance"])
        for i, d in enumerate(values):
            w.writerow([i, format(float(d), f".{digits}g")])


def read_distances_csv(path, n_vertices: int | None = None) -> np.ndarray:
    """Read a ``vertex_id,distance`` file (header optional, ids in any order)."""
    ids, vals = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                ids.append(int(row[0]))
                vals.append(float(row[1]))
            except (ValueError, IndexError):
                if lineno == 1:
                    continue  # header
                raise ParseError(f"{path}:{lineno}: expected 'vertex_id,distance'") from None
    ids = np.asarray(ids, dtype=np.int64)
    n = n_vertices if n_vertices is not None else (int(ids.max()) + 1 if ids.size else 0)
    if ids.size != n or (ids.size and (ids.min() < 0 or ids.max() >= n or len(np.unique(ids)) != n)):
        raise ParseError(f"{path}: expected one row per vertex id in [0, {n})")
    out = np.empty(n)
    out[ids] = vals
    return out


def isocontours(mesh: TriangleMesh, values, levels) -> list[np.ndarray]:
    """Piecewise-linear level sets; one ``(k, 2, 3)`` segment array per level.

    A face contributes a segment when the level separates its corner values.
    """
    values = np.asarray(values, dtype=np.float64)
    v = mesh.vertices
    f = mesh.faces
    phi_all = values[f]
    out = []
    for level in np.atleast_1d(levels):
        phi = phi_all - level
        above = phi > 0
        n_above = above.sum(axis=1)
        faces = np.flatnonzero((n_above == 1) | (n_above == 2))
        segs = np.empty((len(faces), 2, 3))
        for row, fi in enumerate(faces):
            pts = []
            for k in range(3):
                a, b = k, (k + 1) % 3
                if above[fi, a] != above[fi, b]:
                    t = phi[fi, a] / (phi[fi, a] - phi[fi, b])
                    pts.append(v[f[fi, a]] + t * (v[f[fi, b]] - v[f[fi, a]]))
            segs[row] = pts
        out.append(segs)
    return out


def contour_levels(values, count: int = 10) -> np.ndarray:
    """``count`` evenly spaced interior levels of a field."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    return np.linspace(lo, hi, count + 2)[1:-1]


def write_contours_obj(segments: list[np.ndarray], path, digits: int = 9):
    """Write segments as an OBJ polyline file (``v`` and ``l`` records), one group per level."""
    lines = []
    count = 0
    for k, segs in enumerate(segments):
        lines.append(f"g level_{k}")
        for a, b in segs:
            lines.append("v " + " ".join(format(x, f".{digits}g") for x in a))
            lines.append("v " + " ".join(format(x, f".{digits}g") for x in b))
            lines.append(f"l {count + 1} {count + 2}")
            count += 2
    Path(path).write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(data: dict, path):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
