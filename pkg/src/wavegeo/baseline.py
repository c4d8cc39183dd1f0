"""Reference distances (heat method, graph shortest paths, analytic) and error metrics."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .errors import DisconnectedMeshError, NotASphereError, SourceMismatchError
from .fem import fem_operators
from .geodesic import DistanceField, GradientIntegrator, _check_mesh
from .linalg import factorize
from .mesh import TriangleMesh, compute_face_geometry


class HeatGeodesics:
    """Heat-method distances sharing the gradient/Poisson stage with the wave method.

    ``(M + t S) u = e_source`` with ``t = t_coef * (mean edge length)^2``;
    the normalised gradient of ``-u`` is then integrated.
    """

    def __init__(self, mesh: TriangleMesh, t_coef: float = 1.0, divergence: str = "edge",
                 lumped_mass: bool = False):
        if not t_coef > 0:
            raise ValueError("t_coef must be positive")
        _check_mesh(mesh)
        self.mesh = mesh
        self.divergence = divergence
        t0 = time.perf_counter()
        geometry = compute_face_geometry(mesh)
        ops = fem_operators(mesh, geometry)
        self.t = t_coef * float(mesh.edge_lengths.mean()) ** 2
        M = ops.mass_matrix(lumped=lumped_mass)
        t1 = time.perf_counter()
        self.heat_factor = factorize(M + ops.stiffness * self.t)
        self.integrator = GradientIntegrator(mesh, geometry)
        t2 = time.perf_counter()
        self.timings = {"assembly": t1 - t0, "factorization": t2 - t1}

    def heat(self, source: int) -> np.ndarray:
        rhs = np.zeros(self.mesh.n_vertices)
        rhs[self.mesh.check_vertex(source)] = 1.0
        return self.heat_factor.solve(rhs)

    def __call__(self, source: int) -> DistanceField:
        t0 = time.perf_counter()
        u = self.heat(source)
        t1 = time.perf_counter()
        w = self.integrator(-u, self.divergence)
        t2 = time.perf_counter()
        diag = {
            "method": "heat",
            "divergence": self.divergence,
            "t": self.t,
            "timings": {**self.timings, "heat": t1 - t0, "poisson": t2 - t1},
        }
        return DistanceField(w, int(source), diag)


def heat_geodesics(mesh: TriangleMesh, source: int, t_coef: float = 1.0,
                   divergence: str = "edge") -> DistanceField:
    return HeatGeodesics(mesh, t_coef, divergence)(source)


def _steiner_graph(mesh: TriangleMesh, k: int):
    """Vertices plus ``k`` evenly spaced points per edge, fully connected within each face."""
    nv = mesh.n_vertices
    t = np.arange(1, k + 1) / (k + 1)
    e = mesh.edges
    v = mesh.vertices
    pts = (v[e[:, 0], None, :] * (1 - t)[None, :, None] + v[e[:, 1], None, :] * t[None, :, None])
    nodes = np.concatenate([v, pts.reshape(-1, 3)])
    # boundary ring of each face: corner, points on the edge to the next corner, ...
    ring = []
    f = mesh.faces
    for k_corner in range(3):
        a, b = f[:, k_corner], f[:, (k_corner + 1) % 3]
        eid = mesh.face_edges[:, (k_corner + 2) % 3]
        ids = nv + eid[:, None] * k + np.arange(k)[None, :]
        ids = np.where((a < b)[:, None], ids, ids[:, ::-1])
        ring += [a[:, None], ids]
    ring = np.concatenate(ring, axis=1)
    ii, jj = np.triu_indices(ring.shape[1], 1)
    i = ring[:, ii].ravel()
    j = ring[:, jj].ravel()
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    pairs = np.unique(lo * len(nodes) + hi)
    lo, hi = pairs // len(nodes), pairs % len(nodes)
    w = np.linalg.norm(nodes[lo] - nodes[hi], axis=1)
    return sp.csr_matrix((w, (lo, hi)), shape=(len(nodes), len(nodes)))


def dijkstra_distances(mesh: TriangleMesh, source: int, steiner_points: int = 0,
                       allow_disconnected: bool = False) -> DistanceField:
    """Shortest paths on the mesh edge graph (an upper bound on geodesic distance).

    ``steiner_points > 0`` adds that many points per edge and connects all
    boundary points of each face, which converges to the polyhedral
    geodesic distance as the count grows.
    """
    source = mesh.check_vertex(source)
    if steiner_points > 0:
        graph = _steiner_graph(mesh, steiner_points)
    else:
        e = mesh.edges
        graph = sp.csr_matrix((mesh.edge_lengths, (e[:, 0], e[:, 1])),
                              shape=(mesh.n_vertices, mesh.n_vertices))
    d = dijkstra(graph, directed=False, indices=source)[: mesh.n_vertices]
    unreachable = ~np.isfinite(d)
    if unreachable.any() and not allow_disconnected:
        raise DisconnectedMeshError(f"{int(unreachable.sum())} vertices unreachable from {source}")
    method = "steiner" if steiner_points else "dijkstra"
    return DistanceField(d, source, {"method": method, "steiner_points": steiner_points,
                                     "unreachable": int(unreachable.sum())})


def analytic_sphere_distances(mesh: TriangleMesh, source: int, rtol: float = 1e-6) -> DistanceField:
    """Great-circle distance about the vertex centroid."""
    source = mesh.check_vertex(source)
    c = mesh.vertices.mean(0)
    p = mesh.vertices - c
    r = np.linalg.norm(p, axis=1)
    R = float(r.mean())
    if np.max(np.abs(r - R)) > rtol * R:
        raise NotASphereError(f"radius varies by {np.max(np.abs(r - R)) / R:.3g} (relative)")
    u = p / r[:, None]
    cosang = np.clip(u @ u[source], -1.0, 1.0)
    d = R * np.arccos(cosang)
    d[source] = 0.0
    return DistanceField(d, source, {"method": "analytic-sphere", "radius": R})


def analytic_plane_distances(mesh: TriangleMesh, source: int, atol: float = 1e-9) -> DistanceField:
    """Euclidean distance for a planar mesh whose domain is convex."""
    source = mesh.check_vertex(source)
    p = mesh.vertices - mesh.vertices.mean(0)
    _, s, vt = np.linalg.svd(p, full_matrices=False)
    if s[-1] > atol * max(mesh.bbox_diagonal, 1.0) * np.sqrt(mesh.n_vertices):
        raise NotASphereError("mesh is not planar")
    d = np.linalg.norm(mesh.vertices - mesh.vertices[source], axis=1)
    return DistanceField(d, source, {"method": "analytic-plane"})


def is_sphere(mesh: TriangleMesh, rtol: float = 1e-6) -> bool:
    r = np.linalg.norm(mesh.vertices - mesh.vertices.mean(0), axis=1)
    return bool(np.max(np.abs(r - r.mean())) <= rtol * r.mean())


def is_plane(mesh: TriangleMesh, atol: float = 1e-9) -> bool:
    try:
        analytic_plane_distances(mesh, 0, atol)
    except NotASphereError:
        return False
    return True


@dataclass
class ErrorReport:
    mean_raw: float
    mean_relative: float
    max_raw: float
    per_vertex_raw: np.ndarray
    per_vertex_relative: np.ndarray
    runtime_seconds: float = float("nan")

    def summary(self) -> dict:
        return {
            "mean_raw": self.mean_raw,
            "mean_relative": self.mean_relative,
            "max_raw": self.max_raw,
            "runtime_seconds": self.runtime_seconds,
        }

    def to_json(self, path=None, per_vertex: bool = False) -> str:
        data = self.summary()
        if per_vertex:
            data["per_vertex_raw"] = self.per_vertex_raw.tolist()
            data["per_vertex_relative"] = self.per_vertex_relative.tolist()
        text = json.dumps(data, indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex_id", "raw_error", "relative_error"])
            for i, (r, q) in enumerate(zip(self.per_vertex_raw, self.per_vertex_relative)):
                w.writerow([i, f"{r:.9g}", f"{q:.9g}"])


def error_report(approx, exact, runtime_seconds: float = float("nan")) -> ErrorReport:
    """Per-vertex absolute and relative error; the source is left out of the relative mean.

    ``relative`` is reported as 0 at the source.
    """
    a = np.asarray(approx, dtype=np.float64)
    e = np.asarray(exact, dtype=np.float64)
    if a.shape != e.shape:
        raise SourceMismatchError(f"fields have shapes {a.shape} and {e.shape}")
    src_a = getattr(approx, "source", None)
    src_e = getattr(exact, "source", None)
    if src_a is not None and src_e is not None and src_a >= 0 and src_e >= 0 and src_a != src_e:
        raise SourceMismatchError(f"sources differ: {src_a} vs {src_e}")
    raw = np.abs(a - e)
    positive = e > 0
    rel = np.zeros_like(raw)
    rel[positive] = raw[positive] / e[positive]
    mean_rel = float(rel[positive].mean()) if positive.any() else 0.0
    return ErrorReport(float(raw.mean()), mean_rel, float(raw.max(initial=0.0)), raw, rel,
                       runtime_seconds)
