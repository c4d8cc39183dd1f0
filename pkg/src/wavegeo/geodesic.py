"""From a pseudo-distance to geodesic distance: normalise its gradient and integrate.

Two divergence backends feed the same pinned Poisson solve:

* ``"edge"``: per-edge mean of the two incident face gradients projected on
  the edge vector, then ``L w = D^T Lam G~``.
* ``"face"``: weak divergence ``-sum_f <grad h_i, G> |f|`` of the per-face
  field, then ``L w = -div``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, IsolatedVertexError, SingularSystemError
from .fem import DifferentialOperators, differential_operators, fem_operators
from .linalg import CholeskyFactor, SparseSymMatrix, factorize
from .mesh import FaceGeometry, TriangleMesh, compute_face_geometry
from .wave import WaveConfig, calibrate_epsilon, propagate, wave_system

log = logging.getLogger(__name__)

BACKENDS = ("edge", "face")


@dataclass(frozen=True)
class FaceGradientField:
    """Per-face gradient ``w = p (v1 - v0) + q (v2 - v0)``.

    ``raw`` is the unnormalised gradient, ``vectors`` the field actually
    used downstream (unit length, or zero on faces flagged in ``zero``).
    """

    coeffs: np.ndarray
    raw: np.ndarray
    vectors: np.ndarray
    zero: np.ndarray
    gram: np.ndarray
    normalized: bool = True


@dataclass(frozen=True)
class EdgeDivergenceField:
    """Per-edge ``1/2 <v_end - v_start, w1 + w2>`` (one-sided on boundary edges)."""

    values: np.ndarray
    edges: np.ndarray

    def oriented(self, e: int, i: int, j: int) -> float:
        a, b = self.edges[e]
        if (i, j) == (a, b):
            return float(self.values[e])
        if (i, j) == (b, a):
            return -float(self.values[e])
        raise ValueError(f"({i}, {j}) is not edge {e}")


@dataclass
class DistanceField:
    values: np.ndarray
    source: int
    diagnostics: dict = field(default_factory=dict)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return len(self.values)


def face_gradients(mesh: TriangleMesh, geometry: FaceGeometry, d, normalize: bool = True) -> FaceGradientField:
    """Solve the 2x2 Gram system per face for the gradient of vertex data ``d``."""
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (mesh.n_vertices,):
        raise DimensionMismatchError(f"expected {mesh.n_vertices} vertex values, got {d.shape}")
    f = mesh.faces
    K = geometry.gram
    det = K[:, 0, 0] * K[:, 1, 1] - K[:, 0, 1] ** 2
    scale = K[:, 0, 0] * K[:, 1, 1]
    if np.any(det <= 1e-14 * scale):
        raise SingularSystemError(f"Gram matrix singular on face {int(np.argmin(det / scale))}")
    r1 = d[f[:, 1]] - d[f[:, 0]]
    r2 = d[f[:, 2]] - d[f[:, 0]]
    p = (K[:, 1, 1] * r1 - K[:, 0, 1] * r2) / det
    q = (K[:, 0, 0] * r2 - K[:, 0, 1] * r1) / det
    raw = p[:, None] * geometry.e1 + q[:, None] * geometry.e2
    norm = np.linalg.norm(raw, axis=1)
    # flat relative to the face's own values, so tiny-but-varying data survives
    local = np.abs(d[f]).max(axis=1) / np.sqrt(K[:, 0, 0])
    zero = norm <= 1e-12 * local
    if normalize:
        vectors = np.where(zero[:, None], 0.0, raw / np.where(zero, 1.0, norm)[:, None])
    else:
        vectors = raw
    return FaceGradientField(np.stack([p, q], 1), raw, vectors, zero, K, normalize)


def edge_divergence(mesh: TriangleMesh, grads: FaceGradientField) -> EdgeDivergenceField:
    v = mesh.vertices
    e = mesh.edges
    edge_vec = v[e[:, 1]] - v[e[:, 0]]
    total = np.zeros((mesh.n_edges, 3))
    count = np.zeros(mesh.n_edges)
    for k in range(3):
        np.add.at(total, mesh.face_edges[:, k], grads.vectors)
        np.add.at(count, mesh.face_edges[:, k], 1.0)
    mean = total / count[:, None]
    return EdgeDivergenceField(np.einsum("ij,ij->i", edge_vec, mean), e)


def face_divergence(mesh: TriangleMesh, geometry: FaceGeometry, grads: FaceGradientField) -> np.ndarray:
    """Weak divergence per vertex; equals ``-S d`` when the field is ``grad d``."""
    gh = geometry.hat_gradients(mesh.vertices, mesh.faces)
    contrib = np.einsum("fkc,fc->fk", gh, grads.vectors) * geometry.area[:, None]
    out = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(out, mesh.faces[:, k], -contrib[:, k])
    return out


class PoissonSolver:
    """Pinned, prefactored solve of ``L w = rhs`` followed by a min-shift."""

    def __init__(self, laplacian: SparseSymMatrix, pin: int = 0):
        n = laplacian.n
        if not 0 <= pin < n:
            raise DimensionMismatchError(f"pin vertex {pin} outside [0, {n})")
        self.n = n
        self.pin = pin
        self.keep = np.delete(np.arange(n), pin)
        self.laplacian = laplacian
        self.factor: CholeskyFactor = factorize(laplacian.submatrix(self.keep))

    def solve(self, rhs, shift: bool = True) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=np.float64)
        if rhs.shape != (self.n,):
            raise DimensionMismatchError(f"rhs has shape {rhs.shape}, expected ({self.n},)")
        total = rhs.sum()
        if abs(total) > 1e-8 * max(np.linalg.norm(rhs), np.finfo(float).tiny):
            log.debug("projecting Poisson rhs to zero sum (sum=%.3g)", total)
        rhs = rhs - total / self.n
        w = np.zeros(self.n)
        w[self.keep] = self.factor.solve(rhs[self.keep])
        return w - w.min() if shift else w


def solve_poisson(laplacian: SparseSymMatrix, rhs, pin: int = 0, source: int = -1) -> DistanceField:
    return DistanceField(PoissonSolver(laplacian, pin).solve(rhs), source)


class GradientIntegrator:
    """Shared stage: vertex scalar -> normalised face gradient -> distance.

    Everything that depends only on the mesh (geometry, operators and the
    Poisson factor) is built once.
    """

    def __init__(self, mesh: TriangleMesh, geometry: FaceGeometry | None = None,
                 diff_ops: DifferentialOperators | None = None, pin: int = 0):
        self.mesh = mesh
        self.geometry = geometry or compute_face_geometry(mesh)
        self.diff_ops = diff_ops or differential_operators(mesh, self.geometry)
        self.poisson = PoissonSolver(self.diff_ops.laplacian, pin)

    def rhs(self, d, divergence: str = "edge") -> np.ndarray:
        grads = face_gradients(self.mesh, self.geometry, d)
        if divergence == "edge":
            g = edge_divergence(self.mesh, grads)
            return self.diff_ops.D.T @ (self.diff_ops.edge_weights * g.values)
        if divergence == "face":
            return -face_divergence(self.mesh, self.geometry, grads)
        raise ValueError(f"unknown divergence backend {divergence!r}; choose from {BACKENDS}")

    def __call__(self, d, divergence: str = "edge") -> np.ndarray:
        return self.poisson.solve(self.rhs(d, divergence))


def _check_mesh(mesh: TriangleMesh):
    if mesh.isolated_vertices.size:
        raise IsolatedVertexError(f"vertex {mesh.isolated_vertices[0]} belongs to no face")


class WaveGeodesics:
    """Wave-method distances on one mesh; factors are reused across sources."""

    def __init__(self, mesh: TriangleMesh, config: WaveConfig | None = None,
                 divergence: str = "edge"):
        if divergence not in BACKENDS:
            raise ValueError(f"unknown divergence backend {divergence!r}; choose from {BACKENDS}")
        _check_mesh(mesh)
        self.mesh = mesh
        self.config = config or WaveConfig()
        self.divergence = divergence
        self.timings = {}
        t0 = time.perf_counter()
        geometry = compute_face_geometry(mesh)
        self.ops = fem_operators(mesh, geometry)
        diff_ops = differential_operators(mesh, geometry)
        t1 = time.perf_counter()
        self.wave_factor = wave_system(self.ops, self.config)
        self.integrator = GradientIntegrator(mesh, geometry, diff_ops)
        t2 = time.perf_counter()
        self.timings = {"assembly": t1 - t0, "factorization": t2 - t1}

    def pseudodistance(self, source: int, strict: bool = False, trace: list | None = None):
        schedule = calibrate_epsilon(self.mesh, source, self.config, self.ops, self.wave_factor)
        return propagate(self.mesh, self.ops, source, self.config, schedule,
                         self.wave_factor, trace=trace, strict=strict), schedule

    def __call__(self, source: int, strict: bool = False, trace: list | None = None) -> DistanceField:
        source = self.mesh.check_vertex(source)
        t0 = time.perf_counter()
        pseudo, schedule = self.pseudodistance(source, strict, trace)
        t1 = time.perf_counter()
        w = self.integrator(pseudo.time, self.divergence)
        t2 = time.perf_counter()
        diag = dict(pseudo.diagnostics)
        diag.update(
            method="wave",
            divergence=self.divergence,
            delta=self.config.delta,
            mu=self.config.mu,
            lumped_mass=self.config.lumped_mass,
            timings={**self.timings, "propagation": t1 - t0, "poisson": t2 - t1},
        )
        return DistanceField(w, source, diag)


def wave_geodesics(mesh: TriangleMesh, source: int, config: WaveConfig | None = None,
                   divergence: str = "edge", strict: bool = False) -> DistanceField:
    return WaveGeodesics(mesh, config, divergence)(source, strict=strict)
