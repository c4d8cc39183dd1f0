"""Mesh perturbations for robustness experiments: noise, umbrella smoothing, sharpening.

All operations return a new mesh with the same connectivity; only vertex
positions move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import TriangleMesh, median_incident_edge_lengths


@dataclass(frozen=True)
class PerturbConfig:
    """Perturbation parameters; zero means "skip" for every field."""

    noise_scale: float = 0.0
    smoothing_iterations: int = 0
    sharpen_scale: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")
        if self.smoothing_iterations < 0 or int(self.smoothing_iterations) != self.smoothing_iterations:
            raise ValueError("smoothing_iterations must be a nonnegative integer")
        if self.sharpen_scale < 0:
            raise ValueError("sharpen_scale must be nonnegative")

    def apply(self, mesh: TriangleMesh) -> TriangleMesh:
        """Noise, then smoothing, then sharpening."""
        if self.noise_scale > 0:
            mesh = add_noise(mesh, self.noise_scale, self.rng_seed)
        if self.smoothing_iterations > 0:
            mesh = umbrella_smooth(mesh, self.smoothing_iterations)
        if self.sharpen_scale > 0:
            mesh = sharpen(mesh, self.sharpen_scale)
        return mesh


def _adjacency(mesh: TriangleMesh) -> sp.csr_matrix:
    e = mesh.edges
    n = mesh.n_vertices
    ones = np.ones(len(e))
    return sp.csr_matrix((np.concatenate([ones, ones]),
                          (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
                         shape=(n, n))


def noise_displacements(mesh: TriangleMesh, s: float, seed: int = 0) -> np.ndarray:
    """Per-vertex offsets: uniform random direction, magnitude uniform in ``[0, s * l_v]``."""
    if s < 0:
        raise ValueError("noise scale must be nonnegative")
    rng = np.random.default_rng(seed)
    n = mesh.n_vertices
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    magnitude = rng.uniform(0.0, 1.0, size=n) * s * median_incident_edge_lengths(mesh)
    return direction * magnitude[:, None]


def add_noise(mesh: TriangleMesh, s: float, seed: int = 0) -> TriangleMesh:
    if s == 0:
        return mesh.with_vertices(mesh.vertices.copy())
    return mesh.with_vertices(mesh.vertices + noise_displacements(mesh, s, seed))


def umbrella_smooth(mesh: TriangleMesh, m: int) -> TriangleMesh:
    """``m`` Jacobi sweeps moving each interior vertex to its 1-ring centroid."""
    if m < 0:
        raise ValueError("iteration count must be nonnegative")
    A = _adjacency(mesh)
    deg = np.asarray(A.sum(axis=1)).ravel()
    avg = sp.diags(1.0 / np.maximum(deg, 1.0)) @ A
    pinned = mesh.boundary_vertices
    x = mesh.vertices.copy()
    for _ in range(int(m)):
        new = avg @ x
        new[pinned] = x[pinned]
        x = new
    return mesh.with_vertices(x)


def gaussian_smooth(mesh: TriangleMesh, s: float) -> np.ndarray:
    """One Gaussian-weighted average over each vertex's 1-ring and itself, ``sigma = s * l_v``."""
    if not s > 0:
        raise ValueError("sharpen scale must be positive")
    sigma = s * median_incident_edge_lengths(mesh)
    A = _adjacency(mesh).tocoo()
    x = mesh.vertices
    d2 = np.sum((x[A.row] - x[A.col]) ** 2, axis=1)
    w = np.exp(-d2 / (2.0 * sigma[A.row] ** 2))
    n = mesh.n_vertices
    W = sp.csr_matrix((w, (A.row, A.col)), shape=(n, n)) + sp.identity(n, format="csr")
    total = np.asarray(W.sum(axis=1)).ravel()
    return (W @ x) / total[:, None]


def sharpen(mesh: TriangleMesh, s: float) -> TriangleMesh:
    """Unsharp mask: ``x + 2 (x - smoothed)``."""
    x = mesh.vertices
    return mesh.with_vertices(x + 2.0 * (x - gaussian_smooth(mesh, s)))
