"""Procedural test meshes: icosphere, torus, planar grid, bumpy sphere."""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh

_PHI = (1.0 + 5.0 ** 0.5) / 2.0
_ICO_VERTICES = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
])
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def icosphere(subdivisions: int = 4, radius: float = 1.0) -> TriangleMesh:
    """Loop-style midpoint subdivision of the icosahedron, projected to the sphere.

    ``subdivisions=4`` gives 2562 vertices / 5120 faces.
    """
    verts = _ICO_VERTICES / np.linalg.norm(_ICO_VERTICES, axis=1, keepdims=True)
    faces = _ICO_FACES.copy()
    for _ in range(subdivisions):
        nv = len(verts)
        e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        e.sort(axis=1)
        uniq, inv = np.unique(e[:, 0] * nv + e[:, 1], return_inverse=True)
        a, b = uniq // nv, uniq % nv
        mid = verts[a] + verts[b]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        m = nv + inv.reshape(3, -1).T  # midpoints of (v0v1, v1v2, v2v0)
        v0, v1, v2 = faces.T
        faces = np.concatenate([
            np.stack([v0, m[:, 0], m[:, 2]], 1),
            np.stack([v1, m[:, 1], m[:, 0]], 1),
            np.stack([v2, m[:, 2], m[:, 1]], 1),
            m,
        ])
        verts = np.concatenate([verts, mid])
    return TriangleMesh(radius * verts, faces)


def torus(major_radius: float = 1.0, minor_radius: float = 0.4,
          n_major: int = 64, n_minor: int = 24) -> TriangleMesh:
    """Regular torus in the xy-plane; vertex 0 sits on the outer equator."""
    u = 2 * np.pi * np.arange(n_major) / n_major
    v = 2 * np.pi * np.arange(n_minor) / n_minor
    U, W = np.meshgrid(u, v, indexing="ij")
    ring = major_radius + minor_radius * np.cos(W)
    verts = np.stack([ring * np.cos(U), ring * np.sin(U), minor_radius * np.sin(W)], -1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    i1, j1 = (i + 1) % n_major, (j + 1) % n_minor
    a = (i * n_minor + j).ravel()
    b = (i1 * n_minor + j).ravel()
    c = (i1 * n_minor + j1).ravel()
    d = (i * n_minor + j1).ravel()
    faces = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return TriangleMesh(verts, faces)


def grid(n: int = 50, spacing: float = 1.0, pattern: str = "alternating") -> TriangleMesh:
    """Flat ``n x n`` vertex grid in the z=0 plane, vertex 0 at the origin corner.

    ``pattern="diagonal"`` splits every cell along the same diagonal, which is
    mirror-symmetric about x=y; ``"alternating"`` flips the diagonal in a
    checkerboard pattern.
    """
    xs = spacing * np.arange(n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), np.zeros(n * n)], 1)
    i, j = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    a = i * n + j
    b = (i + 1) * n + j
    c = (i + 1) * n + j + 1
    d = i * n + j + 1
    if pattern == "diagonal":
        flip = np.zeros(len(a), dtype=bool)
    elif pattern == "alternating":
        flip = (i + j) % 2 == 1
    else:
        raise ValueError(f"unknown grid pattern {pattern!r}")
    t1 = np.where(flip[:, None], np.stack([a, b, d], 1), np.stack([a, b, c], 1))
    t2 = np.where(flip[:, None], np.stack([b, c, d], 1), np.stack([a, c, d], 1))
    return TriangleMesh(verts, np.concatenate([t1, t2]))


def bumpy_sphere(subdivisions: int = 5, amplitude: float = 0.15,
                 jitter: float = 0.2, seed: int = 0) -> TriangleMesh:
    """Irregular closed genus-0 surface standing in for scanned models.

    The radius varies smoothly with direction and vertices are jittered
    tangentially by ``jitter`` times the local edge scale, so the
    triangulation is non-uniform and not symmetric.
    """
    base = icosphere(subdivisions)
    rng = np.random.default_rng(seed)
    p = base.vertices
    h = np.sqrt(4 * np.pi / len(p))
    noise = rng.normal(size=p.shape)
    noise -= np.einsum("ij,ij->i", noise, p)[:, None] * p
    q = p + jitter * h * noise
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    x, y, z = q.T
    r = 1.0 + amplitude * (np.sin(3 * x) * np.cos(2 * y) + 0.5 * np.sin(4 * z + 1.0))
    return TriangleMesh(q * r[:, None], base.faces)
