"""Linear finite-element operators on triangle meshes.

Sign convention: the stiffness matrix ``S`` and the Laplacian ``L = D^T Lam D``
are positive semidefinite (positive diagonal, off-diagonals
``-(cot a + cot b) / 2``). Both wave and Poisson systems are then SPD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import SparseSymMatrix, assemble
from .mesh import FaceGeometry, TriangleMesh, compute_face_geometry


@dataclass(frozen=True)
class FemOperators:
    mass: SparseSymMatrix
    stiffness: SparseSymMatrix
    lumped_mass: np.ndarray

    @property
    def M(self):
        return self.mass

    @property
    def S(self):
        return self.stiffness

    def mass_matrix(self, lumped: bool = False) -> SparseSymMatrix:
        if lumped:
            return SparseSymMatrix(sp.diags(self.lumped_mass))
        return self.mass


@dataclass(frozen=True)
class DifferentialOperators:
    incidence: sp.csr_matrix      # D, |E| x |V|
    edge_weights: np.ndarray      # diagonal of Lambda
    laplacian: SparseSymMatrix    # L = D^T Lambda D

    @property
    def D(self):
        return self.incidence

    @property
    def Lambda(self) -> sp.dia_matrix:
        return sp.diags(self.edge_weights)

    @property
    def L(self):
        return self.laplacian


def mass_matrix(mesh: TriangleMesh, geometry: FaceGeometry | None = None) -> SparseSymMatrix:
    """Consistent (Galerkin) P1 mass matrix: area/6 on the diagonal, area/12 off it."""
    geometry = geometry or compute_face_geometry(mesh)
    f = mesh.faces
    area = geometry.area
    rows, cols, vals = [], [], []
    for a in range(3):
        for b in range(a + 1):
            rows.append(f[:, a])
            cols.append(f[:, b])
            vals.append(area / 6.0 if a == b else area / 12.0)
    return assemble(mesh.n_vertices, np.concatenate(rows), np.concatenate(cols),
                    np.concatenate(vals), lower_only=True)


def lumped_mass(mesh: TriangleMesh, geometry: FaceGeometry | None = None) -> np.ndarray:
    """Barycentric vertex areas (row sums of the consistent mass matrix)."""
    geometry = geometry or compute_face_geometry(mesh)
    out = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(out, mesh.faces[:, k], geometry.area / 3.0)
    return out


def stiffness_matrix(mesh: TriangleMesh, geometry: FaceGeometry | None = None) -> SparseSymMatrix:
    """Cotangent stiffness matrix, assembled per face from corner cotangents."""
    geometry = geometry or compute_face_geometry(mesh)
    f = mesh.faces
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = f[:, (k + 1) % 3], f[:, (k + 2) % 3]
        w = 0.5 * geometry.cot[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    return assemble(mesh.n_vertices, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def fem_operators(mesh: TriangleMesh, geometry: FaceGeometry | None = None) -> FemOperators:
    geometry = geometry or compute_face_geometry(mesh)
    return FemOperators(
        mass=mass_matrix(mesh, geometry),
        stiffness=stiffness_matrix(mesh, geometry),
        lumped_mass=lumped_mass(mesh, geometry),
    )


def edge_cotan_weights(mesh: TriangleMesh, geometry: FaceGeometry) -> np.ndarray:
    """(cot alpha + cot beta) / 2 per edge; boundary edges get the single cot / 2."""
    w = np.zeros(mesh.n_edges)
    for k in range(3):
        np.add.at(w, mesh.face_edges[:, k], 0.5 * geometry.cot[:, k])
    return w


def incidence_matrix(mesh: TriangleMesh) -> sp.csr_matrix:
    """Signed edge-vertex incidence: -1 at the start (smaller id), +1 at the end."""
    ne = mesh.n_edges
    rows = np.repeat(np.arange(ne), 2)
    cols = mesh.edges.ravel()
    vals = np.tile([-1.0, 1.0], ne)
    return sp.csr_matrix((vals, (rows, cols)), shape=(ne, mesh.n_vertices))


def differential_operators(mesh: TriangleMesh, geometry: FaceGeometry | None = None) -> DifferentialOperators:
    geometry = geometry or compute_face_geometry(mesh)
    D = incidence_matrix(mesh)
    lam = edge_cotan_weights(mesh, geometry)
    L = SparseSymMatrix(D.T @ sp.diags(lam) @ D)
    return DifferentialOperators(incidence=D, edge_weights=lam, laplacian=L)
