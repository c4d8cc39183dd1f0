"""Indexed triangle meshes: validation, per-face geometry and OFF/OBJ/PLY I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateFaceError,
    InvalidVertexError,
    IsolatedVertexError,
    MeshError,
    NonManifoldError,
    NonTriangleError,
    ParseError,
)

# Relative to the squared bounding-box diagonal.
DEGENERACY_THRESHOLD = 1e-12


class TriangleMesh:
    """Manifold (possibly open) triangle mesh with derived connectivity.

    ``vertices`` is ``(V, 3)`` float, ``faces`` is ``(F, 3)`` int with
    counterclockwise corners.  Edges are stored once, oriented from the
    smaller to the larger vertex index.  Arrays are read-only after
    construction.
    """

    def __init__(self, vertices, faces, validate: bool = True):
        v = np.array(vertices, dtype=np.float64)
        f = np.array(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (V, 3), got {v.shape}")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise NonTriangleError(f"faces must have shape (F, 3), got {f.shape}")
        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f
        self._build_edges()
        if validate:
            self.validate()

    def _build_edges(self):
        f = self.faces
        nv = len(self.vertices)
        if f.size and (f.min() < 0 or f.max() >= nv):
            raise InvalidVertexError("face references a vertex index out of range")
        # local edge k is opposite corner k
        a = np.stack([f[:, 1], f[:, 2], f[:, 0]], axis=1).ravel()
        b = np.stack([f[:, 2], f[:, 0], f[:, 1]], axis=1).ravel()
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        keys = lo * nv + hi
        uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
        if counts.size and counts.max() > 2:
            bad = uniq[counts > 2][0]
            raise NonManifoldError(
                f"edge ({bad // nv}, {bad % nv}) is shared by {counts.max()} faces"
            )
        edges = np.stack([uniq // nv, uniq % nv], axis=1)
        face_edges = inverse.reshape(-1, 3)
        edge_faces = np.full((len(edges), 2), -1, dtype=np.int64)
        face_ids = np.repeat(np.arange(len(f)), 3)
        order = np.argsort(inverse, kind="stable")
        sorted_edges = inverse[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = sorted_edges[1:] != sorted_edges[:-1]
        edge_faces[sorted_edges[first], 0] = face_ids[order[first]]
        edge_faces[sorted_edges[~first], 1] = face_ids[order[~first]]
        for arr in (edges, face_edges, edge_faces):
            arr.setflags(write=False)
        self.edges = edges
        self.face_edges = face_edges
        self.edge_faces = edge_faces

    def validate(self):
        f = self.faces
        if f.size:
            if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
                raise MeshError("face with repeated vertex index")
            areas = face_areas(self.vertices, f)
            thresh = DEGENERACY_THRESHOLD * self.bbox_diagonal ** 2
            bad = np.flatnonzero(areas < thresh)
            if bad.size:
                raise DegenerateFaceError(
                    f"{bad.size} face(s) below area threshold {thresh:.3g}, first is {bad[0]}"
                )

    def __repr__(self):
        return f"TriangleMesh(V={self.n_vertices}, E={self.n_edges}, F={self.n_faces})"

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def bbox_diagonal(self) -> float:
        if not len(self.vertices):
            return 0.0
        return float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))

    @cached_property
    def edge_to_faces(self) -> dict[tuple[int, int], tuple[int, ...]]:
        return {
            (int(i), int(j)): tuple(int(x) for x in fs if x >= 0)
            for (i, j), fs in zip(self.edges, self.edge_faces)
        }

    @cached_property
    def vertex_to_faces(self) -> list[np.ndarray]:
        f = self.faces.ravel()
        order = np.argsort(f, kind="stable")
        bounds = np.searchsorted(f[order], np.arange(self.n_vertices + 1))
        face_ids = order // 3
        return [face_ids[bounds[i]:bounds[i + 1]] for i in range(self.n_vertices)]

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_faces[:, 1] < 0)

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.edges[self.boundary_edges].ravel()] = True
        return mask

    @cached_property
    def isolated_vertices(self) -> np.ndarray:
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.faces.ravel()] = True
        return np.flatnonzero(~used)

    @property
    def is_closed(self) -> bool:
        return self.boundary_edges.size == 0

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        v = self.vertices
        return np.linalg.norm(v[self.edges[:, 1]] - v[self.edges[:, 0]], axis=1)

    def vertex_neighbors(self) -> list[np.ndarray]:
        """Sorted one-ring neighbor ids per vertex."""
        e = self.edges
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        bounds = np.searchsorted(src, np.arange(self.n_vertices + 1))
        return [dst[bounds[i]:bounds[i + 1]] for i in range(self.n_vertices)]

    def check_vertex(self, v: int) -> int:
        if not 0 <= int(v) < self.n_vertices:
            raise InvalidVertexError(f"vertex {v} out of range [0, {self.n_vertices})")
        return int(v)

    def total_area(self) -> float:
        return float(face_areas(self.vertices, self.faces).sum())

    def with_vertices(self, vertices) -> TriangleMesh:
        """Same connectivity, new positions."""
        return TriangleMesh(vertices, self.faces)

    def remove_faces(self, face_ids) -> TriangleMesh:
        keep = np.ones(self.n_faces, dtype=bool)
        keep[np.asarray(face_ids, dtype=np.int64)] = False
        return TriangleMesh(self.vertices, self.faces[keep])


def face_areas(vertices, faces) -> np.ndarray:
    v = np.asarray(vertices)
    f = np.asarray(faces)
    cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    return 0.5 * np.linalg.norm(cross, axis=1)


@dataclass(frozen=True)
class FaceGeometry:
    """Per-face geometric quantities, one row per face.

    ``cot[:, k]`` is the cotangent of the interior angle at corner ``k``;
    ``e1``/``e2`` are ``v1 - v0`` and ``v2 - v0``.
    """

    area: np.ndarray
    cot: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normal: np.ndarray

    def __len__(self):
        return len(self.area)

    @property
    def gram(self) -> np.ndarray:
        """Per-face 2x2 matrices K_ij = <e_i, e_j>."""
        k11 = np.einsum("ij,ij->i", self.e1, self.e1)
        k12 = np.einsum("ij,ij->i", self.e1, self.e2)
        k22 = np.einsum("ij,ij->i", self.e2, self.e2)
        return np.stack([np.stack([k11, k12], -1), np.stack([k12, k22], -1)], -2)

    def hat_gradients(self, vertices, faces) -> np.ndarray:
        """Constant gradient of each corner's hat function, shape (F, 3, 3)."""
        v = np.asarray(vertices)
        f = np.asarray(faces)
        out = np.empty((len(f), 3, 3))
        for k in range(3):
            opp = v[f[:, (k + 2) % 3]] - v[f[:, (k + 1) % 3]]
            out[:, k] = np.cross(self.normal, opp) / (2.0 * self.area[:, None])
        return out


def compute_face_geometry(mesh: TriangleMesh) -> FaceGeometry:
    v, f = mesh.vertices, mesh.faces
    p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    e1 = p1 - p0
    e2 = p2 - p0
    cross = np.cross(e1, e2)
    twice_area = np.linalg.norm(cross, axis=1)
    area = 0.5 * twice_area
    thresh = DEGENERACY_THRESHOLD * mesh.bbox_diagonal ** 2
    if np.any(area < thresh):
        raise DegenerateFaceError(f"face {int(np.argmin(area))} has area {area.min():.3g}")
    corners = (p0, p1, p2)
    cot = np.empty((len(f), 3))
    for k in range(3):
        a = corners[(k + 1) % 3] - corners[k]
        b = corners[(k + 2) % 3] - corners[k]
        cot[:, k] = np.einsum("ij,ij->i", a, b) / twice_area
    normal = cross / twice_area[:, None]
    for arr in (area, cot, e1, e2, normal):
        arr.setflags(write=False)
    return FaceGeometry(area=area, cot=cot, e1=e1, e2=e2, normal=normal)


def median_incident_edge_length(mesh: TriangleMesh, v: int) -> float:
    v = mesh.check_vertex(v)
    e = mesh.edges
    lengths = mesh.edge_lengths[(e[:, 0] == v) | (e[:, 1] == v)]
    if lengths.size == 0:
        raise IsolatedVertexError(f"vertex {v} has no incident edges")
    return float(np.median(lengths))


def median_incident_edge_lengths(mesh: TriangleMesh) -> np.ndarray:
    """Vectorised :func:`median_incident_edge_length` over all vertices."""
    if mesh.isolated_vertices.size:
        raise IsolatedVertexError(f"vertex {mesh.isolated_vertices[0]} has no incident edges")
    e = mesh.edges
    src = np.concatenate([e[:, 0], e[:, 1]])
    lengths = np.concatenate([mesh.edge_lengths, mesh.edge_lengths])
    order = np.lexsort((lengths, src))
    src, lengths = src[order], lengths[order]
    bounds = np.searchsorted(src, np.arange(mesh.n_vertices + 1))
    start, stop = bounds[:-1], bounds[1:]
    count = stop - start
    lo = start + (count - 1) // 2
    hi = start + count // 2
    return 0.5 * (lengths[lo] + lengths[hi])


def normalize_unit_diagonal(mesh: TriangleMesh) -> TriangleMesh:
    """Uniformly rescale so the bounding-box diagonal is 1."""
    lo = mesh.vertices.min(0)
    return mesh.with_vertices((mesh.vertices - lo) / mesh.bbox_diagonal)


# --------------------------------------------------------------------------
# file formats


def _data_lines(text: str):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def parse_off(text: str) -> TriangleMesh:
    lines = _data_lines(text)
    try:
        header = next(lines)
    except StopIteration:
        raise ParseError("empty OFF file") from None
    tokens = header.split()
    if not tokens[0].endswith("OFF"):
        raise ParseError(f"missing OFF header, got {tokens[0]!r}")
    if tokens[0] != "OFF":
        raise ParseError(f"unsupported OFF variant {tokens[0]!r}")
    tokens = tokens[1:]
    try:
        if not tokens:
            tokens = next(lines).split()
        nv, nf = int(tokens[0]), int(tokens[1])
    except (StopIteration, ValueError, IndexError):
        raise ParseError("malformed OFF counts line") from None
    vertices = np.empty((nv, 3))
    faces = np.empty((nf, 3), dtype=np.int64)
    try:
        for i in range(nv):
            vertices[i] = [float(x) for x in next(lines).split()[:3]]
        for i in range(nf):
            row = next(lines).split()
            n = int(row[0])
            if n != 3:
                raise NonTriangleError(f"face {i} has {n} vertices; only triangles are accepted")
            faces[i] = [int(x) for x in row[1:4]]
    except StopIteration:
        raise ParseError(f"OFF file ended early; header declared {nv} vertices, {nf} faces") from None
    except ValueError as exc:
        raise ParseError(f"malformed OFF entry: {exc}") from None
    return TriangleMesh(vertices, faces)


def _obj_index(token: str, nv: int) -> int:
    idx = int(token.split("/", 1)[0])
    return idx - 1 if idx > 0 else nv + idx


def parse_obj(text: str) -> TriangleMesh:
    vertices, faces = [], []
    for lineno, line in enumerate(_data_lines(text), 1):
        parts = line.split()
        try:
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise NonTriangleError(
                        f"face on line {lineno} has {len(parts) - 1} vertices; only triangles are accepted"
                    )
                faces.append([_obj_index(t, len(vertices)) for t in parts[1:4]])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    if not vertices:
        raise ParseError("OBJ file has no vertices")
    return TriangleMesh(vertices, np.array(faces, dtype=np.int64).reshape(-1, 3))


def load_mesh(path, format: str | None = None) -> TriangleMesh:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    text = path.read_text()
    if fmt == "off":
        return parse_off(text)
    if fmt == "obj":
        return parse_obj(text)
    raise ParseError(f"unsupported mesh format {fmt!r}")


def _fmt(x: float, digits: int) -> str:
    return f"{x:.{digits}g}"


def save_off(mesh: TriangleMesh, path, digits: int = 9):
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}"]
    lines += [" ".join(_fmt(x, digits) for x in p) for p in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


def save_obj(mesh: TriangleMesh, path, digits: int = 9):
    lines = ["v " + " ".join(_fmt(x, digits) for x in p) for p in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


def save_ply(mesh: TriangleMesh, path, scalars=None, name: str = "distance", digits: int = 9):
    """ASCII PLY, optionally with one float property per vertex."""
    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {mesh.n_vertices}",
        "property double x",
        "property double y",
        "property double z",
    ]
    if scalars is not None:
        scalars = np.asarray(scalars, dtype=np.float64)
        if scalars.shape != (mesh.n_vertices,):
            raise MeshError("scalar field must have one value per vertex")
        header.append(f"property double {name}")
    header += [f"element face {mesh.n_faces}", "property list uchar int vertex_indices", "end_header"]
    body = []
    for i, p in enumerate(mesh.vertices):
        vals = list(p) if scalars is None else [*p, scalars[i]]
        body.append(" ".join(_fmt(x, digits) for x in vals))
    body += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(header + body) + "\n")


def save_mesh(mesh: TriangleMesh, path, format: str | None = None):
    fmt = (format or os.path.splitext(str(path))[1].lstrip(".")).lower()
    writers = {"off": save_off, "obj": save_obj, "ply": save_ply}
    if fmt not in writers:
        raise ParseError(f"unsupported mesh format {fmt!r}")
    writers[fmt](mesh, path)
