import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavegeo import shapes
from wavegeo.errors import (
    DegenerateFaceError,
    InvalidVertexError,
    IsolatedVertexError,
    MeshError,
    NonManifoldError,
    NonTriangleError,
    ParseError,
)
from wavegeo.mesh import (
    TriangleMesh,
    compute_face_geometry,
    load_mesh,
    median_incident_edge_length,
    median_incident_edge_lengths,
    normalize_unit_diagonal,
    parse_obj,
    parse_off,
    save_mesh,
    save_ply,
)

ONE_TRIANGLE_OFF = """OFF
3 1 0
0 0 0
1 0 0
0 1 0
3 0 1 2
"""


def test_parse_single_triangle():
    m = parse_off(ONE_TRIANGLE_OFF)
    assert (m.n_vertices, m.n_faces, m.n_edges) == (3, 1, 3)
    assert m.edges.tolist() == [[0, 1], [0, 2], [1, 2]]


def test_three_faces_on_one_edge_is_non_manifold():
    text = """OFF
5 3 0
0 0 0
1 0 0
0 1 0
0 -1 0
0 0 1
3 0 1 2
3 1 0 3
3 0 1 4
"""
    with pytest.raises(NonManifoldError):
        parse_off(text)


def test_off_errors():
    with pytest.raises(ParseError):
        parse_off("")
    with pytest.raises(ParseError):
        parse_off(ONE_TRIANGLE_OFF.replace("OFF", "COFF", 1))
    with pytest.raises(ParseError):
        parse_off(ONE_TRIANGLE_OFF.rsplit("\n", 2)[0])
    with pytest.raises(NonTriangleError):
        parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    with pytest.raises(InvalidVertexError):
        parse_off(ONE_TRIANGLE_OFF.replace("3 0 1 2", "3 0 1 7"))


def test_obj_indices_and_slashes():
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1/1/1 2/2/2 3/3/3\nf -3 -1 -2\n"
    m = parse_obj(text)
    assert m.faces.tolist() == [[0, 1, 2], [1, 3, 2]]
    with pytest.raises(NonTriangleError):
        parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 4 3\n")


@pytest.mark.parametrize("suffix", [".off", ".obj"])
def test_round_trip(tmp_path, suffix):
    m = shapes.icosphere(2)
    path = tmp_path / f"m{suffix}"
    save_mesh(m, path)
    back = load_mesh(path)
    np.testing.assert_array_equal(back.faces, m.faces)
    np.testing.assert_allclose(back.vertices, m.vertices, atol=1e-8)


def test_ply_with_scalars(tmp_path, right_triangle):
    path = tmp_path / "t.ply"
    save_ply(right_triangle, path, np.array([0.0, 1.0, 2.0]))
    text = path.read_text().splitlines()
    assert "property double distance" in text
    assert text[text.index("end_header") + 3] == "0 1 0 2"


def test_degenerate_and_repeated():
    with pytest.raises(DegenerateFaceError):
        TriangleMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    with pytest.raises(MeshError):
        TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 1]])


def test_counts_and_topology(sphere, torus):
    assert (sphere.n_vertices, sphere.n_edges, sphere.n_faces) == (2562, 7680, 5120)
    assert sphere.euler_characteristic() == 2 and sphere.is_closed
    assert torus.euler_characteristic() == 0 and torus.is_closed
    g = shapes.grid(5)
    assert not g.is_closed
    assert g.boundary_vertices.sum() == 16
    # every edge key appears in the map, with 1 or 2 faces
    assert len(sphere.edge_to_faces) == sphere.n_edges
    assert all(len(fs) == 2 for fs in sphere.edge_to_faces.values())


def test_face_edges_opposite_corner(sphere):
    f = sphere.faces
    for k in range(3):
        e = sphere.edges[sphere.face_edges[:, k]]
        assert not np.any(e == f[:, k:k + 1])


def test_remove_faces_opens_boundary(sphere):
    holed = sphere.remove_faces([0, 100, 2000])
    assert holed.n_faces == sphere.n_faces - 3
    assert holed.boundary_edges.size == 9


def test_right_and_equilateral_geometry(right_triangle):
    g = compute_face_geometry(right_triangle)
    assert g.area[0] == pytest.approx(0.5)
    np.testing.assert_allclose(g.cot[0], [0.0, 1.0, 1.0], atol=1e-15)
    eq = TriangleMesh([[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]], [[0, 1, 2]])
    ge = compute_face_geometry(eq)
    assert ge.area[0] == pytest.approx(np.sqrt(3) / 4)
    np.testing.assert_allclose(ge.cot[0], 1 / np.sqrt(3), rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_triangle_geometry(seed):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=(3, 3))
    m = TriangleMesh(p, [[0, 1, 2]])
    g = compute_face_geometry(m)
    # brute-force area from the cross product, angles from arccos
    area = 0.5 * np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0]))
    assert g.area[0] == pytest.approx(area, rel=1e-12)
    angles = []
    for k in range(3):
        a, b = p[(k + 1) % 3] - p[k], p[(k + 2) % 3] - p[k]
        angles.append(np.arccos(a @ b / np.linalg.norm(a) / np.linalg.norm(b)))
    assert sum(angles) == pytest.approx(np.pi, abs=1e-9)
    np.testing.assert_allclose(g.cot[0], 1 / np.tan(angles), rtol=1e-7, atol=1e-9)


def test_hat_gradients_partition_of_unity(sphere):
    g = compute_face_geometry(sphere)
    gh = g.hat_gradients(sphere.vertices, sphere.faces)
    np.testing.assert_allclose(gh.sum(axis=1), 0.0, atol=1e-10)


def _star(lengths):
    """Fan of triangles around vertex 0 with given spoke lengths (non-coplanar spokes)."""
    n = len(lengths)
    ang = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = [[0, 0, 0]] + [[r * np.cos(a), r * np.sin(a), 0.0] for r, a in zip(lengths, ang)]
    faces = [[0, 1 + i, 1 + (i + 1) % n] for i in range(n)]
    return TriangleMesh(pts, faces)


def test_median_incident_edge_length():
    assert median_incident_edge_length(_star([1, 2, 3]), 0) == pytest.approx(2.0)
    assert median_incident_edge_length(_star([1, 2, 3, 4]), 0) == pytest.approx(2.5)
    g = shapes.grid(6, spacing=0.3, pattern="alternating")
    # axis-aligned and diagonal spokes: check the vectorised path agrees with the scalar one
    vec = median_incident_edge_lengths(g)
    for v in range(g.n_vertices):
        assert vec[v] == pytest.approx(median_incident_edge_length(g, v))


def test_median_constant_and_isolated():
    eq = shapes.icosphere(0)
    assert median_incident_edge_lengths(eq) == pytest.approx(np.full(12, eq.edge_lengths[0]))
    m = TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5]], [[0, 1, 2]])
    with pytest.raises(IsolatedVertexError):
        median_incident_edge_length(m, 3)
    with pytest.raises(InvalidVertexError):
        median_incident_edge_length(m, 4)


def test_normalize_unit_diagonal(torus):
    n = normalize_unit_diagonal(torus)
    assert n.bbox_diagonal == pytest.approx(1.0)
    np.testing.assert_array_equal(n.faces, torus.faces)


def test_arrays_read_only(sphere):
    with pytest.raises(ValueError):
        sphere.vertices[0, 0] = 1.0
