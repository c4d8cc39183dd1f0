import numpy as np
import pytest
from scipy import integrate

from wavegeo import shapes
from wavegeo.fem import (
    differential_operators,
    edge_cotan_weights,
    fem_operators,
    incidence_matrix,
    mass_matrix,
    stiffness_matrix,
)
from wavegeo.linalg import factorize
from wavegeo.mesh import compute_face_geometry


def test_right_triangle_elements(right_triangle):
    M = mass_matrix(right_triangle).toarray()
    np.testing.assert_allclose(np.diag(M), 1 / 12)
    np.testing.assert_allclose(M[~np.eye(3, dtype=bool)], 1 / 24)
    S = stiffness_matrix(right_triangle).toarray()
    np.testing.assert_allclose(S, [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], atol=1e-15)


def _hat(p, k, x, y):
    """Barycentric coordinate k of (x, y) in the planar triangle p."""
    T = np.array([[p[1, 0] - p[0, 0], p[2, 0] - p[0, 0]], [p[1, 1] - p[0, 1], p[2, 1] - p[0, 1]]])
    l1, l2 = np.linalg.solve(T, [x - p[0, 0], y - p[0, 1]])
    return (1 - l1 - l2, l1, l2)[k]


def test_mass_matches_quadrature(unit_square):
    M = mass_matrix(unit_square).toarray()
    Q = np.zeros((4, 4))
    v = unit_square.vertices
    for face in unit_square.faces:
        p = v[face]
        # integrate over the face as {x in [xmin, xmax], y between its edges}
        for a in range(3):
            for b in range(3):
                def f(y, x):
                    return _hat(p, a, x, y) * _hat(p, b, x, y)
                if set(face) == {0, 1, 2}:     # below the diagonal y = x
                    val = integrate.dblquad(f, 0, 1, 0, lambda x: x, epsabs=1e-12)[0]
                else:                          # above it
                    val = integrate.dblquad(f, 0, 1, lambda x: x, 1, epsabs=1e-12)[0]
                Q[face[a], face[b]] += val
    np.testing.assert_allclose(M, Q, atol=1e-10)


def test_dirichlet_energy(sphere):
    g = compute_face_geometry(sphere)
    S = stiffness_matrix(sphere, g)
    rng = np.random.default_rng(3)
    x = rng.normal(size=sphere.n_vertices)
    gh = g.hat_gradients(sphere.vertices, sphere.faces)
    grad = np.einsum("fkc,fk->fc", gh, x[sphere.faces])
    energy = np.sum(g.area * np.einsum("fc,fc->f", grad, grad))
    assert x @ (S @ x) == pytest.approx(energy, rel=1e-9)


@pytest.mark.parametrize("name", ["sphere", "torus", "grid", "bumpy"])
def test_operator_suite(name, sphere, torus, bumpy):
    mesh = {"sphere": sphere, "torus": torus, "grid": shapes.grid(30, 0.1), "bumpy": bumpy}[name]
    ops = fem_operators(mesh)
    M, S = ops.mass, ops.stiffness
    one = np.ones(mesh.n_vertices)
    factorize(M)  # SPD or raises
    assert one @ (M @ one) == pytest.approx(mesh.total_area(), rel=1e-9)
    np.testing.assert_allclose(np.asarray(M.csc.sum(axis=1)).ravel(), ops.lumped_mass, rtol=1e-12)
    assert np.max(np.abs(S @ one)) <= 1e-10
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.normal(size=mesh.n_vertices)
        assert x @ (S @ x) >= -1e-12
    d = differential_operators(mesh)
    assert abs(d.laplacian.csc - S.csc).max() <= 1e-10


def test_incidence_single_triangle(right_triangle):
    D = incidence_matrix(right_triangle).toarray()
    np.testing.assert_array_equal(D, [[-1, 1, 0], [-1, 0, 1], [0, -1, 1]])
    assert np.all(D.sum(axis=1) == 0)


def test_boundary_weight_is_single_cot(right_triangle):
    g = compute_face_geometry(right_triangle)
    w = edge_cotan_weights(right_triangle, g)
    # edge (0,1) is opposite corner 2 (45 degrees), edge (1,2) opposite the right angle
    np.testing.assert_allclose(w, [0.5, 0.5, 0.0], atol=1e-15)


def test_laplacian_psd_constant_null(torus):
    L = differential_operators(torus).laplacian
    assert np.max(np.abs(L @ np.ones(torus.n_vertices))) <= 1e-10
    np.testing.assert_array_equal(L.toarray(), L.toarray().T)
