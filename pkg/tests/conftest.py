import numpy as np
import pytest

from wavegeo import fem_operators, shapes
from wavegeo.mesh import TriangleMesh


@pytest.fixture(scope="session")
def sphere():
    """Radius-1 icosphere with 5120 faces."""
    return shapes.icosphere(4)


@pytest.fixture(scope="session")
def small_sphere():
    return shapes.icosphere(2)


@pytest.fixture(scope="session")
def sphere_ops(sphere):
    return fem_operators(sphere)


@pytest.fixture(scope="session")
def torus():
    return shapes.torus()


@pytest.fixture(scope="session")
def bumpy():
    return shapes.bumpy_sphere(5)


@pytest.fixture
def right_triangle():
    return TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


@pytest.fixture
def unit_square():
    """Two triangles over [0, 1]^2."""
    return TriangleMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2], [0, 2, 3]])


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# ------------------------------------------------------------------ acceptance report

_ACCEPTANCE: dict[str, tuple[bool | None, str]] = {}


@pytest.fixture
def record():
    """``record(key, passed, detail)`` stores one acceptance line and returns ``passed``."""
    def _record(key: str, passed, detail: str):
        _ACCEPTANCE[key] = (passed, detail)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def order(key):
        head = key.split(" ", 1)[0]
        num = "".join(ch for ch in head if ch.isdigit())
        return (int(num) if num else 99, key)

    for key in sorted(_ACCEPTANCE, key=order):
        passed, detail = _ACCEPTANCE[key]
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"[{status}] criterion {key}: {detail}")
