"""Geodesic distances on triangle meshes from implicit wave propagation.

Typical use::

    from wavegeo import icosphere, wave_geodesics
    mesh = icosphere(4)
    d = wave_geodesics(mesh, source=0).values
"""

__version__ = "0.1.0"

from .baseline import (
    ErrorReport,
    HeatGeodesics,
    analytic_plane_distances,
    analytic_sphere_distances,
    dijkstra_distances,
    error_report,
    heat_geodesics,
)
from .errors import WaveGeoError
from .fem import differential_operators, fem_operators
from .geodesic import DistanceField, GradientIntegrator, WaveGeodesics, wave_geodesics
from .linalg import CholeskyFactor, SparseSymMatrix, assemble, factorize
from .mesh import TriangleMesh, load_mesh, normalize_unit_diagonal, save_mesh
from .perturb import PerturbConfig, add_noise, sharpen, umbrella_smooth
from .shapes import bumpy_sphere, grid, icosphere, torus
from .wave import EpsilonSchedule, WaveConfig, calibrate_epsilon, propagate

__all__ = [
    "CholeskyFactor", "DistanceField", "EpsilonSchedule", "ErrorReport", "GradientIntegrator",
    "HeatGeodesics", "PerturbConfig", "SparseSymMatrix", "TriangleMesh", "WaveConfig",
    "WaveGeoError", "WaveGeodesics", "add_noise", "analytic_plane_distances",
    "analytic_sphere_distances", "assemble", "bumpy_sphere", "calibrate_epsilon",
    "differential_operators", "dijkstra_distances", "error_report", "factorize", "fem_operators",
    "grid", "heat_geodesics", "icosphere", "load_mesh", "normalize_unit_diagonal", "propagate",
    "save_mesh", "sharpen", "torus", "umbrella_smooth", "wave_geodesics",
]
