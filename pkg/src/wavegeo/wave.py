"""Implicit wave propagation and first-crossing pseudo-distances.

One time step solves ``(mu delta^2 S + M) xi(t + delta) = M (2 xi(t) - xi(t - delta))``
against a factor computed once per mesh.  A vertex's pseudo-distance is the
(linearly interpolated) time at which its value first rises through the
decaying threshold ``eps(i) = c * i**a``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import IncompleteCoverageError, PropagationDivergedError
from .fem import FemOperators
from .linalg import CholeskyFactor, SparseSymMatrix, factorize
from .mesh import TriangleMesh

log = logging.getLogger(__name__)

DEFAULT_DELTA = 0.05
DEFAULT_EXPONENT = -3.0
# Max height growing past this multiple of the initial peak means the
# system is not dissipative (wrong sign upstream).
DIVERGENCE_FACTOR = 1e3


@dataclass(frozen=True)
class WaveConfig:
    """Propagation parameters.

    ``epsilon_exponent`` may be a negative float, ``"auto"`` (fit from a
    short calibration run) or ``None``: -3 when ``delta`` is 0.05, auto
    otherwise.  ``max_iterations=None`` means ``ceil(50 / delta)``.
    """

    delta: float = DEFAULT_DELTA
    mu: float = 1.0
    max_iterations: int | None = None
    epsilon_exponent: float | str | None = None
    epsilon_scale: float = 0.5
    coverage_target: float = 1.0
    calibration_window: tuple[int, int] = (2, 10)
    lumped_mass: bool = False

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 0 < self.coverage_target <= 1:
            raise ValueError("coverage_target must lie in (0, 1]")
        if not self.epsilon_scale > 0:
            raise ValueError("epsilon_scale must be positive")
        a = self.epsilon_exponent
        if a is not None and a != "auto" and not float(a) < 0:
            raise ValueError("epsilon_exponent must be negative, 'auto' or None")
        lo, hi = self.calibration_window
        if not 2 <= lo <= hi:
            raise ValueError("calibration_window must satisfy 2 <= start <= stop")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @property
    def iteration_cap(self) -> int:
        if self.max_iterations is not None:
            return int(self.max_iterations)
        return int(math.ceil(50.0 / self.delta))

    @property
    def exponent_mode(self) -> float | str:
        """Resolved exponent: a float, or ``"auto"``."""
        a = self.epsilon_exponent
        if a is None:
            return DEFAULT_EXPONENT if math.isclose(self.delta, DEFAULT_DELTA) else "auto"
        return a if a == "auto" else float(a)

    def with_(self, **changes) -> WaveConfig:
        return replace(self, **changes)


@dataclass
class WaveState:
    xi_curr: np.ndarray
    xi_prev: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class EpsilonSchedule:
    """Threshold ``eps(i) = c * i**a`` for iterations ``i >= 1``."""

    c: float
    a: float
    heights: np.ndarray = field(default_factory=lambda: np.empty(0))
    fitted: bool = False

    def __post_init__(self):
        if not self.c > 0 or not self.a < 0:
            raise ValueError("schedule needs c > 0 and a < 0")

    def __call__(self, i):
        i = np.maximum(np.asarray(i, dtype=np.float64), 1.0)
        return self.c * i ** self.a


@dataclass
class PseudoDistanceField:
    """Per-vertex first-crossing times.

    Unrecorded vertices hold ``inf`` unless filled by the fallback, in which
    case ``filled`` marks them.
    """

    time: np.ndarray
    recorded: np.ndarray
    source: int
    iterations: int
    filled: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def coverage(self) -> float:
        return float(self.recorded.mean())


def initial_signal(mesh: TriangleMesh, source: int) -> np.ndarray:
    source = mesh.check_vertex(source)
    phi = np.zeros(mesh.n_vertices)
    phi[source] = 1.0
    return phi


def initial_state(mesh: TriangleMesh, source: int) -> WaveState:
    phi = initial_signal(mesh, source)
    return WaveState(phi, phi.copy(), 0)


def mass_for(ops: FemOperators, config: WaveConfig) -> SparseSymMatrix:
    return ops.mass_matrix(lumped=config.lumped_mass)


def wave_system(ops: FemOperators, config: WaveConfig) -> CholeskyFactor:
    """Factor ``mu delta^2 S + M``; reused for every step."""
    M = mass_for(ops, config)
    return factorize(M + ops.stiffness * (config.mu * config.delta ** 2))


def step(state: WaveState, ops: FemOperators, factor: CholeskyFactor,
         config: WaveConfig | None = None) -> WaveState:
    M = mass_for(ops, config or WaveConfig())
    rhs = M @ (2.0 * state.xi_curr - state.xi_prev)
    return WaveState(factor.solve(rhs), state.xi_curr, state.iteration + 1)


def total_mass(ops: FemOperators, xi, config: WaveConfig | None = None) -> float:
    """``1^T M xi``; conserved by the scheme because ``S 1 = 0``."""
    M = mass_for(ops, config or WaveConfig())
    return float(np.sum(M @ xi))


def _check_height(h: float, h0: float, i: int):
    if not np.isfinite(h) or h > DIVERGENCE_FACTOR * h0:
        raise PropagationDivergedError(
            f"max height {h:.3g} at iteration {i} (initial {h0:.3g}); check operator signs"
        )


def fit_exponent(heights, window: tuple[int, int]) -> float:
    """Mean of ``ln h(i) / ln i`` over ``i`` in the inclusive window.

    ``heights[k]`` is ``h(k + 1)``.
    """
    lo, hi = window
    i = np.arange(lo, hi + 1)
    h = np.asarray(heights, dtype=np.float64)[i - 1]
    if np.any(h <= 0):
        raise PropagationDivergedError("non-positive max height inside calibration window")
    return float(np.mean(np.log(h) / np.log(i)))


def calibrate_epsilon(mesh: TriangleMesh, source: int, config: WaveConfig,
                      ops: FemOperators | None = None,
                      factor: CholeskyFactor | None = None) -> EpsilonSchedule:
    """Short propagation recording ``h(i) = max_v xi_i(v)``.

    ``c`` is ``epsilon_scale * h(1)``.  In auto mode the exponent is the
    window mean of ``ln h(i) / ln i`` (i.e. assuming unit amplitude for the
    fit only); otherwise the configured exponent is used.
    """
    from .fem import fem_operators

    ops = ops or fem_operators(mesh)
    factor = factor or wave_system(ops, config)
    mode = config.exponent_mode
    n_steps = config.calibration_window[1] if mode == "auto" else 1
    state = initial_state(mesh, source)
    h0 = float(state.xi_curr.max())
    heights = np.empty(n_steps)
    for k in range(n_steps):
        state = step(state, ops, factor, config)
        heights[k] = state.xi_curr.max()
        _check_height(heights[k], h0, state.iteration)
    c = config.epsilon_scale * heights[0]
    if mode == "auto":
        return EpsilonSchedule(c, fit_exponent(heights, config.calibration_window), heights, True)
    return EpsilonSchedule(c, float(mode), heights, False)


def _fill_stragglers(mesh: TriangleMesh, time: np.ndarray, recorded: np.ndarray, delta: float):
    """Give unrecorded vertices max(recorded neighbour time) + delta, ring by ring."""
    time = time.copy()
    known = recorded.copy()
    filled = np.zeros_like(recorded)
    e = mesh.edges
    while not known.all():
        a, b = e[:, 0], e[:, 1]
        cand = np.full(mesh.n_vertices, -np.inf)
        m = known[a] & ~known[b]
        np.maximum.at(cand, b[m], time[a[m]])
        m = known[b] & ~known[a]
        np.maximum.at(cand, a[m], time[b[m]])
        new = np.isfinite(cand)
        if not new.any():
            break
        time[new] = cand[new] + delta
        known |= new
        filled |= new
    return time, filled


def propagate(mesh: TriangleMesh, ops: FemOperators, source: int, config: WaveConfig,
              schedule: EpsilonSchedule, factor: CholeskyFactor | None = None,
              trace: list | None = None, strict: bool = False) -> PseudoDistanceField:
    """Run the wave until ``coverage_target`` of the vertices have crossed eps.

    A vertex is recorded at iteration ``i`` when ``xi_i(v) >= eps(i)``; its
    time is found by linear interpolation of ``xi - eps`` between iterations
    ``i - 1`` and ``i``.  Vertices already at or above ``eps(1)`` initially
    record time 0.  If the iteration cap is reached first, ``strict`` raises
    :class:`IncompleteCoverageError`; otherwise stragglers are filled from
    their recorded neighbours and flagged.

    ``trace``, if given, receives ``(iteration, max_height, eps, coverage)``
    tuples.
    """
    source = mesh.check_vertex(source)
    factor = factor or wave_system(ops, config)
    delta = config.delta
    n = mesh.n_vertices
    need = int(math.ceil(config.coverage_target * n - 1e-9))
    state = initial_state(mesh, source)
    h0 = float(state.xi_curr.max())
    time = np.full(n, np.inf)
    recorded = state.xi_curr >= schedule(1)
    time[recorded] = 0.0
    gap_prev = state.xi_curr - schedule(1)
    if trace is not None:
        trace.append((0, h0, float(schedule(1)), float(recorded.mean())))
    count = int(recorded.sum())
    cap = config.iteration_cap
    while count < need and state.iteration < cap:
        state = step(state, ops, factor, config)
        i = state.iteration
        eps = float(schedule(i))
        gap = state.xi_curr - eps
        hit = ~recorded & (gap >= 0)
        if hit.any():
            frac = -gap_prev[hit] / (gap[hit] - gap_prev[hit])
            time[hit] = (i - 1 + np.clip(frac, 0.0, 1.0)) * delta
            recorded |= hit
            count += int(hit.sum())
        gap_prev = gap
        h = float(state.xi_curr.max())
        _check_height(h, h0, i)
        if trace is not None:
            trace.append((i, h, eps, count / n))
    diagnostics = {
        "iterations": state.iteration,
        "coverage": count / n,
        "epsilon_c": schedule.c,
        "epsilon_a": schedule.a,
        "epsilon_fitted": schedule.fitted,
        "filled_vertices": 0,
    }
    field_ = PseudoDistanceField(time, recorded, source, state.iteration, None, diagnostics)
    if count < need:
        msg = (f"coverage {count / n:.4f} below target {config.coverage_target} "
               f"after {state.iteration} iterations")
        if strict:
            raise IncompleteCoverageError(msg, field_)
        log.warning("%s; filling stragglers from neighbours", msg)
        filled_time, filled = _fill_stragglers(mesh, time, recorded, delta)
        field_.time = filled_time
        field_.filled = filled
        diagnostics["filled_vertices"] = int(filled.sum())
        diagnostics["incomplete_coverage"] = True
    return field_


def naive_pseudodistance(mesh: TriangleMesh, ops: FemOperators, source: int, config: WaveConfig,
                         iterations: int | None = None,
                         factor: CholeskyFactor | None = None) -> PseudoDistanceField:
    """Per-vertex time of the maximum value over a fixed iteration budget.

    The default budget is the time for a unit-speed front to travel the
    bounding-box diagonal.  Kept for comparison with the first-crossing
    field; collisions show up as late maxima.
    """
    source = mesh.check_vertex(source)
    factor = factor or wave_system(ops, config)
    if iterations is None:
        iterations = int(math.ceil(mesh.bbox_diagonal / (math.sqrt(config.mu) * config.delta)))
    state = initial_state(mesh, source)
    h0 = float(state.xi_curr.max())
    best = state.xi_curr.copy()
    arg = np.zeros(mesh.n_vertices, dtype=np.int64)
    for _ in range(iterations):
        state = step(state, ops, factor, config)
        _check_height(float(state.xi_curr.max()), h0, state.iteration)
        better = state.xi_curr > best
        best[better] = state.xi_curr[better]
        arg[better] = state.iteration
    recorded = np.ones(mesh.n_vertices, dtype=bool)
    return PseudoDistanceField(arg * config.delta, recorded, source, iterations,
                               diagnostics={"iterations": iterations, "coverage": 1.0})


def write_trace_csv(trace, path):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "max_height", "epsilon", "coverage"])
        for i, h, eps, cov in trace:
            w.writerow([i, f"{h:.9g}", f"{eps:.9g}", f"{cov:.9g}"])
