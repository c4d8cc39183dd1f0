import numpy as np
import pytest

from wavegeo import shapes
from wavegeo.errors import IncompleteCoverageError, PropagationDivergedError
from wavegeo.fem import FemOperators, fem_operators
from wavegeo.mesh import TriangleMesh
from wavegeo.wave import (
    EpsilonSchedule,
    WaveConfig,
    WaveState,
    calibrate_epsilon,
    fit_exponent,
    initial_signal,
    initial_state,
    naive_pseudodistance,
    propagate,
    step,
    total_mass,
    wave_system,
    write_trace_csv,
)


def test_config_defaults_and_validation():
    c = WaveConfig()
    assert c.exponent_mode == -3.0
    assert c.iteration_cap == 1000
    assert WaveConfig(delta=0.02).exponent_mode == "auto"
    assert WaveConfig(delta=0.02, epsilon_exponent=-2).exponent_mode == -2.0
    for bad in [dict(delta=0), dict(mu=-1), dict(coverage_target=0), dict(epsilon_exponent=1.0),
                dict(calibration_window=(1, 5)), dict(max_iterations=0), dict(epsilon_scale=0)]:
        with pytest.raises(ValueError):
            WaveConfig(**bad)


def test_initial_signal(right_triangle, sphere):
    np.testing.assert_array_equal(initial_signal(right_triangle, 0), [1, 0, 0])
    assert initial_signal(sphere, 17).sum() == 1
    diff = initial_signal(sphere, 3) != initial_signal(sphere, 9)
    assert diff.sum() == 2
    s = initial_state(sphere, 5)
    np.testing.assert_array_equal(s.xi_curr, s.xi_prev)


def test_rest_and_constant_states(sphere, sphere_ops):
    cfg = WaveConfig()
    F = wave_system(sphere_ops, cfg)
    n = sphere.n_vertices
    s = step(WaveState(np.zeros(n), np.zeros(n)), sphere_ops, F, cfg)
    np.testing.assert_array_equal(s.xi_curr, 0.0)
    s = WaveState(np.full(n, 2.5), np.full(n, 2.5))
    for _ in range(20):
        s = step(s, sphere_ops, F, cfg)
    np.testing.assert_allclose(s.xi_curr, 2.5, rtol=1e-10)


def test_step_solves_implicit_system(sphere, sphere_ops):
    cfg = WaveConfig(delta=0.05, mu=1.3)
    F = wave_system(sphere_ops, cfg)
    s0 = initial_state(sphere, 0)
    s1 = step(s0, sphere_ops, F, cfg)
    s2 = step(s1, sphere_ops, F, cfg)
    lhs = sphere_ops.mass @ s2.xi_curr + cfg.mu * cfg.delta ** 2 * (sphere_ops.stiffness @ s2.xi_curr)
    rhs = sphere_ops.mass @ (2 * s1.xi_curr - s1.xi_prev)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)
    assert s2.iteration == 2


@pytest.mark.parametrize("lumped", [False, True])
def test_mass_conservation(sphere, sphere_ops, lumped):
    cfg = WaveConfig(lumped_mass=lumped)
    F = wave_system(sphere_ops, cfg)
    s = initial_state(sphere, 0)
    m0 = total_mass(sphere_ops, s.xi_curr, cfg)
    worst = 0.0
    for _ in range(500):
        s = step(s, sphere_ops, F, cfg)
        worst = max(worst, abs(total_mass(sphere_ops, s.xi_curr, cfg) - m0) / abs(m0))
    assert worst <= 1e-8


def test_fit_exponent_exact_power_law():
    i = np.arange(1, 11)
    assert fit_exponent(i ** -3.0, (2, 10)) == pytest.approx(-3.0, abs=1e-12)
    with pytest.raises(PropagationDivergedError):
        fit_exponent(np.r_[1.0, 0.0, np.ones(8)], (2, 10))


def test_schedule_formula():
    s = EpsilonSchedule(0.4, -2.0)
    assert s(1) == pytest.approx(0.4)
    assert s(0) == pytest.approx(0.4)  # clamped
    np.testing.assert_allclose(s(np.array([2, 4])), [0.1, 0.025])
    with pytest.raises(ValueError):
        EpsilonSchedule(0.4, 1.0)


def test_calibration_on_sphere(sphere, sphere_ops):
    auto = calibrate_epsilon(sphere, 0, WaveConfig(epsilon_exponent="auto"), sphere_ops)
    assert auto.fitted and -3.5 <= auto.a <= -2.5
    assert auto(1) == pytest.approx(auto.heights[0] / 2, rel=1e-15)
    fixed = calibrate_epsilon(sphere, 0, WaveConfig(), sphere_ops)
    assert not fixed.fitted and fixed.a == -3.0
    assert fixed.c == pytest.approx(auto.c)
    fits = [calibrate_epsilon(sphere, 0, WaveConfig(delta=d), sphere_ops).a for d in (0.02, 0.05, 0.1)]
    assert fits[0] > fits[1] > fits[2]


def test_propagate_sphere(sphere, sphere_ops):
    cfg = WaveConfig()
    sched = calibrate_epsilon(sphere, 0, cfg, sphere_ops)
    trace = []
    f = propagate(sphere, sphere_ops, 0, cfg, sched, trace=trace)
    assert f.coverage == 1.0 and f.filled is None
    assert f.time[0] == 0.0
    assert f.iterations <= 1000
    assert len(trace) == f.iterations + 1
    # first-crossing times increase with true distance
    d = np.arccos(np.clip(sphere.vertices @ sphere.vertices[0], -1, 1))
    assert np.corrcoef(d, f.time)[0, 1] > 0.99
    again = propagate(sphere, sphere_ops, 0, cfg, sched)
    np.testing.assert_array_equal(f.time, again.time)


def test_times_monotone_along_grid_line():
    n = 30
    g = shapes.grid(n, 0.075)
    ops = fem_operators(g)
    cfg = WaveConfig()
    f = propagate(g, ops, 0, cfg, calibrate_epsilon(g, 0, cfg, ops))
    line = f.time[np.arange(n) * n]   # vertices along the x axis from the corner
    assert np.all(np.diff(line) >= 0)


def test_incomplete_coverage(sphere, sphere_ops):
    cfg = WaveConfig(max_iterations=5)
    sched = calibrate_epsilon(sphere, 0, cfg, sphere_ops)
    with pytest.raises(IncompleteCoverageError) as info:
        propagate(sphere, sphere_ops, 0, cfg, sched, strict=True)
    partial = info.value.field
    assert 0 < partial.coverage < 1 and np.isinf(partial.time[~partial.recorded]).all()
    filled = propagate(sphere, sphere_ops, 0, cfg, sched)
    assert np.isfinite(filled.time).all()
    assert filled.diagnostics["incomplete_coverage"]
    assert filled.filled.sum() == filled.diagnostics["filled_vertices"] > 0
    assert filled.time[filled.filled].min() > filled.time[filled.recorded].max() - 1e-12


def test_wrong_sign_diverges(small_sphere):
    ops = fem_operators(small_sphere)
    flipped = FemOperators(ops.mass, ops.stiffness * -1.0, ops.lumped_mass)
    cfg = WaveConfig(delta=0.01, epsilon_exponent=-3)
    F = wave_system(flipped, cfg)
    with pytest.raises(PropagationDivergedError):
        propagate(small_sphere, flipped, 0, cfg, calibrate_epsilon(small_sphere, 0, cfg, flipped, F), F)


def test_naive_single_triangle(right_triangle):
    ops = fem_operators(right_triangle)
    f = naive_pseudodistance(right_triangle, ops, 0, WaveConfig())
    assert f.time[0] == 0.0 and np.isfinite(f.time).all()


def test_naive_collision_bump(torus):
    ops = fem_operators(torus)
    cfg = WaveConfig()
    crossing = propagate(torus, ops, 0, cfg, calibrate_epsilon(torus, 0, cfg, ops))
    naive = naive_pseudodistance(torus, ops, 0, cfg)
    assert naive.time[0] == 0.0
    v = torus.vertices
    theta = np.arctan2(v[:, 1], v[:, 0])          # vertex 0 sits at theta = 0
    lag = naive.time - crossing.time
    collision = np.abs(np.abs(theta) - np.pi) < 0.2
    near = np.abs(theta) < 0.5
    assert np.all(lag[collision] > 0)
    assert lag[collision].mean() > 2 * lag[near].mean()


def test_trace_csv(tmp_path, small_sphere):
    ops = fem_operators(small_sphere)
    cfg = WaveConfig()
    trace = []
    propagate(small_sphere, ops, 0, cfg, calibrate_epsilon(small_sphere, 0, cfg, ops), trace=trace)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,max_height,epsilon,coverage"
    assert len(lines) == len(trace) + 1
