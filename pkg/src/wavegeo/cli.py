"""``wavegeo`` command line: compute, compare, calibrate, perturb.

Meshes are read from OFF/OBJ files; the procedural shapes can be named
directly instead of a path (``icosphere:4``, ``torus``, ``grid:50:0.075``,
``bumpy:4``).  Library failures exit with status 1 and a JSON object on
stderr: ``{"error": <exception class>, "message": ...}``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, shapes
from .baseline import (
    HeatGeodesics,
    analytic_plane_distances,
    analytic_sphere_distances,
    dijkstra_distances,
    error_report,
    is_plane,
    is_sphere,
)
from .errors import MissingReferenceError, WaveGeoError
from .export import (
    contour_levels,
    isocontours,
    read_distances_csv,
    write_contours_obj,
    write_distances_csv,
    write_json,
)
from .geodesic import BACKENDS, WaveGeodesics
from .mesh import TriangleMesh, load_mesh, normalize_unit_diagonal, save_mesh, save_ply
from .perturb import PerturbConfig, add_noise
from .wave import WaveConfig, calibrate_epsilon, propagate

log = logging.getLogger("wavegeo")

METHODS = ("wave", "heat", "dijkstra")
REFERENCES = ("auto", "sphere", "plane", "dijkstra", "steiner", "csv")
TABLE_COLUMNS = ("model", "method", "faces", "delta", "noise", "mean_raw", "mean_relative",
                 "max_raw", "time_seconds")

_SHAPES = {
    "icosphere": (shapes.icosphere, (int, float)),
    "torus": (shapes.torus, (float, float, int, int)),
    "grid": (shapes.grid, (int, float, str)),
    "bumpy": (shapes.bumpy_sphere, (int, float, float, int)),
}


class UsageError(Exception):
    """Inconsistent flags; reported through argparse."""


@dataclass
class RunConfig:
    command: str
    mesh: str
    source: int = 0
    method: str = "wave"
    divergence: str = "edge"
    delta: list[float] = field(default_factory=lambda: [0.05])
    mu: float = 1.0
    epsilon: str | None = None
    coverage_target: float = 1.0
    max_iterations: int | None = None
    lumped_mass: bool = False
    t_coef: float = 1.0
    normalize_unit_diagonal: bool = False
    seed: int = 0
    reference: str = "auto"
    reference_path: str | None = None
    steiner_points: int = 4
    levels: int = 10
    strict: bool = False
    outputs: dict = field(default_factory=dict)

    def epsilon_exponent(self):
        """``None`` (default rule), ``"auto"`` or a float from ``exponent:<a>``."""
        e = self.epsilon
        if e is None or e == "auto":
            return e
        text = e.split(":", 1)[1] if e.startswith("exponent:") else e
        try:
            return float(text)
        except ValueError:
            raise UsageError(f"--epsilon must be 'auto' or 'exponent:<a>', got {e!r}") from None

    def wave_config(self, delta: float) -> WaveConfig:
        return WaveConfig(delta=delta, mu=self.mu, max_iterations=self.max_iterations,
                          epsilon_exponent=self.epsilon_exponent(),
                          coverage_target=self.coverage_target, lumped_mass=self.lumped_mass)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _strings(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def resolve_mesh(spec: str) -> TriangleMesh:
    """Load a mesh file, or build a procedural shape named ``kind[:arg[:arg...]]``."""
    path = Path(spec)
    if path.exists():
        return load_mesh(path)
    kind, *args = spec.split(":")
    if kind not in _SHAPES:
        raise FileNotFoundError(f"no such mesh file or shape: {spec}")
    fn, types = _SHAPES[kind]
    if len(args) > len(types):
        raise UsageError(f"too many parameters for {kind}")
    return fn(*(t(a) for t, a in zip(types, args)))


def _model_name(spec: str) -> str:
    p = Path(spec)
    return p.stem if p.exists() else spec


# ---------------------------------------------------------------- parsing

def _common(p: argparse.ArgumentParser):
    p.add_argument("mesh", help="OFF/OBJ file or procedural shape (icosphere:4, torus, grid:50:0.075, bumpy:4)")
    p.add_argument("--source", type=int, default=0, help="source vertex id (default 0)")
    p.add_argument("--normalize-unit-diagonal", action="store_true",
                   help="rescale the mesh so its bounding-box diagonal is 1")
    p.add_argument("-v", "--verbose", action="store_true")


def _method_flags(p: argparse.ArgumentParser, multi: bool):
    if multi:
        p.add_argument("--method", type=_strings, default=["wave"],
                       help="comma-separated subset of wave,heat,dijkstra")
        p.add_argument("--delta", type=_floats, default=[0.05], help="time step(s), comma-separated")
    else:
        p.add_argument("--method", choices=METHODS, default="wave")
        p.add_argument("--delta", type=float, default=None, help="time step (default 0.05)")
    p.add_argument("--divergence", choices=BACKENDS, default="edge")
    p.add_argument("--mu", type=float, default=None, help="wave speed squared (default 1)")
    p.add_argument("--epsilon", default=None, metavar="auto|exponent:<a>",
                   help="threshold decay; default -3 at delta=0.05, fitted otherwise")
    p.add_argument("--coverage-target", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--lumped-mass", action="store_true", help="diagonal mass matrix")
    p.add_argument("--t-coef", type=float, default=1.0, help="heat time factor (method heat)")
    p.add_argument("--steiner-points", type=int, default=4,
                   help="points per edge for the dijkstra method/reference (0 = edge graph)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavegeo", description="Geodesic distances from wave propagation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="distance field from one source")
    _common(p)
    _method_flags(p, multi=False)
    p.add_argument("-o", "--output", default="distances.csv", help="distance CSV (vertex_id,distance)")
    p.add_argument("--diagnostics", default=None, help="diagnostics JSON (default: <output>.json)")
    p.add_argument("--ply", default=None, help="write the mesh with a per-vertex distance property")
    p.add_argument("--contours", default=None, help="write isocontours as OBJ polylines")
    p.add_argument("--levels", type=int, default=10, help="number of isocontour levels")
    p.add_argument("--figure", default=None, help="PNG rendering of the field")
    p.add_argument("--reference", default=None, metavar="PATH",
                   help="exact-distance CSV; adds an error summary to the diagnostics")
    p.add_argument("--strict", action="store_true", help="fail instead of filling uncovered vertices")

    p = sub.add_parser("compare", help="error table against a reference")
    _common(p)
    _method_flags(p, multi=True)
    p.add_argument("--noise", type=_floats, default=[0.0], help="noise scale(s) applied before solving")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", default="auto", choices=REFERENCES)
    p.add_argument("--reference-path", default=None, help="CSV used with --reference csv")
    p.add_argument("-o", "--output", default="compare.csv")
    p.add_argument("--figure", default=None, help="PNG summary (default: <output>.png)")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--no-time", action="store_true", help="leave the time column empty (byte-stable output)")
    p.add_argument("--model", default=None, help="model name for the table (default: mesh name)")

    p = sub.add_parser("calibrate", help="threshold schedule fit")
    _common(p)
    p.add_argument("--delta", type=_floats, default=[0.05])
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--window", type=int, nargs=2, default=[2, 10], metavar=("START", "STOP"))
    p.add_argument("--lumped-mass", action="store_true")
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("-o", "--output", default="calibration.csv", help="per-iteration CSV")
    p.add_argument("--summary", default=None, help="fitted-exponent CSV (default: <output>_fit.csv)")
    p.add_argument("--figure", default=None, help="PNG (default: <output>.png)")
    p.add_argument("--no-figure", action="store_true")

    p = sub.add_parser("perturb", help="write a noisy / smoothed / sharpened mesh")
    _common(p)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--smooth", type=int, default=0, metavar="M")
    p.add_argument("--sharpen", type=float, default=0.0, metavar="S")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="OFF, OBJ or PLY output")
    return parser


def _check_writable(path):
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"output directory does not exist: {parent}")


def config_from_args(args) -> RunConfig:
    """Validate flag combinations and resolve output paths."""
    cmd = args.command
    cfg = RunConfig(command=cmd, mesh=args.mesh, source=args.source,
                    normalize_unit_diagonal=args.normalize_unit_diagonal)
    out = Path(args.output)
    if cmd in ("compute", "compare"):
        methods = [args.method] if cmd == "compute" else args.method
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            raise UsageError(f"unknown method(s) {bad}; choose from {METHODS}")
        wave_only = {"--epsilon": args.epsilon, "--mu": args.mu,
                     "--coverage-target": args.coverage_target, "--max-iterations": args.max_iterations}
        if "wave" not in methods:
            used = [k for k, v in wave_only.items() if v is not None]
            if used:
                raise UsageError(f"{', '.join(used)}: valid only with --method wave")
        cfg.method = ",".join(methods)
        cfg.divergence = args.divergence
        if cmd == "compute":
            cfg.delta = [0.05 if args.delta is None else args.delta]
        else:
            cfg.delta = args.delta
        if any(not d > 0 for d in cfg.delta):
            raise UsageError("--delta must be positive")
        cfg.mu = 1.0 if args.mu is None else args.mu
        cfg.epsilon = args.epsilon
        cfg.coverage_target = 1.0 if args.coverage_target is None else args.coverage_target
        cfg.max_iterations = args.max_iterations
        cfg.lumped_mass = args.lumped_mass
        cfg.t_coef = args.t_coef
        cfg.steiner_points = args.steiner_points
        cfg.epsilon_exponent()
        if "wave" in methods:
            cfg.wave_config(cfg.delta[0])  # raises on bad values
    if cmd == "compute":
        cfg.reference_path = args.reference
        cfg.levels = args.levels
        cfg.strict = args.strict
        if cfg.levels < 1:
            raise UsageError("--levels must be >= 1")
        cfg.outputs = {
            "distances": str(out),
            "diagnostics": args.diagnostics or str(out.with_suffix(".json")),
            "ply": args.ply, "contours": args.contours, "figure": args.figure,
        }
    elif cmd == "compare":
        cfg.seed = args.seed
        cfg.reference = args.reference
        cfg.reference_path = args.reference_path
        if args.reference == "csv" and not args.reference_path:
            raise UsageError("--reference csv needs --reference-path")
        if args.reference_path and args.reference != "csv":
            raise UsageError("--reference-path only applies with --reference csv")
        if any(s < 0 for s in args.noise):
            raise UsageError("--noise must be nonnegative")
        cfg.outputs = {"table": str(out),
                       "figure": None if args.no_figure else (args.figure or str(out.with_suffix(".png")))}
    elif cmd == "calibrate":
        cfg.delta = args.delta
        if any(not d > 0 for d in cfg.delta):
            raise UsageError("--delta must be positive")
        cfg.mu = args.mu
        cfg.lumped_mass = args.lumped_mass
        cfg.max_iterations = args.max_iterations
        cfg.epsilon = "auto"
        cfg.outputs = {"trace": str(out),
                       "summary": args.summary or str(out.with_name(out.stem + "_fit.csv")),
                       "figure": None if args.no_figure else (args.figure or str(out.with_suffix(".png")))}
    elif cmd == "perturb":
        cfg.seed = args.seed
        PerturbConfig(args.noise, args.smooth, args.sharpen, args.seed)
        cfg.outputs = {"mesh": str(out)}
    for p in cfg.outputs.values():
        _check_writable(p)
    if cfg.reference_path and not Path(cfg.reference_path).exists():
        raise MissingReferenceError(f"reference file not found: {cfg.reference_path}")
    return cfg


# ---------------------------------------------------------------- commands

def _load(cfg: RunConfig) -> TriangleMesh:
    mesh = resolve_mesh(cfg.mesh)
    if cfg.normalize_unit_diagonal:
        mesh = normalize_unit_diagonal(mesh)
    mesh.check_vertex(cfg.source)
    return mesh


def _solve(mesh: TriangleMesh, cfg: RunConfig, method: str, delta: float, strict: bool = False):
    """Return (distances, diagnostics, seconds) for one method."""
    t0 = time.perf_counter()
    if method == "wave":
        solver = WaveGeodesics(mesh, cfg.wave_config(delta), cfg.divergence)
        result = solver(cfg.source, strict=strict)
    elif method == "heat":
        result = HeatGeodesics(mesh, cfg.t_coef, cfg.divergence, cfg.lumped_mass)(cfg.source)
    else:
        result = dijkstra_distances(mesh, cfg.source, cfg.steiner_points)
    seconds = time.perf_counter() - t0
    diag = dict(result.diagnostics)
    diag.setdefault("iterations", None)
    return np.asarray(result.values), diag, seconds


def cmd_compute(cfg: RunConfig) -> int:
    mesh = _load(cfg)
    delta = cfg.delta[0]
    values, diag, seconds = _solve(mesh, cfg, cfg.method, delta, strict=cfg.strict)
    out = cfg.outputs
    write_distances_csv(values, out["distances"])
    report = {
        "command": "compute",
        "mesh": {"name": _model_name(cfg.mesh), "vertices": mesh.n_vertices,
                 "faces": mesh.n_faces, "bbox_diagonal": mesh.bbox_diagonal},
        "source": cfg.source,
        "method": cfg.method,
        "parameters": {k: v for k, v in asdict(cfg).items() if k not in ("outputs", "command", "mesh")},
        "runtime_seconds": seconds,
        **diag,
    }
    report["method"] = cfg.method
    report["variant"] = diag.get("method", cfg.method)
    if cfg.reference_path:
        exact = read_distances_csv(cfg.reference_path, mesh.n_vertices)
        report["error"] = error_report(values, exact, seconds).summary()
    if out.get("ply"):
        save_ply(mesh, out["ply"], values)
    if out.get("contours"):
        write_contours_obj(isocontours(mesh, values, contour_levels(values, cfg.levels)),
                           out["contours"])
    if out.get("figure"):
        from .plotting import plot_field
        plot_field(mesh, values, out["figure"])
    write_json(report, out["diagnostics"])
    print(f"{cfg.method}: {mesh.n_vertices} vertices, iterations={diag.get('iterations')}, "
          f"coverage={diag.get('coverage', 1.0)}, {seconds:.3f} s -> {out['distances']}")
    return 0


def reference_distances(mesh: TriangleMesh, cfg: RunConfig) -> tuple[np.ndarray, str]:
    """Reference field for ``compare`` on the unperturbed mesh."""
    kind = cfg.reference
    if kind == "auto":
        if is_sphere(mesh):
            kind = "sphere"
        elif is_plane(mesh):
            kind = "plane"
        else:
            kind = "steiner" if cfg.steiner_points > 0 else "dijkstra"
            log.warning("no analytic reference for this mesh; using a %s graph reference", kind)
    if kind == "sphere":
        return analytic_sphere_distances(mesh, cfg.source).values, kind
    if kind == "plane":
        return analytic_plane_distances(mesh, cfg.source).values, kind
    if kind == "dijkstra":
        return dijkstra_distances(mesh, cfg.source).values, kind
    if kind == "steiner":
        return dijkstra_distances(mesh, cfg.source, max(cfg.steiner_points, 1)).values, kind
    if not cfg.reference_path:
        raise MissingReferenceError("no reference file given")
    return read_distances_csv(cfg.reference_path, mesh.n_vertices), "csv"


def cmd_compare(cfg: RunConfig, noise: list[float], no_time: bool = False, model: str | None = None) -> int:
    mesh = _load(cfg)
    exact, kind = reference_distances(mesh, cfg)
    model = model or _model_name(cfg.mesh)
    rows, scatter = [], {}
    for s in noise:
        target = add_noise(mesh, s, cfg.seed) if s > 0 else mesh
        for method in cfg.method.split(","):
            deltas = cfg.delta if method == "wave" else [cfg.delta[0]]
            for delta in deltas:
                values, _, seconds = _solve(target, cfg, method, delta)
                rep = error_report(values, exact, seconds)
                rows.append({"model": model, "method": method, "faces": mesh.n_faces,
                             "delta": delta if method == "wave" else float("nan"), "noise": s,
                             "mean_raw": rep.mean_raw, "mean_relative": rep.mean_relative,
                             "max_raw": rep.max_raw, "time_seconds": seconds})
                scatter[f"{method} δ={delta:g} s={s:g}" if method == "wave" else f"{method} s={s:g}"] = (exact, values)
    with open(cfg.outputs["table"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for r in rows:
            w.writerow([r["model"], r["method"], r["faces"], _num(r["delta"]), _num(r["noise"]),
                        _num(r["mean_raw"]), _num(r["mean_relative"]), _num(r["max_raw"]),
                        "" if no_time else _num(r["time_seconds"])])
    if cfg.outputs.get("figure"):
        from .plotting import plot_comparison
        plot_comparison(rows, scatter, cfg.outputs["figure"])
    for r in rows:
        print(f"{r['method']:8s} delta={_num(r['delta']):>6s} noise={r['noise']:<5g} "
              f"mean_rel={r['mean_relative']:.5f} max_raw={r['max_raw']:.5f} ({kind} reference)")
    return 0


def _num(x) -> str:
    """Shortest round-trip text for a float; empty for nan/inf."""
    x = float(x)
    return repr(x) if np.isfinite(x) else ""


def cmd_calibrate(cfg: RunConfig, window: tuple[int, int]) -> int:
    from .fem import fem_operators
    from .wave import wave_system

    mesh = _load(cfg)
    ops = fem_operators(mesh)
    runs = {}
    trace_rows = []
    for delta in cfg.delta:
        config = WaveConfig(delta=delta, mu=cfg.mu, epsilon_exponent="auto", lumped_mass=cfg.lumped_mass,
                            calibration_window=tuple(window), max_iterations=cfg.max_iterations)
        factor = wave_system(ops, config)
        schedule = calibrate_epsilon(mesh, cfg.source, config, ops, factor)
        trace = []
        field_ = propagate(mesh, ops, cfg.source, config, schedule, factor, trace=trace)
        steps = [t for t in trace if t[0] >= 1]
        heights = np.array([t[1] for t in steps])
        eps = np.array([t[2] for t in steps])
        runs[delta] = {"heights": heights, "epsilon": eps, "exponent": schedule.a, "c": schedule.c,
                       "iterations": field_.iterations, "coverage": field_.coverage}
        trace_rows += [(delta, i, h, e) for (i, h, e, _) in steps]
    with open(cfg.outputs["trace"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta", "iteration", "max_height", "epsilon"])
        for d, i, h, e in trace_rows:
            w.writerow([_num(d), i, _num(h), _num(e)])
    with open(cfg.outputs["summary"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta", "exponent", "c", "iterations", "coverage"])
        for d, r in runs.items():
            w.writerow([_num(d), _num(r["exponent"]), _num(r["c"]), r["iterations"], _num(r["coverage"])])
    if cfg.outputs.get("figure"):
        from .plotting import plot_calibration
        plot_calibration(runs, cfg.outputs["figure"])
    for d, r in runs.items():
        print(f"delta={d:g}: exponent a={r['exponent']:.4f}, c={r['c']:.4g}, "
              f"iterations={r['iterations']}, coverage={r['coverage']:.4f}")
    return 0


def cmd_perturb(cfg: RunConfig, pc: PerturbConfig) -> int:
    mesh = _load(cfg)
    out = pc.apply(mesh)
    save_mesh(out, cfg.outputs["mesh"])
    print(f"wrote {cfg.outputs['mesh']} ({out.n_vertices} vertices, {out.n_faces} faces)")
    return 0


def _emit_error(exc: BaseException):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (WaveGeoError, ValueError) as exc:
        _emit_error(exc)
        return 1
    try:
        if args.command == "compute":
            return cmd_compute(cfg)
        if args.command == "compare":
            return cmd_compare(cfg, args.noise, args.no_time, args.model)
        if args.command == "calibrate":
            return cmd_calibrate(cfg, tuple(args.window))
        return cmd_perturb(cfg, PerturbConfig(args.noise, args.smooth, args.sharpen, args.seed))
    except UsageError as exc:
        parser.error(str(exc))
    except (WaveGeoError, OSError, ValueError) as exc:
        _emit_error(exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
