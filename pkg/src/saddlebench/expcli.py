"""Experiment runner and command-line interface.

Presets rebuild the benchmark experiments end to end: construct the game,
compute its equilibrium data exactly (LP for matrix games, analytic points
for the toys), run each (algorithm, step size) cell, emit one CSV per
(algorithm, step size, metric) plus one overlay figure per metric, and write
a plain-text report.  All outputs are deterministic: CSV floats carry 17
significant digits, files are written atomically, and figures are rendered
with a fixed hash salt and no timestamp metadata.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import analysis, equilibrium, problems, solvers
from .errors import (
    NonPositiveValue,
    ParseError,
    SaddlebenchError,
    ValidationError,
)
from . import __version__
from .geometry import Regularizer
from .numerics import RateFit, fit_log_linear, fit_log_log

PRESETS = ("fig1", "curved", "strongly_convex", "power_toy", "multi_ne", "custom")
MATRIX_PRESETS = ("fig1", "multi_ne", "custom")
METRICS = ("kl", "dist2", "gap", "avg_gap", "theta")
SUBLINEAR_PRESETS = ("curved", "power_toy")

_DEFAULT_ETAS = {
    "fig1": [0.125, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0],
    "curved": [1.0 / 64.0],
    "strongly_convex": [1.0 / 32.0],
    "power_toy": [0.125],
    "multi_ne": [0.125],
    "custom": [0.125],
}
_DEFAULT_METRICS = {
    "fig1": ["kl", "dist2", "gap"],
    "curved": ["dist2"],
    "strongly_convex": ["dist2"],
    "power_toy": ["dist2"],
    "multi_ne": ["dist2"],
    "custom": ["dist2", "gap"],
}
_PLOT_FLOOR = 1e-300


@dataclass
class ExperimentConfig:
    preset: str
    M: int = 32
    N: int = 32
    seed: int = 1
    n: int = 2
    eta_list: list[float] = field(default_factory=list)
    steps: int = 0
    metrics: list[str] = field(default_factory=list)
    output_dir: str = "out"
    emit_svg: bool = True


@dataclass
class CellResult:
    algorithm: str
    eta: float
    diverged_at: int | None
    finals: dict
    initials: dict
    fits: dict


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    equilibrium_summary: dict
    cells: list[CellResult]
    manifest: list[str]
    any_diverged: bool


def _parse_scalar(text: str):
    t = text.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def parse_config(text: str) -> ExperimentConfig:
    """Parse the key:value experiment-config format (dotted keys nest)."""
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if ":" not in stripped:
            raise ParseError(f"line {lineno}: expected 'key: value', got {line!r}")
        key, _, value = stripped.partition(":")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError(f"line {lineno}: empty key")
        if key in raw:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    known = {
        "preset", "problem.M", "problem.N", "problem.seed", "problem.n",
        "eta_list", "steps", "metrics", "output_dir", "emit_svg",
    }
    unknown = set(raw) - known
    if unknown:
        raise ParseError(f"unknown keys: {sorted(unknown)}")
    if "preset" not in raw:
        raise ValidationError("config must name a preset")
    preset = raw["preset"]
    if preset not in PRESETS:
        raise ValidationError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    cfg = ExperimentConfig(preset=preset)
    if preset == "custom" and ("problem.M" not in raw or "problem.N" not in raw):
        raise ValidationError("custom preset needs problem.M and problem.N")
    cfg.M = int(_parse_scalar(raw.get("problem.M", "32")))
    cfg.N = int(_parse_scalar(raw.get("problem.N", "32")))
    cfg.seed = int(_parse_scalar(raw.get("problem.seed", "1")))
    cfg.n = int(_parse_scalar(raw.get("problem.n", "2")))
    if "eta_list" in raw:
        cfg.eta_list = [float(v) for v in raw["eta_list"].split(",") if v.strip()]
    else:
        cfg.eta_list = list(_DEFAULT_ETAS[preset])
    if "steps" in raw:
        cfg.steps = int(_parse_scalar(raw["steps"]))
    else:
        cfg.steps = 10**6 if preset == "fig1" else 10**4
    if "metrics" in raw:
        cfg.metrics = [m.strip() for m in raw["metrics"].split(",") if m.strip()]
    else:
        cfg.metrics = list(_DEFAULT_METRICS[preset])
    cfg.output_dir = raw.get("output_dir", "out")
    if "emit_svg" in raw:
        v = _parse_scalar(raw["emit_svg"])
        if not isinstance(v, bool):
            raise ValidationError("emit_svg must be true or false")
        cfg.emit_svg = v
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: ExperimentConfig) -> None:
    if not cfg.eta_list:
        raise ValidationError("eta_list must be nonempty")
    if any(e <= 0 for e in cfg.eta_list):
        raise ValidationError("step sizes must be positive")
    if cfg.steps < 1:
        raise ValidationError("steps must be >= 1")
    for m in cfg.metrics:
        if m not in METRICS:
            raise ValidationError(f"unknown metric {m!r}")
        if m in ("gap", "avg_gap") and cfg.preset not in MATRIX_PRESETS:
            raise ValidationError(f"metric {m!r} is only defined for matrix presets")
        if m == "kl" and cfg.preset == "curved":
            raise ValidationError("kl metric needs simplex feasible sets")
    if cfg.preset in ("curved", "power_toy") and cfg.n < 2:
        raise ValidationError("problem.n must be >= 2")
    if cfg.preset == "custom" and (cfg.M < 1 or cfg.N < 1):
        raise ValidationError("problem.M and problem.N must be >= 1")


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [
        f"preset: {cfg.preset}",
        f"problem.M: {cfg.M}",
        f"problem.N: {cfg.N}",
        f"problem.seed: {cfg.seed}",
        f"problem.n: {cfg.n}",
        "eta_list: " + ", ".join(f"{e:.17g}" for e in cfg.eta_list),
        f"steps: {cfg.steps}",
        "metrics: " + ", ".join(cfg.metrics),
        f"output_dir: {cfg.output_dir}",
        f"emit_svg: {'true' if cfg.emit_svg else 'false'}",
    ]
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, data: bytes) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(series: list[analysis.MetricSeries], path: str) -> None:
    """UTF-8 CSV, header 't,<names...>', 17-significant-digit floats, LF ends."""
    if series:
        offsets = {s.t_offset for s in series}
        lengths = {len(s.values) for s in series}
        if len(offsets) > 1 or len(lengths) > 1:
            raise ValidationError("all series must share one t range")
    lines = ["t," + ",".join(s.name for s in series) if series else "t"]
    if series:
        t0 = series[0].t_offset
        cols = [s.values for s in series]
        for i in range(len(cols[0])):
            lines.append(f"{t0 + i}," + ",".join(f"{c[i]:.17g}" for c in cols))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def emit_svg(series: list[analysis.MetricSeries], axes: str, path: str) -> None:
    """Deterministic SVG line chart; axes is 'log_y' or 'log_log'."""
    if axes not in ("log_y", "log_log"):
        raise ValidationError(f"unknown axes mode {axes!r}")
    for s in series:
        if np.any(np.asarray(s.values) <= 0.0):
            raise NonPositiveValue(f"series {s.name!r} has nonpositive values on a log axis")
        if axes == "log_log" and s.t_offset < 1:
            raise NonPositiveValue("log-log axes need t values >= 1")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "saddlebench", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        try:
            for s in series:
                t = np.arange(len(s.values)) + s.t_offset
                (line,) = ax.plot(t, s.values, linewidth=1.2, label=s.name)
                line.set_gid(f"series:{s.name}")
            ax.set_yscale("log")
            if axes == "log_log":
                ax.set_xscale("log")
            ax.set_xlabel("t")
            ax.grid(True, which="major", alpha=0.3)
            if series:
                ax.legend(fontsize=8)
            fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".tmp-", suffix=".svg")
            os.close(fd)
            fig.savefig(tmp, format="svg", metadata={"Date": None})
            os.replace(tmp, path)
        finally:
            plt.close(fig)


def _build_problem(cfg: ExperimentConfig):
    if cfg.preset in ("fig1", "custom"):
        return problems.random_matrix_game(cfg.M, cfg.N, cfg.seed)
    if cfg.preset == "multi_ne":
        return problems.multi_ne_game()
    if cfg.preset == "curved":
        return problems.CurvedBilinear(cfg.n)
    if cfg.preset == "strongly_convex":
        return problems.StronglyConvexToy()
    if cfg.preset == "power_toy":
        return problems.PowerToy(cfg.n)
    raise ValidationError(f"unknown preset {cfg.preset!r}")


def _algorithms(preset: str) -> list[str]:
    return ["OGDA", "OMWU"] if preset in MATRIX_PRESETS else ["OGDA"]


def _kl_to_reference(ref_xs, ref_ys, xs, ys):
    """Row-wise KL(ref, z_t); iterate entries are floored to keep logs finite."""
    cx = np.maximum(xs, _PLOT_FLOOR)
    cy = np.maximum(ys, _PLOT_FLOOR)
    return analysis._kl_rows(ref_xs, cx) + analysis._kl_rows(ref_ys, cy)


def _metric_series(tag, problem, cfg, info, target, traj) -> analysis.MetricSeries:
    # when the optimal faces are not a single point but exceed the exact
    # projection cap, distances fall back to the LP equilibrium point
    xs, ys = traj.xs, traj.ys
    use_faces = info is not None and not info.unique and info.face_projection_supported
    if tag == "dist2":
        if info is not None and use_faces:
            vals = equilibrium.distances_to_equilibria(info, xs, ys)
        else:
            zs = info.z_star if info is not None else target
            vals = ((xs - zs.x) ** 2).sum(-1) + ((ys - zs.y) ** 2).sum(-1)
        return analysis.MetricSeries("dist2", vals, 0)
    if tag == "kl":
        if use_faces:
            # measure against the per-step projection onto the optimal faces
            px = info.x_star_polytope._project_batch(xs)
            py = info.y_star_polytope._project_batch(ys)
            vals = _kl_to_reference(px, py, xs, ys)
        else:
            zs = info.z_star if info is not None else target
            vals = _kl_to_reference(
                np.broadcast_to(zs.x, xs.shape), np.broadcast_to(zs.y, ys.shape), xs, ys
            )
        return analysis.MetricSeries("kl", vals, 0)
    if tag == "gap":
        return analysis.MetricSeries("gap", analysis.duality_gaps_matrix(problem.G, xs, ys), 0)
    if tag == "avg_gap":
        return analysis.average_duality_gap(problem.G, traj)
    if tag == "theta":
        if info is not None:
            theta_target = info if (info.unique or use_faces) else info.z_star
        else:
            theta_target = target
        trace = analysis.theta_zeta_trace(traj, problem, theta_target)
        return analysis.MetricSeries("theta", trace.theta, 1)
    raise ValidationError(f"unknown metric {tag!r}")


def _fit_series(cfg: ExperimentConfig, s: analysis.MetricSeries) -> RateFit | None:
    nvals = len(s.values)
    if nvals < 8:
        return None
    if cfg.preset in SUBLINEAR_PRESETS:
        lo = max(10, nvals // 10)
        lo = max(lo, 1 - s.t_offset + 1)
        window = (lo, nvals)
        fit = fit_log_log
    else:
        window = (nvals // 2, nvals)
        fit = fit_log_linear
    vals = s.values[window[0]:window[1]]
    if np.any(vals <= 0.0) or not np.all(np.isfinite(vals)):
        return None
    return fit(s.values, window, t_offset=s.t_offset)


def _eta_label(eta: float) -> str:
    return f"{eta:g}"


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every (algorithm, step size) cell of the preset and write outputs."""
    _validate_config(cfg)
    problem = _build_problem(cfg)
    info = None
    target = problem.known_equilibrium
    if cfg.preset in MATRIX_PRESETS:
        info = equilibrium.solve_matrix_game(problem.G)
    outdir = os.path.join(cfg.output_dir, cfg.preset)
    manifest: list[str] = []
    cells: list[CellResult] = []
    overlay: dict[str, list[analysis.MetricSeries]] = {m: [] for m in cfg.metrics}
    initial = problems.default_initial(problem)
    any_diverged = False

    for algo in _algorithms(cfg.preset):
        reg = Regularizer.ENTROPY if algo == "OMWU" else Regularizer.EUCLIDEAN
        for eta in cfg.eta_list:
            label = f"{algo}-eta{_eta_label(eta)}"
            try:
                import warnings as _warnings

                with _warnings.catch_warnings():
                    _warnings.simplefilter("ignore", RuntimeWarning)
                    traj = solvers.run(
                        problem,
                        solvers.SolverConfig(reg, eta, cfg.steps, initial, record_secondary=True),
                    )
                finals: dict = {}
                initials: dict = {}
                fits: dict = {}
                for tag in cfg.metrics:
                    s = _metric_series(tag, problem, cfg, info, target, traj)
                    finals[tag] = float(s.values[-1])
                    initials[tag] = float(s.values[0])
                    f = _fit_series(cfg, s)
                    fits[tag] = f
                    path = os.path.join(outdir, f"{label}-{tag}.csv")
                    emit_csv([analysis.MetricSeries(f"{label}-{tag}", s.values, s.t_offset)], path)
                    manifest.append(os.path.relpath(path, cfg.output_dir))
                    plot_vals = np.maximum(s.values, _PLOT_FLOOR)
                    plot_off = s.t_offset
                    if cfg.preset in SUBLINEAR_PRESETS and plot_off < 1:
                        plot_vals = plot_vals[1:]
                        plot_off = 1
                    overlay[tag].append(analysis.MetricSeries(label, plot_vals, plot_off))
                diverged = traj.diverged_at
            except SaddlebenchError as exc:
                raise type(exc)(f"cell {algo} eta={_eta_label(eta)}: {exc}") from exc
            if diverged is not None:
                any_diverged = True
            cells.append(CellResult(algo, eta, diverged, finals, initials, fits))

    if cfg.emit_svg:
        axes = "log_log" if cfg.preset in SUBLINEAR_PRESETS else "log_y"
        for tag, series_list in overlay.items():
            if not series_list:
                continue
            path = os.path.join(outdir, f"{tag}.svg")
            emit_svg(series_list, axes, path)
            manifest.append(os.path.relpath(path, cfg.output_dir))

    eq_summary = {}
    if info is not None:
        eq_summary = {
            "rho": info.rho,
            "x_star": info.x_star.tolist(),
            "y_star": info.y_star.tolist(),
            "supp_x": info.supp_x.tolist(),
            "supp_y": info.supp_y.tolist(),
            "unique": info.unique,
            "xi": info.xi,
            "epsilon": info.epsilon,
        }
    elif target is not None:
        eq_summary = {"x_star": target.x.tolist(), "y_star": target.y.tolist(), "unique": True}

    report = ExperimentReport(cfg, eq_summary, cells, manifest, any_diverged)
    report_path = os.path.join(outdir, "report.txt")
    manifest.append(os.path.relpath(report_path, cfg.output_dir))
    _atomic_write(report_path, _render_report(report).encode("utf-8"))
    return report


def _render_report(report: ExperimentReport) -> str:
    out = ["# experiment report", "", "## config", ""]
    out.extend("  " + line for line in serialize_config(report.config).splitlines())
    out += ["", "## equilibrium", ""]
    for k, v in report.equilibrium_summary.items():
        if isinstance(v, float):
            out.append(f"  {k}: {v:.17g}")
        else:
            out.append(f"  {k}: {v}")
    out += ["", "## cells", ""]
    for c in report.cells:
        line = f"  {c.algorithm} eta={_eta_label(c.eta)}: diverged_at={c.diverged_at}"
        for tag in report.config.metrics:
            line += f" final_{tag}={c.finals.get(tag, float('nan')):.6g}"
            f = c.fits.get(tag)
            if f is not None:
                line += f" slope_{tag}={f.slope:.6g} r2_{tag}={f.r_squared:.6g}"
            if c.finals.get(tag, 0.0) > c.initials.get(tag, 0.0):
                line += f" increased_{tag}=true"
        out.append(line)
    out += ["", "## manifest", ""]
    out.extend("  " + m for m in report.manifest)
    return "\n".join(out) + "\n"


def _cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    report = run_experiment(cfg)
    print(f"wrote {len(report.manifest)} files under {cfg.output_dir}/{cfg.preset}")
    return 3 if report.any_diverged else 0


def _cmd_preset(args) -> int:
    cfg = parse_config(f"preset: {args.name}\n")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.steps is not None:
        cfg.steps = args.steps
    if args.out is not None:
        cfg.output_dir = args.out
    _validate_config(cfg)
    report = run_experiment(cfg)
    print(f"wrote {len(report.manifest)} files under {cfg.output_dir}/{cfg.preset}")
    return 3 if report.any_diverged else 0


def _cmd_certify(args) -> int:
    rows = []
    with open(args.matrix, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([float(v) for v in line.split(",")])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValidationError("matrix CSV must be rectangular and nonempty")
    G = np.array(rows, dtype=float)
    info = equilibrium.solve_matrix_game(G)
    print(f"rho: {info.rho:.17g}")
    print(f"x_star: {[round(float(v), 12) for v in info.x_star]}")
    print(f"y_star: {[round(float(v), 12) for v in info.y_star]}")
    print(f"supp_x: {info.supp_x.tolist()}")
    print(f"supp_y: {info.supp_y.tolist()}")
    print(f"unique: {info.unique}")
    print(f"xi: {info.xi if info.xi is not None else 'undefined'}")
    print(f"epsilon: {info.epsilon:.17g}")
    if info.unique and min(G.shape) > 1:
        cx, cy = equilibrium.estimate_cx_cy(G, info, samples=256, seed=0)
        print(f"cx_upper_estimate: {cx:.17g}")
        print(f"cy_upper_estimate: {cy:.17g}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="saddlebench", description="saddle-point experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_preset = sub.add_parser("preset", help="run a named preset with defaults")
    p_preset.add_argument("name", choices=PRESETS)
    p_preset.add_argument("--seed", type=int, default=None)
    p_preset.add_argument("--steps", type=int, default=None)
    p_preset.add_argument("--out", default=None)
    p_cert = sub.add_parser("certify", help="equilibrium report for a payoff matrix CSV")
    p_cert.add_argument("matrix")
    sub.add_parser("version", help="print the package version")
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "preset":
            return _cmd_preset(args)
        if args.command == "certify":
            return _cmd_certify(args)
        if args.command == "version":
            print(__version__)
            return 0
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SaddlebenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
