"""Command-line interface: curve generation, construction, verification, export.

Exit status: 0 success, 1 precondition error, 2 gate failure, 3 I/O or
corrupt-file error. Settings come from the JSON config named by --config
(or $HOPFCH2_CONFIG); explicit flags override it.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, plotting
from .config import CONFIG_ENV_VAR, CorruptDataError, PreconditionError, RunConfig, load_config
from .curves import TWO_PI, CurveReport, great_circle_curve, horizontal_lift, twisted_circle_curve, validate
from .frames import HALF_PI, ModelParams
from .horosphere import DEFAULT_WINDOW, run_oracle
from .reconstruction import GridSpec, build_patch, immersion_check
from .verify import verify_patch

EXIT_OK, EXIT_PRECONDITION, EXIT_GATES, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("hopfch2")


def _complex_vector(text: str) -> np.ndarray:
    """'1,0' or '0.6j,0.8' -> complex vector."""
    try:
        return np.array([complex(part.strip().replace("i", "j")) for part in text.split(",")])
    except ValueError:
        raise PreconditionError(f"cannot parse complex vector {text!r}") from None


def _out(msg: str = "") -> None:
    print(msg)


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides = {"threads": getattr(args, "threads", None), "h": getattr(args, "h", None)}
    return cfg.updated(**overrides)


def _print_curve_report(rep: CurveReport) -> None:
    for line in rep.lines():
        _out("  " + line)


def _validate_curve(curve, cfg: RunConfig) -> CurveReport:
    tol = cfg.tolerances
    return validate(curve, tol.tol_contact, tol.speed_min, tol.tol_sphere)


def cmd_curve_gen(args, cfg: RunConfig) -> int:
    if args.type == "great-circle":
        curve = great_circle_curve(_complex_vector(args.p), _complex_vector(args.q), args.samples)
    elif args.type == "lift":
        params = {"height": args.height} if args.base == "latitude" else {}
        curve = horizontal_lift(args.base, _complex_vector(args.w0), steps=args.steps,
                                t_span=(0.0, args.t_max), base_params=params,
                                tol_lift=cfg.tolerances.tol_lift)
    else:
        curve = twisted_circle_curve(args.samples)
    rep = _validate_curve(curve, cfg)
    _out(f"curve {args.type}: {len(curve.t)} samples")
    _print_curve_report(rep)
    if not rep.admissible and not args.allow_inadmissible:
        _out("not written (use --allow-inadmissible to keep it)")
        return EXIT_PRECONDITION
    io.write_curve(args.output, curve)
    _out(f"wrote {args.output}")
    return EXIT_OK


def cmd_curve_check(args, cfg: RunConfig) -> int:
    curve = io.read_curve(args.path)
    rep = _validate_curve(curve, cfg)
    _out(f"{args.path}: {curve.generator.get('type')} with {len(curve.t)} samples")
    _print_curve_report(rep)
    return EXIT_OK if rep.admissible else EXIT_PRECONDITION


def cmd_construct(args, cfg: RunConfig) -> int:
    if abs(args.phi) >= HALF_PI:
        raise PreconditionError(
            f"|phi| = {abs(args.phi):g} >= pi/2: the two-curve construction needs |phi| < pi/2; "
            "for the borderline case run `hopfch2 oracle horosphere`")
    params = ModelParams(args.r, args.phi)
    curves = [io.read_curve(p) for p in (args.curve1, args.curve2)]
    for path, c in zip((args.curve1, args.curve2), curves):
        rep = _validate_curve(c, cfg)
        if not rep.admissible:
            _out(f"{path}: " + rep.lines()[-1])
            if not args.allow_inadmissible:
                return EXIT_PRECONDITION
    n = tuple(args.grid) if args.grid else cfg.grid
    grid = GridSpec(*n, s_range=_range(args.s_range), t_range=_range(args.t_range),
                    tau_range=_range(args.tau_range) or cfg.tau_range)
    patch = build_patch(curves[0], curves[1], params, grid, cfg.tolerances.tol_coincide)
    _, flagged = immersion_check(patch, cfg.tolerances.sing_min)
    io.write_patch(args.output, patch)
    _out(f"patch {grid.n_s}x{grid.n_t}x{grid.n_tau}, r={params.r:g}, phi={params.phi:g}")
    _out(f"  excluded nodes (coincident null lines): {patch.n_excluded}")
    _out(f"  immersion-flagged nodes: {int(flagged.sum())}")
    _out(f"wrote {args.output}")
    return EXIT_OK


def _range(v):
    return None if v is None else (float(v[0]), float(v[1]))


def _print_gates(gates) -> None:
    _out(f"  {'gate':<22} {'max':>12} {'threshold':>12}  status")
    for g in gates:
        mx = "nan" if g["max"] is None else f"{g['max']:.3e}"
        _out(f"  {g['name']:<22} {mx:>12} {g['threshold']:>12.1e}  {'pass' if g['passed'] else 'FAIL'}")


def _report_paths(output) -> dict[str, Path]:
    out = Path(output)
    stem = out.with_suffix("")
    return {"json": out, "nodes": Path(f"{stem}.nodes.csv"), "gates": Path(f"{stem}.gates.csv"),
            "gates_png": Path(f"{stem}.gates.png"), "curv_png": Path(f"{stem}.curvatures.png"),
            "ball_png": Path(f"{stem}.ball.png"), "spectrum_png": Path(f"{stem}.spectrum.png")}


def cmd_verify(args, cfg: RunConfig) -> int:
    patch = io.read_patch(args.patch)
    report = verify_patch(patch, cfg)
    paths = _report_paths(args.output)
    d = io.report_to_dict(report)
    io.write_report(paths["json"], d)
    io.write_report_csv(paths["nodes"], d)
    io.write_gates_csv(paths["gates"], d)
    if not args.no_figures:
        plotting.gate_figure(d["gates"], paths["gates_png"], f"verification {Path(args.patch).name}")
        plotting.curvature_figure(report.nodes, report.params.alpha, report.params.c, paths["curv_png"])
        plotting.ball_figure(patch.ball, patch.excluded, paths["ball_png"])
    _out(f"verified {args.patch}: " + ", ".join(f"{k} {v}" for k, v in report.counts.items()))
    _print_gates(d["gates"])
    for k, v in report.informational.items():
        _out(f"  info {k} = {v:.3e}")
    _out(f"wrote {paths['json']}")
    _out("all gates pass" if report.passed else "GATE FAILURE")
    return EXIT_OK if report.passed else EXIT_GATES


def cmd_oracle(args, cfg: RunConfig) -> int:
    if not args.r > 0 or not args.level > 0:
        raise PreconditionError("r and level must be positive")
    params = ModelParams.borderline_params(args.r)
    level = args.level
    report = run_oracle(params, level, tuple(args.grid), cfg, DEFAULT_WINDOW)
    paths = _report_paths(args.output)
    d = io.report_to_dict(report)
    io.write_report(paths["json"], d)
    io.write_report_csv(paths["nodes"], d)
    io.write_gates_csv(paths["gates"], d)
    if not args.no_figures:
        plotting.gate_figure(d["gates"], paths["gates_png"], "horosphere oracle")
        plotting.spectrum_figure(report.nodes, params.r, paths["spectrum_png"])
    eig = np.stack([report.nodes[f"eig_{k}"] for k in (1, 2, 3)], axis=-1)
    _out(f"horosphere r={params.r:g} level={level:g}: " + ", ".join(f"{k} {v}" for k, v in report.counts.items()))
    _out("  mean spectrum " + " ".join(f"{x:.10f}" for x in eig.mean(axis=0))
         + f"  (expected {1 / params.r:g} {1 / params.r:g} {2 / params.r:g})")
    c = report.sigma_centroid
    _out(f"  sigma image centre ({c[0].real:.6f}{c[0].imag:+.6f}i, {c[1].real:.6f}{c[1].imag:+.6f}i), "
         f"variance {report.gate('sigma_variance')['max']:.3e}")
    _print_gates(d["gates"])
    _out(f"wrote {paths['json']}")
    return EXIT_OK if report.passed else EXIT_GATES


def cmd_export(args, cfg: RunConfig) -> int:
    patch = io.read_patch(args.patch)
    axis, index = io.parse_slice(args.slice)
    keep = io.parse_projection(args.projection)
    csv_path = io.write_mesh(args.output, patch, axis, index, keep)
    _out(f"wrote {args.output} and {csv_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON run configuration (default ${CONFIG_ENV_VAR})")
    common.add_argument("--threads", type=int, help="worker threads for node-parallel maps")
    common.add_argument("--h", type=float, help="finite-difference step (gates rescale with h^2)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hopfch2", description="Hopf hypersurfaces in CH^2 from contact curves.")
    sub = p.add_subparsers(dest="command", required=True)

    curve = sub.add_parser("curve", help="generate or check contact curves")
    csub = curve.add_subparsers(dest="curve_command", required=True)
    gen = csub.add_parser("gen", parents=[common], help="write a curve file")
    gen.add_argument("type", choices=("great-circle", "lift", "twisted"))
    gen.add_argument("-o", "--output", required=True)
    gen.add_argument("--p", default="1,0", help="great circle: first orthonormal vector")
    gen.add_argument("--q", default="0,1", help="great circle: second orthonormal vector")
    gen.add_argument("--samples", type=int, default=257)
    gen.add_argument("--base", default="equator", choices=("equator", "latitude", "constant"))
    gen.add_argument("--height", type=float, default=0.0, help="latitude base curve height")
    gen.add_argument("--w0", default="1,0", help="lift starting point on S^3")
    gen.add_argument("--steps", type=int, default=2000)
    gen.add_argument("--t-max", type=float, default=TWO_PI)
    gen.add_argument("--allow-inadmissible", action="store_true")
    gen.set_defaults(func=cmd_curve_gen)
    chk = csub.add_parser("check", parents=[common], help="validate a curve file")
    chk.add_argument("path")
    chk.set_defaults(func=cmd_curve_check)

    con = sub.add_parser("construct", parents=[common], help="build a patch from two curve files")
    con.add_argument("curve1")
    con.add_argument("curve2")
    con.add_argument("--r", type=float, default=1.0)
    con.add_argument("--phi", type=float, default=0.0)
    con.add_argument("--grid", type=int, nargs=3, metavar=("N_S", "N_T", "N_TAU"))
    con.add_argument("--s-range", type=float, nargs=2)
    con.add_argument("--t-range", type=float, nargs=2)
    con.add_argument("--tau-range", type=float, nargs=2)
    con.add_argument("--allow-inadmissible", action="store_true")
    con.add_argument("-o", "--output", required=True, help="patch file (.json or .npz)")
    con.set_defaults(func=cmd_construct)

    ver = sub.add_parser("verify", parents=[common], help="run the verification gates on a patch")
    ver.add_argument("patch")
    ver.add_argument("-o", "--output", required=True, help="report JSON; CSV and PNG files go alongside")
    ver.add_argument("--no-figures", action="store_true")
    ver.set_defaults(func=cmd_verify)

    ora = sub.add_parser("oracle", help="reference computations")
    osub = ora.add_subparsers(dest="oracle_command", required=True)
    hor = osub.add_parser("horosphere", parents=[common], help="borderline horosphere oracle")
    hor.add_argument("--r", type=float, default=1.0)
    hor.add_argument("--level", type=float, default=1.0, help="level h0 of |<zeta, n>|")
    hor.add_argument("--grid", type=int, nargs=3, default=(8, 8, 8))
    hor.add_argument("-o", "--output", required=True)
    hor.add_argument("--no-figures", action="store_true")
    hor.set_defaults(func=cmd_oracle)

    exp = sub.add_parser("export", parents=[common], help="OBJ mesh and CSV of a patch slice")
    exp.add_argument("patch")
    exp.add_argument("--slice", default="tau=0", help="fixed axis and index, e.g. tau=0")
    exp.add_argument("--projection", default="im_w2", help="ball coordinate to drop")
    exp.add_argument("-o", "--output", required=True)
    exp.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except CorruptDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
