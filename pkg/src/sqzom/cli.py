"""``sqzom`` command-line interface.

Exit codes: 0 success, 1 domain error, 2 usage or configuration error,
3 verification failure. Errors go to stderr as one JSON line
``{"error": kind, "message": ...}``.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core_model import DriveState, SystemParams, load_params
from .errors import ConfigError, SqzomError
from .noise_budget import BUDGET_COLUMNS, budget, standard_drives, sweep_cooperativity
from .spectra import output_psd

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3
PARAMS_ENV = "SQZOM_PARAMS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


class Formatter:
    """Number formatting shared by the CSV and JSON emitters."""

    def __init__(self, precision: int = 17):
        if not 1 <= precision <= 17:
            raise UsageError("--precision must be between 1 and 17")
        self.precision = precision

    def num(self, x) -> str:
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.{self.precision}g}"

    def csv(self, header, rows) -> str:
        out = io.StringIO()
        out.write(",".join(header) + "\n")
        for row in rows:
            out.write(",".join(self.num(v) if not isinstance(v, str) else v for v in row) + "\n")
        return out.getvalue()

    def _jsonable(self, obj):
        if isinstance(obj, dict):
            return {str(k): self._jsonable(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [self._jsonable(v) for v in obj]
        if isinstance(obj, np.ndarray):
            return [self._jsonable(v) for v in obj.tolist()]
        if isinstance(obj, (bool, np.bool_)):
            return bool(obj)
        if isinstance(obj, (int, np.integer)):
            return int(obj)
        if isinstance(obj, (float, np.floating)):
            x = float(obj)
            if not math.isfinite(x):
                return None
            return float(self.num(x))
        return obj

    def json(self, obj) -> str:
        return json.dumps(self._jsonable(obj), sort_keys=True, indent=2) + "\n"


def _resolve_params(path: str | None) -> SystemParams:
    path = path or os.environ.get(PARAMS_ENV) or None
    return load_params(path)


def _write(text: str, path: str | None = None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _drive(args) -> DriveState:
    return DriveState(r=args.r, theta=math.radians(args.theta_deg), C=args.C)


# ----------------------------------------------------------------------------
# subcommands


def cmd_budget(args, params, fmt):
    b = budget(_drive(args), params)
    if args.out == "csv":
        _write(fmt.csv(BUDGET_COLUMNS, [[getattr(b, c) for c in BUDGET_COLUMNS]]), args.output)
    else:
        _write(fmt.json(b.as_dict()), args.output)
    return EXIT_OK


def _c_grid(args):
    if args.c_grid:
        return np.array([float(v) for v in args.c_grid.split(",")])
    return np.geomspace(args.c_min, args.c_max, args.points)


def cmd_sweep(args, params, fmt):
    family = standard_drives(args.r)
    if args.drive != "all":
        family = {args.drive: family[args.drive]}
    sweep = sweep_cooperativity(family, params, _c_grid(args))
    if args.out == "json":
        _write(fmt.json({k: [b.as_dict() for b in v] for k, v in sweep.items()}), args.output)
        return EXIT_OK
    if args.drive == "all":
        header = ["drive", *BUDGET_COLUMNS]
        rows = [[label, *[getattr(b, c) for c in BUDGET_COLUMNS]]
                for label, items in sweep.items() for b in items]
    else:
        header = list(BUDGET_COLUMNS)
        rows = [[getattr(b, c) for c in BUDGET_COLUMNS] for b in sweep[args.drive]]
    _write(fmt.csv(header, rows), args.output)
    return EXIT_OK


def cmd_spectrum(args, params, fmt):
    from .spectra import default_grid

    spec = output_psd(_drive(args), params, default_grid(args.span_hz, args.points),
                      math.radians(args.angle_deg), model=args.model)
    if args.out == "csv":
        _write(fmt.csv(["offset_hz", "psd_rel_shot"], spec.rows()), args.output)
    else:
        _write(fmt.json({"offset_hz": spec.freq, "psd_rel_shot": spec.psd, "floor": spec.floor,
                         "meta": spec.meta}), args.output)
    if args.svg:
        from .svg import line_plot

        Path(args.svg).write_text(line_plot(spec.freq, {"psd": spec.psd},
                                            xlabel="offset from mechanical resonance (Hz)",
                                            ylabel="PSD / shot noise"))
    return EXIT_OK


def cmd_tomo(args, params, fmt):
    from .tomography import fit_squeezing, simulate_phase_sweep

    sweep = simulate_phase_sweep(args.r, params, args.C, averages=args.averages, seed=args.seed,
                                 points=args.points)
    if args.out == "csv":
        rows = np.column_stack([np.degrees(sweep.theta_grid), sweep.integrated_power])
        _write(fmt.csv(["theta_deg", "integrated_power_rel"], rows), args.output)
        return EXIT_OK
    est = fit_squeezing(sweep, params.eta_in)
    _write(fmt.json(est.as_dict()), args.output)
    return EXIT_OK


def cmd_optimize(args, params, fmt):
    from .optimizer import OptProblem, minimize

    if args.objective == "floor":
        if args.offset_hz is None:
            raise UsageError("--offset-hz is required for the floor objective")
        c_range = (args.C, args.C)
    else:
        c_range = tuple(float(v) for v in args.c_range.split(","))
        if len(c_range) != 2:
            raise UsageError("--c-range expects 'lo,hi'")
    theta = None if args.theta_deg is None else math.radians(args.theta_deg)
    res = minimize(OptProblem(params=params, objective=args.objective, r_max=args.r_max,
                              C_range=c_range, theta=theta, offset_hz=args.offset_hz))
    out = res.as_dict()
    if not args.trace:
        out.pop("trace")
    _write(fmt.json(out), args.output)
    return EXIT_OK


def cmd_mc_verify(args, params, fmt):
    from .montecarlo import mc_verify

    report = mc_verify(params, None if args.case == "all" else args.case.split(","),
                       seed=args.seed, segments=args.segments, n_trajectories=args.trajectories)
    if args.report == "json":
        _write(fmt.json(report), args.output)
    else:
        lines = [f"{'PASS' if c['passed'] else 'FAIL'} {c['name']} rms={c['rms_psd_deviation']:.4f} "
                 f"occ_dev={c['occupancy_deviation']:.4f}" for c in report["cases"]]
        _write("\n".join(lines) + "\n", args.output)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def _figure_outputs(fig, fmt, want_svg: bool):
    csv_text = fmt.csv(fig.header(), fig.rows())
    digest = hashlib.sha256(csv_text.encode()).hexdigest()
    summary = {"name": fig.name, "columns": fig.header(), "csv_sha256": digest, **fig.summary}
    svg_text = None
    if want_svg:
        from .svg import line_plot

        x = fig.plot.get("x", fig.header()[0])
        ys = fig.plot.get("ys") or [c for c in fig.header() if c != x]
        svg_text = line_plot(fig.columns[x], {c: fig.columns[c] for c in ys},
                             xlabel=fig.plot.get("xlabel", x), ylabel=fig.plot.get("ylabel", ""),
                             title=fig.name, logx=fig.plot.get("logx", False),
                             logy=fig.plot.get("logy", False))
    return csv_text, summary, svg_text


def cmd_reproduce(args, params, fmt):
    from .figures import RECIPES, reproduce

    if args.recipe not in RECIPES:
        raise UsageError(f"unknown recipe {args.recipe!r}; choose from {', '.join(RECIPES)}")
    fig = reproduce(args.recipe, params, args.seed)
    csv_text, summary, svg_text = _figure_outputs(fig, fmt, args.svg or args.out == "svg")
    if args.outdir:
        out = Path(args.outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{fig.name}.csv").write_text(csv_text)
        (out / f"{fig.name}.json").write_text(fmt.json(summary))
        if svg_text is not None:
            (out / f"{fig.name}.svg").write_text(svg_text)
        return EXIT_OK
    if args.out == "csv":
        _write(csv_text)
    elif args.out == "json":
        _write(fmt.json({"summary": summary, "data": fig.columns}))
    else:
        _write(svg_text)
    return EXIT_OK


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--params", help=f"parameter TOML file (fallback: ${PARAMS_ENV}, then "
                                         "the bundled table)")
    common.add_argument("--precision", type=int, default=17,
                        help="significant digits of numeric output (default 17)")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")

    parser = _Parser(prog="sqzom", description="Squeezed-drive optomechanics noise models. "
                     "Every subcommand accepts --params, --precision and --output.")
    parser.add_argument("--version", action="version", version=f"sqzom {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def drive_args(p, C=70.0):
        p.add_argument("--C", type=float, default=C, help="measurement cooperativity")
        p.add_argument("--r", type=float, default=0.0, help="squeezing parameter")
        p.add_argument("--theta-deg", type=float, default=0.0,
                       help="squeezing phase in degrees (0 amplitude, 180 phase)")

    p = sub.add_parser("budget", parents=[common], help="noise budget at one operating point")
    drive_args(p)
    p.add_argument("--out", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("sweep", parents=[common], help="noise budget versus cooperativity")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--drive", choices=("all", "unsqueezed", "amplitude", "phase"), default="all")
    p.add_argument("--c-min", type=float, default=0.1)
    p.add_argument("--c-max", type=float, default=1000.0)
    p.add_argument("--points", type=int, default=81)
    p.add_argument("--c-grid", help="explicit comma-separated cooperativity grid")
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", parents=[common], help="homodyne PSD near the mechanical line")
    drive_args(p)
    p.add_argument("--angle-deg", type=float, default=90.0,
                   help="detected quadrature in degrees (90 phase, 0 amplitude)")
    p.add_argument("--span-hz", type=float, default=6e3)
    p.add_argument("--points", type=int, default=2400)
    p.add_argument("--model", choices=("narrowband", "full"), default="narrowband")
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    p.add_argument("--svg", help="also write a line plot to this path")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("tomo", parents=[common], help="phase-sweep squeezing tomography")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--C", type=float, default=250.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--averages", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("optimize", parents=[common], help="optimal squeezing and cooperativity")
    p.add_argument("--objective", choices=("n_add", "n_total", "floor"), default="n_add")
    p.add_argument("--offset-hz", type=float)
    p.add_argument("--r-max", type=float, default=1.15)
    p.add_argument("--c-range", default="0.01,1000", help="'lo,hi' cooperativity bounds")
    p.add_argument("--C", type=float, default=220.0, help="fixed cooperativity for --objective floor")
    p.add_argument("--theta-deg", type=float, help="fix the squeezing phase (default free)")
    p.add_argument("--trace", action="store_true", help="include the refinement trace")
    p.add_argument("--out", choices=("json",), default="json")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("mc-verify", parents=[common], help="Monte Carlo oracle report")
    p.add_argument("--case", default="all", help="case name, comma list or 'all'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--segments", type=int, default=10_000)
    p.add_argument("--trajectories", type=int, default=16)
    p.add_argument("--report", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_mc_verify)

    p = sub.add_parser("reproduce", parents=[common], help="theory data for a figure")
    p.add_argument("recipe")
    p.add_argument("--out", choices=("csv", "json", "svg"), default="csv")
    p.add_argument("--outdir", help="write <recipe>.csv, .json (and .svg) here")
    p.add_argument("--svg", action="store_true", help="with --outdir, also write the SVG")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reproduce)
    return parser


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "run":
        argv = argv[1:]
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        fmt = Formatter(args.precision)
        params = _resolve_params(args.params)
        return args.func(args, params, fmt)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    except ConfigError as exc:
        _emit_error(exc.kind, str(exc))
        return EXIT_USAGE
    except SqzomError as exc:
        _emit_error(exc.kind, str(exc))
        return EXIT_DOMAIN
    except ValueError as exc:
        _emit_error("domain", str(exc))
        return EXIT_DOMAIN
    except OSError as exc:
        _emit_error("io", str(exc))
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
