"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 a solver run did
not converge (results are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import runner
from .admm import AdmmConfig, SolveReport, run_admm
from .scenario import load_config, scenario_from_config
from .solution import ModeConfig

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from exc


def _modes(text):
    try:
        return [ModeConfig.from_label(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _mode(text):
    try:
        return ModeConfig.from_label(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser():
    p = argparse.ArgumentParser(prog="rsma-dfrc",
                                description="RSMA dual-function radar-communication design")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", default="paper",
                        help="scenario JSON file or a bundled name (default: paper)")
        return sp

    s = with_config(sub.add_parser("solve", help="one ADMM design"))
    s.add_argument("--mode", type=_mode, required=True,
                   help="{rsma,sdma}x{no-rs,rs-sic,rs-nosic}, e.g. rsmaxrs-sic")
    s.add_argument("--lambda", dest="lambda_reg", type=float, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", type=Path)

    s = with_config(sub.add_parser("sweep", help="WSR/RMSE tradeoff over lambda"))
    s.add_argument("--lambdas", type=_floats, default=list(runner.DEFAULT_LAMBDAS))
    s.add_argument("--modes", type=_modes, required=True)
    s.add_argument("--seeds", type=lambda t: [int(x) for x in t.split(",")], default=[0])
    s.add_argument("--format", choices=["csv", "json"])
    s.add_argument("--out", type=Path, required=True)

    s = with_config(sub.add_parser("baseline", help="TDRC or FDRC curve"))
    s.add_argument("kind", choices=["tdrc", "fdrc"])
    s.add_argument("--points", type=_floats, default=[0.0, 0.25, 0.5, 0.75, 1.0],
                   help="time shares (tdrc) or communication power shares (fdrc)")
    s.add_argument("--format", choices=["csv", "json"])
    s.add_argument("--out", type=Path, required=True)

    s = with_config(sub.add_parser("beampattern", help="pattern of a saved solution"))
    s.add_argument("--from-solution", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)

    s = with_config(sub.add_parser("lbibr", help="IBR lower bound over the grid"))
    s.add_argument("--out", type=Path, required=True)
    return p


def _load(args):
    cfg = load_config(args.config)
    solver = AdmmConfig.from_dict(cfg.pop("solver", None))
    return scenario_from_config(cfg), solver


def _format(args):
    if args.format:
        return args.format
    return "json" if args.out.suffix == ".json" else "csv"


def _cmd_solve(args):
    scenario, solver = _load(args)
    if args.seed is not None:
        solver.seed = args.seed
    rep = run_admm(scenario, args.mode, args.lambda_reg, solver)
    text = rep.to_json()
    if args.out:
        args.out.write_text(text + "\n")
    print(f"{args.mode.label} lambda={args.lambda_reg:g}: wsr={rep.wsr:.4f} bps/Hz "
          f"rmse={rep.rmse:.4f} iterations={rep.iterations} converged={rep.converged}")
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def _cmd_sweep(args):
    scenario, solver = _load(args)
    spec = runner.SweepSpec(args.lambdas, args.modes, scenario, args.seeds, solver)
    points = runner.run_tradeoff_sweep(spec)
    runner.export(points, args.out, _format(args))
    for pt in points:
        print(f"{pt.mode} lambda={pt.lambda_reg:g}: wsr={pt.wsr:.4f} rmse={pt.rmse:.4f}")
    return EXIT_OK if all(p.converged for p in points) else EXIT_NOT_CONVERGED


def _cmd_baseline(args):
    scenario, _ = _load(args)
    curve = runner.tdrc_curve if args.kind == "tdrc" else runner.fdrc_curve
    points = curve(scenario, args.points)
    runner.export(points, args.out, _format(args))
    return EXIT_OK


def _cmd_beampattern(args):
    scenario, _ = _load(args)
    rep = SolveReport.from_dict(json.loads(args.from_solution.read_text()))
    if rep.solution.precoders.shape != (scenario.n_tx, scenario.k_users + 2):
        raise ValueError("solution does not match the scenario dimensions")
    runner.export_beampattern(rep.solution, scenario, args.out)
    return EXIT_OK


def _cmd_lbibr(args):
    scenario, _ = _load(args)
    runner.export_lbibr(scenario, args.out)
    return EXIT_OK


COMMANDS = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "baseline": _cmd_baseline,
    "beampattern": _cmd_beampattern,
    "lbibr": _cmd_lbibr,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
