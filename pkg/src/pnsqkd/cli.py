"""Command-line entry point.

Exit status: 0 success, 1 invalid input or usage, 2 infeasible design or
Monte Carlo disagreement with the analytic model.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import Scenario, ScenarioError, baseline_path, load_scenario
from .design import DECOY_GRID, LENGTH_GRID, DesignConstraints, SweepError, SweepSpec, select_decoy_mean, sweep
from .enumeration import evaluate
from .montecarlo import McOptions, compare_all, simulate
from . import reporting

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2

log = logging.getLogger("pnsqkd")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2; 2 is reserved here
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pnsqkd", description="Decoy-pulse BB84 under photon-number splitting.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser, out_default: str | None = None) -> None:
        sp.add_argument("--scenario", type=Path, default=None,
                        help="scenario JSON file (default: the shipped baseline.json)")
        sp.add_argument("--out", type=Path, default=None if out_default is None else Path(out_default),
                        help="output directory")

    ev = sub.add_parser("evaluate", help="print metrics for one scenario")
    common(ev)

    sw = sub.add_parser("sweep", help="sweep lambda_d or l_total and write CSV")
    common(sw, ".")
    sw.add_argument("--axis", choices=("lambda_d", "l_total"), default="lambda_d")
    sw.add_argument("--values", type=_floats, default=None,
                    help="comma-separated axis values (default: the standard grid for the axis)")
    sw.add_argument("--svg", action="store_true", help="also write SVG line charts")

    si = sub.add_parser("simulate", help="Monte Carlo run checked against the analytic model")
    common(si, ".")
    si.add_argument("--seed", type=int, default=0)
    si.add_argument("--replications", type=int, default=1)
    si.add_argument("--scale", type=int, default=1, help="slot-count multiplier")
    si.add_argument("--truncation", choices=("match", "physical"), default="match")
    si.add_argument("--sampler", choices=("sparse", "dense"), default="sparse")
    si.add_argument("--workers", type=int, default=1)

    de = sub.add_parser("design", help="choose a decoy mean under detectability constraints")
    common(de, ".")
    de.add_argument("--values", type=_floats, default=None, help="lambda_d grid")
    de.add_argument("--min-yield-ratio", type=float, default=DesignConstraints.min_yield_ratio)
    de.add_argument("--max-eve-ratio", type=float, default=DesignConstraints.max_eve_ratio)

    ta = sub.add_parser("tables", help="write the reference tables as CSV")
    common(ta, ".")
    return p


def _scenario(path: Path | None) -> Scenario:
    return load_scenario(path if path is not None else baseline_path())


def _flags(args: argparse.Namespace) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "cmd"}


def cmd_evaluate(args: argparse.Namespace) -> int:
    scenario = _scenario(args.scenario)
    started = reporting._now()
    ev = evaluate(scenario)
    m = ev.metrics
    print(f"rho_e_sd={reporting.fmt_fixed(m.rho_e_sd, 2)}")
    print(f"rho_y_sd={reporting.fmt_fixed(m.rho_y_sd, 2)}")
    print(f"R_k={reporting.fmt_sci(m.R_k)}")
    print(f"y_bs={m.y_bs:.6g} y_bd={m.y_bd:.6g} n_err_sift={m.n_err_sift:.6g}")
    if args.out is not None:
        files = {"metrics.csv": reporting.metrics_csv([ev]), "metrics.json": reporting.metrics_json(ev) + "\n"}
        reporting.write_outputs(args.out, files, reporting.manifest(scenario, "evaluate", _flags(args), started=started))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = _scenario(args.scenario)
    started = reporting._now()
    values = args.values or (DECOY_GRID if args.axis == "lambda_d" else LENGTH_GRID)
    try:
        rows = sweep(SweepSpec(scenario, args.axis, tuple(values)))
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    files = {f"sweep_{args.axis}.csv": reporting.sweep_csv(rows)}
    if args.svg:
        files.update(reporting.sweep_svgs(rows, args.axis))
    reporting.write_outputs(args.out, files, reporting.manifest(scenario, "sweep", _flags(args), started=started))
    for r in rows:
        m = r.metrics
        print(f"{args.axis}={r.value:g} rho_e_sd={reporting.fmt_fixed(m.rho_e_sd, 2)} "
              f"rho_y_sd={reporting.fmt_fixed(m.rho_y_sd, 2)} R_k={reporting.fmt_sci(m.R_k)}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = _scenario(args.scenario)
    started = reporting._now()
    try:
        options = McOptions(
            seed=args.seed,
            replications=args.replications,
            truncation_mode="match-analytic" if args.truncation == "match" else "physical",
            slots_scale=args.scale,
            method=args.sampler,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    tallies = simulate(scenario, options, workers=args.workers)
    reports = compare_all(evaluate(scenario), tallies)
    n_pass = sum(r.passed for r in reports)
    allowed = options.replications // 30
    files = {"tally.csv": reporting.tally_csv(tallies), "agreement.csv": reporting.agreement_csv(reports)}
    reporting.write_outputs(args.out, files,
                            reporting.manifest(scenario, "simulate", _flags(args), seed=args.seed, started=started))
    print(f"replications passing all counter checks: {n_pass}/{len(reports)} (failures allowed: {allowed})")
    for rep in reports:
        for c in rep.failures():
            z = "interval" if c.z is None else f"z={c.z:.2f}"
            print(f"  replication {rep.replication}: {c.counter} expected {c.expected:.4g} observed {c.observed} ({z})")
    return EXIT_OK if len(reports) - n_pass <= allowed else EXIT_FAILED


def cmd_design(args: argparse.Namespace) -> int:
    scenario = _scenario(args.scenario)
    started = reporting._now()
    try:
        constraints = DesignConstraints(args.min_yield_ratio, args.max_eve_ratio)
        report = select_decoy_mean(scenario, constraints, args.values or DECOY_GRID)
    except (ValueError, SweepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    reporting.write_outputs(args.out, {"design.csv": reporting.design_csv(report)},
                            reporting.manifest(scenario, "design", _flags(args), started=started))
    for c in report.candidates:
        mark = "*" if c.lambda_d == report.recommended else " "
        print(f"{mark} lambda_d={c.lambda_d:<5g} rho_y_sd={reporting.fmt_fixed(c.rho_y_sd, 2):>9} "
              f"rho_e_sd={reporting.fmt_fixed(c.rho_e_sd, 2):>9} feasible={c.feasible}")
    print(report.reason)
    if not report.feasible:
        return EXIT_FAILED
    print(f"recommended lambda_d={report.recommended:g}")
    if report.most_cluttered != report.recommended:
        print(f"most decoy clutter at Eve: lambda_d={report.most_cluttered:g}")
    return EXIT_OK


def cmd_tables(args: argparse.Namespace) -> int:
    scenario = _scenario(args.scenario)
    started = reporting._now()
    files = {
        "table1.csv": reporting.table1_csv(scenario.link.alpha),
        "table2.csv": reporting.table2_csv(),
        "table4.csv": reporting.table4_csv(scenario),
    }
    reporting.write_outputs(args.out, files, reporting.manifest(scenario, "tables", _flags(args), started=started))
    for name in files:
        print(args.out / name)
    return EXIT_OK


COMMANDS = {
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "design": cmd_design,
    "tables": cmd_tables,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except ScenarioError as exc:
        print("invalid scenario:", file=sys.stderr)
        for e in exc.errors:
            print(f"  - {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
