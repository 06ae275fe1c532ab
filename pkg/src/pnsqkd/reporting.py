"""CSV, JSON manifest and SVG emission.

CSV files are RFC 4180 with a header row. Numbers are written at full
double precision (``repr``) except in the reference tables, which use the
fixed precisions of :data:`TABLE_FORMATS`. An undefined ratio is ``undef``.
"""
from __future__ import annotations

import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .config import Scenario
from .design import DECOY_GRID, DesignReport, SweepRow, SweepSpec, sweep
from .enumeration import Evaluation
from .montecarlo import AgreementReport, McTally
from .photon_stats import arrival_mean, emission_profile, fiber_segment, solve_photon_loss_prob

METRIC_COLUMNS = ("lambda_s", "lambda_d", "l_total", "rho_e_sd", "rho_y_sd", "R_k", "y_bs", "y_bd")
UNDEF = "undef"


def fmt(x: float | int | None) -> str:
    if x is None:
        return UNDEF
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def fmt_fixed(x: float | None, decimals: int) -> str:
    return UNDEF if x is None else f"{x:.{decimals}f}"


def fmt_sci(x: float | None, sig: int = 3) -> str:
    return UNDEF if x is None else f"{x:.{sig - 1}e}"


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def metrics_record(evaluation: Evaluation) -> dict[str, Any]:
    return evaluation.record()


def metrics_csv(evaluations: Iterable[Evaluation]) -> str:
    rows = ([fmt(ev.record()[c]) for c in METRIC_COLUMNS] for ev in evaluations)
    return to_csv(METRIC_COLUMNS, rows)


def metrics_json(evaluation: Evaluation) -> str:
    return json.dumps(evaluation.record(), indent=2)


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    return metrics_csv(r.evaluation for r in rows)


def agreement_csv(reports: Iterable[AgreementReport]) -> str:
    rows = []
    for rep in reports:
        for c in rep.checks:
            rows.append([rep.replication, c.counter, fmt(c.expected), c.observed, fmt(c.z), "pass" if c.passed else "fail"])
    return to_csv(("replication", "counter", "expected", "observed", "z", "pass"), rows)


def tally_csv(tallies: Iterable[McTally]) -> str:
    rows = []
    for t in tallies:
        for name in sorted(t.counters):
            rows.append([t.replication, name, t.counters[name]])
        for name in ("R_k", "y_bs", "y_bd", "rho_y_sd", "rho_e_sd"):
            rows.append([t.replication, name, fmt(getattr(t, name))])
    return to_csv(("replication", "quantity", "value"), rows)


def design_csv(report: DesignReport) -> str:
    rows = [
        [
            fmt(c.lambda_d),
            fmt(c.rho_y_sd),
            fmt(c.rho_e_sd),
            fmt(c.decoy_clutter_pct),
            int(c.meets_yield),
            int(c.meets_eve),
            int(c.lambda_d == report.recommended),
        ]
        for c in report.candidates
    ]
    header = ("lambda_d", "rho_y_sd", "rho_e_sd", "decoy_clutter_pct", "meets_yield", "meets_eve", "recommended")
    return to_csv(header, rows)


# --- reference tables ------------------------------------------------------

TABLE1_LENGTHS = (15.0, 50.0, 100.0)
TABLE1_SOURCE_MEAN = 100.0
TABLE2_MEANS = (0.1, 0.2, 0.5, 1.0)


def table1_rows(alpha: float) -> list[dict[str, float]]:
    rows = []
    for length in TABLE1_LENGTHS:
        seg = fiber_segment(alpha, length)
        n = arrival_mean(TABLE1_SOURCE_MEAN, seg.rho)
        rows.append(
            {
                "l": length,
                "L_dB": seg.loss_db,
                "rho": seg.rho,
                "lambda": TABLE1_SOURCE_MEAN,
                "n": n,
                "p_fl": solve_photon_loss_prob(TABLE1_SOURCE_MEAN, n),
            }
        )
    return rows


def table1_csv(alpha: float) -> str:
    rows = (
        [f"{r['l']:g}", f"{r['L_dB']:.0f}", f"{r['rho']:.0f}", f"{r['lambda']:g}", f"{r['n']:.0f}", f"{r['p_fl']:.2f}"]
        for r in table1_rows(alpha)
    )
    return to_csv(("l_km", "L_dB", "rho", "lambda", "n", "p_fl"), rows)


def table2_csv() -> str:
    rows = []
    for lam in TABLE2_MEANS:
        prof = emission_profile(lam, 4)
        rows.append([f"{lam:.1f}"] + [f"{p:.4f}" for p in prof.probs[:3]] + [f"{prof.multi_photon():.4f}"])
    return to_csv(("lambda", "phi_0", "phi_1", "phi_2", "phi_gt1"), rows)


def table4_rows(base: Scenario) -> list[SweepRow]:
    return sweep(SweepSpec(base, "lambda_d", DECOY_GRID))


def table4_csv(base: Scenario) -> str:
    rows = (
        [f"{r.value:.2f}", fmt_fixed(r.metrics.rho_e_sd, 2), fmt_fixed(r.metrics.rho_y_sd, 2), fmt_sci(r.metrics.R_k)]
        for r in table4_rows(base)
    )
    return to_csv(("lambda_d", "rho_e_sd", "rho_y_sd", "R_k"), rows)


# --- manifest and plots ----------------------------------------------------

def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def manifest(scenario: Scenario, subcommand: str, flags: dict[str, Any], *, seed: int | None = None,
             started: str | None = None, outputs: Sequence[str] = ()) -> dict[str, Any]:
    return {
        "tool": "pnsqkd",
        "version": __version__,
        "subcommand": subcommand,
        "flags": flags,
        "seed": seed,
        "scenario_digest": scenario.digest(),
        "scenario": scenario.to_dict(),
        "outputs": list(outputs),
        "started": started or _now(),
        "finished": _now(),
    }


def write_outputs(out_dir: Path, files: dict[str, str], manifest_doc: dict[str, Any]) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text, newline="")
        written.append(path)
    manifest_doc = {**manifest_doc, "outputs": sorted(files)}
    mpath = out_dir / "manifest.json"
    mpath.write_text(json.dumps(manifest_doc, indent=2, sort_keys=True) + "\n")
    written.append(mpath)
    return written


def sweep_svgs(rows: Sequence[SweepRow], axis: str) -> dict[str, str]:
    """Line charts as SVG text: R_k on a log axis, and both ratios."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [r.value for r in rows]
    label = "fiber length l (km)" if axis == "l_total" else "decoy mean photon count"
    charts = {}

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(xs, [r.metrics.R_k for r in rows], marker="o")
    ax.set_xlabel(label)
    ax.set_ylabel("key generation rate R_k (bits/slot)")
    ax.grid(True, which="both", alpha=0.3)
    charts[f"rk_vs_{axis}.svg"] = _svg_text(fig)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, [r.metrics.rho_e_sd for r in rows], marker="o", label="rho_e_sd (Eve)")
    ax.plot(xs, [r.metrics.rho_y_sd for r in rows], marker="s", label="rho_y_sd (Bob)")
    ax.set_xlabel(label)
    ax.set_ylabel("signal-to-decoy ratio")
    if axis == "lambda_d":
        ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    charts[f"ratios_vs_{axis}.svg"] = _svg_text(fig)
    plt.close(fig)
    return charts


def _svg_text(fig) -> str:
    buf = io.StringIO()
    # fixed hashsalt and no date keep the SVG byte-stable across runs
    import matplotlib

    with matplotlib.rc_context({"svg.hashsalt": "pnsqkd"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()
