"""Benchmark harness: gap records, batch runs, and result tables.

Runs the nonlinear program and its relaxation over a list of case files,
computes the optimality gap of each pair, and renders the records both as
machine-readable CSV and as an aligned text table whose formatting follows
the reporting conventions of the benchmark literature (5 significant
figures on objectives, 2 decimals on gaps, sub-second runtimes as "<1").
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import time
from dataclasses import dataclass, fields

from opfbench.acopf import FlowLimitMode, build_acopf
from opfbench.ipm import SolverOptions, SolverStatus, solve
from opfbench.matpower import parse_case_file
from opfbench.network import build_network
from opfbench.soc import build_soc

__all__ = [
    "GapRecord",
    "BenchOptions",
    "optimality_gap",
    "run_case",
    "run_benchmark",
    "format_table",
    "records_to_csv",
    "records_from_csv",
    "GAP_DOMINANCE_SLACK",
]

# emitted gaps below this bound indicate a broken relaxation, not noise
GAP_DOMINANCE_SLACK = -0.01


class GapError(ValueError):
    pass


@dataclass
class GapRecord:
    case: str
    n_bus: int
    n_branch: int
    ac_objective: float | None
    soc_objective: float | None
    gap_percent: float | None
    ac_runtime: float | None
    soc_runtime: float | None
    ac_status: str
    soc_status: str

    @property
    def gap_display(self) -> str:
        if self.soc_status == SolverStatus.INFEASIBLE:
            return "inf."
        if self.gap_percent is None:
            return "n.s."
        return f"{self.gap_percent:.2f}"

    @property
    def ac_display(self) -> str:
        if self.ac_objective is None or self.ac_status != SolverStatus.OPTIMAL:
            return "n.s."
        return f"{self.ac_objective:.4e}"


@dataclass(frozen=True)
class BenchOptions:
    mode: str = "both"  # "ac", "soc", or "both"
    flow_limit: FlowLimitMode = FlowLimitMode.APPARENT_POWER
    solver: SolverOptions = SolverOptions()
    jobs: int = 1


def optimality_gap(ac_objective: float, relax_objective: float) -> float:
    """Percentage by which the relaxation bound falls below the feasible
    solution's objective."""
    if ac_objective <= 0.0:
        raise GapError("gap is undefined for a nonpositive feasible objective")
    return 100.0 * (ac_objective - relax_objective) / ac_objective


def run_case(path: str, options: BenchOptions | None = None) -> GapRecord:
    """Solve one case file per the options and assemble its record."""
    opts = options or BenchOptions()
    net = build_network(parse_case_file(path))
    name = net.name

    ac_obj = soc_obj = gap = None
    ac_time = soc_time = None
    ac_status = soc_status = "skipped"

    if opts.mode in ("ac", "both"):
        t0 = time.perf_counter()
        rep = solve(build_acopf(net, opts.flow_limit), opts.solver)
        ac_time = time.perf_counter() - t0
        ac_status = rep.status
        if rep.status == SolverStatus.OPTIMAL:
            ac_obj = rep.objective
    if opts.mode in ("soc", "both"):
        t0 = time.perf_counter()
        rep = solve(build_soc(net, opts.flow_limit), opts.solver)
        soc_time = time.perf_counter() - t0
        soc_status = rep.status
        if rep.status == SolverStatus.OPTIMAL:
            soc_obj = rep.objective

    if ac_obj is not None and soc_obj is not None:
        gap = optimality_gap(ac_obj, soc_obj)
        if gap < GAP_DOMINANCE_SLACK:
            raise GapError(
                f"{name}: relaxation bound exceeds the feasible objective "
                f"(gap {gap:.4f}%)"
            )
    return GapRecord(
        case=name,
        n_bus=net.n_buses,
        n_branch=net.n_branches,
        ac_objective=ac_obj,
        soc_objective=soc_obj,
        gap_percent=gap,
        ac_runtime=ac_time,
        soc_runtime=soc_time,
        ac_status=ac_status,
        soc_status=soc_status,
    )


def run_benchmark(
    paths: list[str], options: BenchOptions | None = None
) -> list[GapRecord]:
    """Run every case and return records in input order.

    Per-case solver trouble is captured in the record statuses; only a
    relaxation bound exceeding the feasible objective aborts the batch.
    """
    opts = options or BenchOptions()
    if opts.jobs > 1 and len(paths) > 1:
        with concurrent.futures.ProcessPoolExecutor(opts.jobs) as pool:
            return list(pool.map(run_case, paths, [opts] * len(paths)))
    return [run_case(p, opts) for p in paths]


def _fmt_runtime(t: float | None) -> str:
    if t is None:
        return "-"
    if t < 1.0:
        return "<1"
    return f"{t:.0f}"


def format_table(records: list[GapRecord]) -> str:
    header = ["Case", "|N|", "|E|", "AC ($/h)", "Gap (%)", "AC (s)", "SOC (s)"]
    rows = [header]
    for r in records:
        rows.append(
            [
                r.case,
                str(r.n_bus),
                str(r.n_branch),
                r.ac_display,
                r.gap_display,
                _fmt_runtime(r.ac_runtime),
                _fmt_runtime(r.soc_runtime),
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for j, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [
            c.rjust(w) for c, w in zip(row[1:], widths[1:])
        ]
        lines.append("  ".join(cells))
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


_CSV_FIELDS = [f.name for f in fields(GapRecord)]


def records_to_csv(records: list[GapRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(_CSV_FIELDS)
    for r in records:
        writer.writerow([getattr(r, f) for f in _CSV_FIELDS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[GapRecord]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        kwargs = {}
        for f in fields(GapRecord):
            raw = row[f.name]
            if f.name in ("case", "ac_status", "soc_status"):
                kwargs[f.name] = raw
            elif f.name in ("n_bus", "n_branch"):
                kwargs[f.name] = int(raw)
            else:
                kwargs[f.name] = None if raw in ("", "None") else float(raw)
        out.append(GapRecord(**kwargs))
    return out
