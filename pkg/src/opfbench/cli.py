"""Command-line interface.

Subcommands: ``bench`` runs AC and SOC solves over case files and prints
gap tables, ``complete`` fills missing data per a completion plan,
``variant`` generates the congested or angle-tightened stress cases, and
``solve`` dumps the solution of a single case.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

from opfbench.acopf import FlowLimitMode, build_acopf, vector_to_point
from opfbench.bench import (
    BenchOptions,
    format_table,
    records_to_csv,
    run_benchmark,
)
from opfbench.completion import CompletionPlan, complete_case
from opfbench.ipm import SolverOptions, SolverStatus, solve
from opfbench.matpower import parse_case_file, write_case_file
from opfbench.network import build_network, network_to_raw
from opfbench.soc import build_soc, recover_point_estimate
from opfbench.variants import VariantConfig, generate_api, generate_sad

_FLOW_LIMITS = {
    "apparent": FlowLimitMode.APPARENT_POWER,
    "current": FlowLimitMode.CURRENT_MAGNITUDE,
    "both": FlowLimitMode.BOTH,
    "none": FlowLimitMode.NONE,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--flow-limit",
        choices=sorted(_FLOW_LIMITS),
        default="apparent",
        help="which branch flow limits to enforce",
    )
    p.add_argument("--tol", type=float, default=1e-8, help="solver tolerance")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opfbench",
        description="AC optimal power flow benchmark toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="solve cases and report optimality gaps")
    p.add_argument("cases", nargs="*", help="Matpower case files")
    p.add_argument("--mode", choices=["ac", "soc", "both"], default="both")
    p.add_argument("--out", choices=["csv", "table"], default="table")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    _add_common(p)

    p = sub.add_parser("complete", help="fill missing case data")
    p.add_argument("case", help="input Matpower case file")
    p.add_argument("output", help="output case file path")
    p.add_argument("--gf-stat", action="store_true", help="classify fuels")
    p.add_argument("--ag-stat", action="store_true", help="sample active limits")
    p.add_argument("--rg-am50", action="store_true", help="clamp reactive bounds")
    p.add_argument("--ac-stat", action="store_true", help="sample linear costs")
    p.add_argument("--tl-stat", action="store_true", help="statistical thermal limits")
    p.add_argument("--tl-ub", action="store_true", help="fallback thermal limits")
    p.add_argument(
        "--angle-bound", type=float, default=None, metavar="DEG",
        help="uniform angle difference bound in degrees",
    )
    _add_common(p)

    p = sub.add_parser("variant", help="generate a stress variant")
    p.add_argument("case", help="input Matpower case file")
    p.add_argument("kind", choices=["api", "sad"])
    p.add_argument(
        "--out-dir", default=".", help="directory for the generated file"
    )
    p.add_argument(
        "--sad-tol", type=float, default=1e-3,
        help="bisection tolerance in radians",
    )
    _add_common(p)

    p = sub.add_parser("solve", help="solve one case and dump the solution")
    p.add_argument("case", help="Matpower case file")
    p.add_argument("--mode", choices=["ac", "soc"], default="ac")
    _add_common(p)
    return parser


def _cmd_bench(args) -> int:
    opts = BenchOptions(
        mode=args.mode,
        flow_limit=_FLOW_LIMITS[args.flow_limit],
        solver=SolverOptions(tol=args.tol),
        jobs=args.jobs,
    )
    records = run_benchmark(args.cases, opts)
    if args.out == "csv":
        sys.stdout.write(records_to_csv(records))
    else:
        print(format_table(records))
    failed = any(
        SolverStatus.NUMERICAL_FAILURE in (r.ac_status, r.soc_status)
        for r in records
    )
    return 1 if failed else 0


def _cmd_complete(args) -> int:
    raw = parse_case_file(args.case)
    net = build_network(raw)
    plan = CompletionPlan(
        gf_stat=args.gf_stat,
        ag_stat=args.ag_stat,
        rg_am50=args.rg_am50,
        ac_stat=args.ac_stat,
        tl_stat=args.tl_stat,
        tl_ub=args.tl_ub,
        angle_bound_deg=args.angle_bound,
        seed=args.seed,
    )
    completed, report = complete_case(net, plan)
    write_case_file(network_to_raw(completed, raw), args.output)
    log_path = Path(args.output).with_suffix(".provenance.txt")
    log_path.write_text("".join(f"{rec}\n" for rec in report))
    print(f"wrote {args.output} ({len(report)} fields, log {log_path})")
    return 0


def _cmd_variant(args) -> int:
    raw = parse_case_file(args.case)
    net = build_network(raw)
    cfg = VariantConfig(
        kind=args.kind,
        sad_tolerance_rad=args.sad_tol,
        seed=args.seed,
        flow_limit=_FLOW_LIMITS[args.flow_limit],
        solver=SolverOptions(tol=args.tol),
    )
    if args.kind == "api":
        result = generate_api(net, cfg)
    else:
        result = generate_sad(net, cfg)
    name = f"{net.name}__{args.kind}"
    out_raw = network_to_raw(result.case, raw)
    out_raw = dataclasses.replace(out_raw, name=name)
    out_path = Path(args.out_dir) / f"{name}.m"
    write_case_file(out_raw, str(out_path))
    log_path = out_path.with_suffix(".log")
    log_path.write_text("".join(f"{line}\n" for line in result.log))
    print(f"wrote {out_path} (log {log_path})")
    return 0


def _cmd_solve(args) -> int:
    net = build_network(parse_case_file(args.case))
    flow = _FLOW_LIMITS[args.flow_limit]
    opts = SolverOptions(tol=args.tol)
    if args.mode == "ac":
        rep = solve(build_acopf(net, flow), opts)
        pt = vector_to_point(net, rep.x)
    else:
        rep = solve(build_soc(net, flow), opts)
        pt = recover_point_estimate(net, rep.x, flow)
    print(f"status        {rep.status}")
    print(f"objective     {rep.objective:.6e} $/h")
    print(f"violation     {rep.violation:.3e}")
    print(f"iterations    {rep.iterations}")
    print(f"wall time     {rep.wall_time:.3f} s")
    print()
    print("bus   vm (p.u.)   va (deg)")
    for b in sorted(pt.vm):
        print(f"{b:5d} {pt.vm[b]:10.5f} {math.degrees(pt.va[b]):10.4f}")
    print()
    print("gen   pg (p.u.)   qg (p.u.)")
    for g in sorted(pt.pg):
        print(f"{g:5d} {pt.pg[g]:10.5f} {pt.qg[g]:10.5f}")
    return 0 if rep.status != SolverStatus.NUMERICAL_FAILURE else 1


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "bench": _cmd_bench,
        "complete": _cmd_complete,
        "variant": _cmd_variant,
        "solve": _cmd_solve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
