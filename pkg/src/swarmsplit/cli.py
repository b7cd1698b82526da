"""Command-line front end.

Exit codes: 0 success, 1 parse or I/O error, 2 infeasible (no request could
be placed), 3 solver time limit hit.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .cnn_profile import resolve_profile, total_flops, total_memory, total_params
from .errors import Infeasible, ParseError, SolverTimeout, SwarmSplitError
from .experiments import RUNTIME_COLUMNS, run_sweep, runtime_compare, write_rows
from .planner import CSV_COLUMNS, placement_rows, plan, replay, report_row, system_capacity
from .scenario_file import load_scenario, load_sweep

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_TIMEOUT = 0, 1, 2, 3


def _apply_globals(sf, args):
    if args.time_limit is not None:
        sf.time_limit = args.time_limit
    if args.interference is not None:
        sf.interference_mode = args.interference
    if args.seed is not None:
        sf.rpg = replace(sf.rpg, rng_seed=args.seed)
    return sf


def _write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_solve(args) -> int:
    sf = _apply_globals(load_scenario(args.scenario), args)
    method = args.method.replace("-", "_")
    full = sf.scenario()
    # static methods plan on step 1; the whole horizon is replayed below
    sc = full if method == "ould_mp" or full.T == 1 else full.at_step(0)
    try:
        placement, report = plan(method, sc, sf.time_limit, sf.backend)
    except SolverTimeout as exc:
        print(f"timeout: {exc}")
        return EXIT_TIMEOUT

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "placement.csv", ["request", "layer", "uav"], placement_rows(placement))
    status = "ok" if report.optimal or method not in ("ould", "ould_mp") else "incumbent"
    _write_csv(out / "report.csv", CSV_COLUMNS, [report_row(report, sc, status=status)])
    if full.T > 1:
        steps = []
        outcomes = replay(placement, full, method)
        for outcome in outcomes:
            rep = outcome.report
            steps.append({
                "step": outcome.step,
                "avg_latency_s": repr(rep.avg_latency_per_request) if rep else "nan",
                "shared_bytes": rep.shared_data_bytes if rep else "",
                "violation": str(outcome.violation) if outcome.violation else "",
            })
        _write_csv(out / "steps.csv", ["step", "avg_latency_s", "shared_bytes", "violation"], steps)
        sf.trajectory().to_csv(out / "trajectory.csv")
    summary = {
        "method": method,
        "objective_s": float(placement.objective_exact),
        "objective_exact": str(placement.objective_exact),
        "optimal": bool(placement.optimal),
        "solve_time_s": placement.solve_time,
        "requests": sc.R,
        "horizon": full.T,
        "accepted": report.accepted,
        "rejected": report.rejected_requests,
        "avg_latency_s": report.avg_latency_per_request,
        "shared_bytes": report.shared_data_bytes,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    print(f"method            {method}")
    print(f"UAVs / layers     N={sc.N}  M={sc.M}  horizon={full.T}")
    print(f"requests          {sc.R} ({report.accepted} placed, {report.rejected_requests} rejected)")
    if report.rejected_requests:
        print("capacity hit      yes, latest arrivals rejected")
    print(f"objective         {float(placement.objective_exact):.6g} s communication"
          f"{'' if placement.optimal or method not in ('ould', 'ould_mp') else ' (not proven optimal)'}")
    print(f"avg latency       {report.avg_latency_per_request:.6g} s per request "
          f"(comm {report.comm_seconds:.6g} s, comp {report.comp_seconds:.6g} s)")
    print(f"shared data       {report.shared_data_bytes} B")
    print(f"solve time        {placement.solve_time:.3f} s")
    if full.T > 1:
        broken = [o.step for o in outcomes if o.violation]
        print(f"replayed steps    {full.T}, infeasible at {broken if broken else 'none'}")
    print(f"written to        {out}")
    if report.accepted == 0:
        return EXIT_INFEASIBLE
    if method in ("ould", "ould_mp") and not placement.optimal:
        return EXIT_TIMEOUT
    return EXIT_OK


def cmd_capacity(args) -> int:
    sf = _apply_globals(load_scenario(args.scenario), args)
    sc = sf.scenario()
    mode = "ould_mp" if args.mp else "ould"
    if mode == "ould":
        sc = sc.at_step(0)
    try:
        cap = system_capacity(sc, args.rmax, mode=mode, time_limit=sf.time_limit)
    except SolverTimeout as exc:
        print(f"timeout: {exc}")
        return EXIT_TIMEOUT
    print(f"capacity {cap} requests (scanned R = 1..{args.rmax}, N={sc.N}, {mode})")
    return EXIT_OK


def cmd_profile(args) -> int:
    prof = resolve_profile(args.model)
    print(f"model {prof.model_name}")
    print(f"M={prof.M}")
    print(f"total memory {total_memory(prof)} B ({total_memory(prof) / 2 ** 20:.2f} MiB)")
    print(f"total FLOPs {total_flops(prof)} FLOP ({total_flops(prof) / 1e9:.4f} GFLOP)")
    print(f"parameters {total_params(prof)}")
    print(f"input {prof.input_bytes} B")
    if not args.summary:
        print(f"{'idx':>3}  {'name':<12} {'mem_bytes':>12} {'flops':>14} {'output_bytes':>13}")
        for l in prof.layers:
            print(f"{l.index:>3}  {l.name:<12} {l.mem_bytes:>12} {l.flops:>14} {l.output_bytes:>13}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_sweep(args.spec)
    if args.time_limit is not None:
        spec = replace(spec, time_limit=args.time_limit)
    if args.interference is not None:
        spec = replace(spec, interference=args.interference)
    if args.seed is not None:
        spec = replace(spec, seeds=(args.seed,))
    out = Path(args.out)

    def log(row):
        print(f"{row['method']:<12} N={row['N']} A={row['area']} mem={row['mem_level']} "
              f"R={row['R']} avg={row['avg_latency_s']} s shared={row['shared_bytes']} B "
              f"rejected={row['rejected']} [{row['status']}]", flush=True)

    rows = run_sweep(spec, out, log=None if args.quiet else log)
    if args.runtime_horizon:
        rt = runtime_compare(spec, args.runtime_horizon)
        write_rows(rt, out / "runtime.csv", RUNTIME_COLUMNS)
    print(f"{len(rows)} rows written to {out / 'results.csv'}")
    return EXIT_TIMEOUT if any(r["status"] == "timeout" for r in rows) else EXIT_OK


def cmd_mobility_export(args) -> int:
    sf = _apply_globals(load_scenario(args.scenario), args)
    if args.horizon:
        sf.horizon = args.horizon
    traj = sf.trajectory()
    traj.to_csv(args.out)
    print(f"{traj.T} steps x {traj.N} UAVs written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmsplit", description=(
        "Place CNN layers across a UAV swarm: optimal placement, heuristics, sweeps."))
    p.add_argument("--seed", type=int, default=None, help="override the mobility / sweep seed")
    p.add_argument("--time-limit", type=float, default=None, help="solver time limit in seconds")
    p.add_argument("--interference", choices=["none", "all_others"], default=None)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="place the requests of a scenario file")
    s.add_argument("scenario")
    s.add_argument("--method", default="ould",
                   choices=["ould", "ould-mp", "nearest", "hrm", "nearest-hrm"])
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="run a sweep file")
    s.add_argument("spec")
    s.add_argument("--out", default="sweep_out")
    s.add_argument("--runtime-horizon", type=int, default=0,
                   help="also time T static solves against one horizon-T solve")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("capacity", help="largest request count placed without rejection")
    s.add_argument("scenario")
    s.add_argument("--rmax", type=int, default=10)
    s.add_argument("--mp", action="store_true", help="require feasibility over the whole horizon")
    s.set_defaults(func=cmd_capacity)

    s = sub.add_parser("profile", help="show a CNN profile")
    s.add_argument("model", help="lenet, vgg16 or a profile CSV path")
    s.add_argument("--summary", action="store_true", help="totals only")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("mobility-export", help="write the predicted trajectory as CSV")
    s.add_argument("scenario")
    s.add_argument("--out", default="trajectory.csv")
    s.add_argument("--horizon", type=int, default=0)
    s.set_defaults(func=cmd_mobility_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        where = getattr(args, "scenario", None) or getattr(args, "spec", None) or ""
        print(f"error: {where}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ValueError, SwarmSplitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
