#!/usr/bin/env python3
"""System capacity for each swarm size and memory level of a sweep file."""

import argparse
import csv
import sys
from pathlib import Path

from swarmsplit.experiments import MIB, cell_scenario
from swarmsplit.planner import system_capacity
from swarmsplit.scenario_file import load_sweep, memory_value

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("specs", nargs="*", default=[HERE / "configs" / "sweep_desk.toml",
                                                  HERE / "configs" / "sweep_memory.toml"])
    ap.add_argument("--rmax", type=int, default=12)
    ap.add_argument("--mem-levels", nargs="+", default=None,
                    help='override the memory levels, e.g. "high low" or bytes')
    ap.add_argument("--out", default=None, help="optional CSV path")
    args = ap.parse_args()
    rows = []
    for path in args.specs:
        spec = load_sweep(path)
        for n in spec.n_list:
            levels = ([int(memory_value(v if not v.isdigit() else int(v))) for v in args.mem_levels]
                      if args.mem_levels else spec.mem_levels)
            for mem in levels:
                for seed in spec.seeds:
                    sc = cell_scenario(spec, n, mem, spec.area_side[0], seed)
                    cap = system_capacity(sc, args.rmax, time_limit=spec.time_limit)
                    rows.append({"spec": Path(path).name, "N": n, "mem_MiB": mem / MIB,
                                 "seed": seed, "capacity": cap})
                    print(f"{Path(path).name:<20} N={n:<3} mem={mem / MIB:>7.1f} MiB "
                          f"seed={seed}  capacity {cap}", flush=True)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    sys.exit(main())
