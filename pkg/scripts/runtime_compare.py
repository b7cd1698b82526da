#!/usr/bin/env python3
"""Wall-clock of one horizon-T OULD-MP solve against T static OULD solves."""

import argparse
from pathlib import Path

from swarmsplit.experiments import RUNTIME_COLUMNS, runtime_compare, write_rows
from swarmsplit.scenario_file import load_sweep

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spec", default=HERE / "configs" / "sweep_runtime.toml")
    ap.add_argument("--horizon", type=int, default=10)
    ap.add_argument("--out", default="results/runtime.csv")
    args = ap.parse_args()
    rows = runtime_compare(load_sweep(args.spec), args.horizon)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_rows(rows, args.out, RUNTIME_COLUMNS)
    for r in rows:
        print(f"T={r['T']} R={r['R']} N={r['N']}: "
              f"static {r['ould_total_runtime_s']:.3f} s, one-shot {r['ould_mp_runtime_s']:.3f} s, "
              f"ratio {r['ratio']:.3f} [{r['status']}]")


if __name__ == "__main__":
    main()
