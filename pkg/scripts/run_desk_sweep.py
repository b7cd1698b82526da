#!/usr/bin/env python3
"""Latency / shared data / capacity against load on the desk-scale LeNet swarm.

Writes results.csv and one gnuplot series per (method, N, memory) cell;
``gnuplot -e "dir='OUT'" scripts/plot_latency.gp`` draws them.
"""

import argparse
from pathlib import Path

from swarmsplit.experiments import run_sweep
from swarmsplit.scenario_file import load_sweep

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", default=HERE / "configs" / "sweep_desk.toml")
    ap.add_argument("--out", default="results/desk")
    args = ap.parse_args()
    spec = load_sweep(args.spec)
    rows = run_sweep(spec, args.out, log=lambda r: print(
        f"{r['method']:<12} N={r['N']} R={r['R']:>2} avg={float(r['avg_latency_s']):.4g} s "
        f"shared={r['shared_bytes']} B rejected={r['rejected']}", flush=True))
    print(f"{len(rows)} rows in {Path(args.out) / 'results.csv'}")


if __name__ == "__main__":
    main()
