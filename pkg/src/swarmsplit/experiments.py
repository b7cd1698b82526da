"""Scenario sweeps and the OULD vs OULD-MP runtime comparison.

A sweep cell is one (N, memory level, area side, seed) swarm.  Its geometry
comes from the group-mobility model: the leader starts at (side/4, side/4),
heads for (3 side/4, 3 side/4) and members sit in a disk of radius side/2
around it.  Static methods see step 1 of the trajectory, ``ould_mp`` sees all
``horizon`` steps.  Request r of a cell always has the same origin, so the
request sets for increasing R are nested.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .channel import INTERFERENCE_MODES, RadioParams, rate_series
from .cnn_profile import resolve_profile
from .errors import Infeasible, SolverTimeout
from .ilp_core import Scenario, build_model, make_scenario, solve_exact
from .mobility import RpgParams, predict
from .planner import CSV_COLUMNS, METHODS, evaluate, plan, report_row

MIB = 2 ** 20
ORIGIN_POLICIES = ("random", "leader")


@dataclass(frozen=True)
class SweepSpec:
    model: str = "lenet"
    n_list: tuple[int, ...] = (6, 8)
    mem_levels: tuple[int, ...] = (512 * MIB, 256 * MIB)
    compute_rate: float = 9.5e9
    compute_window: float = 1.0
    area_side: tuple[float, ...] = (100.0,)
    r_range: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    horizon: int = 1
    methods: tuple[str, ...] = ("ould", "nearest", "hrm", "nearest_hrm")
    seeds: tuple[int, ...] = (0,)
    origin_policy: str = "random"
    interference: str = "all_others"
    altitude: float = 50.0
    leader_speed: float = 5.0
    step_duration: float = 1.0
    deviation_sigma: float = 0.0
    time_limit: float = 60.0
    head: int | None = None
    radio: RadioParams = field(default_factory=RadioParams)

    def __post_init__(self):
        for name in ("n_list", "mem_levels", "area_side", "r_range", "methods", "seeds"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "methods", tuple(m.replace("-", "_") for m in self.methods))
        if any(b <= a for a, b in zip(self.r_range, self.r_range[1:])) or self.r_range[0] < 1:
            raise ValueError("r_range must be ascending and start at >= 1")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.origin_policy not in ORIGIN_POLICIES:
            raise ValueError(f"origin_policy must be one of {ORIGIN_POLICIES}")
        if self.interference not in INTERFERENCE_MODES:
            raise ValueError(f"interference must be one of {INTERFERENCE_MODES}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if min(self.n_list) < 1 or min(self.mem_levels) <= 0 or min(self.area_side) <= 0:
            raise ValueError("n_list, mem_levels and area_side must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown sweep keys {sorted(unknown)}")
        data = dict(data)
        if "radio" in data and isinstance(data["radio"], dict):
            data["radio"] = RadioParams(**data["radio"])
        return cls(**data)


def cell_trajectory(spec: SweepSpec, n: int, side: float, seed: int, horizon: int | None = None):
    alt = spec.altitude
    params = RpgParams(
        leader_start=(side / 4, side / 4, alt),
        leader_end=(3 * side / 4, 3 * side / 4, alt),
        leader_speed=spec.leader_speed,
        step_duration=spec.step_duration,
        member_offset_radius=side / 2,
        member_deviation_sigma=spec.deviation_sigma,
        rng_seed=seed,
    )
    return predict(n, params, horizon or spec.horizon)


def cell_origins(spec: SweepSpec, n: int, seed: int, count: int) -> tuple[int, ...]:
    if spec.origin_policy == "leader":
        return (0,) * count
    rng = np.random.default_rng([seed, n, 1])
    return tuple(int(o) for o in rng.integers(0, n, size=count))


def cell_scenario(spec: SweepSpec, n: int, mem: float, side: float, seed: int,
                  horizon: int | None = None, profile=None) -> Scenario:
    """Scenario holding all ``max(r_range)`` requests of one cell."""
    profile = profile or _profile(spec)
    traj = cell_trajectory(spec, n, side, seed, horizon)
    rates = rate_series(traj, spec.radio, spec.interference)
    origins = cell_origins(spec, n, seed, spec.r_range[-1])
    return make_scenario(profile, rates, origins, mem, spec.compute_rate, spec.compute_window,
                         area=side, seed=seed, trajectory=traj)


def _profile(spec: SweepSpec):
    prof = resolve_profile(spec.model)
    return prof.head(spec.head) if spec.head else prof


def _nan_row(method, sc, r, side, mem, seed, status, solve_time):
    row = {c: "" for c in CSV_COLUMNS}
    row.update(method=method, R=r, N=sc.N, area=side, mem_level=mem, avg_latency_s="nan",
               comm_s="nan", comp_s="nan", shared_bytes="", rejected="",
               solve_time_s=f"{solve_time:.6f}", seed=seed, horizon=sc.T, status=status)
    return row


def _series_name(method, n, side, mem, seed):
    return f"{method}_N{n}_A{side:g}_M{mem}_s{seed}.dat"


def run_sweep(spec: SweepSpec, out_dir, log=None) -> list[dict]:
    """Run every cell of ``spec`` and write ``results.csv`` plus gnuplot series.

    Rows are flushed one at a time.  A timeout without incumbent becomes a row
    with status ``timeout`` and the sweep goes on.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile = _profile(spec)
    rows = []
    series: dict[str, list[str]] = {}
    with open(out / "results.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        fh.flush()
        for n in spec.n_list:
            for side in spec.area_side:
                for seed in spec.seeds:
                    full = cell_scenario(spec, n, 1.0, side, seed, profile=profile)
                    if spec.horizon > 1:
                        full.meta["trajectory"].to_csv(out / f"trajectory_N{n}_A{side:g}_s{seed}.csv")
                    for mem in spec.mem_levels:
                        base = make_scenario(profile, full.rates, full.origins, mem, spec.compute_rate,
                                             spec.compute_window)
                        for method in spec.methods:
                            exact = method in ("ould", "ould_mp")
                            saturated = None    # placement of the largest feasible prefix
                            previous = None     # optimal placement of the last R, all accepted
                            for r in spec.r_range:
                                sc = base.with_origins(base.origins[:r])
                                if method != "ould_mp":
                                    sc = sc.at_step(0)
                                t0 = time.perf_counter()
                                try:
                                    if saturated is not None:
                                        # a superset of an infeasible set stays infeasible
                                        placement = saturated
                                        rep = evaluate(placement, sc, method)
                                    else:
                                        placement, rep = plan(method, sc, spec.time_limit,
                                                              fallback=previous if exact else None)
                                except SolverTimeout:
                                    row = _nan_row(method, sc, r, side, mem, seed, "timeout",
                                                   time.perf_counter() - t0)
                                else:
                                    if exact and rep.rejected_requests:
                                        saturated = placement
                                    elif exact and rep.optimal:
                                        previous = placement
                                    status = "ok" if rep.optimal or not exact else "incumbent"
                                    rep.solve_time = time.perf_counter() - t0
                                    row = report_row(rep, sc, area=side, mem_level=mem, seed=seed, status=status)
                                writer.writerow(row)
                                fh.flush()
                                rows.append(row)
                                name = _series_name(method, n, side, mem, seed)
                                series.setdefault(name, []).append(
                                    f"{r} {row['avg_latency_s']} {row['shared_bytes'] or 'nan'}")
                                if log:
                                    log(row)
    for name, lines in series.items():
        (out / name).write_text("# R avg_latency_s shared_bytes\n" + "\n".join(lines) + "\n",
                                encoding="utf-8")
    return rows


RUNTIME_COLUMNS = ["T", "R", "N", "seed", "ould_total_runtime_s", "ould_mp_runtime_s", "ratio", "status"]


def runtime_compare(spec: SweepSpec, horizon: int, mem: float | None = None) -> list[dict]:
    """Wall-clock of T independent static solves against one horizon-T solve.

    Each timing covers model building and solving.  Rows whose solves hit the
    time limit are flagged in ``status``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    mem = spec.mem_levels[0] if mem is None else mem
    profile = _profile(spec)
    rows = []
    for n in spec.n_list:
        for seed in spec.seeds:
            full = cell_scenario(spec, n, mem, spec.area_side[0], seed, horizon=horizon, profile=profile)
            for r in spec.r_range:
                sc = full.with_origins(full.origins[:r])
                status = "ok"
                t0 = time.perf_counter()
                for t in range(horizon):
                    status = _timed_solve(sc.at_step(t), "ould", spec.time_limit, status)
                ould = time.perf_counter() - t0
                t0 = time.perf_counter()
                status = _timed_solve(sc, "ould_mp", spec.time_limit, status)
                mp = time.perf_counter() - t0
                rows.append({"T": horizon, "R": r, "N": n, "seed": seed,
                             "ould_total_runtime_s": ould, "ould_mp_runtime_s": mp,
                             "ratio": mp / ould if ould > 0 else math.nan, "status": status})
    return rows


def _timed_solve(sc, mode, time_limit, status):
    try:
        p = solve_exact(build_model(sc, mode), time_limit=time_limit)
    except Infeasible:
        return status if status != "ok" else "infeasible"
    except SolverTimeout:
        return "timeout"
    return status if p.optimal else "timeout"


def write_rows(rows, path, columns) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
