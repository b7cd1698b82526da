"""Placement entry points, heuristic baselines and the latency evaluator.

``evaluate`` is deliberately written without touching :mod:`ilp_core`'s model
so that it can cross-check the solver: it walks each request's layer chain,
charges ``8 * K / rate`` seconds per hop and ``flops / compute_rate`` seconds
per layer, and checks budgets and links itself.

With T > 1 rate matrices a placement is executed once per step.  The report's
totals are sums over the horizon and ``per_step`` holds the single-step
reports.

Requests are served in arrival order (the order of ``scenario.origins``).
When the full set cannot be placed, the latest arrivals are rejected one at a
time until the rest fit.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import Infeasible, InfeasiblePlacement
from .ilp_core import Placement, Scenario, build_model, solve_exact

METHODS = ("ould", "ould_mp", "nearest", "hrm", "nearest_hrm")


class RequestLatency(NamedTuple):
    request: int
    comm_seconds: float
    comp_seconds: float
    total_seconds: float


@dataclass
class LatencyReport:
    method: str
    per_request: list[RequestLatency]
    avg_latency_per_request: float
    shared_data_bytes: int
    rejected_requests: int
    comm_exact: Fraction = Fraction(0)
    avg_exact: Fraction = Fraction(0)
    per_step: list["LatencyReport"] = field(default_factory=list)
    optimal: bool = True
    solve_time: float = 0.0

    @property
    def accepted(self) -> int:
        return len(self.per_request)

    @property
    def comm_seconds(self) -> float:
        """Mean communication time per accepted request."""
        return _mean([q.comm_seconds for q in self.per_request])

    @property
    def comp_seconds(self) -> float:
        return _mean([q.comp_seconds for q in self.per_request])


def _mean(values) -> float:
    return math.fsum(values) / len(values) if values else 0.0


@dataclass
class HeuristicState:
    residual_mem: np.ndarray
    residual_compute: np.ndarray
    current_holder: dict = field(default_factory=dict)

    def take(self, uav: int, mem: float, flops: float) -> None:
        if mem > self.residual_mem[uav] or flops > self.residual_compute[uav]:
            raise ValueError("allocation exceeds residual budget")
        self.residual_mem[uav] -= mem
        self.residual_compute[uav] -= flops

    def give(self, uav: int, mem: float, flops: float) -> None:
        self.residual_mem[uav] += mem
        self.residual_compute[uav] += flops


# -- evaluator ---------------------------------------------------------------

def _hops(row, origin, profile):
    """(src, dst, bytes) for every inter-UAV hop of one request."""
    hops = []
    if row[0] != origin:
        hops.append((origin, int(row[0]), profile.input_bytes))
    for j in range(len(row) - 1):
        if row[j] != row[j + 1]:
            hops.append((int(row[j]), int(row[j + 1]), profile.outputs[j]))
    return hops


def _check_budgets(assignment, scenario: Scenario) -> None:
    prof = scenario.profile
    used_mem = [0] * scenario.N
    used_flops = [0] * scenario.N
    for row in assignment:
        for j, uav in enumerate(row):
            used_mem[uav] += prof.layers[j].mem_bytes
            used_flops[uav] += prof.layers[j].flops
    for i in range(scenario.N):
        if used_mem[i] > scenario.mem_budget[i]:
            raise InfeasiblePlacement(
                "memory", f"UAV {i + 1} holds {used_mem[i]} B, budget {scenario.mem_budget[i]:.0f} B")
        if used_flops[i] > scenario.compute_budget[i]:
            raise InfeasiblePlacement(
                "compute", f"UAV {i + 1} runs {used_flops[i]} FLOP, budget {scenario.compute_budget[i]:.0f} FLOP")


def _evaluate_step(assignment, requests, scenario: Scenario, t: int, method: str) -> LatencyReport:
    prof = scenario.profile
    rates = scenario.rates[t]
    per_request = []
    comm_total = Fraction(0)
    comp_total = Fraction(0)
    shared = 0
    for row, req in zip(assignment, requests):
        comm = []
        comm_q = Fraction(0)
        for src, dst, size in _hops(row, scenario.origins[req], prof):
            rho = float(rates[src, dst])
            if rho <= 0:
                raise InfeasiblePlacement(
                    "link", f"request {req + 1} sends {size} B over disconnected pair "
                    f"({src + 1}, {dst + 1})", step=t + 1)
            comm.append(8 * size / rho)
            comm_q += Fraction(8 * size) / Fraction(rho)
            shared += size
        comp = [prof.layers[j].flops / float(scenario.compute_rate[u]) for j, u in enumerate(row)]
        comp_q = sum((Fraction(prof.layers[j].flops) / Fraction(float(scenario.compute_rate[u]))
                      for j, u in enumerate(row)), Fraction(0))
        c, p = math.fsum(comm), math.fsum(comp)
        per_request.append(RequestLatency(int(req), c, p, c + p))
        comm_total += comm_q
        comp_total += comp_q
    n = len(per_request)
    return LatencyReport(
        method=method,
        per_request=per_request,
        avg_latency_per_request=_mean([q.total_seconds for q in per_request]),
        shared_data_bytes=shared,
        rejected_requests=scenario.R - n,
        comm_exact=comm_total,
        avg_exact=(comm_total + comp_total) / n if n else Fraction(0),
    )


def evaluate(placement: Placement, scenario: Scenario, method: str = "ould") -> LatencyReport:
    """Latency and shared-data report for ``placement`` on ``scenario``.

    Raises :class:`InfeasiblePlacement` naming the violated constraint
    (``memory``, ``compute``, ``link`` or ``shape``).
    """
    a = np.asarray(placement.assignment, dtype=int)
    requests = tuple(placement.requests)
    if a.ndim != 2 or a.shape != (len(requests), scenario.M):
        raise InfeasiblePlacement("shape", f"expected ({len(requests)}, {scenario.M}), got {a.shape}")
    if a.size and (a.min() < 0 or a.max() >= scenario.N):
        raise InfeasiblePlacement("shape", "UAV index out of range")
    if len(set(requests)) != len(requests) or any(not 0 <= q < scenario.R for q in requests):
        raise InfeasiblePlacement("shape", "bad request indices")
    _check_budgets(a, scenario)
    steps = [_evaluate_step(a, requests, scenario, t, method) for t in range(scenario.T)]
    if scenario.T == 1:
        report = steps[0]
    else:
        per_request = []
        for q in range(len(requests)):
            c = math.fsum(s.per_request[q].comm_seconds for s in steps)
            p = math.fsum(s.per_request[q].comp_seconds for s in steps)
            per_request.append(RequestLatency(requests[q], c, p, c + p))
        report = LatencyReport(
            method=method,
            per_request=per_request,
            avg_latency_per_request=_mean([q.total_seconds for q in per_request]),
            shared_data_bytes=sum(s.shared_data_bytes for s in steps),
            rejected_requests=scenario.R - len(requests),
            comm_exact=sum((s.comm_exact for s in steps), Fraction(0)),
            avg_exact=sum((s.avg_exact for s in steps), Fraction(0)),
            per_step=steps,
        )
    report.optimal = placement.optimal
    report.solve_time = placement.solve_time
    return report


class StepOutcome(NamedTuple):
    step: int                       # 1-based
    report: LatencyReport | None
    violation: InfeasiblePlacement | None


def replay(placement: Placement, scenario: Scenario, method: str = "ould") -> list[StepOutcome]:
    """Evaluate ``placement`` at each step of ``scenario`` separately."""
    out = []
    for t in range(scenario.T):
        try:
            rep = evaluate(placement, scenario.at_step(t), method)
            out.append(StepOutcome(t + 1, rep, None))
        except InfeasiblePlacement as exc:
            exc.step = t + 1
            out.append(StepOutcome(t + 1, None, exc))
    return out


# -- optimal planners ----------------------------------------------------------

def _aggregate_fits(scenario: Scenario, r: int) -> bool:
    prof = scenario.profile
    return (sum(prof.mem) * r <= scenario.mem_budget.sum()
            and sum(prof.flops) * r <= scenario.compute_budget.sum())


def _empty(scenario: Scenario) -> Placement:
    return Placement(np.zeros((0, scenario.M), dtype=int), scenario.N, Fraction(0), requests=())


def _plan(scenario: Scenario, mode: str, method: str, time_limit: float, backend: str,
          fallback: Placement | None = None):
    r = scenario.R
    floor = len(fallback.requests) if fallback is not None else 0
    while r > floor:
        sub = scenario.with_origins(scenario.origins[:r])
        if _aggregate_fits(scenario, r):
            try:
                placement = solve_exact(build_model(sub, mode), time_limit=time_limit, backend=backend)
            except Infeasible:
                r -= 1
                continue
            placement = replace(placement, requests=tuple(range(r)))
            return placement, evaluate(placement, scenario, method)
        r -= 1
    placement = fallback if fallback is not None else _empty(scenario)
    return placement, evaluate(placement, scenario, method)


def plan_ould(scenario: Scenario, time_limit: float = 60.0, backend: str = "highs",
              fallback: Placement | None = None):
    """Optimal static placement; returns ``(Placement, LatencyReport)``.

    ``fallback`` may hold the optimal placement of the first r < R requests;
    the drop-latest retry then stops there instead of solving it again.
    """
    if scenario.T != 1:
        raise ValueError("plan_ould takes a single rate matrix; use plan_ould_mp")
    return _plan(scenario, "ould", "ould", time_limit, backend, fallback)


def plan_ould_mp(scenario: Scenario, time_limit: float = 60.0, backend: str = "highs",
                 fallback: Placement | None = None):
    """One placement for all T steps, minimising the summed communication time."""
    return _plan(scenario, "ould_mp", "ould_mp", time_limit, backend, fallback)


# -- heuristics ----------------------------------------------------------------

def _link_rates(scenario: Scenario) -> np.ndarray:
    # usable only if connected at every step; rank by the worst step
    return scenario.rates.min(axis=0)


def _key_nearest(cands, holder, rates, state):
    return max(cands, key=lambda k: (rates[holder, k], -k))


def _key_hrm(cands, holder, rates, state):
    return max(cands, key=lambda k: (state.residual_mem[k], rates[holder, k], -k))


def _key_nearest_hrm(cands, holder, rates, state):
    threshold = statistics.median(state.residual_mem[k] for k in cands)
    passing = [k for k in cands if state.residual_mem[k] >= threshold]
    return _key_nearest(passing, holder, rates, state)


_SELECT = {"nearest": _key_nearest, "hrm": _key_hrm, "nearest_hrm": _key_nearest_hrm}


def _greedy(scenario: Scenario, method: str):
    select = _SELECT[method]
    prof = scenario.profile
    rates = _link_rates(scenario)
    state = HeuristicState(scenario.mem_budget.astype(float).copy(),
                           scenario.compute_budget.astype(float).copy())
    rows, accepted = [], []
    for req, origin in enumerate(scenario.origins):
        holder = origin
        row = []
        for layer in prof.layers:
            need_m, need_c = layer.mem_bytes, layer.flops
            if not (need_m <= state.residual_mem[holder] and need_c <= state.residual_compute[holder]):
                cands = [k for k in range(scenario.N)
                         if k != holder and rates[holder, k] > 0
                         and need_m <= state.residual_mem[k] and need_c <= state.residual_compute[k]]
                if not cands:
                    break
                holder = select(cands, holder, rates, state)
            state.take(holder, need_m, need_c)
            state.current_holder[req] = holder
            row.append(holder)
        if len(row) == prof.M:
            rows.append(row)
            accepted.append(req)
        else:
            for j, uav in enumerate(row):
                state.give(uav, prof.layers[j].mem_bytes, prof.layers[j].flops)
        state.current_holder.pop(req, None)
    a = np.array(rows, dtype=int).reshape(len(rows), prof.M)
    placement = Placement(a, scenario.N, Fraction(0), optimal=False, requests=tuple(accepted))
    report = evaluate(placement, scenario, method)
    return replace(placement, objective_exact=report.comm_exact), report


def plan_nearest(scenario: Scenario):
    """Hand off to the highest-rate neighbour that can take the next layer."""
    return _greedy(scenario, "nearest")


def plan_hrm(scenario: Scenario):
    """Hand off to the neighbour with the most residual memory (ties: higher rate)."""
    return _greedy(scenario, "hrm")


def plan_nearest_hrm(scenario: Scenario):
    """Among neighbours at or above the median residual memory, the highest-rate one."""
    return _greedy(scenario, "nearest_hrm")


def plan(method: str, scenario: Scenario, time_limit: float = 60.0, backend: str = "highs",
         fallback: Placement | None = None):
    """Dispatch on ``method``; ``fallback`` only matters to the exact methods."""
    method = method.replace("-", "_")
    if method == "ould":
        return plan_ould(scenario, time_limit, backend, fallback)
    if method == "ould_mp":
        return plan_ould_mp(scenario, time_limit, backend, fallback)
    if method in _SELECT:
        return _greedy(scenario, method)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


# -- capacity ------------------------------------------------------------------

def _cycled(origins, r):
    return tuple(origins[q % len(origins)] for q in range(r))


def system_capacity(template: Scenario, r_max: int, mode: str = "ould",
                    time_limit: float = 60.0) -> int:
    """Largest R <= r_max for which all R requests can be placed.

    Requests arrive in the template's origin order, repeated cyclically when
    ``r_max`` exceeds it.  The scan goes up from R = 1 and stops at the first
    R that needs a rejection: a superset of an infeasible request set is
    infeasible too.
    """
    from .highs import find_feasible

    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    capacity = 0
    for r in range(1, r_max + 1):
        sc = template.with_origins(_cycled(template.origins, r))
        if not _aggregate_fits(sc, r):
            break
        try:
            find_feasible(build_model(sc, mode), time_limit=time_limit)
        except Infeasible:
            break
        capacity = r
    return capacity


# -- serialisation -------------------------------------------------------------

CSV_COLUMNS = ["method", "R", "N", "area", "mem_level", "avg_latency_s", "comm_s", "comp_s",
               "shared_bytes", "rejected", "solve_time_s", "seed", "horizon", "status"]


def report_row(report: LatencyReport, scenario: Scenario, *, area="", mem_level="", seed="",
               status="ok") -> dict:
    return {
        "method": report.method,
        "R": scenario.R,
        "N": scenario.N,
        "area": area,
        "mem_level": mem_level,
        "avg_latency_s": repr(report.avg_latency_per_request),
        "comm_s": repr(report.comm_seconds),
        "comp_s": repr(report.comp_seconds),
        "shared_bytes": report.shared_data_bytes,
        "rejected": report.rejected_requests,
        "solve_time_s": f"{report.solve_time:.6f}",
        "seed": seed,
        "horizon": scenario.T,
        "status": status,
    }


def placement_rows(placement: Placement):
    """``request,layer,uav`` rows, all 1-based."""
    for row, req in zip(placement.assignment, placement.requests):
        for j, uav in enumerate(row):
            yield {"request": req + 1, "layer": j + 1, "uav": int(uav) + 1}
