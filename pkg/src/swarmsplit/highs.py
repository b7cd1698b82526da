"""Placement models solved with HiGHS through ``scipy.optimize.milp``.

HiGHS proves the optimal value.  The preferred optimum (fewest distinct UAVs,
then lexicographically smallest assignment) is then pinned down by further
solves restricted to the optimal face:

1. minimise the number of UAVs used subject to ``cost . x <= z*`` (within a
   relative 1e-9), then
2. walk the assignment positions in request-major, layer-minor order and
   minimise a window of them at a time with integer weights ``N**k`` so the
   window objective is lexicographic and integral.

Every assignment HiGHS returns is rounded, rechecked against the budgets and
scored in exact rationals; the final answer is the smallest
``(objective, distinct UAVs, assignment)`` key seen.
"""

from __future__ import annotations

import math
import time

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, milp

from .errors import Infeasible, SolverTimeout
from .ilp_core import IlpModel, Placement

CUT_REL = 1e-9
WINDOW_MAX = 4096


class _Face:
    def __init__(self, model: IlpModel, deadline: float):
        self.model = model
        sc = model.scenario
        self.sc = sc
        self.deadline = deadline
        self.base = [LinearConstraint(model.A_ub, -np.inf, model.b_ub),
                     LinearConstraint(model.A_eq, model.b_eq, model.b_eq)]
        self.best = None
        self.timed_out = False

    def remaining(self) -> float:
        return max(self.deadline - time.monotonic(), 1e-3)

    def assignment(self, x) -> np.ndarray:
        ai = self.model.alpha_index
        a = x[ai.reshape(-1)].reshape(ai.shape)        # (R, N, M)
        return a.argmax(axis=1)

    def feasible(self, a) -> bool:
        sc, m = self.sc, self.model
        mem = np.array(sc.profile.mem, dtype=float)
        flops = np.array(sc.profile.flops, dtype=float)
        used_m = np.zeros(sc.N)
        used_c = np.zeros(sc.N)
        np.add.at(used_m, a.ravel(), np.tile(mem, sc.R))
        np.add.at(used_c, a.ravel(), np.tile(flops, sc.R))
        if np.any(used_m > sc.mem_budget) or np.any(used_c > sc.compute_budget):
            return False
        return bool(np.all(m.upper[np.flatnonzero(m.vector_of(a))] > 0.5))

    def offer(self, x):
        a = self.assignment(x)
        if not self.feasible(a):
            return None
        key = (self.model.objective_of(self.model.vector_of(a)),
               len(np.unique(a)), tuple(int(v) for v in a.ravel()))
        if self.best is None or key < self.best:
            self.best = key
        return a

    def run(self, c, constraints, lb, ub, integrality):
        res = milp(c, constraints=constraints, integrality=integrality, bounds=Bounds(lb, ub),
                   options={"time_limit": self.remaining(), "mip_rel_gap": 0.0})
        if res.status == 1:
            self.timed_out = True
        if res.x is None:
            return res.status, None
        return res.status, np.round(res.x)


def _scaled(cost):
    """Cost rescaled so its smallest positive entry is 1.

    HiGHS stops at an absolute gap of 1e-6 that scipy does not expose, and raw
    costs in seconds are often that small.
    """
    pos = cost[cost > 0]
    return cost / pos.min() if pos.size else cost


def _face_rows(model: IlpModel, z: float):
    """Objective cut row keeping the search on the optimal face."""
    scale = z if z > 0 else 1.0
    row = model.cost / scale
    return LinearConstraint(sp.csr_matrix(row), -np.inf, (z / scale) * (1 + CUT_REL))


def solve(model: IlpModel, time_limit: float = 60.0) -> Placement:
    """Optimal placement with the deterministic tie-break, or the incumbent on timeout."""
    t0 = time.perf_counter()
    sc = model.scenario
    R, N, M = sc.R, sc.N, sc.M
    mem = np.array(sc.profile.mem, dtype=float)
    flops = np.array(sc.profile.flops, dtype=float)
    for j in range(M):
        if not np.any((mem[j] <= sc.mem_budget) & (flops[j] <= sc.compute_budget)):
            raise Infeasible(f"layer {j + 1} fits on no UAV")

    face = _Face(model, time.monotonic() + time_limit)
    n = model.n_vars
    ones = np.ones(n)
    status, x = face.run(_scaled(model.cost), face.base, np.zeros(n), model.upper, ones)
    if x is None:
        if status == 2:
            raise Infeasible("no assignment satisfies the memory, compute and link constraints")
        if face.timed_out:
            raise SolverTimeout(f"no feasible placement within {time_limit} s")
        raise RuntimeError(f"HiGHS returned status {status}")
    a = face.offer(x)
    if a is None:
        raise RuntimeError("HiGHS returned an assignment that violates the model")
    optimal = status == 0
    if optimal:
        _tie_break(face, model, a)
    exact, _, path = face.best
    return Placement(np.array(path, dtype=int).reshape(R, M), N, exact,
                     optimal=optimal, solve_time=time.perf_counter() - t0)


def _tie_break(face: _Face, model: IlpModel, a) -> None:
    sc = model.scenario
    R, N, M = sc.R, sc.N, sc.M
    n = model.n_vars
    z = float(face.best[0])
    upper = model.upper.astype(float).copy()
    cons = list(face.base)
    if z == 0:
        # an exact face: every priced column must stay off
        upper[model.cost > 0] = 0.0
    else:
        cons.append(_face_rows(model, z))

    # distinct-UAV count through indicators u_i >= alpha[r, i, j]
    ai = model.alpha_index
    rows, cols, vals = [], [], []
    for q, (r, i, j) in enumerate(np.ndindex(R, N, M)):
        rows += [q, q]
        cols += [int(ai[r, i, j]), n + i]
        vals += [1.0, -1.0]
    link = sp.csr_matrix((vals, (rows, cols)), shape=(R * N * M, n + N))
    pad = [LinearConstraint(sp.hstack([c.A, sp.csr_matrix((c.A.shape[0], N))]).tocsr(), c.lb, c.ub)
           for c in cons]
    pad.append(LinearConstraint(link, -np.inf, 0.0))
    lb = np.zeros(n + N)
    ub = np.concatenate([upper, np.ones(N)])
    integ = np.ones(n + N)
    if N > 1:
        c = np.concatenate([np.zeros(n), np.ones(N)])
        status, x = face.run(c, pad, lb, ub, integ)
        if x is None or status != 0:
            return
        face.offer(x[:n])
        distinct = int(round(x[n:].sum()))
        pad.append(LinearConstraint(sp.csr_matrix(c), -np.inf, distinct))

    # lexicographic walk over positions p = r * M + j
    current = np.array(face.best[2]).reshape(R, M)
    width = max(1, int(math.log(WINDOW_MAX) / math.log(N))) if N > 1 else R * M
    positions = [(r, j) for r in range(R) for j in range(M)]
    for start in range(0, len(positions), width):
        window = positions[start:start + width]
        if N > 1 and any(current[r, j] != 0 for r, j in window):
            c = np.zeros(n + N)
            for q, (r, j) in enumerate(window):
                weight = float(N ** (len(window) - 1 - q))
                c[ai[r, :, j]] += weight * np.arange(N)
            status, x = face.run(c, pad, lb, ub, integ)
            if x is None or status != 0:
                return
            got = face.offer(x[:n])
            if got is None:
                return
            current = got
        for r, j in window:
            lb[ai[r, current[r, j], j]] = 1.0


def find_feasible(model: IlpModel, time_limit: float = 60.0) -> Placement:
    """Any assignment satisfying the model (zero objective), for capacity scans."""
    t0 = time.perf_counter()
    sc = model.scenario
    face = _Face(model, time.monotonic() + time_limit)
    n = model.n_vars
    status, x = face.run(np.zeros(n), face.base, np.zeros(n), model.upper, np.ones(n))
    if x is None:
        if status == 2:
            raise Infeasible("no assignment satisfies the memory, compute and link constraints")
        if face.timed_out:
            raise SolverTimeout(f"feasibility undecided within {time_limit} s")
        raise RuntimeError(f"HiGHS returned status {status}")
    if face.offer(x) is None:
        raise RuntimeError("HiGHS returned an assignment that violates the model")
    exact, _, path = face.best
    return Placement(np.array(path, dtype=int).reshape(sc.R, sc.M), sc.N, exact,
                     optimal=False, solve_time=time.perf_counter() - t0)
