"""Linearised layer-placement model and its exhaustive oracle.

Decision variables, all binary:

* ``alpha[r, i, j]`` -- UAV i runs layer j of request r
* ``gamma[r, i, k, j]`` (i != k, j < M-1) -- layer j's output goes from i to k

Rows: per-UAV memory and compute budgets, one host per (r, j), and the three
product rows tying gamma to ``alpha[r, i, j] * alpha[r, k, j+1]``.

The objective charges ``8 * K_j / rate[i, k]`` seconds on every gamma and
``8 * K_s / rate[o, k]`` on ``alpha[r, k, 0]`` for k != o, the origin of r,
i.e. the cost of shipping the captured image to whichever UAV runs the first
layer.  Sizes are bytes and rates bits/s; the factor 8 lives here and in
``planner.evaluate`` only.  In ``ould_mp`` mode every coefficient is summed over
the T per-step rate matrices.  A pair whose rate is 0 (at any step) gets its
variable fixed to 0 instead of a large penalty.

Exact objective values are kept as ``fractions.Fraction`` so that equal
placements compare equal regardless of summation order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .cnn_profile import CnnProfile
from .errors import Infeasible, InfeasibleHint, TooLarge

MODES = ("ould", "ould_mp")
BRUTE_FORCE_LIMIT = 10 ** 7
DEFAULT_COMPUTE_RATE = 9.5e9  # FLOPS


@dataclass(frozen=True, eq=False)
class Scenario:
    """One placement problem.

    ``rates`` has shape (T, N, N); T == 1 for the static problem.  Budgets are
    per UAV: bytes of memory and FLOPs of compute for the planning window.
    ``origins`` are 0-based UAV indices, one per request, in arrival order.
    """

    profile: CnnProfile
    mem_budget: np.ndarray
    compute_budget: np.ndarray
    origins: tuple[int, ...]
    rates: np.ndarray
    compute_rate: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        if rates.ndim == 2:
            rates = rates[None]
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "origins", tuple(int(o) for o in self.origins))
        n = rates.shape[1]
        for name in ("mem_budget", "compute_budget", "compute_rate"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n,)).copy()
            if not np.all(arr > 0):
                raise ValueError(f"{name} must be strictly positive")
            object.__setattr__(self, name, arr)
        if rates.ndim != 3 or rates.shape[1] != rates.shape[2]:
            raise ValueError("rates must have shape (T, N, N)")
        if np.any(rates < 0):
            raise ValueError("rates must be non-negative")
        if len(self.origins) < 1:
            raise ValueError("need at least one request")
        if any(not 0 <= o < n for o in self.origins):
            raise ValueError("request origin out of range")

    @property
    def N(self) -> int:
        return self.rates.shape[1]

    @property
    def M(self) -> int:
        return self.profile.M

    @property
    def R(self) -> int:
        return len(self.origins)

    @property
    def T(self) -> int:
        return self.rates.shape[0]

    def at_step(self, t: int) -> "Scenario":
        return replace(self, rates=self.rates[t:t + 1].copy())

    def with_origins(self, origins: Sequence[int]) -> "Scenario":
        return replace(self, origins=tuple(origins))

    def with_rates(self, rates) -> "Scenario":
        return replace(self, rates=np.asarray(rates, dtype=float))


def make_scenario(profile, rates, origins, mem_budget, compute_rate=DEFAULT_COMPUTE_RATE,
                  compute_window=1.0, **meta) -> Scenario:
    """Build a scenario with ``compute_budget = compute_rate * compute_window``."""
    rate_arr = np.asarray(rates, dtype=float)
    n = rate_arr.shape[-1]
    crate = np.broadcast_to(np.asarray(compute_rate, dtype=float), (n,))
    return Scenario(profile, mem_budget, crate * compute_window, origins, rate_arr, crate, dict(meta))


@dataclass(frozen=True, eq=False)
class Placement:
    """Layer-to-UAV assignment, ``assignment[r, j]`` = UAV running layer j of request r."""

    assignment: np.ndarray
    n_uavs: int
    objective_exact: Fraction
    optimal: bool = True
    solve_time: float = 0.0
    requests: tuple[int, ...] | None = None

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=int)
        object.__setattr__(self, "assignment", a)
        if self.requests is None:
            object.__setattr__(self, "requests", tuple(range(a.shape[0])))

    @property
    def objective_value(self) -> float:
        return float(self.objective_exact)

    @property
    def alpha(self) -> np.ndarray:
        R, M = self.assignment.shape
        out = np.zeros((R, self.n_uavs, M), dtype=np.int8)
        r_idx, j_idx = np.indices((R, M))
        out[r_idx, self.assignment, j_idx] = 1
        return out

    @property
    def gamma(self) -> np.ndarray:
        R, M = self.assignment.shape
        out = np.zeros((R, self.n_uavs, self.n_uavs, max(M - 1, 0)), dtype=np.int8)
        for r in range(R):
            for j in range(M - 1):
                i, k = self.assignment[r, j], self.assignment[r, j + 1]
                if i != k:
                    out[r, i, k, j] = 1
        return out

    @property
    def n_distinct(self) -> int:
        return len(np.unique(self.assignment))

    def key(self):
        """Ordering used to pick among optima: objective, distinct UAVs, lexicographic."""
        return (self.objective_exact, self.n_distinct, tuple(self.assignment.ravel().tolist()))


def exact_transfer_cost(size_bytes: int, rates_over_steps) -> Fraction | None:
    """Sum over steps of 8 * size / rate as an exact rational; None if any rate is 0."""
    total = Fraction(0)
    bits = Fraction(8 * int(size_bytes))
    for rho in rates_over_steps:
        if rho <= 0:
            return None
        total += bits / Fraction(float(rho))
    return total


@dataclass(eq=False)
class IlpModel:
    scenario: Scenario
    mode: str
    alpha_index: np.ndarray        # (R, N, M) -> column
    gamma_index: np.ndarray        # (R, N, N, M-1) -> column, -1 where i == k
    cost: np.ndarray               # float objective coefficients
    cost_exact: np.ndarray         # same, as Fractions (dtype=object)
    upper: np.ndarray              # 0 fixes a variable to zero (link exclusion)
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    ub_kind: np.ndarray            # 'memory' | 'compute' | 'bigm_le_src' | 'bigm_le_dst' | 'bigm_ge'
    A_eq: sp.csr_matrix
    b_eq: np.ndarray

    @property
    def n_alpha(self) -> int:
        return int(self.alpha_index.size)

    @property
    def n_gamma(self) -> int:
        return int((self.gamma_index >= 0).sum())

    @property
    def n_vars(self) -> int:
        return self.n_alpha + self.n_gamma

    @property
    def n_bigm_rows(self) -> int:
        return int(np.char.startswith(self.ub_kind.astype(str), "bigm").sum())

    def objective_of(self, x) -> Fraction:
        x = np.asarray(x)
        return sum((self.cost_exact[v] for v in np.flatnonzero(x > 0.5)), Fraction(0))

    def vector_of(self, assignment) -> np.ndarray:
        """0/1 column vector (alpha then gamma) encoding an assignment."""
        a = np.asarray(assignment, dtype=int)
        x = np.zeros(self.n_vars)
        R, M = a.shape
        for r in range(R):
            for j in range(M):
                x[self.alpha_index[r, a[r, j], j]] = 1
                if j < M - 1 and a[r, j] != a[r, j + 1]:
                    x[self.gamma_index[r, a[r, j], a[r, j + 1], j]] = 1
        return x


def _check_mode(scenario: Scenario, mode: str):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "ould" and scenario.T != 1:
        raise ValueError("ould mode needs a single rate matrix; use ould_mp or Scenario.at_step")


def build_model(scenario: Scenario, mode: str = "ould") -> IlpModel:
    _check_mode(scenario, mode)
    prof = scenario.profile
    R, N, M = scenario.R, scenario.N, scenario.M
    mem = np.array(prof.mem, dtype=float)
    flops = np.array(prof.flops, dtype=float)
    if mem.sum() * R > scenario.mem_budget.sum():
        raise InfeasibleHint(
            f"demand {int(mem.sum()) * R} B exceeds swarm memory {int(scenario.mem_budget.sum())} B")

    rates = scenario.rates  # (T, N, N)
    pair_exact = {}

    def pair_cost(size, i, k):
        key = (size, i, k)
        if key not in pair_exact:
            pair_exact[key] = exact_transfer_cost(size, rates[:, i, k])
        return pair_exact[key]

    alpha_index = np.arange(R * N * M).reshape(R, N, M)
    gamma_index = -np.ones((R, N, N, max(M - 1, 0)), dtype=int)
    col = R * N * M
    for r in range(R):
        for i in range(N):
            for k in range(N):
                if i == k:
                    continue
                for j in range(M - 1):
                    gamma_index[r, i, k, j] = col
                    col += 1
    n_vars = col

    cost_exact = np.empty(n_vars, dtype=object)
    cost_exact[:] = [Fraction(0)] * n_vars
    upper = np.ones(n_vars)

    for r, o in enumerate(scenario.origins):
        for k in range(N):
            if k == o:
                continue
            c = pair_cost(prof.input_bytes, o, k)
            v = alpha_index[r, k, 0]
            if c is None:
                upper[v] = 0
            else:
                cost_exact[v] = c
        for i in range(N):
            for k in range(N):
                if i == k:
                    continue
                for j in range(M - 1):
                    c = pair_cost(prof.outputs[j], i, k)
                    v = gamma_index[r, i, k, j]
                    if c is None:
                        upper[v] = 0
                    else:
                        cost_exact[v] = c
    cost = np.array([float(c) for c in cost_exact])

    rows, cols, vals, rhs, kind = [], [], [], [], []
    row = 0
    for label, demand, budget in (("memory", mem, scenario.mem_budget),
                                  ("compute", flops, scenario.compute_budget)):
        for i in range(N):
            for r in range(R):
                for j in range(M):
                    rows.append(row)
                    cols.append(alpha_index[r, i, j])
                    vals.append(demand[j])
            rhs.append(budget[i])
            kind.append(label)
            row += 1
    for r in range(R):
        for i in range(N):
            for k in range(N):
                if i == k:
                    continue
                for j in range(M - 1):
                    g = gamma_index[r, i, k, j]
                    a_src = alpha_index[r, i, j]
                    a_dst = alpha_index[r, k, j + 1]
                    # gamma <= alpha_src
                    rows += [row, row]; cols += [g, a_src]; vals += [1.0, -1.0]
                    rhs.append(0.0); kind.append("bigm_le_src"); row += 1
                    # gamma <= alpha_dst
                    rows += [row, row]; cols += [g, a_dst]; vals += [1.0, -1.0]
                    rhs.append(0.0); kind.append("bigm_le_dst"); row += 1
                    # gamma >= alpha_src + alpha_dst - 1
                    rows += [row, row, row]; cols += [a_src, a_dst, g]; vals += [1.0, 1.0, -1.0]
                    rhs.append(1.0); kind.append("bigm_ge"); row += 1
    A_ub = sp.csr_matrix((vals, (rows, cols)), shape=(row, n_vars))

    eq_rows, eq_cols = [], []
    e = 0
    for r in range(R):
        for j in range(M):
            for i in range(N):
                eq_rows.append(e)
                eq_cols.append(alpha_index[r, i, j])
            e += 1
    A_eq = sp.csr_matrix((np.ones(len(eq_rows)), (eq_rows, eq_cols)), shape=(e, n_vars))

    return IlpModel(
        scenario=scenario, mode=mode, alpha_index=alpha_index, gamma_index=gamma_index,
        cost=cost, cost_exact=cost_exact, upper=upper,
        A_ub=A_ub, b_ub=np.array(rhs, dtype=float), ub_kind=np.array(kind),
        A_eq=A_eq, b_eq=np.ones(e),
    )


def _digits(start, stop, base, width):
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(idx), width), dtype=np.int64)
    for p in range(width - 1, -1, -1):
        out[:, p] = idx % base
        idx //= base
    return out


def brute_force(scenario: Scenario, mode: str = "ould", chunk: int = 200_000) -> Placement:
    """Enumerate every layer assignment; ties go to the lexicographically smallest.

    Independent of ``build_model``: costs are recomputed here from the rates.
    """
    _check_mode(scenario, mode)
    R, N, M, T = scenario.R, scenario.N, scenario.M, scenario.T
    width = R * M
    total = N ** width
    if total > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"{N}^{width} = {total} assignments exceeds {BRUTE_FORCE_LIMIT}")
    prof = scenario.profile
    mem = np.array(prof.mem, dtype=float)
    flops = np.array(prof.flops, dtype=float)

    with np.errstate(divide="ignore"):
        inv = np.where(scenario.rates > 0, 1.0 / scenario.rates, np.inf)  # (T, N, N)
    inv_sum = inv.sum(axis=0)
    for i in range(N):
        inv_sum[i, i] = 0.0
    out_bits = 8.0 * np.array(prof.outputs, dtype=float)
    src_bits = 8.0 * prof.input_bytes
    layer_of = np.tile(np.arange(M), R)

    def scores(a):
        ok = np.ones(len(a), dtype=bool)
        for i in range(N):
            on_i = a == i
            ok &= (on_i * mem[layer_of]).sum(axis=1) <= scenario.mem_budget[i]
            ok &= (on_i * flops[layer_of]).sum(axis=1) <= scenario.compute_budget[i]
        obj = np.zeros(len(a))
        with np.errstate(invalid="ignore"):
            for r, o in enumerate(scenario.origins):
                first = a[:, r * M]
                obj += np.where(first == o, 0.0, src_bits * inv_sum[o, first])
                for j in range(M - 1):
                    u, v = a[:, r * M + j], a[:, r * M + j + 1]
                    obj += np.where(u == v, 0.0, out_bits[j] * inv_sum[u, v])
        return np.where(ok & np.isfinite(obj), obj, np.inf)

    best = np.inf
    for start in range(0, total, chunk):
        s = scores(_digits(start, min(start + chunk, total), N, width))
        best = min(best, float(s.min()))
    if not np.isfinite(best):
        raise Infeasible("no assignment satisfies the memory, compute and link constraints")

    def exact(a_row):
        val = Fraction(0)
        for r, o in enumerate(scenario.origins):
            prev = o
            size = prof.input_bytes
            for j in range(M):
                u = int(a_row[r * M + j])
                if u != prev:
                    val += exact_transfer_cost(size, scenario.rates[:, prev, u])
                prev = u
                size = prof.outputs[j]
        return val

    tol = 1e-9 * best + 1e-300
    winner = None
    for start in range(0, total, chunk):
        a = _digits(start, min(start + chunk, total), N, width)
        s = scores(a)
        for row in np.flatnonzero(s <= best + tol):
            cand = (exact(a[row]), tuple(a[row].tolist()))
            if winner is None or cand < winner:
                winner = cand
    return Placement(np.array(winner[1]).reshape(R, M), N, winner[0])


SOLVER_BACKENDS = ("highs", "dfs")


def solve_exact(model: IlpModel, time_limit: float = 60.0, backend: str = "highs") -> Placement:
    """Optimal placement of ``model``.

    ``backend="highs"`` runs the MILP through HiGHS; ``"dfs"`` is the
    combinatorial branch and bound in :mod:`swarmsplit.solver`, exact and
    self-contained but only practical for small instances.  Both apply the
    same tie-break and return identical placements when they finish.
    """
    if backend == "highs":
        from .highs import solve
        return solve(model, time_limit=time_limit)
    if backend == "dfs":
        from .solver import branch_and_bound
        return branch_and_bound(model, time_limit=time_limit)
    raise ValueError(f"backend must be one of {SOLVER_BACKENDS}")


def enumerate_assignments(n: int, r: int, m: int):
    """Every assignment as an (r, m) array, in lexicographic order (tests, tiny sizes)."""
    for flat in itertools.product(range(n), repeat=r * m):
        yield np.array(flat).reshape(r, m)
