"""Exact depth-first branch and bound over the placement model.

Branching fixes one ``alpha[r, :, j]`` row at a time (request-major, layer
minor), so every leaf is a complete assignment and the gamma variables follow
from it.  All coefficients, fixings and budgets are read from the
:class:`~swarmsplit.ilp_core.IlpModel`.

Lower bound at a node: cost so far, plus for the current request and each
later one the cheapest completion that ignores the other requests.  That
completion is a DP over contiguous blocks of layers where a block on UAV i
must fit i's *current* residual memory and compute; residuals only shrink
deeper in the tree, so the relaxation stays valid.  A few rounds of
subgradient prices on memory and FLOPs tighten that bound by charging for
capacity the later requests will also want.  The search is exact but only
practical for small instances; :mod:`swarmsplit.highs` is the default.

Among optimal leaves the winner is the one with fewer distinct UAVs, then the
lexicographically smallest assignment.  Identical requests (same origin, same
coefficients) are ordered so that their assignment rows are non-decreasing;
the preferred optimum always satisfies this, so no winner is lost.
"""

from __future__ import annotations

import time
from fractions import Fraction

import numpy as np

from .errors import Infeasible, SolverTimeout
from .ilp_core import IlpModel, Placement

TOL = 1e-11
_CACHE_MAX = 200_000


class _Search:
    def __init__(self, model: IlpModel, time_limit: float, first_feasible: bool):
        sc = model.scenario
        self.R, self.N, self.M = R, N, M = sc.R, sc.N, sc.M
        self.origins = sc.origins
        self.mem = np.array(sc.profile.mem, dtype=float)
        self.flops = np.array(sc.profile.flops, dtype=float)
        self.res_mem = sc.mem_budget.astype(float).copy()
        self.res_c = sc.compute_budget.astype(float).copy()
        self.deadline = time.monotonic() + time_limit
        self.first_feasible = first_feasible

        inf = np.inf
        ai, gi = model.alpha_index, model.gamma_index
        allowed = model.upper[ai] > 0.5                      # (R, N, M)
        self.src = np.where(allowed[:, :, 0], model.cost[ai[:, :, 0]], inf)
        self.src_exact = model.cost_exact[ai[:, :, 0]]      # (R, N) objects
        trans = np.zeros((R, max(M - 1, 0), N, N))
        trans_exact = np.empty((R, max(M - 1, 0), N, N), dtype=object)
        trans_exact[...] = Fraction(0)
        for r in range(R):
            for j in range(M - 1):
                for i in range(N):
                    for k in range(N):
                        if i == k:
                            continue
                        v = gi[r, i, k, j]
                        trans[r, j, i, k] = model.cost[v] if model.upper[v] > 0.5 else inf
                        trans_exact[r, j, i, k] = model.cost_exact[v]
        self.trans = trans
        self.trans_exact = trans_exact
        self.trans_nd = trans.copy()
        diag = np.arange(N)
        self.trans_nd[:, :, diag, diag] = inf

        # request classes: interchangeable requests share origin and every coefficient
        self.cls = []
        reps = []
        for r in range(R):
            for c, q in enumerate(reps):
                if (self.origins[q] == self.origins[r]
                        and np.array_equal(allowed[q], allowed[r])
                        and np.array_equal(self.src[q], self.src[r])
                        and np.array_equal(trans[q], trans[r])):
                    self.cls.append(c)
                    break
            else:
                self.cls.append(len(reps))
                reps.append(r)
        self.rep = reps
        self.prev_same = []
        for r in range(R):
            prev = [q for q in range(r) if self.cls[q] == self.cls[r]]
            self.prev_same.append(prev[-1] if prev else -1)

        cm = np.concatenate([[0.0], np.cumsum(self.mem)])
        cf = np.concatenate([[0.0], np.cumsum(self.flops)])
        a_idx, b_idx = np.indices((M, M))
        upper_tri = b_idx >= a_idx
        self.block_mem = np.where(upper_tri, cm[np.minimum(b_idx + 1, M)] - cm[a_idx], inf)
        self.block_flops = np.where(upper_tri, cf[np.minimum(b_idx + 1, M)] - cf[a_idx], inf)
        # allowed_run[c][a, b, i]: every layer a..b may run on i
        self.allowed_run = []
        for q in reps:
            run = np.zeros((M, M, N), dtype=bool)
            for a in range(M):
                acc = np.ones(N, dtype=bool)
                for b in range(a, M):
                    acc = acc & allowed[q, :, b]
                    run[a, b] = acc
            self.allowed_run.append(run)
        self.mem_total = self.mem.sum()
        self.flops_total = self.flops.sum()
        self.mem_suffix = np.concatenate([np.cumsum(self.mem[::-1])[::-1], [0.0]])
        self.flops_suffix = np.concatenate([np.cumsum(self.flops[::-1])[::-1], [0.0]])

        self.mem_scale = float(sc.mem_budget.mean())
        self.c_scale = float(sc.compute_budget.mean())
        # ceiling on any feasible completion: every hop at its dearest finite price
        worst = []
        for r in range(R):
            w = self._finite_max(self.src[r])
            for j in range(M - 1):
                w += self._finite_max(trans[r, j])
            worst.append(w)
        self.worst_suffix = np.concatenate([np.cumsum(worst[::-1])[::-1], [0.0]])

        self.cache = {}
        self.path = []
        self.used = np.zeros(N, dtype=int)
        self.n_used = 0
        self.best = None          # (exact, distinct, path tuple)
        self.best_float = np.inf
        self.nodes = 0
        self.timed_out = False
        self.stop = False

    @staticmethod
    def _finite_max(a) -> float:
        finite = a[np.isfinite(a)]
        return float(finite.max()) if finite.size else 0.0

    # -- bounds -----------------------------------------------------------
    def _fits(self, c: int, a: int) -> np.ndarray:
        key = (c, a, self.res_mem.tobytes(), self.res_c.tobytes())
        hit = self.cache.get(key)
        if hit is None:
            hit = ((self.block_mem[a:, a:, None] <= self.res_mem)
                   & (self.block_flops[a:, a:, None] <= self.res_c)
                   & self.allowed_run[c][a:, a:, :])
            if len(self.cache) > _CACHE_MAX:
                self.cache.clear()
            self.cache[key] = hit
        return hit

    def dp(self, c: int, a: int, pm=None, pc=None):
        """Cheapest completion of layers a..M-1 of a class-c request.

        Returns ``G`` with ``G[i]`` the cost when layer a opens a block on UAV
        i, plus the arrays needed to trace that completion back.  ``pm`` and
        ``pc`` are optional per-UAV prices on memory bytes and FLOPs.
        """
        M, N = self.M, self.N
        r = self.rep[c]
        fits = self._fits(c, a)
        L = M - a
        if pm is not None:
            # empty blocks carry inf sizes; a zero price there would give nan
            with np.errstate(invalid="ignore"):
                price = self.block_mem[a:, a:, None] * pm + self.block_flops[a:, a:, None] * pc
            price = np.nan_to_num(price, nan=np.inf)
        H = np.empty((L, N))
        nextk = np.full((L, N), -1)
        bidx = np.zeros((L, N), dtype=int)
        G = np.zeros(N)
        rows = np.arange(N)
        for x in range(L - 1, -1, -1):
            aa = a + x
            if aa == M - 1:
                H[x] = 0.0
            else:
                tmp = self.trans_nd[r, aa] + G[None, :]
                k = tmp.argmin(axis=1)
                nextk[x] = k
                H[x] = tmp[rows, k]
            cand = H[x:, :] if pm is None else H[x:, :] + price[x, x:, :]
            cand = np.where(fits[x, x:, :], cand, np.inf)
            b = cand.argmin(axis=0)
            bidx[x] = b + x
            G = cand[b, rows]
        return G, nextk, bidx

    def _usage(self, a, i, nextk, bidx, um, uc, weight):
        x = 0
        while True:
            b = bidx[x, i]
            um[i] += weight * self.block_mem[a + x, a + b]
            uc[i] += weight * self.block_flops[a + x, a + b]
            if a + b == self.M - 1:
                return
            i = nextk[b, i]
            x = b + 1

    def _future_classes(self, r0: int):
        counts = {}
        for r in range(r0, self.R):
            counts[self.cls[r]] = counts.get(self.cls[r], 0) + 1
        return counts

    def plain_bound(self, r: int, j: int, enter) -> np.ndarray:
        """Per-child lower bound on the remaining cost, no prices."""
        G, _, _ = self.dp(self.cls[r], j)
        total = 0.0
        for c, n in self._future_classes(r + 1).items():
            best = float((self.src[self.rep[c]] + self.dp(c, 0)[0]).min())
            if not np.isfinite(best):
                return np.full(self.N, np.inf)
            total += n * best
        return enter + G + total

    def priced_bound(self, r: int, j: int, enter, pm, pc):
        """Per-child Lagrangian bound and the subgradient of its minimiser."""
        um = np.zeros(self.N)
        uc = np.zeros(self.N)
        G, nextk, bidx = self.dp(self.cls[r], j, pm, pc)
        child = enter + G
        i = int(child.argmin())
        if not np.isfinite(child[i]):
            return child, um, uc
        self._usage(j, i, nextk, bidx, um, uc, 1.0)
        total = 0.0
        for c, n in self._future_classes(r + 1).items():
            Gf, nk, bi = self.dp(c, 0, pm, pc)
            vals = self.src[self.rep[c]] + Gf
            k = int(vals.argmin())
            if not np.isfinite(vals[k]):
                return np.full(self.N, np.inf), um, uc
            total += n * float(vals[k])
            self._usage(0, k, nk, bi, um, uc, n)
        offset = float(pm @ self.res_mem + pc @ self.res_c)
        return child + total - offset, um - self.res_mem, uc - self.res_c

    def bounds(self, r, j, enter, cost, prices, iters):
        lbs = self.plain_bound(r, j, enter)
        if not np.isfinite(lbs).any():
            return lbs, prices
        pm, pc = prices
        ms, cs = self.mem_scale, self.c_scale
        ceiling = self.worst_suffix[r]
        for _ in range(iters):
            lag, gm, gc = self.priced_bound(r, j, enter, pm, pc)
            lbs = np.maximum(lbs, lag)
            low = float(lbs.min())
            if not np.isfinite(low):
                break
            if self.best is not None:
                target = self.best_float - cost
            else:
                target = max(1.5 * low, low + 1e-6, 0.01 * ceiling)
            if low > target or low > ceiling:
                break
            norm = float((gm / ms) @ (gm / ms) + (gc / cs) @ (gc / cs))
            if norm <= 0:
                break
            t = (target - float(lag.min())) / norm
            pm = np.maximum(0.0, pm + t * gm / ms ** 2)
            pc = np.maximum(0.0, pc + t * gc / cs ** 2)
        lbs = np.where(lbs > ceiling * (1 + 1e-9), np.inf, lbs)
        return lbs, (pm, pc)

    # -- search -------------------------------------------------------------
    def exact_cost(self, path) -> Fraction:
        M = self.M
        val = Fraction(0)
        for r in range(self.R):
            row = path[r * M:(r + 1) * M]
            val += self.src_exact[r, row[0]]
            for j in range(M - 1):
                if row[j] != row[j + 1]:
                    val += self.trans_exact[r, j, row[j], row[j + 1]]
        return val

    def leaf(self, cost: float):
        if self.best is not None and cost > self.best_float * (1 + TOL):
            return
        exact = self.exact_cost(self.path)
        cand = (exact, self.n_used, tuple(self.path))
        if self.best is None or cand < self.best:
            self.best = cand
            self.best_float = float(exact)
        if self.first_feasible:
            self.stop = True

    def pruned(self, lb: float, i: int) -> bool:
        if self.best is None:
            return False
        z = self.best_float
        if lb > z * (1 + TOL):
            return True
        if lb >= z * (1 - TOL):
            distinct = self.n_used + (self.used[i] == 0)
            if distinct >= self.best[1]:
                depth = len(self.path) + 1
                return (self.path + [i]) > list(self.best[2][:depth])
        return False

    def visit(self, p: int, cost: float, tied: bool, prices, iters: int = 3):
        self.nodes += 1
        if (self.nodes & 63) == 0 and time.monotonic() > self.deadline:
            self.timed_out = True
            self.stop = True
        if self.stop:
            return
        M = self.M
        if p == self.R * M:
            self.leaf(cost)
            return
        r, j = divmod(p, M)
        if j == 0:
            tied = self.prev_same[r] >= 0
        rem_mem = self.mem_suffix[j] + (self.R - 1 - r) * self.mem_total
        rem_flops = self.flops_suffix[j] + (self.R - 1 - r) * self.flops_total
        if rem_mem > self.res_mem.sum() * (1 + 1e-12) or rem_flops > self.res_c.sum() * (1 + 1e-12):
            return
        if j == 0:
            enter = self.src[r]
        else:
            enter = self.trans[r, j - 1, self.path[-1]]
        rest, prices = self.bounds(r, j, enter, cost, prices, iters)
        lbs = cost + rest
        floor = self.path[self.prev_same[r] * M + j] if tied else 0
        for i in np.argsort(lbs, kind="stable"):
            i = int(i)
            lb = lbs[i]
            if not np.isfinite(lb) or i < floor:
                continue
            if self.pruned(lb, i):
                continue
            self.res_mem[i] -= self.mem[j]
            self.res_c[i] -= self.flops[j]
            self.used[i] += 1
            if self.used[i] == 1:
                self.n_used += 1
            self.path.append(i)
            self.visit(p + 1, cost + float(enter[i]), tied and i == floor, prices)
            self.path.pop()
            if self.used[i] == 1:
                self.n_used -= 1
            self.used[i] -= 1
            self.res_mem[i] += self.mem[j]
            self.res_c[i] += self.flops[j]
            if self.stop:
                return


def branch_and_bound(model: IlpModel, time_limit: float = 60.0, first_feasible: bool = False,
                     incumbent=None) -> Placement:
    """Solve ``model`` exactly.

    Returns an optimal :class:`Placement`, or the incumbent with
    ``optimal=False`` when ``time_limit`` runs out.  With ``first_feasible``
    the search stops at the first complete assignment (``optimal=False``
    unless it is provably optimal).  Raises :class:`Infeasible` when no
    assignment exists and :class:`SolverTimeout` when time runs out first.
    """
    t0 = time.perf_counter()
    search = _Search(model, time_limit, first_feasible)
    sc = model.scenario
    for j in range(sc.M):
        if not np.any((search.mem[j] <= search.res_mem) & (search.flops[j] <= search.res_c)):
            raise Infeasible(f"layer {j + 1} fits on no UAV")
    if incumbent is not None:
        path = [int(v) for v in np.asarray(incumbent).ravel()]
        exact = search.exact_cost(path)
        search.best = (exact, len(set(path)), tuple(path))
        search.best_float = float(exact)
    zeros = np.zeros(sc.N)
    search.visit(0, 0.0, False, (zeros, zeros.copy()), iters=50)
    elapsed = time.perf_counter() - t0
    if search.best is None:
        if search.timed_out:
            raise SolverTimeout(f"no feasible placement within {time_limit} s")
        raise Infeasible("no assignment satisfies the memory, compute and link constraints")
    exact, _, path = search.best
    optimal = not search.timed_out and not (first_feasible and search.stop and exact > 0)
    return Placement(
        np.array(path, dtype=int).reshape(sc.R, sc.M), sc.N, exact,
        optimal=optimal, solve_time=elapsed,
    )
