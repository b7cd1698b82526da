"""The eleven acceptance criteria, one test each.

Every test records a line that the terminal summary prints as PASS or FAIL.
"""

import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import tiny_profile
from swarmsplit.channel import RadioParams, rate_from_sinr, rate_matrix, rate_series, sinr
from swarmsplit.cnn_profile import builtin_lenet, builtin_vgg16, total_memory
from swarmsplit.errors import Infeasible
from swarmsplit.experiments import MIB, cell_scenario, run_sweep, runtime_compare
from swarmsplit.ilp_core import brute_force, build_model, make_scenario, solve_exact
from swarmsplit.mobility import Trajectory
from swarmsplit.planner import plan, plan_ould, plan_ould_mp, replay, system_capacity
from swarmsplit.scenario_file import load_sweep

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"


def _random_small(rng, n, m, r):
    prof = tiny_profile(mem=rng.integers(1, 20, m), flops=rng.integers(1, 20, m),
                        out=rng.integers(1, 5000, m), input_bytes=int(rng.integers(1, 5000)))
    rates = rng.uniform(1e5, 1e8, (n, n))
    rates[rng.random((n, n)) < 0.15] = 0.0
    np.fill_diagonal(rates, 0.0)
    budget = rng.integers(int(prof.mem[0]), 60, n)
    origins = rng.integers(0, n, r)
    return make_scenario(prof, rates, origins, budget, compute_rate=1.0,
                         compute_window=float(rng.integers(10, 80)))


def test_01_oracle_equivalence(criterion):
    criterion(1, "oracle equivalence")
    rng = np.random.default_rng(2024)
    agreed = infeasible = 0
    t0 = time.perf_counter()
    while agreed < 200:
        sc = _random_small(rng, int(rng.integers(2, 4)), int(rng.integers(2, 5)), int(rng.integers(1, 3)))
        try:
            bf = brute_force(sc)
        except Infeasible:
            with pytest.raises(Infeasible):
                solve_exact(build_model(sc))
            infeasible += 1
            continue
        p = solve_exact(build_model(sc))
        assert p.optimal
        assert p.objective_exact == bf.objective_exact
        model = build_model(sc)
        for a in (p.assignment, bf.assignment):
            mem, flops = np.zeros(sc.N), np.zeros(sc.N)
            np.add.at(mem, a.ravel(), np.tile(sc.profile.mem, sc.R))
            np.add.at(flops, a.ravel(), np.tile(sc.profile.flops, sc.R))
            assert np.all(mem <= sc.mem_budget) and np.all(flops <= sc.compute_budget)
            assert model.objective_of(model.vector_of(a)) == bf.objective_exact
        agreed += 1
    elapsed = time.perf_counter() - t0
    criterion(1, "oracle equivalence",
              f"{agreed} feasible + {infeasible} infeasible scenarios agree, {elapsed:.1f} s")
    assert elapsed < 60


def test_02_big_m_truth_table(criterion):
    criterion(2, "big-M truth table")
    triples = 0
    for n, m, r in [(2, 2, 1), (3, 3, 2), (4, 2, 2), (3, 4, 1)]:
        model = build_model(make_scenario(tiny_profile(mem=(1,) * m, flops=(1,) * m, out=(9,) * m),
                                          np.ones((n, n)), (0,) * r, 1000, compute_rate=100.0))
        A = model.A_ub.tocsc()
        bigm = np.char.startswith(model.ub_kind.astype(str), "bigm")
        for rr, i, k, j in itertools.product(range(r), range(n), range(n), range(m - 1)):
            if i == k:
                continue
            g = model.gamma_index[rr, i, k, j]
            src, dst = model.alpha_index[rr, i, j], model.alpha_index[rr, k, j + 1]
            rows = [q for q in A[:, g].nonzero()[0] if bigm[q]]
            assert len(rows) == 3
            sub = model.A_ub[rows].toarray()
            for a, b in itertools.product((0, 1), repeat=2):
                ok = []
                for gv in (0, 1):
                    x = np.zeros(model.n_vars)
                    x[src], x[dst], x[g] = a, b, gv
                    if np.all(sub @ x <= model.b_ub[rows]):
                        ok.append(gv)
                assert ok == [a & b]
            triples += 1
    criterion(2, "big-M truth table", f"{triples} triples x 4 cases")


def _lenet_field(rng, n, r):
    lenet = builtin_lenet()
    pos = np.column_stack([rng.uniform(0, 100, (n, 2)), np.full(n, 50.0)])
    rates = rate_matrix(pos, RadioParams(), "all_others")
    window = float(rng.uniform(0.6, 1.6)) * sum(lenet.flops) / 9.5e9
    return make_scenario(lenet, rates, rng.integers(0, n, r), 512 * MIB, compute_window=window)


def test_03_heuristic_dominance(criterion):
    criterion(3, "OULD <= every heuristic")
    rng = np.random.default_rng(7)
    feasible = tried = 0
    while feasible < 50:
        tried += 1
        sc = _lenet_field(rng, int(rng.integers(3, 6)), int(rng.integers(1, 4)))
        reports = {m: plan(m, sc)[1] for m in ("ould", "nearest", "hrm", "nearest_hrm")}
        if any(rep.rejected_requests for rep in reports.values()):
            continue
        for m in ("nearest", "hrm", "nearest_hrm"):
            assert reports["ould"].avg_exact <= reports[m].avg_exact, m
        feasible += 1
    criterion(3, "OULD <= every heuristic", f"{feasible} feasible scenarios of {tried}, exact")


def test_04_capacity_trends(criterion):
    criterion(4, "capacity trends")
    desk = load_sweep(CONFIGS / "sweep_desk.toml")
    cap = {}
    for n in (6, 8):
        for mem in (512 * MIB, 256 * MIB):
            sc = cell_scenario(desk, n, mem, desk.area_side[0], desk.seeds[0])
            cap[n, mem] = system_capacity(sc, 10)
    scaled = load_sweep(CONFIGS / "sweep_memory.toml")
    low, high = (system_capacity(cell_scenario(scaled, 6, mem, scaled.area_side[0], 0), 10)
                 for mem in scaled.mem_levels)
    criterion(4, "capacity trends",
              f"N=6:{cap[6, 512 * MIB]} N=8:{cap[8, 512 * MIB]}; 256/512 MiB: "
              f"{cap[6, 256 * MIB]}/{cap[6, 512 * MIB]}; 6/12 MiB: {low}/{high}")
    for mem in (512 * MIB, 256 * MIB):
        assert cap[6, mem] <= cap[8, mem]
    for n in (6, 8):
        assert cap[n, 256 * MIB] <= cap[n, 512 * MIB]
    assert low <= high


def test_05_load_latency_shape(criterion, tmp_path):
    criterion(5, "load-latency shape")
    spec = load_sweep(CONFIGS / "sweep_desk.toml")
    rows = run_sweep(spec, tmp_path)
    assert all(r["status"] == "ok" for r in rows)
    notes = []
    for n in spec.n_list:
        series = [r for r in rows if r["method"] == "ould" and r["N"] == n]
        lat = [float(r["avg_latency_s"]) for r in series]
        shared = [int(r["shared_bytes"]) for r in series]
        capacity = max(r["R"] for r in series if r["rejected"] == 0)
        first = next(q for q, s in enumerate(shared) if s > 0)
        assert all(b >= a for a, b in zip(lat[first:], lat[first + 1:]))
        beyond = [s for r, s in zip(series, shared) if r["R"] >= capacity]
        assert len(set(beyond)) == 1
        notes.append(f"N={n}: capacity {capacity}, latency " + "/".join(f"{v:.3g}" for v in lat))
    criterion(5, "load-latency shape", "; ".join(notes))


def test_06_vgg_needs_collaboration(criterion):
    criterion(6, "VGG-16 infeasible on one UAV")
    vgg = builtin_vgg16()
    assert total_memory(vgg) > 512 * MIB
    sc = make_scenario(vgg, np.zeros((1, 1)), (0,), 512 * MIB, compute_window=1e3)
    with pytest.raises(Infeasible):
        solve_exact(build_model(sc))
    with pytest.raises(Infeasible):
        brute_force(sc)
    _, rep = plan_ould(sc)
    assert rep.rejected_requests == 1
    criterion(6, "VGG-16 infeasible on one UAV", f"total memory {total_memory(vgg) / MIB:.1f} MiB")


def test_07_mp_consistency(criterion):
    criterion(7, "OULD-MP consistency")
    desk = load_sweep(CONFIGS / "sweep_desk.toml")
    sc = cell_scenario(desk, 6, 512 * MIB, 100.0, 0).with_origins((0, 0))
    a, _ = plan_ould(sc)
    b, _ = plan_ould_mp(sc)
    assert a.assignment.tolist() == b.assignment.tolist() and a.objective_exact == b.objective_exact
    c, _ = plan_ould_mp(sc.with_rates(np.stack([sc.rates[0]] * 3)))
    assert c.objective_exact == 3 * a.objective_exact
    assert c.assignment.tolist() == a.assignment.tolist()
    criterion(7, "OULD-MP consistency", f"T=1 objective {float(a.objective_exact):.6g} s, T=3 exactly 3x")


def _outage_trajectory():
    """UAV 3 leaves UAV 1 at 70 m per step; the pair drops out of range at step 7."""
    steps = []
    for t in range(10):
        steps.append([[0.0, 0.0, 50.0], [0.0, 30.0, 50.0], [20.0 + 70.0 * t, 0.0, 50.0]])
    return Trajectory(np.array(steps))


def test_08_disconnection_safety(criterion):
    criterion(8, "disconnection safety")
    radio = RadioParams(noise_floor=1e-9)        # range about 390 m
    rates = rate_series(_outage_trajectory(), radio, "none")
    assert np.all(rates[:6, 0, 2] > 0) and np.all(rates[6:, 0, 2] == 0)
    lenet = builtin_lenet()
    window = 0.6 * sum(lenet.flops) / 9.5e9
    sc = make_scenario(lenet, rates, (0,), 512 * MIB, compute_window=window)

    static, _ = plan_ould(sc.at_step(0))
    used = {frozenset((o, int(u))) for o, u in zip([0, *static.assignment[0][:-1]], static.assignment[0]) if o != u}
    assert frozenset((0, 2)) in used
    outcomes = replay(static, sc)
    first = next(o for o in outcomes if o.violation)
    assert first.step == 7 and first.violation.constraint == "link"

    mp, rep = plan_ould_mp(sc)
    assert rep.rejected_requests == 0
    row = [0, *mp.assignment[0]]
    assert all(frozenset((a, b)) != frozenset((0, 2)) for a, b in zip(row, row[1:]) if a != b)
    assert all(o.violation is None for o in replay(mp, sc))
    criterion(8, "disconnection safety",
              f"static placement fails at step {first.step}; OULD-MP avoids pair (1, 3)")


def test_09_runtime_comparison(criterion):
    criterion(9, "OULD-MP runtime < T static solves")
    spec = load_sweep(CONFIGS / "sweep_runtime.toml")
    rows = runtime_compare(spec, 10)
    ratios = [r["ratio"] for r in rows]
    criterion(9, "OULD-MP runtime < T static solves",
              "ratios " + ", ".join(f"R={r['R']}: {r['ratio']:.3f}" for r in rows))
    assert all(r["status"] == "ok" for r in rows)
    assert all(x < 1 for x in ratios)


def test_10_channel_properties(criterion):
    criterion(10, "channel properties")
    rng = np.random.default_rng(10)
    zeros = 0
    for _ in range(1000):
        n = int(rng.integers(3, 7))
        pos = np.column_stack([rng.uniform(0, 300, (n, 2)), rng.uniform(20, 120, n)])
        params = RadioParams(path_loss_exponent=float(rng.uniform(2, 4)),
                             sinr_disconnect_threshold=float(10 ** rng.uniform(-3, 4)))
        i, k = (int(v) for v in rng.choice(n, 2, replace=False))
        others = [l for l in range(n) if l not in (i, k)]
        inter = set(others[:int(rng.integers(0, len(others) + 1))])
        # moving the transmitter away from the receiver keeps every interferer distance
        far = pos.copy()
        far[i] = pos[k] + (pos[i] - pos[k]) * (1 + rng.uniform(0.01, 3))
        g, g_far = sinr(i, k, pos, inter, params), sinr(i, k, far, inter, params)
        assert g_far <= g and rate_from_sinr(g_far, params) <= rate_from_sinr(g, params)
        # one more interferer never helps
        extra = set(others) - inter
        if extra:
            g_more = sinr(i, k, pos, inter | {min(extra)}, params)
            assert rate_from_sinr(g_more, params) <= rate_from_sinr(g, params)
        for mode in ("none", "all_others"):
            rates = rate_matrix(pos, params, mode)
            for a, b in itertools.permutations(range(n), 2):
                ints = set(range(n)) - {a, b} if mode == "all_others" else set()
                gamma = sinr(a, b, pos, ints, params)
                if gamma <= params.sinr_disconnect_threshold:
                    assert rates[a, b] == 0.0
                    zeros += 1
                else:
                    assert rates[a, b] > 0
                    assert rates[a, b] == pytest.approx(params.bandwidth_hz * math.log2(1 + gamma), rel=1e-12)
    assert zeros > 0
    criterion(10, "channel properties", f"1000 geometries, {zeros} disconnected links checked")


def test_11_scaling_invariance(criterion):
    criterion(11, "rate-scaling invariance")
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 50:
        sc = _random_small(rng, int(rng.integers(2, 5)), int(rng.integers(2, 5)), int(rng.integers(1, 3)))
        try:
            base = solve_exact(build_model(sc))
        except Infeasible:
            continue
        s = float(rng.choice([1e-3, 0.37, 2.0, 3.0, 55.5]))
        scaled_sc = sc.with_rates(sc.rates * s)
        scaled_model = build_model(scaled_sc)
        best = solve_exact(scaled_model)
        assert scaled_model.objective_of(scaled_model.vector_of(base.assignment)) == best.objective_exact
        assert float(best.objective_exact) == pytest.approx(float(base.objective_exact) / s, rel=1e-9)
        checked += 1
    criterion(11, "rate-scaling invariance", f"{checked} scenarios, exact")
