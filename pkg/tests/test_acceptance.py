"""
Acceptance suite. Each test prints one ``PASS``/``FAIL`` line with the
measured numbers, then asserts. Run with ``pytest tests/test_acceptance.py -v``.
"""

import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from conftest import central_diff, random_problem
from wsee.bench import SweepConfig, emit_csv, parse_db_range, run_sweep
from wsee.core import grad_rate, grad_wsee, rate, rates, wsee
from wsee.global_opt import DinkelbachConfig, dinkelbach_solve, ratio_parts
from wsee.mwrc import (ChannelGenConfig, MwrcChannel, generate_channels, lemma_rates,
                       mwrc_problem, to_interference_network)
from wsee.polyblock import PolyblockConfig
from wsee.sca import (SurrogateCoeffs, sca_solve, solve_scalar_subproblem,
                      surrogate_value)

# K=2 toy instances for the global solver: fixed before any result was seen
TOY_SEED = 7
TOY_LEVELS_DB = (-10.0, -12.5, -15.0, -17.5, -20.0)
TOY_COUNT = 25
TOY_GRID = 500
EPS, PB_TOL = 1e-5, 1e-4


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def toy_instance(r):
    db = TOY_LEVELS_DB[r % len(TOY_LEVELS_DB)]
    P = 10 ** (db / 10)
    chan = generate_channels(ChannelGenConfig(seed=TOY_SEED, K=2), P, 1e-2, 1e-2, r)
    return mwrc_problem(chan, P)


def grid_search(prob, n=TOY_GRID):
    """Grid optimum and the largest change of f across one grid cell."""
    x = np.linspace(0, prob.pmax[0], n)
    y = np.linspace(0, prob.pmax[1], n)
    X, Y = np.meshgrid(x, y, indexing="ij")
    N, D = ratio_parts(prob, np.stack([X.ravel(), Y.ravel()], axis=1))
    f = (N / D).reshape(n, n)
    cell = np.abs(np.diff(f, axis=0))[:, :-1] + np.abs(np.diff(f, axis=1))[:-1, :]
    return float(f.max()), float(cell.max())


@pytest.fixture(scope="module")
def toy_runs():
    """Global solves, grid optima and SCA on the toy instances."""
    out = []
    t0 = time.perf_counter()
    for r in range(TOY_COUNT):
        prob = toy_instance(r)
        sca = sca_solve(prob)
        # default start at pmax, no time limit: the 10 minute bound covers the whole set
        g = dinkelbach_solve(prob, DinkelbachConfig(eps=EPS, inner=PolyblockConfig(tol=PB_TOL)))
        f_grid, grid_err = grid_search(prob)
        out.append((prob, g, sca, f_grid, grid_err))
    return out, time.perf_counter() - t0


# -- 1 ------------------------------------------------------------------------

def test_criterion_1_gradients(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(200):
        K = int(rng.choice([2, 3, 4]))
        prob = random_problem(rng, K)
        p = rng.uniform(0.05, 0.95, K) * prob.pmax
        pairs = [(grad_wsee(prob, p), central_diff(lambda q: wsee(prob, q), p))]
        for k in range(K):
            pairs.append((grad_rate(prob.net, p, k), central_diff(lambda q: rate(prob.net, q, k), p)))
        for g, fd in pairs:
            worst = max(worst, float(np.max(np.abs(g - fd)) / np.max(np.abs(fd))))
    dt = time.perf_counter() - t0
    verdict(capsys, 1, worst <= 1e-6 and dt < 10,
            f"max relative gradient error {worst:.2e} (<= 1e-6), {dt:.1f} s (< 10 s)")


# -- 2 ------------------------------------------------------------------------

def test_criterion_2_scalar_subproblem(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    n = 10_000
    lu = lambda lo, hi: np.exp(rng.uniform(np.log(lo), np.log(hi), n))
    a, d, th, pmax = lu(1e-2, 1e2), lu(1e-2, 1e2), lu(1e-2, 1e2), lu(1e-2, 1e2)
    b = rng.choice([-1.0, 1.0], n) * lu(1e-3, 1e2)
    b[rng.uniform(size=n) < 0.05] = 0.0
    eta = np.where(rng.uniform(size=n) < 0.2, 0.0, lu(1e-3, 1e1))
    c = rng.uniform(-1, 1, n)
    worst = -np.inf
    for i in range(n):
        sc = SurrogateCoeffs(a[i], b[i], c[i], d[i], th[i], eta[i])
        closed = float(surrogate_value(sc, solve_scalar_subproblem(sc, pmax[i])))
        # 10^6-point resolution: 1000 coarse nodes, then 1000 inside the best two cells
        x = np.linspace(0, pmax[i], 1001)
        v = surrogate_value(sc, x)
        j = int(np.argmax(v))
        xf = np.linspace(x[max(j - 1, 0)], x[min(j + 1, 1000)], 1001)
        vf = surrogate_value(sc, xf)
        k = int(np.argmax(vf))
        best = max(float(v[j]), float(vf[k]))
        lo, hi = xf[max(k - 1, 0)], xf[min(k + 1, 1000)]
        if hi > lo:
            ref = minimize_scalar(lambda z: -float(surrogate_value(sc, z)), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-14 * max(1.0, hi)})
            best = max(best, -float(ref.fun))
        worst = max(worst, abs(best - closed) if best > closed else 0.0)
    dt = time.perf_counter() - t0
    verdict(capsys, 2, worst <= 1e-8 and dt < 60,
            f"closed form below grid optimum by at most {worst:.2e} (<= 1e-8) "
            f"over {n} tuples, {dt:.1f} s (< 60 s)")


# -- 3 ------------------------------------------------------------------------

def test_criterion_3_sca_ascent(capsys):
    rng = np.random.default_rng(3)
    monotone, worst, statuses = True, 0.0, {}
    for r in range(100):
        db = float(rng.uniform(-30, 30))
        P = 10 ** (db / 10)
        chan = generate_channels(ChannelGenConfig(seed=3, K=3), P, 1e-2, 1e-2, r)
        res = sca_solve(mwrc_problem(chan, P))
        monotone &= bool(np.all(np.diff(res.objective_trace) >= 0))
        worst = max(worst, res.residual)
        statuses[res.status] = statuses.get(res.status, 0) + 1
    verdict(capsys, 3, monotone and worst <= 1e-5,
            f"traces nondecreasing: {monotone}, max residual {worst:.2e} (<= 1e-5), "
            f"status counts {statuses}")


# -- 4 ------------------------------------------------------------------------

def test_criterion_4_sca_iterations(capsys):
    cfg = SweepConfig(K=3, realizations=50, seed=0, warm_start=True, record_timing=False)
    t0 = time.perf_counter()
    res = run_sweep(cfg)
    dt = time.perf_counter() - t0
    means = {row.pmax_db: row.iters_total for row in res.summary if row.solver == "sca"}
    worst = max(means.values())
    conv = min(row.converged_fraction for row in res.summary)
    verdict(capsys, 4, worst <= 20 and dt < 300,
            f"mean SCA iterations per point {min(means.values()):.2f}..{worst:.2f} (<= 20), "
            f"converged fraction >= {conv:.2f}, {dt:.1f} s (< 300 s)")


# -- 5, 6, 10 ----------------------------------------------------------------------

def test_criterion_5_global_vs_grid(toy_runs, capsys):
    runs, dt = toy_runs
    bad, statuses, worst = [], {}, 0.0
    for r, (prob, g, _, f_grid, grid_err) in enumerate(runs):
        statuses[g.status] = statuses.get(g.status, 0) + 1
        # F(p; lam) <= eps + tol max(1, lam prod pc) at the end, and D >= prod pc
        pc = float(np.prod(prob.pm.pc))
        solver_err = (EPS + PB_TOL * max(1.0, g.f_star * pc)) / pc
        gap = abs(g.f_star - f_grid)
        worst = max(worst, gap / (grid_err + solver_err))
        if g.status != "converged" or gap > grid_err + solver_err:
            bad.append(r)
    verdict(capsys, 5, not bad and dt < 600,
            f"{TOY_COUNT - len(bad)}/{TOY_COUNT} within grid + solver tolerance "
            f"(worst at {worst:.2f} of the allowance), status {statuses}, {dt:.1f} s (< 600 s)")


def test_criterion_6_sca_near_global(toy_runs, capsys):
    runs, _ = toy_runs
    rel = np.array([(f_grid - sca.f_star) / f_grid for _, _, sca, f_grid, _ in runs])
    close = float(np.mean(rel <= 1e-3))
    q = np.quantile(rel, [0, 0.5, 0.9, 1])
    verdict(capsys, 6, close >= 0.8 and np.all(rel <= 0.05),
            f"{close:.0%} within 1e-3 (>= 80%), max gap {rel.max():.2e} (<= 5%); "
            f"relative gap quantiles 0/50/90/100%: {q[0]:.1e} {q[1]:.1e} {q[2]:.1e} {q[3]:.1e}")


def test_criterion_10_dinkelbach_monotone(toy_runs, capsys):
    runs, _ = toy_runs
    solves = [g for _, g, _, _, _ in runs]
    # K=3 at low SNR, started from pmax so that several outer steps are taken
    for r in range(8):
        for db in (-30.0, -25.0):
            P = 10 ** (db / 10)
            chan = generate_channels(ChannelGenConfig(seed=10, K=3), P, 1e-2, 1e-2, r)
            solves.append(dinkelbach_solve(mwrc_problem(chan, P),
                                           DinkelbachConfig(eps=EPS, inner=PolyblockConfig(tol=PB_TOL))))
    ok_lam = all(np.all(np.diff(g.lambdas) > 0) for g in solves)
    ok_F = all(g.trace[-1].F <= EPS for g in solves if g.status == "converged")
    n_conv = sum(g.status == "converged" for g in solves)
    outer = np.array([g.outer_iters for g in solves])
    verdict(capsys, 10, ok_lam and ok_F and n_conv == len(solves),
            f"{len(solves)} solves, {n_conv} converged, lambda strictly increasing: {ok_lam}, "
            f"final F <= eps: {ok_F}, outer iterations {outer.min()}..{outer.max()}")


# -- 7 ------------------------------------------------------------------------

def test_criterion_7_ratio_identity(capsys):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        K = int(rng.integers(1, 5))
        prob = random_problem(rng, K)
        p = rng.uniform(0, prob.pmax)
        if not p.any():
            continue
        N, D = ratio_parts(prob, p)
        f = wsee(prob, p)
        worst = max(worst, abs(N / D - f) / f)
    verdict(capsys, 7, worst <= 1e-10, f"max relative deviation of N/D from f {worst:.2e} (<= 1e-10)")


# -- 8 ------------------------------------------------------------------------

def test_criterion_8_mapping_identity(capsys):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        K = int(rng.integers(2, 6))
        h = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        g = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        chan = MwrcChannel(h, g, rng.uniform(1e-3, 1), rng.uniform(1e-3, 1, K), rng.uniform(1e-2, 1e2))
        p = rng.uniform(1e-3, 10, K)
        ref = lemma_rates(chan, p)
        mapped = rates(to_interference_network(chan), p)
        worst = max(worst, float(np.max(np.abs(mapped - ref) / ref)))
    verdict(capsys, 8, worst <= 1e-12, f"max relative deviation {worst:.2e} (<= 1e-12)")


# -- 9 ------------------------------------------------------------------------

def test_criterion_9_wsee_curve_shape(capsys):
    cfg = SweepConfig(K=3, realizations=100, seed=9, pmax_db=parse_db_range("-30:30:5"),
                      record_timing=False)
    t0 = time.perf_counter()
    res = run_sweep(cfg)
    dt = time.perf_counter() - t0
    rows = sorted((row.pmax_db, row.wsee) for row in res.summary)
    curve = np.array([w for _, w in rows])
    dbs = [db for db, _ in rows]
    nondecreasing = bool(np.all(np.diff(curve) >= 0))
    change = abs(curve[dbs.index(30.0)] - curve[dbs.index(25.0)]) / curve[dbs.index(25.0)]
    verdict(capsys, 9, nondecreasing and change <= 0.01 and dt < 600,
            f"mean WSEE nondecreasing: {nondecreasing}, 25 -> 30 dB change {change:.3%} (<= 1%), "
            f"{dt:.1f} s (< 600 s); curve " + " ".join(f"{w:.4g}" for w in curve))


# -- 11 -----------------------------------------------------------------------

def test_criterion_11_determinism(tmp_path, capsys):
    cfg = SweepConfig(K=3, realizations=6, seed=11, pmax_db=parse_db_range("-30:10:10"),
                      solvers=("sca", "global"), global_max_pmax_db=-30.0,
                      dinkelbach={"time_budget_s": None}, record_timing=False)
    a = emit_csv(run_sweep(cfg, workers=1).records, tmp_path / "w1.csv").read_bytes()
    b = emit_csv(run_sweep(cfg, workers=3).records, tmp_path / "w3.csv").read_bytes()
    rows = len(a.splitlines()) - 1
    verdict(capsys, 11, a == b,
            f"CSV from 1 and 3 workers byte-identical: {a == b} ({rows} rows, {len(a)} bytes)")
