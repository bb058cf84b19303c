"""End-to-end acceptance checks at full scale; each prints one pass/fail line."""

import filecmp
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from qmp import estimator as E
from qmp.bench import EXPERIMENTS, default_config, run
from qmp.bench.experiments import (
    run_completeness,
    run_l1,
    run_l1_budget,
    run_planning,
    run_pstar,
    run_pstar_hist,
)
from qmp.probability import linear_approx_pbad, p_bad_at, p_bad_limit
from qmp.qsearch import (
    GroverInstance,
    OracleMask,
    amplify,
    classical_probes,
    grover_iterate,
    marked_probability,
    measure,
    optimal_iterations,
    success_probability,
    uniform_superposition,
)

pytestmark = pytest.mark.slow

R_GRID = (0.45, 0.5, 0.55, 0.6, 0.65, 0.7)


def five_of_1024(seed=0):
    truth = np.zeros(1024, dtype=bool)
    truth[np.random.default_rng(seed).choice(1024, size=5, replace=False)] = True
    return truth


@pytest.fixture(scope="module")
def planning_rows():
    cfg = replace(default_config("fig-dbsize"), r=R_GRID, n=(8, 9), trials=50, seed=2024)
    return run_planning(cfg)[""].rows


def mean_calls(rows, planner, r, n=""):
    vals = [row[6] for row in rows if row[1] == planner and row[3] == r and row[4] == n]
    assert vals and all(row[10] == "ok" for row in rows if row[1] == planner and row[3] == r)
    return float(np.mean(vals))


def test_worked_amplification_example(criterion):
    t0 = time.perf_counter()
    mask = OracleMask(five_of_1024())
    inst = GroverInstance(1024, 5)
    i_opt = optimal_iterations(1024, 5)
    reg = uniform_superposition(10)
    worst = 0.0
    good = None
    for i in range(23):
        p = marked_probability(reg, mask)
        worst = max(worst, abs(p - success_probability(inst, i)))
        if i == i_opt:
            good = p
        grover_iterate(reg, mask)
    elapsed = time.perf_counter() - t0
    ok = (
        i_opt == 11
        and abs(good - 0.99857) <= 5e-4
        and abs((1 - good) - 0.00143) <= 5e-4
        and worst <= 1e-9
        and elapsed < 1.0
    )
    criterion(1, "worked amplification example", ok,
              f"i_opt={i_opt} good={good:.5f} bad={1 - good:.5f} max|sim-closed|={worst:.1e} t={elapsed:.3f}s")


def test_classical_probe_constant(criterion):
    t0 = time.perf_counter()
    mask = OracleMask(five_of_1024())
    rng = np.random.default_rng(7)
    probes = np.array([classical_probes(mask, rng) for _ in range(10_000)])
    elapsed = time.perf_counter() - t0
    mean = probes.mean()
    ok = abs(mean - 102.4) <= 0.05 * 102.4 and elapsed < 5.0
    criterion(2, "classical probing mean", ok,
              f"mean={mean:.1f} target=102.4+-5% (scan without replacement averages (N+1)/(m+1)={1025 / 6:.1f}) t={elapsed:.2f}s")


def test_born_rule_fidelity(criterion):
    mask = OracleMask(five_of_1024())
    reg = amplify(mask, 11)
    draws = measure(reg, np.random.default_rng(11), size=100_000)
    freq = float(np.mean(mask.truth[draws]))
    p = success_probability(GroverInstance(1024, 5), 11)
    sigma = math.sqrt(p * (1 - p) / 100_000)
    ok = abs(freq - 0.99857) <= 3 * sigma
    criterion(3, "Born-rule fidelity", ok, f"freq={freq:.5f} expected=0.99857 3sigma={3 * sigma:.5f}")


def test_pstar_surface(criterion):
    cfg = replace(default_config("fig-pstar"), r=(0.5, 0.6, 0.7), L_values=(32, 72),
                  estimate_trials=1000, lattices=25, periodic=True, seed=1)
    rows = run_pstar(cfg)[""].rows
    errs = {(row[0], row[1]): abs(row[5] - E.p_star(E.PSTAR_PAPER, row[0], row[1])) for row in rows}
    worst = max(errs.values())
    regen = replace(cfg, r=tuple(np.round(np.arange(0.1, 0.81, 0.1), 2)), L_values=(16, 32, 48, 72), seed=2)
    data = [E.ConnectivitySample(row[0], row[1], row[3], row[4], row[5], row[6]) for row in run_pstar(regen)[""].rows]
    _, r2 = E.fit_pstar(data)
    ok = len(rows) >= 6 and (0.5, 32) in errs and (0.6, 32) in errs and worst <= 0.05 and r2 >= 0.98
    criterion(4, "connectivity surface", ok, f"{len(rows)} points, max|p_hat-p*|={worst:.4f}, refit R2={r2:.4f}")


def test_p2_star_bound(criterion):
    cfg = replace(default_config("fig-pstar-hist"), trials=250, L=32, r=(0.6,), n=(11,), M=5, seed=5)
    rows = run_pstar_hist(cfg)[""].rows
    frac = np.array([row[7] for row in rows])
    p1, p2 = rows[0][8], rows[0][9]
    below = float(np.mean(frac <= p2))
    ok = len(rows) == 250 and below >= 0.90 and abs(frac.mean() - p1) <= 0.05
    criterion(5, "p2* bound", ok,
              f"share<=p2*={below:.3f} (p2*={p2:.4f}, p*={p1:.4f}), mean={frac.mean():.4f}, 90th pct={np.quantile(frac, 0.9):.4f}")


def test_oracle_call_speedup(criterion, planning_rows):
    q = {r: mean_calls(planning_rows, "qrrt", r, 9) for r in R_GRID}
    c = {r: mean_calls(planning_rows, "rrt", r) for r in R_GRID}
    ratio = sum(c.values()) / sum(q.values())
    ok = all(q[r] < c[r] for r in R_GRID) and ratio >= 5.0
    detail = " ".join(f"r={r}:{q[r]:.0f}/{c[r]:.0f}" for r in R_GRID)
    criterion(6, "oracle-call speedup", ok, f"{detail} aggregate={ratio:.1f}x")


def test_database_size_trend(criterion, planning_rows):
    top = R_GRID[-2:]
    m8 = {r: mean_calls(planning_rows, "qrrt", r, 8) for r in R_GRID}
    m9 = {r: mean_calls(planning_rows, "qrrt", r, 9) for r in R_GRID}
    ok = all(m9[r] <= m8[r] for r in top)
    detail = " ".join(f"r={r}:n8={m8[r]:.0f},n9={m9[r]:.0f}" for r in R_GRID)
    criterion(7, "database-size trend", ok, detail)


def test_l1_budget_model(criterion):
    cfg = replace(default_config("fig-l1"), r=R_GRID, seed=8)
    rows = run_l1(cfg)[""].rows
    violations = 0
    for r in R_GRID:
        series = [row for row in rows if row[0] == r]
        for a, b in zip(series, series[1:]):
            if b[5] > a[5] + 3 * math.hypot(a[6], b[6]):
                violations += 1
    data = [E.L1Sample(row[0], row[2], row[3], row[4], row[5], row[6]) for row in rows]
    model, r2 = E.fit_l1(data)
    E.PRESETS["l1-acceptance-refit"] = model
    try:
        brows = run_l1_budget(replace(default_config("fig-l1-budget"), l1_model="l1-acceptance-refit",
                                      r=(0.5,), budgets=(2, 4, 8, 16), db_n=14, lattices=8, seed=9))[""].rows
    finally:
        del E.PRESETS["l1-acceptance-refit"]
    rel = {}
    for b in (2, 4, 8, 16):
        achieved = float(np.mean([row[9] for row in brows if row[0] == b]))
        rel[b] = abs(achieved - E.budget_fraction(b)) / E.budget_fraction(b)
    ok = violations == 0 and r2 >= 0.95 and rel[16] < rel[2]
    detail = " ".join(f"N{b}={rel[b]:.3f}" for b in rel)
    criterion(8, "L1 budget model", ok, f"monotone violations={violations}, refit R2={r2:.4f}, rel. error {detail}")


def test_error_calculus_bridge(criterion):
    rng = np.random.default_rng(13)
    worst = 0.0
    points = 0
    for N in (64, 256):
        for x in (0.04, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75):
            m = max(1, int(round(x * N)))
            i = optimal_iterations(N, m)
            truth = np.zeros(N, dtype=bool)
            truth[rng.choice(N, size=m, replace=False)] = True
            mask = OracleMask(truth)
            draws = measure(amplify(mask, i), rng, size=100_000)
            freq = float(np.mean(~truth[draws]))
            p = p_bad_at(N, m, i)
            sigma = math.sqrt(max(p * (1 - p), 1e-300) / 100_000)
            worst = max(worst, abs(freq - p) / sigma if sigma > 1e-150 else (0.0 if freq == 0 else math.inf))
            points += 1
    xs = np.round(np.arange(0.04, 0.75 + 1e-12, 1e-3), 6)
    lin_gap = max(abs(linear_approx_pbad(x) - p_bad_limit(x)) for x in xs)
    ok = worst <= 3.0 and lin_gap <= 0.02
    criterion(9, "error-calculus bridge", ok,
              f"{points} points, worst |freq-p_bad_at|={worst:.2f} sigma, linear approx max gap={lin_gap:.4f}")


def test_probabilistic_completeness(criterion):
    cfg = replace(default_config("completeness"), trials=100, L=16, r=(0.4,), n=(6,), M=400, seed=16)
    rows = run_completeness(cfg)[""].rows
    hit = float(np.mean([row[6] for row in rows]))
    bad = sum(row[7] for row in rows)
    ok = len(rows) == 100 and hit >= 0.95 and bad == 0
    criterion(10, "probabilistic completeness", ok, f"hit rate={hit:.2f} over {len(rows)} runs, unreachable edges={bad}")


DETERMINISM = {
    "fig-amplitudes": {},
    "fig-oracle-vs-r": dict(trials=3, r=(0.5, 0.7)),
    "fig-dbsize": dict(trials=3, r=(0.65, 0.7)),
    "fig-pstar": dict(estimate_trials=200, lattices=5),
    "fig-pstar-hist": dict(trials=20),
    "fig-l1": dict(D_values=(1.0, 4.0, 16.0), estimate_trials=200, lattices=5),
    "fig-l1-budget": dict(db_n=10, lattices=3),
    "completeness": dict(trials=5, M=80),
    "theory": {},
}


def test_determinism(criterion, tmp_path):
    assert set(DETERMINISM) == set(EXPERIMENTS)
    mismatched = []
    for exp, over in DETERMINISM.items():
        cfg = replace(default_config(exp), seed=77, **over)
        a, _ = run(cfg, tmp_path / "a")
        b, _ = run(cfg, tmp_path / "b")
        c, _ = run(replace(cfg, workers=2), tmp_path / "c")
        if not (filecmp.cmp(a[""], b[""], shallow=False) and filecmp.cmp(a[""], c[""], shallow=False)):
            mismatched.append(exp)
    ok = not mismatched
    criterion(11, "determinism", ok, f"{len(DETERMINISM)} experiments rerun, mismatched={mismatched or 'none'}")
