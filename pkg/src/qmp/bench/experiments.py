"""Seeded experiment drivers. Each returns named tables of rows in a fixed order."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math
import time
import warnings

import numpy as np

from ..estimator import (
    PRESETS,
    budget_fraction,
    l1_distance_for_budget,
    monte_carlo_connectivity,
    l1_connectivity_on,
    p2_star,
    p_star,
    read_presets,
    sample_at_l1_many,
)
from ..exceptions import ConfigError, EmptyFreeSpaceError, PartialTreeError
from ..lattice import generate, same_component_many, sample_free, random_start
from ..planners import PlannerConfig, build_pair_database, classical_rrt, qrrt, verify_tree
from ..probability import (
    OracleErrorRates,
    linear_approx_pbad,
    p_any_bad_path,
    p_any_bad_path_err,
    p_any_bad_tree,
    p_any_bad_tree_err,
    p_bad_at,
    p_bad_limit,
    p_good_limit,
)
from ..qsearch import OracleMask, grover_iterate, optimal_iterations, success_probability
from ..qsearch import GroverInstance, marked_probability, uniform_superposition
from ..utils.seeding import mix

REPORT_HEADER = (
    "seed", "planner", "L", "r", "n", "M",
    "oracle_calls", "counting_cost", "nodes_added", "retries", "status",
)
TIMING_HEADER = ("seed", "planner", "L", "r", "n", "seconds")
CONNECTIVITY_HEADER = ("r", "L", "periodic", "trials", "lattices", "p_hat", "stderr")


@dataclass
class Table:
    header: tuple
    rows: list = field(default_factory=list)
    timing: bool = False


def resolve_model(cfg, name):
    if name in PRESETS:
        return PRESETS[name]
    if cfg.presets_file:
        found = read_presets(cfg.presets_file)
        if name in found:
            return found[name][0]
    raise ConfigError(f"unknown model preset {name!r}")


def planner_config(cfg, **over):
    kw = dict(
        dynamics=cfg.dynamics_config(),
        iter_estimate=cfg.iter_estimate,
        sampler=cfg.sampler,
        l1_budget=cfg.l1_budget,
        l1_mode=cfg.l1_mode,
        final_check=cfg.final_check,
        max_retries=cfg.max_retries,
        max_tests=cfg.max_tests,
        fps_waypoints=cfg.fps_waypoints,
        pstar_model=resolve_model(cfg, cfg.pstar_model),
        l1_model=resolve_model(cfg, cfg.l1_model),
    )
    kw.update(over)
    return PlannerConfig(**kw)


def _pool_map(fn, tasks, workers):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


def _timed(fn, *args):
    t0 = time.perf_counter()
    try:
        _, report = fn(*args)
    except PartialTreeError as exc:
        report = exc.report
    return report, time.perf_counter() - t0


def _report_row(report, seed, L, r, n, M):
    return (seed, report.planner, L, r, n, M, report.oracle_calls, report.counting_cost,
            report.nodes_added, report.retries, report.status)


# -- planner comparison ------------------------------------------------------

def _planning_trial(task):
    cfg, k, t, r = task
    seed = mix(cfg.seed, k, t)
    lat = generate(2, cfg.L, r, seed, cfg.periodic)
    rows, timing = [], []
    try:
        x0 = random_start(lat, np.random.default_rng(mix(seed, 0)))
    except EmptyFreeSpaceError:
        for planner in ("rrt",) + ("qrrt",) * len(cfg.n):
            rows.append((seed, planner, cfg.L, r, "", cfg.M, 0, 0, 0, 0, "empty"))
        return rows, timing
    pcfg = planner_config(cfg)
    rep, dt = _timed(classical_rrt, x0, cfg.M, lat, pcfg, np.random.default_rng(mix(seed, 1)), seed)
    rows.append(_report_row(rep, seed, cfg.L, r, "", cfg.M))
    timing.append((seed, "rrt", cfg.L, r, "", dt))
    for n in cfg.n:
        rng = np.random.default_rng(mix(seed, 2, n))
        rep, dt = _timed(qrrt, x0, n, cfg.M, lat, pcfg, rng, seed)
        rows.append(_report_row(rep, seed, cfg.L, r, n, cfg.M))
        timing.append((seed, "qrrt", cfg.L, r, n, dt))
    return rows, timing


def run_planning(cfg):
    """Paired RRT / q-RRT trials: one lattice and start per (r, trial), shared by all planners."""
    tasks = [(cfg, k, t, r) for k, r in enumerate(cfg.r) for t in range(cfg.trials)]
    report = Table(REPORT_HEADER)
    timing = Table(TIMING_HEADER, timing=True)
    for rows, tim in _pool_map(_planning_trial, tasks, cfg.workers):
        report.rows.extend(rows)
        timing.rows.extend(tim)
    return {"": report, "timing": timing}


# -- connectivity estimation -------------------------------------------------

def _connectivity_point(task):
    cfg, k, r, L = task
    rng = np.random.default_rng(mix(cfg.seed, k))
    s = monte_carlo_connectivity(r, L, cfg.estimate_trials, cfg.lattices, cfg.periodic, rng)
    return (s.r, int(s.L), int(s.periodic), s.trials, s.lattice_count, s.p_hat, s.stderr)


def run_pstar(cfg):
    """Connectivity grid, looping over L then r; point ``k`` seeded by ``mix(seed, k)``."""
    grid = [(L, r) for L in cfg.L_values for r in cfg.r]
    tasks = [(cfg, k, r, L) for k, (L, r) in enumerate(grid)]
    return {"": Table(CONNECTIVITY_HEADER, _pool_map(_connectivity_point, tasks, cfg.workers))}


def _pstar_hist_trial(task):
    cfg, t = task
    r, n = cfg.r[0], cfg.n[0]
    seed = mix(cfg.seed, 0, t)
    lat = generate(2, cfg.L, r, seed, cfg.periodic)
    rng = np.random.default_rng(mix(seed, 1))
    x0 = random_start(lat, rng)
    pcfg = planner_config(cfg)
    tree, _ = qrrt(x0, min(n, 8), cfg.M, lat, pcfg, rng, seed)
    db = build_pair_database(tree, lat, n, None, rng, pcfg)
    model = pcfg.pstar_model
    return (t, seed, r, cfg.L, cfg.M, len(db), db.mask.m, db.fraction,
            p_star(model, r, cfg.L), p2_star(model, r, cfg.L, cfg.M))


def run_pstar_hist(cfg):
    """Solution fractions of pair databases drawn against grown ``M``-node trees."""
    header = ("trial", "seed", "r", "L", "M", "N", "m", "fraction", "p_star", "p2_star")
    tasks = [(cfg, t) for t in range(cfg.trials)]
    return {"": Table(header, _pool_map(_pstar_hist_trial, tasks, cfg.workers))}


def _l1_bin(task):
    cfg, k, r = task
    lattices, seeds = [], []
    i = 0
    while len(lattices) < cfg.lattices:
        lat = generate(2, cfg.L, r, mix(cfg.seed, k, 0, i), cfg.periodic)
        if lat.free_cells.size:
            lattices.append(lat)
            seeds.append(mix(cfg.seed, k, 1, i))
        i += 1
    rows = []
    for D in cfg.D_values:
        s = l1_connectivity_on(lattices, seeds, D, cfg.estimate_trials, cfg.l1_mode)
        rows.append((s.r, cfg.L, s.D, s.trials, s.lattice_count, s.p_hat, s.stderr))
    return rows


def run_l1(cfg):
    """Same-component rate against L1 sampling distance.

    Within one concentration every distance reuses the same lattices and
    sampling seeds, so the curve is not jittered by lattice-to-lattice noise.
    """
    header = ("r", "L", "D", "trials", "lattices", "p_hat", "stderr")
    tasks = [(cfg, k, r) for k, r in enumerate(cfg.r)]
    return {"": Table(header, [row for rows in _pool_map(_l1_bin, tasks, cfg.workers) for row in rows])}


def _l1_budget_point(task):
    cfg, k, j, r, budget, D = task
    seed = mix(cfg.seed, k, j)
    lat = generate(2, cfg.L, r, seed, cfg.periodic)
    rng = np.random.default_rng(mix(seed, 0))
    N = 2**cfg.db_n
    centers = sample_free(lat, rng, size=N)
    cand = sample_at_l1_many(centers, D, cfg.l1_mode, lat.L, rng)
    m = int(np.count_nonzero(same_component_many(lat.labels, centers, cand)))
    return (budget, r, cfg.L, D, budget_fraction(budget), j, seed, N, m, m / N)


def run_l1_budget(cfg):
    """Achieved solution fraction when sampling at the distance chosen for each call budget."""
    model = resolve_model(cfg, cfg.l1_model)
    header = ("budget", "r", "L", "D", "target", "lattice", "seed", "N", "m", "fraction")
    tasks = []
    for k, (r, budget) in enumerate((r, b) for r in cfg.r for b in cfg.budgets):
        D = l1_distance_for_budget(model, budget, r)
        tasks.extend((cfg, k, j, r, budget, D) for j in range(cfg.lattices))
    return {"": Table(header, _pool_map(_l1_budget_point, tasks, cfg.workers))}


# -- completeness ------------------------------------------------------------

def completeness_problem(cfg):
    """Fixed lattice, root in the largest component and a target cell in the same component."""
    lat = generate(2, cfg.L, cfg.r[0], cfg.seed, False)
    x0 = random_start(lat, np.random.default_rng(mix(cfg.seed, 1)))
    cells = lat.labels.cells_in(lat.labels.largest)
    pick = np.random.default_rng(mix(cfg.seed, 2)).integers(0, cells.size)
    cell = np.array(np.unravel_index(cells[pick], (lat.L, lat.L)), dtype=float)
    return lat, x0, cell + 0.5


def _completeness_trial(task):
    cfg, t = task
    lat, x0, target = completeness_problem(cfg)
    seed = mix(cfg.seed, 3, t)
    pcfg = planner_config(cfg)
    t0 = time.perf_counter()
    try:
        tree, report = qrrt(x0, cfg.n[0], cfg.M, lat, pcfg, np.random.default_rng(seed), seed)
    except PartialTreeError as exc:
        tree, report = exc.tree, exc.report
    dt = time.perf_counter() - t0
    dist = float(np.min(np.linalg.norm(tree.states - target, axis=1)))
    bad = len(verify_tree(tree, lat, pcfg.dynamics))
    row = (t, seed, target[0], target[1], len(tree), dist, int(dist <= 1.0), bad,
           report.oracle_calls, report.status)
    return row, (seed, "qrrt", cfg.L, cfg.r[0], cfg.n[0], dt)


def run_completeness(cfg):
    header = ("trial", "seed", "target_x", "target_y", "nodes", "min_dist", "hit", "bad_edges",
              "oracle_calls", "status")
    out = _pool_map(_completeness_trial, [(cfg, t) for t in range(cfg.trials)], cfg.workers)
    return {
        "": Table(header, [row for row, _ in out]),
        "timing": Table(TIMING_HEADER, [tim for _, tim in out], timing=True),
    }


# -- closed forms ------------------------------------------------------------

def run_amplitudes(cfg):
    """Marked-state probability per round: simulated register beside the closed form."""
    n = cfg.n[0]
    N, m = 2**n, 5
    truth = np.zeros(N, dtype=bool)
    truth[np.random.default_rng(cfg.seed).choice(N, size=m, replace=False)] = True
    mask = OracleMask(truth)
    inst = GroverInstance(N, m)
    reg = uniform_superposition(n)
    rows = []
    for i in range(2 * optimal_iterations(N, m) + 1):
        sim = marked_probability(reg, mask)
        rows.append((i, sim, success_probability(inst, i), 1.0 - sim))
        grover_iterate(reg, mask)
    return {"": Table(("i", "p_good_sim", "p_good_closed", "p_bad_sim"), rows)}


def theory_rows(cfg):
    rates = OracleErrorRates(cfg.q, cfg.v)
    count = int(math.floor((cfg.x_hi - cfg.x_lo) / cfg.x_step + 1e-9)) + 1
    rows = []
    for k in range(count):
        x = round(cfg.x_lo + k * cfg.x_step, 12)
        m = min(max(int(round(x * cfg.N)), 1), cfg.N)
        i = optimal_iterations(cfg.N, m)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lin = linear_approx_pbad(x)
        rows.append((
            x, p_bad_limit(x), p_bad_at(cfg.N, m, i), lin, cfg.N, m, i,
            p_any_bad_tree(x, cfg.tree_size), p_any_bad_path(x, cfg.path_len),
            p_good_limit(x, rates), p_any_bad_tree_err(x, cfg.tree_size, rates),
            p_any_bad_path_err(x, cfg.path_len, rates),
        ))
    return rows


THEORY_HEADER = (
    "x", "p_bad", "p_bad_int", "linear_approx", "N", "m", "i",
    "p_any_bad_tree", "p_any_bad_path", "p_good_err", "p_any_bad_tree_err", "p_any_bad_path_err",
)


def run_theory(cfg):
    return {"": Table(THEORY_HEADER, theory_rows(cfg))}


EXPERIMENTS = {
    "fig-amplitudes": run_amplitudes,
    "fig-oracle-vs-r": run_planning,
    "fig-dbsize": run_planning,
    "fig-pstar": run_pstar,
    "fig-pstar-hist": run_pstar_hist,
    "fig-l1": run_l1,
    "fig-l1-budget": run_l1_budget,
    "completeness": run_completeness,
    "theory": run_theory,
}
