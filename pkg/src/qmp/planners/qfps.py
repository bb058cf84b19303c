"""Quantum full path search over a database of random start-to-goal paths."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ..dynamics import paths_collision_free
from ..exceptions import NoPathFoundError
from ..qsearch import (
    CountingLedger,
    OracleMask,
    amplify,
    count_solutions,
    measure,
    optimal_iterations,
)
from ..utils import check_int, check_point, check_rng
from .base import PlannerConfig, PlannerReport, final_check


def random_paths(x0, xG, k, sigma, L, rng, count):
    """``count`` paths: ``k`` Gaussian-perturbed interior points on the segment x0 -> xG."""
    x0 = np.asarray(x0, dtype=float)
    xG = np.asarray(xG, dtype=float)
    t = np.arange(1, k + 1) / (k + 1)
    base = x0 + t[:, None] * (xG - x0)
    interior = base[None] + sigma * rng.standard_normal((count, k, x0.shape[0]))
    interior = np.clip(interior, 0.0, L)
    ends0 = np.broadcast_to(x0, (count, 1, x0.shape[0]))
    endsG = np.broadcast_to(xG, (count, 1, x0.shape[0]))
    return np.concatenate([ends0, interior, endsG], axis=1)


def random_path(x0, xG, k, sigma, lat, rng=None):
    rng = check_rng(rng)
    return random_paths(x0, xG, k, sigma, lat.L, rng, 1)[0]


@dataclass
class PathDatabase:
    entries: np.ndarray
    mask: OracleMask

    def __len__(self):
        return self.entries.shape[0]


def build_path_database(x0, xG, n, lat, cfg=None, rng=None):
    cfg = cfg or PlannerConfig()
    rng = check_rng(rng)
    sigma = cfg.fps_sigma if cfg.fps_sigma is not None else lat.L / 6.0
    paths = random_paths(x0, xG, cfg.fps_waypoints, sigma, lat.L, rng, 2 ** n)
    truth = paths_collision_free(paths, lat, cfg.dynamics)
    return PathDatabase(paths, OracleMask(truth))


def qfps(x0, xG, n, lat, cfg=None, rng=None, seed=0):
    """Return a collision-free path from ``x0`` to ``xG`` and the run report.

    A database without solutions, or a measured path that fails the final
    check, triggers a rebuild; after ``cfg.max_retries`` rebuilds the search
    gives up with NoPathFoundError.
    """
    cfg = cfg or PlannerConfig()
    rng = check_rng(rng)
    x0 = check_point(x0, 2, "x0")
    xG = check_point(xG, 2, "xG")
    n = check_int(n, "n", 1)
    report = PlannerReport("qfps", seed=seed)
    ledger = CountingLedger()
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            report.retries += 1
        db = build_path_database(x0, xG, n, lat, cfg, rng)
        report.databases += 1
        m = count_solutions(db.mask, cfg.count_relative_error, ledger)
        report.counting_cost = ledger.invocations
        if m == 0:
            continue
        iters = optimal_iterations(len(db), m)
        reg = amplify(db.mask, iters)
        report.q_applications += iters
        k = measure(reg, rng)
        ok = final_check(k, db.mask)
        report.final_checks += 1
        report.oracle_calls += db.mask.calls
        if ok:
            report.nodes_added = db.entries.shape[1]
            return db.entries[k], report
    report.status = "no-path"
    raise NoPathFoundError(
        f"no collision-free path after {cfg.max_retries} rebuilds", report=report
    )


class QFPSPlanner(BaseEstimator):
    def __init__(self, n=10, waypoints=8, sigma=None, max_retries=50, random_state=None):
        self.n = n
        self.waypoints = waypoints
        self.sigma = sigma
        self.max_retries = max_retries
        self.random_state = random_state

    def fit(self, lattice, x0, xG):
        cfg = PlannerConfig(
            fps_waypoints=self.waypoints, fps_sigma=self.sigma, max_retries=self.max_retries
        )
        self.path_, self.report_ = qfps(
            x0, xG, self.n, lattice, cfg, check_rng(self.random_state)
        )
        return self
