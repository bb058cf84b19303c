"""Quantum RRT: one amplified database search per admitted node."""

from dataclasses import dataclass, replace
import math

import numpy as np
from sklearn.base import BaseEstimator

from ..dynamics import reachable_many
from ..estimator import l1_distance_for_budget, p2_star, p_star, sample_at_l1_many
from ..exceptions import PartialTreeError
from ..lattice import random_start, sample_uniform
from ..qsearch import CountingLedger, OracleMask, count_solutions, grover_iterate, measure
from ..qsearch import uniform_superposition
from ..utils import check_int, check_point, check_rng
from .base import PlannerConfig, PlannerReport, Tree, admit, final_check, nearest_parents


class UniformSampler:
    """Candidates uniform over the whole configuration box."""

    def __call__(self, tree, lat, rng, size):
        return sample_uniform(lat, rng, size=size)


class L1Sampler:
    """Candidates at L1 distance ``D`` from uniformly chosen tree nodes."""

    def __init__(self, D, mode="boundary"):
        self.D = float(D)
        self.mode = mode

    def __call__(self, tree, lat, rng, size):
        centers = tree.states[rng.integers(0, len(tree), size=size)]
        return sample_at_l1_many(centers, self.D, self.mode, lat.L, rng)


def make_sampler(lat, cfg):
    if cfg.sampler == "uniform":
        return UniformSampler()
    D = l1_distance_for_budget(cfg.l1_model, cfg.l1_budget, lat.r)
    return L1Sampler(D, cfg.l1_mode)


@dataclass
class PairDatabase:
    candidates: np.ndarray
    parents: np.ndarray
    mask: OracleMask

    def __len__(self):
        return self.candidates.shape[0]

    @property
    def fraction(self):
        return self.mask.m / len(self)


def build_pair_database(tree, lat, n, sampler=None, rng=None, cfg=None):
    """``2**n`` (candidate, nearest parent) pairs with their reachability truth."""
    cfg = cfg or PlannerConfig()
    rng = check_rng(rng)
    sampler = sampler or UniformSampler()
    N = 2 ** check_int(n, "n", 1)
    cand = sampler(tree, lat, rng, N)
    parents = nearest_parents(tree.states, cand)
    truth = reachable_many(tree.states[parents], cand, lat, lat.labels, cfg.dynamics)
    return PairDatabase(cand, parents, OracleMask(truth))


def estimated_fraction(tree, lat, db, cfg, ledger):
    if cfg.iter_estimate == "p1":
        p = p_star(cfg.pstar_model, lat.r, lat.L)
    elif cfg.iter_estimate == "p2":
        p = p2_star(cfg.pstar_model, lat.r, lat.L, len(tree), factor=cfg.p2_factor)
    else:
        m = count_solutions(db.mask, cfg.count_relative_error, ledger)
        p = m / len(db)
    return p


def iterations_for(p, N, hi=0.75):
    """Floored optimal round count for an estimated solution fraction ``p``."""
    p = min(max(p, 1.0 / N), hi)
    return int(math.floor(math.pi / 4.0 * math.sqrt(1.0 / p)))


def qrrt(x0, n, M, lat, cfg=None, rng=None, seed=0):
    """Grow an ``M``-node tree from ``x0``.

    Per node: build a database, amplify it with an estimated round count,
    measure one entry, and (with the final check on) admit it only if it is
    truly reachable; a failed check discards the database and starts over.
    Raises PartialTreeError when one node exhausts ``cfg.max_retries``.
    """
    cfg = cfg or PlannerConfig()
    rng = check_rng(rng)
    x0 = check_point(x0, 2, "x0")
    M = check_int(M, "M", 1)
    tree = Tree(x0)
    report = PlannerReport("qrrt", seed=seed)
    ledger = CountingLedger()
    sampler = make_sampler(lat, cfg)
    failures = 0
    while len(tree) < M:
        db = build_pair_database(tree, lat, n, sampler, rng, cfg)
        report.databases += 1
        p = estimated_fraction(tree, lat, db, cfg, ledger)
        if cfg.iter_estimate == "exact" and db.mask.m == 0:
            accepted = False
        else:
            iters = iterations_for(p, len(db), cfg.p_clamp_hi)
            reg = uniform_superposition(n)
            for _ in range(iters):
                grover_iterate(reg, db.mask)
            report.q_applications += iters
            k = measure(reg, rng)
            if cfg.final_check:
                accepted = final_check(k, db.mask)
                report.final_checks += 1
            else:
                accepted = True
                report.bad_admissions += int(not db.mask.truth[k])
        report.oracle_calls += db.mask.calls
        if accepted:
            admit(tree, int(db.parents[k]), db.candidates[k], cfg.dynamics)
            report.nodes_added += 1
            failures = 0
            continue
        report.retries += 1
        failures += 1
        if failures > cfg.max_retries:
            report.counting_cost = ledger.invocations
            report.status = "partial"
            raise PartialTreeError(
                f"q-RRT stalled at {len(tree)}/{M} nodes after {cfg.max_retries} retries",
                tree=tree,
                report=report,
            )
    report.counting_cost = ledger.invocations
    return tree, report


class QRRTPlanner(BaseEstimator):
    """Estimator wrapper around :func:`qrrt`.

    ``fit(lattice, x0=None)`` grows the tree (from a random point of the
    largest free component when ``x0`` is omitted) and stores ``tree_`` and
    ``report_``.
    """

    def __init__(
        self,
        n=9,
        M=11,
        iter_estimate="p1",
        sampler="uniform",
        l1_budget=4,
        final_check=True,
        max_retries=50,
        dynamics=None,
        random_state=None,
    ):
        self.n = n
        self.M = M
        self.iter_estimate = iter_estimate
        self.sampler = sampler
        self.l1_budget = l1_budget
        self.final_check = final_check
        self.max_retries = max_retries
        self.dynamics = dynamics
        self.random_state = random_state

    def _config(self):
        cfg = PlannerConfig(
            iter_estimate=self.iter_estimate,
            sampler=self.sampler,
            l1_budget=self.l1_budget,
            final_check=self.final_check,
            max_retries=self.max_retries,
        )
        if self.dynamics is not None:
            cfg = replace(cfg, dynamics=self.dynamics)
        return cfg

    def fit(self, lattice, x0=None):
        rng = check_rng(self.random_state)
        if x0 is None:
            x0 = random_start(lattice, rng)
        self.tree_, self.report_ = qrrt(x0, self.n, self.M, lattice, self._config(), rng)
        return self
