"""Classical RRT baseline: one reachability test per sampled point."""

import numpy as np
from sklearn.base import BaseEstimator

from ..dynamics import reachable_many
from ..exceptions import PartialTreeError
from ..lattice import random_start
from ..utils import check_int, check_point, check_rng
from .base import PlannerConfig, PlannerReport, Tree, admit, nearest_parents
from .qrrt import make_sampler


def classical_rrt(x0, M, lat, cfg=None, rng=None, seed=0):
    """Sample, connect to the nearest node, test reachability, repeat until ``M`` nodes.

    Candidates are drawn and tested in blocks of ``cfg.rrt_block`` against
    the current tree; only tests up to and including the first success are
    charged, and the rest of the block is discarded, which leaves the
    sequential process unchanged in distribution.
    """
    cfg = cfg or PlannerConfig()
    rng = check_rng(rng)
    x0 = check_point(x0, 2, "x0")
    M = check_int(M, "M", 1)
    tree = Tree(x0)
    report = PlannerReport("rrt", seed=seed)
    sampler = make_sampler(lat, cfg)
    block = cfg.rrt_block
    while len(tree) < M:
        cand = sampler(tree, lat, rng, block)
        parents = nearest_parents(tree.states, cand)
        ok = reachable_many(tree.states[parents], cand, lat, lat.labels, cfg.dynamics)
        hit = int(np.argmax(ok)) if ok.any() else -1
        used = hit + 1 if hit >= 0 else block
        if report.oracle_calls + used > cfg.max_tests:
            report.oracle_calls = cfg.max_tests
            report.status = "partial"
            raise PartialTreeError(
                f"RRT stalled at {len(tree)}/{M} nodes after {cfg.max_tests} tests",
                tree=tree,
                report=report,
            )
        report.oracle_calls += used
        if hit >= 0:
            admit(tree, int(parents[hit]), cand[hit], cfg.dynamics)
            report.nodes_added += 1
    return tree, report


class RRTPlanner(BaseEstimator):
    def __init__(self, M=11, max_tests=1_000_000, dynamics=None, random_state=None):
        self.M = M
        self.max_tests = max_tests
        self.dynamics = dynamics
        self.random_state = random_state

    def fit(self, lattice, x0=None):
        rng = check_rng(self.random_state)
        if x0 is None:
            x0 = random_start(lattice, rng)
        cfg = PlannerConfig(max_tests=self.max_tests)
        if self.dynamics is not None:
            cfg.dynamics = self.dynamics
        self.tree_, self.report_ = classical_rrt(x0, self.M, lattice, cfg, rng)
        return self
