"""Shared planner structures: trees, reports, configuration, nearest parents."""

from dataclasses import asdict, dataclass, field
import csv

import numpy as np

from ..dynamics import LinearPlannerConfig, reachable_many, track
from ..estimator import L1_PAPER_L72, PSTAR_PAPER

ITER_ESTIMATES = ("p1", "p2", "exact")
SAMPLERS = ("uniform", "l1")


@dataclass
class PlannerConfig:
    """Knobs shared by q-FPS, q-RRT and the classical RRT baseline."""

    dynamics: LinearPlannerConfig = field(default_factory=LinearPlannerConfig)
    iter_estimate: str = "p1"
    p2_factor: float = 1.0
    sampler: str = "uniform"
    l1_budget: int = 4
    l1_mode: str = "boundary"
    final_check: bool = True
    max_retries: int = 50
    max_tests: int = 1_000_000
    rrt_block: int = 256
    fps_waypoints: int = 8
    fps_sigma: float | None = None
    p_clamp_hi: float = 0.75
    count_relative_error: float = 0.0
    pstar_model: object = PSTAR_PAPER
    l1_model: object = L1_PAPER_L72

    def __post_init__(self):
        if self.iter_estimate not in ITER_ESTIMATES:
            raise ValueError(f"iter_estimate must be one of {ITER_ESTIMATES}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")


@dataclass
class PlannerReport:
    planner: str
    seed: int = 0
    oracle_calls: int = 0
    counting_cost: int = 0
    nodes_added: int = 0
    retries: int = 0
    q_applications: int = 0
    final_checks: int = 0
    databases: int = 0
    bad_admissions: int = 0
    status: str = "ok"

    def as_dict(self):
        return asdict(self)


class Tree:
    """Rooted tree of planar states; node 0 is the root, parents precede children."""

    def __init__(self, root_state):
        root = np.asarray(root_state, dtype=float)
        self._states = np.empty((16, root.shape[0]))
        self._states[0] = root
        self.parents = [-1]
        self.trajectories = [None]
        self._n = 1

    def __len__(self):
        return self._n

    @property
    def states(self):
        return self._states[: self._n]

    @property
    def root_state(self):
        return self._states[0]

    def add(self, state, parent, trajectory=None):
        if not 0 <= parent < self._n:
            raise IndexError(f"parent {parent} is not an existing node")
        if self._n == self._states.shape[0]:
            self._states = np.concatenate([self._states, np.empty_like(self._states)])
        self._states[self._n] = state
        self.parents.append(int(parent))
        self.trajectories.append(trajectory)
        self._n += 1
        return self._n - 1

    def path_to_root(self, node):
        out = [node]
        while self.parents[out[-1]] >= 0:
            out.append(self.parents[out[-1]])
            if len(out) > self._n:
                raise RuntimeError("parent links contain a cycle")
        return out

    def edges(self):
        return [(self.parents[i], i) for i in range(1, self._n)]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node_id", "x", "y", "parent_id"])
            for i in range(self._n):
                x, y = self._states[i, :2]
                w.writerow([i, repr(float(x)), repr(float(y)), self.parents[i]])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        rows.sort(key=lambda row: int(row["node_id"]))
        tree = cls([float(rows[0]["x"]), float(rows[0]["y"])])
        for row in rows[1:]:
            tree.add([float(row["x"]), float(row["y"])], int(row["parent_id"]))
        return tree


def nearest_parents(states, points):
    """Index of the nearest state for each point; ties go to the lowest index."""
    points = np.atleast_2d(points)
    d2 = np.sum((points[:, None, :] - states[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1)


def nearest_parent(tree, point):
    return int(nearest_parents(tree.states, np.asarray(point, dtype=float)[None])[0])


def final_check(index, mask):
    """Deterministic re-evaluation of the measured entry; costs one oracle call."""
    mask.calls += 1
    return bool(mask.truth[index])


def verify_tree(tree, lat, cfg=None):
    """Node ids whose edge from the parent fails the reachability predicate."""
    cfg = cfg or LinearPlannerConfig()
    if len(tree) < 2:
        return []
    parents = np.array(tree.parents[1:])
    ok = reachable_many(tree.states[parents], tree.states[1:], lat, lat.labels, cfg)
    return [int(i) + 1 for i in np.flatnonzero(~ok)]


def admit(tree, parent, state, cfg):
    return tree.add(state, parent, track(tree.states[parent], state, cfg))
