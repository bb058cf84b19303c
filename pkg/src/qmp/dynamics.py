"""Reachability oracle: closed-loop reference tracking plus collision checks.

The tracking error ``e = x - target`` evolves as ``e <- Phi e``.  In the
default ``euler`` mode ``Phi = I + h (A - B K)``; ``literal-discrete`` uses
``Phi = A - B K`` unchanged, which diverges for the shipped matrices and is
kept for study only.

Collision checks sample each polyline segment at ``2**k`` equal steps, the
smallest power of two giving spacing ``<= collide_ds``.  Dyadic spacing
makes the sample sets nested, so refining the spacing can only find more
collisions.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np

from .exceptions import ConfigError, NumericError
from .lattice import in_bounds, is_free, same_component_many
from .utils import check_point

PAPER_A = ((-1.5, -2.0), (1.0, 3.0))
PAPER_B = ((0.5, 0.25), (0.0, 1.0))
PAPER_K = ((1.9, -7.5), (1.0, 7.0))
MODES = ("euler", "literal-discrete")

# entries per vectorised chunk; bounds peak memory of the sampler
_CHUNK = 1024


def _matrix(value, name):
    m = np.asarray(value, dtype=float)
    if m.shape == (4,):
        m = m.reshape(2, 2)
    if m.shape != (2, 2):
        raise ConfigError(f"dynamics.{name} must be 2x2 (or a row-major 4-vector)")
    return m


@dataclass(frozen=True, eq=False)
class LinearPlannerConfig:
    A: np.ndarray = field(default_factory=lambda: np.array(PAPER_A))
    B: np.ndarray = field(default_factory=lambda: np.array(PAPER_B))
    K: np.ndarray = field(default_factory=lambda: np.array(PAPER_K))
    mode: str = "euler"
    step_h: float = 0.1
    eps: float = 0.05
    max_steps: int = 500
    collide_ds: float = 0.1

    def __post_init__(self):
        for name in ("A", "B", "K"):
            object.__setattr__(self, name, _matrix(getattr(self, name), name))
        if self.mode not in MODES:
            raise ConfigError(f"dynamics.mode must be one of {MODES}, got {self.mode!r}")
        if not self.eps > 0:
            raise ConfigError("dynamics.eps must be positive")
        if int(self.max_steps) < 1:
            raise ConfigError("dynamics.max_steps must be >= 1")
        if not 0 < self.collide_ds <= 0.5:
            raise ConfigError("dynamics.collide_ds must lie in (0, 0.5]")
        if self.mode == "euler" and not self.step_h > 0:
            raise ConfigError("dynamics.step_h must be positive")
        rho = self.spectral_radius
        if rho >= 1.0:
            if self.mode == "euler":
                raise ConfigError(f"closed-loop map has spectral radius {rho:.4g} >= 1")
            warnings.warn(
                f"literal-discrete closed loop has spectral radius {rho:.4g}; "
                "tracking will diverge",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def closed_loop(self):
        return self.A - self.B @ self.K

    @property
    def phi(self):
        if self.mode == "euler":
            return np.eye(2) + self.step_h * self.closed_loop
        return self.closed_loop

    @property
    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.phi))))

    def to_dict(self):
        return {
            "A": self.A.ravel().tolist(),
            "B": self.B.ravel().tolist(),
            "K": self.K.ravel().tolist(),
            "mode": self.mode,
            "step_h": self.step_h,
            "eps": self.eps,
            "max_steps": int(self.max_steps),
            "collide_ds": self.collide_ds,
        }


@dataclass
class Trajectory:
    states: np.ndarray
    converged: bool

    @property
    def last(self):
        return self.states[-1]


def _track_errors(E0, cfg):
    """Propagate a batch of initial errors.

    Returns ``(E, steps, converged)`` where ``E[t, i]`` is the error of entry
    ``i`` after ``t`` steps (rows past ``steps[i]`` are unused).
    """
    phiT = cfg.phi.T
    eps2 = cfg.eps**2
    k = E0.shape[0]
    steps = np.full(k, -1, dtype=np.int64)
    errs = [E0]
    e = E0
    done = np.einsum("ij,ij->i", e, e) <= eps2
    steps[done] = 0
    bad = np.zeros(k, dtype=bool)
    t = 0
    while t < cfg.max_steps and not np.all(done | bad):
        t += 1
        with np.errstate(over="ignore", invalid="ignore"):
            e = e @ phiT
            norm2 = np.einsum("ij,ij->i", e, e)
        finite = np.isfinite(norm2)
        bad |= ~finite & ~done
        hit = finite & (norm2 <= eps2) & ~done
        steps[hit] = t
        done |= hit
        errs.append(e)
    converged = done & ~bad
    steps[~converged] = len(errs) - 1
    return np.stack(errs), steps, converged, bad


def track(parent, target, cfg=None):
    """Closed-loop tracking from ``parent`` toward ``target``."""
    cfg = cfg or LinearPlannerConfig()
    parent = check_point(parent, 2, "parent")
    target = check_point(target, 2, "target")
    E, steps, converged, bad = _track_errors((parent - target)[None, :], cfg)
    if bad[0]:
        raise NumericError("tracking produced a non-finite state; check the closed-loop map")
    states = target + E[: steps[0] + 1, 0, :]
    return Trajectory(states, bool(converged[0]))


def _dyadic_counts(lengths, ds):
    ratio = np.maximum(lengths / ds, 1.0)
    return np.left_shift(1, np.ceil(np.log2(ratio)).astype(np.int64))


def _segments_free(lat, starts, ends, owner, n_owner, ds):
    """True per owner iff every dyadic sample of its segments is in a free cell."""
    lengths = np.linalg.norm(ends - starts, axis=1)
    counts = _dyadic_counts(lengths, ds)
    per_seg = counts + 1
    seg_of = np.repeat(np.arange(starts.shape[0]), per_seg)
    first = np.cumsum(per_seg) - per_seg
    j = np.arange(seg_of.size) - first[seg_of]
    t = (j / counts[seg_of])[:, None]
    pts = starts[seg_of] + t * (ends[seg_of] - starts[seg_of])
    blocked = ~is_free(lat, pts)
    hits = np.bincount(owner[seg_of][blocked], minlength=n_owner)
    return hits == 0


def _trajectory_polylines_free(lat, E, steps, targets, ds):
    """Collision check of each tracked polyline, closed by its target point."""
    k = targets.shape[0]
    tmax = E.shape[0] - 1
    # segment (t -> t+1) for t < steps[i], then last state -> target
    t_idx = np.arange(tmax)
    use = t_idx[None, :] < steps[:, None]
    ii, tt = np.nonzero(use)
    starts = targets[ii] + E[tt, ii]
    ends = targets[ii] + E[tt + 1, ii]
    last = targets + E[steps, np.arange(k)]
    starts = np.concatenate([starts, last])
    ends = np.concatenate([ends, targets])
    owner = np.concatenate([ii, np.arange(k)])
    return _segments_free(lat, starts, ends, owner, k, ds)


def reachable_many(parents, targets, lat, labels=None, cfg=None):
    """Vectorised reachability predicate for paired rows of ``parents``/``targets``.

    An entry is reachable iff both points share a free component, tracking
    converges, and every sample along the tracked polyline (closed by the
    target) lies in a free cell.  The component test runs first as a cheap
    filter; it also rejects trajectories that slip diagonally between two
    free cells touching only at a corner, which point sampling can miss.
    """
    cfg = cfg or LinearPlannerConfig()
    labels = lat.labels if labels is None else labels
    P = np.atleast_2d(np.asarray(parents, dtype=float))
    T = np.atleast_2d(np.asarray(targets, dtype=float))
    if P.shape[0] == 1 and T.shape[0] > 1:
        P = np.broadcast_to(P, T.shape)
    out = same_component_many(labels, P, T)
    todo = np.flatnonzero(out)
    for lo in range(0, todo.size, _CHUNK):
        idx = todo[lo : lo + _CHUNK]
        E, steps, converged, _ = _track_errors(P[idx] - T[idx], cfg)
        ok = converged.copy()
        if ok.any():
            sub = np.flatnonzero(ok)
            ok[sub] = _trajectory_polylines_free(
                lat, E[:, sub], steps[sub], T[idx][sub], cfg.collide_ds
            )
        out[idx] = ok
    return out


def reachable(parent, target, lat, labels=None, cfg=None):
    parent = check_point(parent, 2, "parent")
    target = check_point(target, 2, "target")
    if not (in_bounds(parent, lat.L) and in_bounds(target, lat.L)):
        return False
    return bool(reachable_many(parent[None], target[None], lat, labels, cfg)[0])


def paths_collision_free(paths, lat, cfg=None, ds=None):
    """Collision check for a batch of waypoint paths, shape ``(k, w, 2)``."""
    if ds is None:
        ds = (cfg or LinearPlannerConfig()).collide_ds
    paths = np.asarray(paths, dtype=float)
    k, w, _ = paths.shape
    ok = np.all(in_bounds(paths, lat.L), axis=1)
    out = np.zeros(k, dtype=bool)
    idx = np.flatnonzero(ok)
    step = max(1, _CHUNK // max(1, w - 1))
    for lo in range(0, idx.size, step):
        rows = idx[lo : lo + step]
        sub = paths[rows]
        starts = sub[:, :-1, :].reshape(-1, 2)
        ends = sub[:, 1:, :].reshape(-1, 2)
        owner = np.repeat(np.arange(rows.size), w - 1)
        out[rows] = _segments_free(lat, starts, ends, owner, rows.size, ds)
    return out


def path_collision_free(waypoints, lat, cfg=None, ds=None):
    """True iff every sample on every segment of the path lies in a free cell."""
    waypoints = np.asarray(waypoints, dtype=float)
    if waypoints.ndim != 2 or waypoints.shape[0] < 2:
        raise ValueError("a path needs at least two waypoints")
    return bool(paths_collision_free(waypoints[None], lat, cfg, ds)[0])
