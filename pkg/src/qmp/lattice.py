"""Random site lattices, face-adjacency components and point/cell helpers.

Cell arrays are indexed ``occupied[i_0, i_1, ...]`` with axis ``k`` along
coordinate ``x_k``; for d=2 that is ``occupied[ix, iy]``.  Continuous points
live in ``[0, L]^d`` with unit spacing.
"""

from dataclasses import dataclass
from functools import cached_property
import os

import numpy as np

from .exceptions import CapacityError, DomainError, EmptyFreeSpaceError
from .utils import check_int, check_point, check_probability, check_rng

MAX_CELLS = 2**24
FORMAT_TAG = "qmplattice v1"


@dataclass(frozen=True, eq=False)
class ComponentLabels:
    """Per-cell component ids; occupied cells carry ``-1``."""

    label: np.ndarray
    sizes: np.ndarray
    largest: int
    periodic: bool

    @property
    def L(self):
        return self.label.shape[0]

    @property
    def n_components(self):
        return self.sizes.shape[0]

    def cells_in(self, component):
        return np.flatnonzero(self.label.ravel() == component)


@dataclass(frozen=True, eq=False)
class Lattice:
    d: int
    L: int
    r: float
    seed: int
    periodic: bool
    occupied: np.ndarray

    @property
    def shape(self):
        return self.occupied.shape

    @property
    def n_cells(self):
        return self.occupied.size

    @cached_property
    def free_cells(self):
        """Flat indices of free cells in ascending order."""
        return np.flatnonzero(~self.occupied.ravel())

    @cached_property
    def labels(self):
        return components(self)

    def occupied_fraction(self):
        return float(self.occupied.mean())


def generate(d=2, L=32, r=0.5, seed=0, periodic=False):
    """Occupy each of the ``L**d`` cells independently with probability ``r``."""
    d = check_int(d, "d", 2)
    L = check_int(L, "L", 2)
    r = check_probability(r, "r")
    if L**d > MAX_CELLS:
        raise CapacityError(f"L^d = {L**d} cells exceeds the guard of {MAX_CELLS}")
    rng = np.random.default_rng(int(seed))
    occupied = rng.random(L**d) < r
    occupied = occupied.reshape((L,) * d)
    occupied.setflags(write=False)
    return Lattice(d, L, r, int(seed), bool(periodic), occupied)


def from_grid(occupied, r=None, seed=0, periodic=False):
    """Wrap an explicit boolean grid (all sides equal) as a Lattice."""
    occupied = np.array(occupied, dtype=bool)
    if occupied.ndim < 2 or len(set(occupied.shape)) != 1:
        raise DomainError(f"grid must be a hypercube, got shape {occupied.shape}")
    if r is None:
        r = float(occupied.mean())
    occupied.setflags(write=False)
    return Lattice(occupied.ndim, occupied.shape[0], float(r), int(seed), bool(periodic), occupied)


def _adjacent_pairs(free, periodic):
    """Flat-index pairs of free cells sharing a (d-1)-face."""
    flat = np.arange(free.size).reshape(free.shape)
    us, vs = [], []
    for axis in range(free.ndim):
        if periodic:
            nb_free = np.roll(free, -1, axis=axis)
            nb_idx = np.roll(flat, -1, axis=axis)
            ok = free & nb_free
            us.append(flat[ok])
            vs.append(nb_idx[ok])
        else:
            lo = [slice(None)] * free.ndim
            hi = [slice(None)] * free.ndim
            lo[axis] = slice(0, -1)
            hi[axis] = slice(1, None)
            ok = free[tuple(lo)] & free[tuple(hi)]
            us.append(flat[tuple(lo)][ok])
            vs.append(flat[tuple(hi)][ok])
    return np.concatenate(us), np.concatenate(vs)


def _compress(parent):
    while True:
        grand = parent[parent]
        if np.array_equal(grand, parent):
            return parent
        parent = grand


def union_find_roots(free, periodic=False):
    """Root of every cell under face adjacency.

    Union-find with min-index hooking and full path compression by pointer
    jumping, run edge-parallel over numpy arrays.  Every root is the
    smallest flat index in its component.
    """
    parent = np.arange(free.size)
    u, v = _adjacent_pairs(free, periodic)
    while u.size:
        ru, rv = parent[u], parent[v]
        live = ru != rv
        if not live.any():
            break
        u, v, ru, rv = u[live], v[live], ru[live], rv[live]
        np.minimum.at(parent, np.maximum(ru, rv), np.minimum(ru, rv))
        parent = _compress(parent)
    return parent


def components(lat):
    """Label connected free components (edges, not corners)."""
    free = ~lat.occupied
    roots = union_find_roots(free, lat.periodic)
    label = np.full(free.size, -1, dtype=np.int64)
    free_flat = free.ravel()
    uniq, inverse = np.unique(roots[free_flat], return_inverse=True)
    label[free_flat] = inverse
    sizes = np.bincount(inverse, minlength=uniq.size) if uniq.size else np.zeros(0, dtype=np.int64)
    largest = int(np.argmax(sizes)) if sizes.size else -1
    label = label.reshape(free.shape)
    label.setflags(write=False)
    return ComponentLabels(label, sizes, largest, lat.periodic)


def _floor_cells(X, L):
    return np.clip(np.floor(X).astype(np.int64), 0, L - 1)


def in_bounds(X, L):
    X = np.asarray(X, dtype=float)
    return np.all((X >= 0.0) & (X <= L), axis=-1)


def cell_of(lat, x):
    """Integer cell containing ``x``; the far boundary belongs to the last cell."""
    x = check_point(x, lat.d)
    if not in_bounds(x, lat.L):
        raise DomainError(f"point {x.tolist()} outside [0, {lat.L}]^{lat.d}")
    return tuple(int(c) for c in _floor_cells(x, lat.L))


def flat_cells(X, L):
    """Flat cell indices of an (n, d) array of in-bounds points."""
    cells = _floor_cells(X, L)
    return np.ravel_multi_index(tuple(cells.T), (L,) * cells.shape[1])


def is_free(lat, X):
    """Vectorised freeness test; out-of-bounds points count as blocked."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ok = in_bounds(X, lat.L)
    out = np.zeros(X.shape[0], dtype=bool)
    if ok.any():
        out[ok] = ~lat.occupied.ravel()[flat_cells(X[ok], lat.L)]
    return out


def sample_free(lat, rng=None, size=None, cells=None):
    """Uniform point(s) over free space: uniform free cell, then uniform offset.

    ``cells`` restricts the draw to a subset of flat cell indices (for
    example one component).
    """
    rng = check_rng(rng)
    pool = lat.free_cells if cells is None else np.asarray(cells)
    if pool.size == 0:
        raise EmptyFreeSpaceError("lattice has no free cells")
    k = 1 if size is None else size
    picks = pool[rng.integers(0, pool.size, size=k)]
    corner = np.stack(np.unravel_index(picks, lat.shape), axis=1).astype(float)
    pts = corner + rng.random((k, lat.d))
    return pts[0] if size is None else pts


def sample_uniform(lat, rng=None, size=None):
    """Uniform point(s) over the whole box ``[0, L]^d``."""
    rng = check_rng(rng)
    k = 1 if size is None else size
    pts = rng.random((k, lat.d)) * lat.L
    return pts[0] if size is None else pts


def same_component_many(labels, X1, X2):
    L = labels.L
    X1 = np.atleast_2d(X1)
    X2 = np.atleast_2d(X2)
    ok = in_bounds(X1, L) & in_bounds(X2, L)
    out = np.zeros(X1.shape[0], dtype=bool)
    if ok.any():
        flat = labels.label.ravel()
        l1 = flat[flat_cells(X1[ok], L)]
        l2 = flat[flat_cells(X2[ok], L)]
        out[ok] = (l1 >= 0) & (l1 == l2)
    return out


def same_component(labels, x1, x2):
    """True iff both points sit in free cells with equal component labels."""
    x1 = check_point(x1)
    x2 = check_point(x2)
    return bool(same_component_many(labels, x1[None], x2[None])[0])


def write_lattice(lat, path):
    if lat.d != 2:
        raise DomainError("the text lattice format is defined for d=2 only")
    lines = [
        f"{FORMAT_TAG} d={lat.d} L={lat.L} r={lat.r!r} seed={lat.seed} periodic={int(lat.periodic)}"
    ]
    for iy in range(lat.L):
        lines.append("".join("#" if lat.occupied[ix, iy] else "." for ix in range(lat.L)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_lattice(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = lines[0]
    if not header.startswith(FORMAT_TAG):
        raise DomainError(f"{os.fspath(path)}: not a {FORMAT_TAG} file")
    fields = dict(tok.split("=", 1) for tok in header[len(FORMAT_TAG):].split())
    d, L = int(fields["d"]), int(fields["L"])
    if d != 2:
        raise DomainError("the text lattice format is defined for d=2 only")
    rows = lines[1 : 1 + L]
    if len(rows) != L or any(len(row) != L for row in rows):
        raise DomainError(f"{os.fspath(path)}: expected {L} rows of {L} characters")
    occupied = np.array([[c == "#" for c in row] for row in rows], dtype=bool).T
    occupied.setflags(write=False)
    return Lattice(
        d, L, float(fields["r"]), int(fields["seed"]), fields["periodic"] == "1", occupied
    )


def random_start(lat, rng=None, component=None):
    """Free point inside ``component`` (default: the largest one)."""
    labels = lat.labels
    if component is None:
        component = labels.largest
    if component < 0:
        raise EmptyFreeSpaceError("lattice has no free cells")
    return sample_free(lat, rng, cells=labels.cells_in(component))


__all__ = [
    "ComponentLabels",
    "Lattice",
    "cell_of",
    "components",
    "from_grid",
    "generate",
    "in_bounds",
    "is_free",
    "random_start",
    "read_lattice",
    "same_component",
    "sample_free",
    "sample_uniform",
    "write_lattice",
]
