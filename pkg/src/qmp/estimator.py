"""Connectivity models used to choose the number of amplification rounds.

Two fitted surfaces:

* the logistic connectivity surface
  ``p*(r, L) = f / (1 + exp(-a (L - b)(r - c))) + d / L**2``;
* the L1-distance decay ``p(r, D) = a * exp((b r + c) D)`` and its inverse,
  which turns a per-node oracle-call budget into a sampling distance.

Both are fitted by damped Gauss-Newton (Levenberg-Marquardt) with analytic
Jacobians, wrapped as scikit-learn regressors.
"""

from dataclasses import astuple, dataclass, fields
import csv
import logging
import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import (
    DegenerateConcentrationError,
    DomainError,
    FitFailure,
    SamplingError,
)
from .lattice import generate, in_bounds, same_component_many, sample_free, sample_uniform
from .utils import check_int, check_rng
from .utils.seeding import mix

log = logging.getLogger(__name__)

P_FLOOR = 2.0**-16


@dataclass(frozen=True)
class PStarModel:
    a: float
    b: float
    c: float
    d: float
    f: float

    def raw(self, r, L):
        r = np.asarray(r, dtype=float)
        L = np.asarray(L, dtype=float)
        z = -self.a * (L - self.b) * (r - self.c)
        return self.f / (1.0 + np.exp(z)) + self.d / L**2

    @property
    def coef(self):
        return np.array(astuple(self))


@dataclass(frozen=True)
class L1Model:
    a: float
    b: float
    c: float
    L_fit: float = 72.0

    def rate(self, r):
        return self.b * r + self.c

    def raw(self, r, D):
        return self.a * np.exp(self.rate(np.asarray(r, dtype=float)) * np.asarray(D, dtype=float))

    @property
    def coef(self):
        return np.array([self.a, self.b, self.c])


PSTAR_PAPER = PStarModel(a=-0.1597, b=-54.59, c=0.3212, d=1.195, f=0.9542)
L1_PAPER_L72 = L1Model(a=0.479, b=-1.72, c=0.674, L_fit=72.0)

PRESETS = {"pstar-paper": PSTAR_PAPER, "l1-paper-L72": L1_PAPER_L72}


def p_star(model, r, L):
    """Logistic connectivity estimate, clamped to ``(2**-16, 1]``."""
    if np.any(np.asarray(L) <= 0):
        raise DomainError("L must be positive")
    out = np.clip(model.raw(r, L), P_FLOOR, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def p2_star(model, r, L, M, factor=3.0):
    """Maximally-spread-tree bound: ``p*`` at effective length ``factor * L / sqrt(M)``.

    ``factor=3`` is the bound's length; ``factor=1`` gives the per-tree
    estimate ``p*(r, L / sqrt(M))``.
    """
    M = check_int(M, "M", 1)
    return p_star(model, r, factor * L / math.sqrt(M))


@dataclass(frozen=True)
class ConnectivitySample:
    r: float
    L: float
    trials: int
    lattice_count: int
    p_hat: float
    stderr: float
    periodic: bool = False

    @property
    def total(self):
        return self.trials * self.lattice_count


def _rate(hits, total):
    p_hat = hits / total
    return p_hat, math.sqrt(p_hat * (1.0 - p_hat) / total)


def _sample_from_hits(r, L, trials, lattice_count, periodic, hits):
    p_hat, se = _rate(hits, trials * lattice_count)
    return ConnectivitySample(float(r), float(L), trials, lattice_count, p_hat, se, bool(periodic))


def _lattice_with_free_space(r, L, periodic, rng):
    while True:
        lat = generate(2, L, r, int(rng.integers(0, 2**63)), periodic)
        if lat.free_cells.size:
            return lat
        log.info("regenerating lattice with empty free space (r=%s, L=%s)", r, L)


def monte_carlo_connectivity(r, L, trials=1000, lattice_count=25, periodic=True, rng=None):
    """Mean of the same-component indicator for ``x1 ~ U(C_free)``, ``x2 ~ U(C)``."""
    if r >= 1.0:
        raise DegenerateConcentrationError("r=1 leaves no free space to sample from")
    trials = check_int(trials, "trials", 1)
    lattice_count = check_int(lattice_count, "lattice_count", 1)
    rng = check_rng(rng)
    hits = 0
    for _ in range(lattice_count):
        lat = _lattice_with_free_space(r, L, periodic, rng)
        x1 = sample_free(lat, rng, size=trials)
        x2 = sample_uniform(lat, rng, size=trials)
        hits += int(np.count_nonzero(same_component_many(lat.labels, x1, x2)))
    return _sample_from_hits(r, L, trials, lattice_count, periodic, hits)


def connectivity_grid(r_values, L_values, trials=1000, lattice_count=25, periodic=True, seed=0):
    """Monte-Carlo samples over an (r, L) grid; point ``k`` is seeded by ``mix(seed, k)``."""
    out = []
    k = 0
    for L in L_values:
        for r in r_values:
            rng = np.random.default_rng(mix(seed, k))
            out.append(monte_carlo_connectivity(r, int(L), trials, lattice_count, periodic, rng))
            k += 1
    return out


# -- L1 distance model -------------------------------------------------------

@dataclass(frozen=True)
class L1Sample:
    r: float
    D: float
    trials: int
    lattice_count: int
    p_hat: float
    stderr: float


def l1_probability(model, r, D):
    """``a * exp((b r + c) D)`` clamped to ``(0, 1]``."""
    if np.any(np.asarray(D) < 0):
        raise DomainError("L1 distance must be nonnegative")
    out = np.clip(model.raw(r, D), np.finfo(float).tiny, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def budget_fraction(n_calls):
    """Solution fraction whose floored optimum is about ``n_calls`` rounds."""
    return math.pi**2 / (16.0 * n_calls**2)


def l1_distance_for_budget(model, n_calls, r):
    """Sampling distance that targets ``n_calls`` amplification rounds per node."""
    if n_calls < 1:
        raise DomainError("oracle-call budget must be >= 1")
    rate = model.rate(r)
    if not rate < 0:
        raise DomainError(f"b*r + c = {rate:.4g} is not a decay at r={r}")
    D = math.log(budget_fraction(n_calls) / model.a) / rate
    return max(D, 0.0)


def _l1_sphere_offsets(k, d, D, rng):
    w = rng.dirichlet(np.ones(d), size=k)
    signs = np.where(rng.random((k, d)) < 0.5, -1.0, 1.0)
    return D * w * signs


def _draw_at_l1(centers, D, mode, L, rng, max_attempts):
    """Returns ``(points, failed)``; ``failed`` indexes centers with no in-bounds draw."""
    if mode not in ("boundary", "ball"):
        raise ValueError(f"mode must be 'boundary' or 'ball', got {mode!r}")
    if D < 0:
        raise DomainError("L1 distance must be nonnegative")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k, d = centers.shape
    out = centers.copy()
    todo = np.arange(k) if D > 0 else np.arange(0)
    for _ in range(max_attempts):
        if todo.size == 0:
            break
        radius = D if mode == "boundary" else D * rng.random(todo.size) ** (1.0 / d)
        offs = _l1_sphere_offsets(todo.size, d, 1.0, rng) * np.reshape(radius, (-1, 1))
        cand = centers[todo] + offs
        ok = in_bounds(cand, L)
        out[todo[ok]] = cand[ok]
        todo = todo[~ok]
    return out, todo


def sample_at_l1_many(centers, D, mode, L, rng, max_attempts=100):
    """Points at (``boundary``) or within (``ball``) L1 distance ``D`` of each center.

    Out-of-bounds draws are resampled up to ``max_attempts`` times.
    """
    out, failed = _draw_at_l1(centers, D, mode, L, rng, max_attempts)
    if failed.size:
        raise SamplingError(
            f"{failed.size} center(s) found no in-bounds point at L1 distance {D} "
            f"after {max_attempts} attempts"
        )
    return out


def sample_at_l1(center, D, mode, lat, rng=None):
    rng = check_rng(rng)
    return sample_at_l1_many(np.asarray(center, dtype=float)[None], D, mode, lat.L, rng)[0]


def _l1_hits(lat, D, trials, mode, rng):
    x1 = sample_free(lat, rng, size=trials)
    x2, failed = _draw_at_l1(x1, D, mode, lat.L, rng, 100)
    while failed.size:
        x1[failed] = sample_free(lat, rng, size=failed.size)
        redo, again = _draw_at_l1(x1[failed], D, mode, lat.L, rng, 100)
        x2[failed] = redo
        failed = failed[again]
    return int(np.count_nonzero(same_component_many(lat.labels, x1, x2)))


def monte_carlo_l1_connectivity(
    r, L, D, trials=1000, lattice_count=25, mode="boundary", periodic=False, rng=None
):
    """Same-component rate for ``x1 ~ U(C_free)`` and ``x2`` at L1 distance ``D``.

    Centers whose sphere has no in-bounds point within the attempt budget
    are redrawn from free space.
    """
    rng = check_rng(rng)
    hits = 0
    for _ in range(lattice_count):
        lat = _lattice_with_free_space(r, L, periodic, rng)
        hits += _l1_hits(lat, D, trials, mode, rng)
    return L1Sample(float(r), float(D), trials, lattice_count, *_rate(hits, trials * lattice_count))


def l1_connectivity_on(lattices, seeds, D, trials=1000, mode="boundary"):
    """L1 connectivity over fixed lattices, lattice ``i`` sampled from ``default_rng(seeds[i])``.

    Reusing the same lattices and seeds for every ``D`` gives a curve whose
    neighbouring points share their random numbers.
    """
    hits = sum(
        _l1_hits(lat, D, trials, mode, np.random.default_rng(seed))
        for lat, seed in zip(lattices, seeds)
    )
    k = len(lattices)
    return L1Sample(float(lattices[0].r), float(D), trials, k, *_rate(hits, trials * k))


# -- least squares -----------------------------------------------------------


def levenberg_marquardt(residual, jacobian, x0, max_iter=500, xtol=1e-10):
    """Minimise ``||residual(x)||^2`` by damped Gauss-Newton.

    Returns ``(x, n_iter)``; raises FitFailure carrying the best iterate if
    the step tolerance is not met within ``max_iter`` iterations.
    """
    x = np.asarray(x0, dtype=float).copy()
    res = residual(x)
    cost = float(res @ res)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        J = jacobian(x)
        g = J.T @ res
        H = J.T @ J
        diag = np.diag(H).copy()
        diag[diag <= 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(H + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = x + step
            res_new = residual(x_new)
            cost_new = float(res_new @ res_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                break
            lam *= 10.0
            if lam > 1e16:
                return x, it
        x, res, cost = x_new, res_new, cost_new
        lam = max(lam / 10.0, 1e-15)
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(x) + xtol):
            return x, it
    raise FitFailure(f"no convergence after {max_iter} iterations", best=x)


def r_squared(y, yhat):
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def _canonical(X, y):
    # sort so the fit is independent of input order, bit for bit
    order = np.lexsort((y, X[:, 1], X[:, 0]))
    return X[order], y[order]


def _pstar_residual(X, y):
    r, L = X[:, 0], X[:, 1]

    def residual(p):
        return PStarModel(*p).raw(r, L) - y

    def jacobian(p):
        a, b, c, d, f = p
        z = a * (L - b) * (r - c)
        s = 1.0 / (1.0 + np.exp(-z))
        ds = f * s * (1.0 - s)
        return np.column_stack(
            [ds * (L - b) * (r - c), -ds * a * (r - c), -ds * a * (L - b), L**-2.0, s]
        )

    return residual, jacobian


def _l1_residual(X, y):
    r, D = X[:, 0], X[:, 1]

    def residual(p):
        a, b, c = p
        return a * np.exp((b * r + c) * D) - y

    def jacobian(p):
        a, b, c = p
        e = np.exp((b * r + c) * D)
        return np.column_stack([e, a * e * r * D, a * e * D])

    return residual, jacobian


class PStarRegressor(RegressorMixin, BaseEstimator):
    """Fit the logistic connectivity surface to ``X = [[r, L], ...]``, ``y = p_hat``.

    ``predict`` returns the unclamped surface; use :func:`p_star` on
    ``model_`` for clamped probabilities.
    """

    def __init__(self, init=PSTAR_PAPER, max_iter=500, xtol=1e-10):
        self.init = init
        self.max_iter = max_iter
        self.xtol = xtol

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns: r, L")
        X, y = _canonical(X, y)
        residual, jacobian = _pstar_residual(X, y)
        coef, self.n_iter_ = levenberg_marquardt(
            residual, jacobian, self.init.coef, self.max_iter, self.xtol
        )
        self.coef_ = coef
        self.model_ = PStarModel(*map(float, coef))
        self.r2_ = r_squared(y, self.model_.raw(X[:, 0], X[:, 1]))
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        return self.model_.raw(X[:, 0], X[:, 1])


class L1Regressor(RegressorMixin, BaseEstimator):
    """Fit ``a exp((b r + c) D)`` to ``X = [[r, D], ...]``, ``y = p_hat``."""

    def __init__(self, init=L1_PAPER_L72, L_fit=72.0, max_iter=500, xtol=1e-10):
        self.init = init
        self.L_fit = L_fit
        self.max_iter = max_iter
        self.xtol = xtol

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns: r, D")
        X, y = _canonical(X, y)
        residual, jacobian = _l1_residual(X, y)
        coef, self.n_iter_ = levenberg_marquardt(
            residual, jacobian, self.init.coef, self.max_iter, self.xtol
        )
        self.coef_ = coef
        self.model_ = L1Model(*map(float, coef), L_fit=float(self.L_fit))
        self.r2_ = r_squared(y, self.model_.raw(X[:, 0], X[:, 1]))
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        return self.model_.raw(X[:, 0], X[:, 1])


def _xy(data, second):
    X = np.array([[s.r, getattr(s, second)] for s in data], dtype=float)
    y = np.array([s.p_hat for s in data], dtype=float)
    return X, y


def fit_pstar(data, init=PSTAR_PAPER, min_samples=20):
    """Refit the logistic surface to connectivity samples; returns ``(model, R2)``."""
    if len(data) < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {len(data)}")
    X, y = _xy(data, "L")
    try:
        reg = PStarRegressor(init=init).fit(X, y)
    except FitFailure as exc:
        best = PStarModel(*map(float, exc.best))
        raise FitFailure(str(exc), best=best, r2=r_squared(y, best.raw(X[:, 0], X[:, 1])))
    return reg.model_, reg.r2_


def fit_l1(data, init=L1_PAPER_L72, L_fit=72.0):
    """Refit the L1 decay model; ``data`` holds objects with ``r``, ``D``, ``p_hat``."""
    X, y = _xy(data, "D")
    try:
        reg = L1Regressor(init=init, L_fit=L_fit).fit(X, y)
    except FitFailure as exc:
        best = L1Model(*map(float, exc.best), L_fit=float(L_fit))
        raise FitFailure(str(exc), best=best, r2=r_squared(y, best.raw(X[:, 0], X[:, 1])))
    return reg.model_, reg.r2_


# -- preset files ------------------------------------------------------------

_KINDS = {"pstar": PStarModel, "l1": L1Model}


def model_kind(model):
    return "pstar" if isinstance(model, PStarModel) else "l1"


def write_presets(path, rows):
    """Write ``(name, model, R2, source)`` tuples as ``name,kind,coeffs...,R2,source``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for name, model, r2, source in rows:
            w.writerow([name, model_kind(model), *map(repr, astuple(model)), repr(r2), source])


def read_presets(path):
    out = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            name, kind = row[0], row[1]
            cls = _KINDS[kind]
            n = len(fields(cls))
            coeffs = [float(v) for v in row[2 : 2 + n]]
            out[name] = (cls(*coeffs), float(row[2 + n]), row[3 + n])
    return out
