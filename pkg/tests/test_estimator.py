import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from qmp import estimator as E
from qmp import lattice
from qmp.exceptions import DegenerateConcentrationError, DomainError, FitFailure, SamplingError


def test_pstar_reference_values():
    assert E.p_star(E.PSTAR_PAPER, 0.1, 32) == pytest.approx(0.91258, abs=5e-5)
    assert E.p_star(E.PSTAR_PAPER, 0.6, 32) == pytest.approx(0.020945, abs=1e-5)
    assert E.p_star(E.PSTAR_PAPER, 0.99, 4000) == E.P_FLOOR
    with pytest.raises(DomainError):
        E.p_star(E.PSTAR_PAPER, 0.5, 0)


def test_pstar_raw_formula_by_hand():
    a, b, c, d, f = -0.1597, -54.59, 0.3212, 1.195, 0.9542
    r, L = 0.45, 50.0
    hand = f / (1 + math.exp(-a * (L - b) * (r - c))) + d / L**2
    assert E.PSTAR_PAPER.raw(r, L) == pytest.approx(hand, rel=1e-14)


def test_p2_star_uses_effective_length():
    m = E.PSTAR_PAPER
    assert E.p2_star(m, 0.6, 32, 5) == pytest.approx(E.p_star(m, 0.6, 3 * 32 / math.sqrt(5)))
    assert E.p2_star(m, 0.6, 32, 5, factor=1.0) == pytest.approx(E.p_star(m, 0.6, 32 / math.sqrt(5)))


def test_p2_star_grows_with_tree_size_above_logistic_midpoint():
    # above r = c the surface falls with L, and the effective length 3L/sqrt(M) shrinks with M
    m = E.PSTAR_PAPER
    for L in (8, 16, 32, 72):
        for r in np.arange(0.35, 0.95, 0.05):
            vals = np.array([E.p2_star(m, r, L, M) for M in range(1, 200)])
            assert np.all(np.diff(vals) >= -1e-15)
            assert E.p2_star(m, r, L, 9) == pytest.approx(E.p_star(m, r, L))


def test_l1_budget_inversion():
    m = E.L1_PAPER_L72
    for n in (2, 4, 8, 16):
        D = E.l1_distance_for_budget(m, n, 0.5)
        assert E.l1_probability(m, 0.5, D) == pytest.approx(E.budget_fraction(n), rel=1e-12)
        assert math.floor(math.pi / 4 / math.sqrt(E.budget_fraction(n))) == n
    with pytest.raises(DomainError):
        E.l1_distance_for_budget(m, 4, 0.1)
    with pytest.raises(DomainError):
        E.l1_distance_for_budget(m, 0, 0.5)


@given(st.integers(0, 10**6), st.floats(0.5, 20.0), st.sampled_from(["boundary", "ball"]))
def test_l1_samples_sit_at_requested_distance(seed, D, mode):
    rng = np.random.default_rng(seed)
    centers = rng.random((50, 2)) * 40
    pts = E.sample_at_l1_many(centers, D, mode, 40, rng)
    dist = np.abs(pts - centers).sum(axis=1)
    assert lattice.in_bounds(pts, 40).all()
    if mode == "boundary":
        np.testing.assert_allclose(dist, D, rtol=1e-12)
    else:
        assert np.all(dist <= D * (1 + 1e-12))


def test_l1_sampling_distribution_is_uniform_on_sphere():
    rng = np.random.default_rng(0)
    off = E._l1_sphere_offsets(200_000, 2, 1.0, rng)
    # on the L1 circle, |x| is uniform on [0, 1]
    hist, _ = np.histogram(np.abs(off[:, 0]), bins=10, range=(0, 1))
    np.testing.assert_allclose(hist / hist.sum(), 0.1, atol=0.005)
    assert np.mean(off[:, 0] > 0) == pytest.approx(0.5, abs=0.01)


def test_l1_sampling_fails_when_no_point_fits():
    with pytest.raises(SamplingError):
        E.sample_at_l1_many(np.array([[1.0, 1.0]]), 100.0, "boundary", 4, np.random.default_rng(0))


def test_monte_carlo_limits():
    s = E.monte_carlo_connectivity(0.0, 16, 200, 3, rng=np.random.default_rng(0))
    assert s.p_hat == 1.0 and s.stderr == 0.0 and s.total == 600
    with pytest.raises(DegenerateConcentrationError):
        E.monte_carlo_connectivity(1.0, 16)


def test_monte_carlo_matches_direct_component_fraction():
    # for one periodic lattice, the hit rate estimates sum of (size_i / free) * (size_i / L^2)
    rng = np.random.default_rng(5)
    s = E.monte_carlo_connectivity(0.4, 24, 200_000, 1, periodic=True, rng=rng)
    lat = lattice.generate(2, 24, 0.4, int(np.random.default_rng(5).integers(0, 2**63)), True)
    sizes = lat.labels.sizes.astype(float)
    expected = float(np.sum(sizes**2) / (sizes.sum() * 24**2))
    assert s.p_hat == pytest.approx(expected, abs=4 * s.stderr + 1e-9)


def test_connectivity_grid_seeding_is_per_point():
    a = E.connectivity_grid([0.3, 0.5], [16], 100, 2, seed=3)
    b = E.connectivity_grid([0.3], [16], 100, 2, seed=3)
    assert a[0] == b[0]
    c = E.connectivity_grid([0.3, 0.5], [16], 100, 2, seed=3)
    assert a == c


def synthetic_pstar(model, rng, noise=0.0):
    r = np.repeat(np.round(np.arange(0.1, 0.81, 0.1), 2), 4)
    L = np.tile([16.0, 32.0, 48.0, 72.0], 8)
    y = model.raw(r, L) + noise * rng.standard_normal(r.size)
    return np.column_stack([r, L]), y


def test_pstar_fit_recovers_known_surface(rng):
    truth = E.PStarModel(-0.12, -80.0, 0.38, 4.0, 0.9)
    X, y = synthetic_pstar(truth, rng)
    reg = E.PStarRegressor().fit(X, y)
    np.testing.assert_allclose(reg.coef_, truth.coef, rtol=1e-5)
    assert reg.r2_ == pytest.approx(1.0)
    assert reg.score(X, y) == pytest.approx(1.0)


def test_pstar_fit_agrees_with_scipy(rng):
    optimize = pytest.importorskip("scipy.optimize")
    truth = E.PStarModel(-0.12, -80.0, 0.38, 4.0, 0.9)
    X, y = synthetic_pstar(truth, rng, noise=0.01)
    reg = E.PStarRegressor().fit(X, y)

    def f(x, a, b, c, d, ff):
        return E.PStarModel(a, b, c, d, ff).raw(x[0], x[1])

    ref, _ = optimize.curve_fit(f, X.T, y, p0=E.PSTAR_PAPER.coef, maxfev=20000)
    np.testing.assert_allclose(reg.predict(X), f(X.T, *ref), atol=1e-6)


def test_l1_fit_agrees_with_scipy(rng):
    optimize = pytest.importorskip("scipy.optimize")
    r = np.repeat([0.45, 0.5, 0.6, 0.7], 20)
    D = np.tile(np.arange(1.0, 21.0), 4)
    y = 0.5 * np.exp((-1.7 * r + 0.65) * D) + 0.005 * rng.standard_normal(r.size)
    X = np.column_stack([r, D])
    reg = E.L1Regressor().fit(X, y)
    ref, _ = optimize.curve_fit(
        lambda x, a, b, c: a * np.exp((b * x[0] + c) * x[1]), X.T, y, p0=E.L1_PAPER_L72.coef
    )
    np.testing.assert_allclose(reg.coef_, ref, rtol=1e-5)


def test_jacobians_match_finite_differences(rng):
    X, y = synthetic_pstar(E.PSTAR_PAPER, rng)
    res, jac = E._pstar_residual(X, y)
    p = E.PSTAR_PAPER.coef
    h = 1e-6 * np.maximum(np.abs(p), 1)
    num = np.column_stack([(res(p + h[k] * np.eye(5)[k]) - res(p - h[k] * np.eye(5)[k])) / (2 * h[k]) for k in range(5)])
    np.testing.assert_allclose(jac(p), num, rtol=1e-5, atol=1e-8)


@given(st.integers(0, 10**6))
def test_fit_is_order_invariant(seed):
    rng = np.random.default_rng(seed)
    X, y = synthetic_pstar(E.PSTAR_PAPER, rng, noise=0.02)
    perm = rng.permutation(len(y))
    a = E.PStarRegressor().fit(X, y).coef_
    b = E.PStarRegressor().fit(X[perm], y[perm]).coef_
    assert np.array_equal(a, b)


def test_fit_failure_carries_best_iterate(rng):
    X, y = synthetic_pstar(E.PSTAR_PAPER, rng, noise=0.05)
    with pytest.raises(FitFailure) as info:
        E.PStarRegressor(max_iter=1).fit(X, y)
    assert info.value.best is not None


def test_fit_pstar_requires_enough_samples():
    data = [E.ConnectivitySample(0.5, 32, 10, 1, 0.1, 0.01)] * 5
    with pytest.raises(ValueError):
        E.fit_pstar(data)


def test_regressors_follow_estimator_api():
    for est in (E.PStarRegressor(), E.L1Regressor()):
        params = est.get_params()
        assert clone(est).get_params() == params
    with pytest.raises(Exception):
        E.PStarRegressor().predict([[0.5, 32]])


def test_presets_round_trip(tmp_path):
    path = tmp_path / "presets.csv"
    E.write_presets(path, [("p", E.PSTAR_PAPER, 0.9957, "builtin"), ("l", E.L1_PAPER_L72, 0.981, "x.csv")])
    back = E.read_presets(path)
    assert back["p"][0] == E.PSTAR_PAPER and back["p"][1] == 0.9957
    assert back["l"][0] == E.L1_PAPER_L72 and back["l"][2] == "x.csv"
    assert path.read_text().splitlines()[0].startswith("p,pstar,")


def test_fixed_lattice_l1_curve_reuses_random_numbers():
    lats = [lattice.generate(2, 24, 0.4, s) for s in range(3)]
    a = E.l1_connectivity_on(lats, [1, 2, 3], 3.0, trials=500)
    b = E.l1_connectivity_on(lats, [1, 2, 3], 3.0, trials=500)
    assert a == b and a.lattice_count == 3 and a.r == 0.4
    assert E.l1_connectivity_on(lats, [1, 2, 3], 0.0, trials=500).p_hat == 1.0
