import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvlsc.integrands import (
    Integrand,
    RecessionLimitError,
    catalog_get,
    catalog_tags,
    composite,
    estimated_recession,
    freeze_x,
    modulate,
    mu_estimate,
    recession_estimate,
)

CATALOG_1D = [
    ("linear", {"matrix": [[1.0]]}),
    ("norm", {"M": 1, "N": 1}),
    ("negnorm", {"M": 1, "N": 1}),
    ("area", {"M": 1, "N": 1}),
    ("boundary_null_lagrangian", {"a": [1.0], "t": [1.0]}),
    ("norm_sin", {"M": 1, "N": 1}),
]


def random_xis(M, N, k, seed=0, radius=3.0):
    rng = np.random.default_rng(seed)
    xi = rng.normal(size=(k, M, N))
    scale = radius * rng.random(k) + 0.1
    xi *= (scale / np.linalg.norm(xi.reshape(k, -1), axis=1))[:, None, None]
    return xi


def test_recession_area_is_norm():
    f = catalog_get("area", {"M": 1, "N": 2})
    xi = np.array([[0.6, -0.8]])
    est = recession_estimate(f, np.zeros(2), xi)
    assert est.value == pytest.approx(1.0, abs=1e-8)


def test_recession_linear_is_itself():
    A = np.array([[2.0, -1.0]])
    f = catalog_get("linear", {"matrix": A.tolist()})
    xi = np.array([[1.0, 3.0]])
    est = recession_estimate(f, np.zeros(2), xi)
    assert est.value == pytest.approx(float(np.sum(A * xi)), abs=1e-10)


def test_recession_zero_matrix():
    f = catalog_get("area")
    est = recession_estimate(f, np.zeros(1), np.zeros((1, 1)))
    assert est.value == 0.0


def test_recession_norm_sin_tail():
    f = catalog_get("norm_sin")
    for xi in random_xis(1, 1, 20, seed=3):
        est = recession_estimate(f, np.zeros(1), xi)
        assert abs(est.value - np.linalg.norm(xi)) <= 1e-4


def test_recession_not_detected_raises():
    def fn(x, xi):
        n = np.linalg.norm(xi.reshape(len(xi), -1), axis=1)
        return n * np.sin(np.log1p(n))

    f = Integrand(fn, 1, 1, growth=2.0, tag="oscillating")
    with pytest.raises(RecessionLimitError):
        recession_estimate(f, np.zeros(1), np.array([[1.0]]))


def test_estimated_recession_matches_analytic():
    f = catalog_get("area", {"M": 1, "N": 2})
    est = estimated_recession(f)
    xi = random_xis(1, 2, 10, seed=1)
    x = np.zeros((10, 2))
    assert np.allclose(est(x, xi), f.recession(x, xi), atol=1e-6)


def test_mu_area_analytic_bound():
    f = catalog_get("area")
    rep = mu_estimate(f, f.recession, 10.0, budget=500)
    assert rep["sampled"] <= np.sqrt(1 + 100.0) - 10.0 + 1e-12
    assert rep["analytic"] <= 0.05
    assert rep["sampled"] <= rep["analytic"] + 1e-12


def test_mu_linear_is_zero():
    f = catalog_get("linear", {"matrix": [[3.0]]})
    for t in (0.0, 1.0, 100.0):
        rep = mu_estimate(f, f.recession, t, budget=200)
        assert rep["sampled"] == 0.0
        assert rep["analytic"] == 0.0


def test_mu_at_zero_attained_at_origin():
    f = catalog_get("area")
    rep = mu_estimate(f, f.recession, 0.0, budget=500)
    assert rep["sampled"] == pytest.approx(1.0, abs=1e-12)
    assert rep["analytic"] == pytest.approx(1.0)


def test_catalog_linear_unit_is_plain_integral_density():
    f = catalog_get("linear", {"matrix": [[1.0]]})
    xi = np.array([[[0.37]]])
    assert f(np.zeros((1, 1)), xi)[0] == pytest.approx(0.37)
    assert f.recession(np.zeros((1, 1)), xi)[0] == pytest.approx(0.37)


def test_catalog_null_lagrangian():
    f = catalog_get("boundary_null_lagrangian", {"a": [2.0], "t": [0.0, 1.0]})
    xi = np.array([[[0.5, 0.25]]])
    assert f(np.zeros((1, 2)), xi)[0] == pytest.approx(0.5)  # 2 * 0.25


def test_catalog_negnorm_growth():
    f = catalog_get("negnorm")
    assert f.growth == 1.0
    assert f.at([0.0], [[3.0]]) == -3.0
    assert f.spot_check()["growth_ok"]


def test_catalog_growth_bounds():
    for tag, params in CATALOG_1D:
        f = catalog_get(tag, params)
        assert f.spot_check()["growth_ok"], tag


def test_homogeneity_of_catalog_recessions():
    for tag, params in CATALOG_1D:
        f = catalog_get(tag, params)
        assert f.recession.homogeneity_check() <= 1e-10, tag


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 50.0), st.floats(-3.0, 3.0))
def test_recession_positive_homogeneity_property(alpha, v):
    f = catalog_get("area")
    xi = np.array([[[v]]])
    x = np.zeros((1, 1))
    lhs = f.recession(x, alpha * xi)[0]
    rhs = alpha * f.recession(x, xi)[0]
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(rhs))


def test_deviation_bound_against_analytic_modulus():
    # |f - finf| <= mu(|xi|) (1 + |xi|) on samples
    for tag, params in CATALOG_1D:
        f = catalog_get(tag, params)
        xi = random_xis(f.M, f.N, 64, seed=5, radius=20.0)
        x = np.zeros((64, f.N))
        dev = np.abs(f(x, xi) - f.recession(x, xi))
        mags = np.linalg.norm(xi.reshape(64, -1), axis=1)
        bound = np.array([f.mu_analytic(m) for m in mags]) * (1 + mags)
        assert np.all(dev <= bound + 1e-9), tag


def test_mu_monotone_and_vanishing():
    grid = [1.0, 10.0, 100.0, 1e4, 1e6]
    for tag, params in CATALOG_1D:
        f = catalog_get(tag, params)
        vals = [mu_estimate(f, f.recession, t, budget=400)["analytic"] for t in grid]
        assert all(vals[i + 1] <= vals[i] + 1e-12 for i in range(len(vals) - 1)), tag
        assert vals[-1] < 1e-3, tag


def test_composite_recession_and_growth():
    f = composite([(2.0, catalog_get("norm")), (1.0, catalog_get("area"))])
    xi = np.array([[[4.0]]])
    x = np.zeros((1, 1))
    assert f(x, xi)[0] == pytest.approx(2 * 4 + np.sqrt(17.0))
    assert f.recession(x, xi)[0] == pytest.approx(3 * 4.0)
    assert f.growth == pytest.approx(3.0)


def test_modulate_scales_by_position():
    f = modulate(catalog_get("norm"), 2.0, [1.0])
    x = np.array([[0.5]])
    xi = np.array([[[2.0]]])
    assert f(x, xi)[0] == pytest.approx(2.5 * 2.0)
    assert f.recession(x, xi)[0] == pytest.approx(2.5 * 2.0)


def test_freeze_x_pins_position():
    f = modulate(catalog_get("norm"), 2.0, [1.0])
    g = freeze_x(f, [0.5])
    x = np.array([[0.9]])  # ignored
    xi = np.array([[[1.0]]])
    assert g(x, xi)[0] == pytest.approx(2.5)


def test_smoothed_surrogate_close_and_true_at_zero():
    f = catalog_get("norm")
    fs = f.smoothed(1e-2)
    xi = np.array([[[1.0]]])
    x = np.zeros((1, 1))
    assert fs(x, xi)[0] == pytest.approx(np.sqrt(1 + 1e-4))
    assert f.smoothed(0.0) is f


def test_unknown_tag_rejected():
    with pytest.raises(ValueError):
        catalog_get("mystery")
    assert len(catalog_tags()) == 6


def test_grad_finite_difference_fallback():
    def fn(x, xi):
        return np.linalg.norm(xi.reshape(len(xi), -1), axis=1) ** 2

    f = Integrand(fn, 1, 2, growth=10.0)
    xi = np.array([[[1.0, -2.0]]])
    g = f.grad_xi(np.zeros((1, 2)), xi)
    assert np.allclose(g, 2 * xi, atol=1e-5)
