import numpy as np
import pytest

from specseg.errors import InputError, SingularRegressorError
from specseg.forecasting import (ForecastConfig, VarModel, evaluate_forecasts, fit_var,
                                 forecast_full_var, forecast_grouped, forecast_pipeline,
                                 forecast_univariate_ar, forecast_var, linear_trend,
                                 rolling_forecasts, wind_like)
from specseg.segmentation import SegmentConfig
from specseg.series import MultivariateSeries


def sim_var1(rng, Phi, T, burn=200, c=None):
    d = Phi.shape[0]
    e = rng.standard_normal((T + burn, d))
    x = np.zeros_like(e)
    for t in range(1, T + burn):
        x[t] = Phi @ x[t - 1] + e[t]
    x = x[burn:]
    return x if c is None else x + c


def test_var1_coefficients():
    Phi = np.array([[0.5, 0.1], [0.0, 0.4]])
    m = fit_var(sim_var1(np.random.default_rng(0), Phi, 20000), max_order=3)
    assert m.order >= 1
    assert np.abs(m.coefs[0] - Phi).max() < 0.02
    assert np.linalg.eigvalsh(m.sigma).min() >= -1e-10
    np.testing.assert_allclose(m.sigma, m.sigma.T)


def test_white_noise_selects_order_zero():
    zero = sum(fit_var(np.random.default_rng(s).standard_normal((300, 2)), 5).order == 0
               for s in range(30))
    assert zero > 15


def test_intercept_recovers_shift(rng):
    x = rng.standard_normal((2000, 2)) + np.array([3.0, -1.0])
    m = fit_var(x, 0)
    se = 1 / np.sqrt(2000)
    assert np.all(np.abs(m.intercept - [3.0, -1.0]) < 3 * se)


def test_coefficient_error_shrinks():
    Phi = np.array([[0.5, 0.1], [0.0, 0.4]])
    med = []
    for T in (1000, 5000, 20000):
        errs = [np.abs(fit_var(sim_var1(np.random.default_rng(s), Phi, T), 1).coefs[0] - Phi).max()
                for s in range(10)]
        med.append(np.median(errs))
    assert med[0] > med[1] > med[2]


def test_collinear_orders_skipped_or_raised(rng):
    z = rng.standard_normal(400)
    x = np.column_stack([z[1:], z[:-1]])
    m = fit_var(x, 3)
    assert m.order <= 1
    with pytest.raises(SingularRegressorError) as info:
        fit_var(x, 3, strict=True)
    assert info.value.order >= 2


def test_fit_var_too_short():
    with pytest.raises(InputError):
        fit_var(np.zeros((10, 3)), 5)


def test_forecast_order_zero():
    m = VarModel(0, np.zeros((0, 2, 2)), np.array([1.5, -2.0]), np.eye(2))
    np.testing.assert_array_equal(forecast_var(m, np.zeros((3, 2)), 4), np.tile([1.5, -2.0], (4, 1)))


def test_forecast_var1_recursion():
    m = VarModel(1, 0.5 * np.eye(2)[None], np.zeros(2), np.eye(2))
    x = np.array([[0.0, 0.0], [2.0, -4.0]])
    np.testing.assert_allclose(forecast_var(m, x, 2), [[1.0, -2.0], [0.5, -1.0]])
    assert forecast_var(m, x, 0).shape == (0, 2)


def test_forecast_needs_history():
    m = VarModel(2, np.zeros((2, 1, 1)), np.zeros(1), np.eye(1))
    with pytest.raises(InputError):
        forecast_var(m, np.zeros((1, 1)), 1)


def test_linear_trend(rng):
    t = np.arange(100)
    x = np.column_stack([2 + 0.5 * t, -1 - 0.1 * t])
    a, b = linear_trend(x)
    np.testing.assert_allclose(a, [2, -1], atol=1e-10)
    np.testing.assert_allclose(b, [0.5, -0.1], atol=1e-12)


def test_evaluate_forecasts_trivial(rng):
    a = rng.standard_normal((10, 2, 3))
    mse, sd = evaluate_forecasts(a, a)
    np.testing.assert_array_equal(mse, 0)
    mse, sd = evaluate_forecasts(a, a + 1)
    np.testing.assert_allclose(mse, 1)
    np.testing.assert_allclose(sd, 0, atol=1e-12)
    with pytest.raises(InputError):
        evaluate_forecasts(a, a[:, :1])


def test_grouped_linear_consistency(rng):
    from specseg.simgen import random_orthogonal
    x = sim_var1(rng, np.diag([0.5, -0.3, 0.7]), 300)
    A = random_orthogonal(3, 0)
    groups = [[0, 1], [2]]
    fc, orders = forecast_grouped(x @ A.T, A, groups, 2, 4)
    stacked, _ = forecast_grouped(x, np.eye(3), groups, 2, 4)
    assert np.abs(fc @ A - stacked).max() < 1e-8
    assert len(orders) == 2


def test_pipeline_singletons_match_univariate(rng):
    x = MultivariateSeries(rng.standard_normal((200, 3)))
    res = forecast_pipeline(x, 2, ForecastConfig(max_order=4))
    assert res.segmentation.m_hat == 3
    L = res.segmentation.mixing
    xc = x.values - x.values.mean(axis=0)
    uni = forecast_univariate_ar(xc @ L, 2, 4)
    np.testing.assert_allclose(res.forecast - x.values.mean(axis=0), uni @ L.T, atol=1e-10)


def test_pipeline_single_group_matches_full_var():
    from specseg.simgen import build_model
    X, _ = build_model("5", 400, seed=0)
    cfg = ForecastConfig(max_order=3)
    res = forecast_pipeline(X, 1, cfg)
    assert res.segmentation.m_hat == 1
    L = res.segmentation.mixing
    mu = X.values.mean(axis=0)
    full = forecast_full_var((X.values - mu) @ L, 1, 3)
    np.testing.assert_allclose(res.forecast, full @ L.T + mu, atol=1e-8)


def test_pipeline_json(rng):
    res = forecast_pipeline(rng.standard_normal((150, 3)), 2)
    d = res.to_dict()
    assert set(d) == {"steps", "forecast", "groups", "per_group_orders"}
    assert d["steps"] == 2 and len(d["forecast"]) == 2
    assert len(d["per_group_orders"]) == len(d["groups"])


def test_rolling_shapes(rng):
    x = rng.standard_normal((60, 2))
    acts, fcs = rolling_forecasts(x, 40, 5, 2, lambda tr, s: np.zeros((s, 2)))
    assert acts.shape == fcs.shape == (5, 2, 2)
    np.testing.assert_array_equal(acts[1, 0], x[41])
    with pytest.raises(InputError):
        rolling_forecasts(x, 50, 20, 2, lambda tr, s: np.zeros((s, 2)))


def test_wind_like_demo():
    x = wind_like(0)
    assert (x.T, x.p) == (156, 7)
    res = forecast_pipeline(x, 2, ForecastConfig(SegmentConfig(), detrend=True))
    assert res.forecast.shape == (2, 7)
    assert np.all(np.isfinite(res.forecast))


@pytest.mark.slow
def test_identity_mixing_parsimony():
    ratios = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        Phi = np.diag(rng.uniform(-0.7, 0.7, 7))
        x = sim_var1(rng, Phi, 157)
        train, test = x[:156], x[156]
        pipe = forecast_pipeline(train, 1, ForecastConfig(max_order=4)).forecast[0]
        full = forecast_full_var(train, 1, 4)[0]
        ratios.append((np.mean((pipe - test) ** 2), np.mean((full - test) ** 2)))
    pipe_mse, full_mse = np.mean(ratios, axis=0)
    assert pipe_mse <= 1.1 * full_mse
