"""Segmentation-driven VAR forecasting, baselines and error summaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, SingularRegressorError
from .segmentation import SegmentConfig, SegmentationResult, segment
from .series import MultivariateSeries, as_series
from .simgen import random_orthogonal

__all__ = [
    "VarModel",
    "ForecastConfig",
    "ForecastResult",
    "fit_var",
    "forecast_var",
    "forecast_grouped",
    "forecast_pipeline",
    "forecast_full_var",
    "forecast_univariate_ar",
    "rolling_forecasts",
    "evaluate_forecasts",
    "linear_trend",
    "wind_like",
]

DEFAULT_MAX_ORDER = 10


@dataclass(frozen=True)
class VarModel:
    """``x_t = c + sum_k Phi_k x_{t-k} + u_t`` with ``Cov(u_t) = sigma``."""

    order: int
    coefs: np.ndarray
    intercept: np.ndarray
    sigma: np.ndarray
    aic: float = float("nan")

    @property
    def d(self) -> int:
        return self.intercept.size


def _design(x, order, start):
    n = x.shape[0] - start
    cols = [np.ones((n, 1))]
    for k in range(1, order + 1):
        cols.append(x[start - k:x.shape[0] - k])
    return np.hstack(cols), x[start:]


def _ls(x, order, start):
    Z, Y = _design(x, order, start)
    B, _, rank, _ = np.linalg.lstsq(Z, Y, rcond=None)
    if rank < Z.shape[1]:
        raise SingularRegressorError(order)
    resid = Y - Z @ B
    sigma = resid.T @ resid / Y.shape[0]
    return B, 0.5 * (sigma + sigma.T)


def _aic(sigma, n_params, n):
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        return -np.inf
    return logdet + 2.0 * n_params / n


def fit_var(series, max_order: int = DEFAULT_MAX_ORDER, strict: bool = False) -> VarModel:
    """Least-squares VAR with the order chosen by AIC.

    All candidate orders are compared on the same sample (the last
    ``T - max_order`` observations); the chosen order is then refitted on
    every usable observation. Orders whose lagged design is rank deficient
    (exactly collinear lags, as in deterministic lead-lag data) are skipped,
    or raise :class:`SingularRegressorError` when ``strict``.
    """
    x = as_series(series).values
    T, d = x.shape
    if max_order < 0:
        raise InputError("max_order must be nonnegative")
    if T <= (max_order + 1) * d + 1:
        raise InputError(f"T={T} too short for max_order={max_order} with d={d}")
    best_order, best_aic = None, np.inf
    n = T - max_order
    for order in range(max_order + 1):
        try:
            _, sigma = _ls(x, order, max_order)
        except SingularRegressorError:
            if strict:
                raise
            continue
        aic = _aic(sigma, order * d * d + d, n)
        if best_order is None or aic < best_aic:
            best_order, best_aic = order, aic
    if best_order is None:
        raise SingularRegressorError(0)
    B, sigma = _ls(x, best_order, best_order)
    coefs = B[1:].reshape(best_order, d, d).transpose(0, 2, 1)
    return VarModel(best_order, coefs, B[0].copy(), sigma, float(best_aic))


def forecast_var(model: VarModel, history, steps: int) -> np.ndarray:
    """Iterated plug-in forecasts, ``steps x d``."""
    h = np.asarray(history, dtype=float)
    if h.ndim == 1:
        h = h[:, None]
    if steps < 0:
        raise InputError("steps must be nonnegative")
    if h.shape[0] < model.order:
        raise InputError(f"need at least {model.order} past values, got {h.shape[0]}")
    buf = list(h[h.shape[0] - model.order:]) if model.order else []
    out = np.empty((steps, model.d))
    for s in range(steps):
        nxt = model.intercept.copy()
        for k in range(1, model.order + 1):
            nxt += model.coefs[k - 1] @ buf[-k]
        out[s] = nxt
        buf.append(nxt)
    return out


def linear_trend(x) -> tuple[np.ndarray, np.ndarray]:
    """Per-column OLS line; returns ``(intercepts, slopes)`` against t = 0..T-1."""
    x = np.asarray(x, dtype=float)
    t = np.arange(x.shape[0], dtype=float)
    Z = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(Z, x, rcond=None)
    return coef[0], coef[1]


@dataclass(frozen=True)
class ForecastConfig:
    segment: SegmentConfig = field(default_factory=SegmentConfig)
    max_order: int = DEFAULT_MAX_ORDER
    detrend: bool = False


@dataclass(frozen=True)
class ForecastResult:
    forecast: np.ndarray
    groups: list
    per_group_orders: list
    segmentation: SegmentationResult | None = None

    def to_dict(self):
        return {
            "steps": int(self.forecast.shape[0]),
            "forecast": self.forecast.tolist(),
            "groups": [[i + 1 for i in g] for g in self.groups],
            "per_group_orders": list(self.per_group_orders),
        }


def _split_level(x, detrend, steps):
    T = x.shape[0]
    if detrend:
        a, b = linear_trend(x)
        fitted = a + np.outer(np.arange(T), b)
        ahead = a + np.outer(np.arange(T, T + steps), b)
        return x - fitted, ahead
    mu = x.mean(axis=0)
    return x - mu, np.tile(mu, (steps, 1))


def _group_max_order(T, d, max_order):
    # keep the regression overdetermined for short samples
    feasible = (T - 2) // d - 1
    return max(0, min(max_order, feasible))


def forecast_grouped(x, mixing, groups, steps: int,
                     max_order: int = DEFAULT_MAX_ORDER):
    """Forecast a centred series through a given orthogonal mixing and grouping.

    ``mixing`` columns are ordered group by group as listed in ``groups``
    (lengths only matter). Returns ``(forecast, orders)``.
    """
    x = np.asarray(x, dtype=float)
    mixing = np.asarray(mixing, dtype=float)
    y = x @ mixing
    T = y.shape[0]
    parts, orders, start = [], [], 0
    for g in groups:
        block = y[:, start:start + len(g)]
        model = fit_var(block, _group_max_order(T, block.shape[1], max_order))
        parts.append(forecast_var(model, block, steps))
        orders.append(model.order)
        start += len(g)
    y_fc = np.hstack(parts) if parts else np.empty((steps, 0))
    return y_fc @ mixing.T, orders


def forecast_pipeline(series, steps: int, config: ForecastConfig | None = None) -> ForecastResult:
    """Segment, fit one VAR per group, forecast and remix.

    The mean (or a per-column linear trend when ``config.detrend``) is
    removed first and added back to the forecasts.
    """
    config = config or ForecastConfig()
    x = as_series(series).values
    centred, level = _split_level(x, config.detrend, steps)
    seg = segment(MultivariateSeries(centred), config.segment)
    fc, orders = forecast_grouped(centred, seg.mixing, seg.groups, steps, config.max_order)
    return ForecastResult(fc + level, seg.groups, orders, seg)


def forecast_full_var(series, steps: int, max_order: int = DEFAULT_MAX_ORDER,
                      detrend: bool = False) -> np.ndarray:
    x = as_series(series).values
    centred, level = _split_level(x, detrend, steps)
    p = x.shape[1]
    fc, _ = forecast_grouped(centred, np.eye(p), [list(range(p))], steps, max_order)
    return fc + level


def forecast_univariate_ar(series, steps: int, max_order: int = DEFAULT_MAX_ORDER,
                           detrend: bool = False) -> np.ndarray:
    x = as_series(series).values
    centred, level = _split_level(x, detrend, steps)
    p = x.shape[1]
    fc, _ = forecast_grouped(centred, np.eye(p), [[i] for i in range(p)], steps, max_order)
    return fc + level


def rolling_forecasts(series, train_length: int, n_windows: int, steps: int, forecaster):
    """Apply ``forecaster(train, steps)`` on consecutive windows.

    Window ``w`` trains on rows ``w .. w + train_length - 1`` and is scored on
    the following ``steps`` rows. Returns ``(actuals, forecasts)`` with shape
    ``(n_windows, steps, p)``.
    """
    x = as_series(series).values
    need = train_length + n_windows - 1 + steps
    if x.shape[0] < need:
        raise InputError(f"series has {x.shape[0]} rows, rolling evaluation needs {need}")
    acts, fcs = [], []
    for w in range(n_windows):
        train = x[w:w + train_length]
        fcs.append(np.asarray(forecaster(train, steps)))
        acts.append(x[w + train_length:w + train_length + steps])
    return np.stack(acts), np.stack(fcs)


def evaluate_forecasts(actuals, forecasts) -> tuple[np.ndarray, np.ndarray]:
    """Per-step MSE over windows and components, and its spread across windows.

    Inputs have shape ``(windows, steps, p)``; the spread is the standard
    deviation of the per-window mean squared errors.
    """
    a = np.asarray(actuals, dtype=float)
    f = np.asarray(forecasts, dtype=float)
    if a.shape != f.shape:
        raise InputError(f"shape mismatch {a.shape} vs {f.shape}")
    if a.ndim == 2:
        a, f = a[:, :, None], f[:, :, None]
    per_window = ((a - f) ** 2).mean(axis=2)
    return per_window.mean(axis=0), per_window.std(axis=0)


def wind_like(seed, T: int = 156, trend_scale: float = 0.01) -> MultivariateSeries:
    """Synthetic 7-site series: linear trends plus a mixed block VAR(1).

    Latent groups are (1, 2), (3, 4), (5), (6), (7); the stationary part is
    mixed by a Haar-random orthogonal matrix.
    """
    rng = np.random.default_rng(seed)
    blocks = [
        np.array([[0.6, 0.3], [0.0, 0.5]]),
        np.array([[0.4, -0.3], [0.2, 0.5]]),
        np.array([[0.7]]),
        np.array([[-0.5]]),
        np.array([[0.3]]),
    ]
    p = sum(b.shape[0] for b in blocks)
    Phi = np.zeros((p, p))
    i = 0
    for b in blocks:
        k = b.shape[0]
        Phi[i:i + k, i:i + k] = b
        i += k
    burn = 200
    y = np.zeros((T + burn, p))
    e = rng.standard_normal((T + burn, p))
    for t in range(1, T + burn):
        y[t] = Phi @ y[t - 1] + e[t]
    A = random_orthogonal(p, rng)
    level = rng.uniform(5.0, 10.0, p)
    slope = rng.normal(0.0, trend_scale, p)
    trend = level + np.outer(np.arange(T), slope)
    return MultivariateSeries(trend + y[burn:] @ A.T)
