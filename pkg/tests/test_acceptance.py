"""Acceptance gate: one test per criterion, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""

import functools
import math
import time

import numpy as np
import pytest

from specseg.forecasting import (evaluate_forecasts, forecast_grouped,
                                 forecast_pipeline, rolling_forecasts)
from specseg.metrics import subspace_distance, subspace_distance_sq
from specseg.segmentation import coherence_pvalue, coherence_statistic, segment
from specseg.series import MultivariateSeries, demean
from specseg.simgen import (ArmaSpec, build_model, derive_seed, random_orthogonal,
                            run_study, simulate_arma)
from specseg.spectral import KernelSpec, _constants, kernel_constants, smooth_spectral

from oracles import brute_force_smooth, sigma0_sq_gl, sigma0_sq_simpson

MASTER_SEED = 20240611
REPS = 200
LENGTHS = (200, 500, 1000)
KERNEL = KernelSpec("bp", 0.15)

pytestmark = pytest.mark.acceptance


@functools.lru_cache(maxsize=None)
def study(model, lengths=LENGTHS):
    start = time.perf_counter()
    table = run_study(model, list(lengths), REPS, seed=MASTER_SEED)
    return table, time.perf_counter() - start


def fmt(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.4g}"


def test_c01_kernel_constants(acceptance):
    _constants.cache_clear()
    start = time.perf_counter()
    mu0, s2 = kernel_constants("bp")
    elapsed = time.perf_counter() - start
    gl, simp = sigma0_sq_gl(), sigma0_sq_simpson()
    ok = (abs(mu0 - 3 / (5 * math.pi)) < 1e-10 and abs(gl - simp) < 1e-8
          and abs(s2 - gl) < 1e-8 and elapsed < 1.0)
    acceptance(1, ok, f"mu0 err {abs(mu0 - 3 / (5 * math.pi)):.1e}, sigma0^2 GL-Simpson "
                      f"{abs(gl - simp):.1e}, {elapsed:.2f}s")
    assert ok


def test_c02_fft_matches_brute_force(acceptance):
    rng = np.random.default_rng(MASTER_SEED)
    start = time.perf_counter()
    worst = 0.0
    for i in range(20):
        T = (16, 64, 256)[i % 3]
        p = (1, 2, 4)[(i // 3) % 3]
        x = demean(rng.standard_normal((T, p))).values
        fast = smooth_spectral(x, KERNEL).matrices
        worst = max(worst, float(np.abs(fast - brute_force_smooth(x, KERNEL.q)).max()))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 30
    acceptance(2, ok, f"max abs diff {worst:.1e} over 20 series, {elapsed:.1f}s")
    assert ok


def pair_rejects(x, T):
    est = smooth_spectral(demean(x), KERNEL)
    return coherence_pvalue(coherence_statistic(est, 0, 1), T, KERNEL) <= 0.05


def test_c03_null_calibration(acceptance):
    start = time.perf_counter()
    T, rejected = 2000, 0
    for rep in range(500):
        rng = np.random.default_rng(derive_seed(MASTER_SEED, 3, rep))
        res = segment(MultivariateSeries(rng.standard_normal((T, 2))))
        rejected += res.report.pvalue_raw[0, 1] <= 0.05
    rate = rejected / 500
    elapsed = time.perf_counter() - start
    ok = 0.01 <= rate <= 0.12 and elapsed < 300
    acceptance(3, ok, f"null rejection rate {rate:.3f} at alpha 0.05, {elapsed:.0f}s")
    assert ok


def test_c04_power_consistency(acceptance):
    start = time.perf_counter()
    source = ArmaSpec((0.5,), (), 1.0)
    rates = []
    for T in (200, 500, 2000):
        hits = 0
        for rep in range(200):
            z = simulate_arma(source, T + 1, seed=derive_seed(MASTER_SEED, 4, T, rep))
            hits += pair_rejects(MultivariateSeries(np.column_stack([z[:-1], z[1:]])), T)
        rates.append(hits / 200)
    elapsed = time.perf_counter() - start
    ok = rates[2] >= 0.95 and rates[0] <= rates[1] <= rates[2] and elapsed < 300
    acceptance(4, ok, f"rejection rates {rates} at T=200/500/2000, {elapsed:.0f}s")
    assert ok


def test_c05_model1(acceptance):
    table, elapsed = study("1")
    s = table.summary_for(1000)
    ok = (s["mean_avg_m2"] <= 0.03 and s["mean_max_m2"] <= 0.05
          and s["pct_correct"] >= 75 and elapsed < 900)
    acceptance(5, ok, f"T=1000 correct {s['pct_correct']:.1f}%, cond avg M2 "
                      f"{fmt(s['mean_avg_m2'])}, cond max M2 {fmt(s['mean_max_m2'])}")
    assert ok


def test_c06_model2(acceptance):
    table, elapsed = study("2")
    s200, s1000 = table.summary_for(200), table.summary_for(1000)
    ok = (s1000["mean_avg_m2"] <= 0.015 and s1000["pct_correct"] > s200["pct_correct"]
          and elapsed < 900)
    acceptance(6, ok, f"cond avg M2 {fmt(s1000['mean_avg_m2'])} at T=1000, correct "
                      f"{s200['pct_correct']:.1f}% (T=200) vs {s1000['pct_correct']:.1f}% (T=1000)")
    assert ok


def test_c07_model3(acceptance):
    table, elapsed = study("3")
    s = table.summary_for(500)
    ok = s["mean_avg_m2"] <= 0.02 and elapsed < 900
    acceptance(7, ok, f"T=500 cond avg M2 {fmt(s['mean_avg_m2'])} "
                      f"from {s['pct_correct'] * REPS / 100:.0f} correct runs")
    assert ok


def test_c08_rate_direction(acceptance):
    parts, ok = [], True
    for model in "123":
        table, _ = study(model)
        med = [table.summary_for(T)["median_avg_m2"] for T in LENGTHS]
        ok &= all(a > b for a, b in zip(med, med[1:]))
        parts.append(f"M{model} " + "/".join(fmt(v) for v in med))
    acceptance(8, ok, "cond median avg M2 at T=200/500/1000: " + "; ".join(parts))
    assert ok


def test_c09_model5(acceptance):
    table, _ = study("5", (1000,))
    frac = np.mean([r["m_hat"] == 1 for r in table.rows])
    ok = frac >= 0.60
    acceptance(9, ok, f"fraction with m_hat=1: {frac:.3f}")
    assert ok


def test_c10_metric_identities(acceptance):
    start = time.perf_counter()
    worst_self = worst_orth = worst_rot = 0.0
    for i in range(100):
        rng = np.random.default_rng(derive_seed(MASTER_SEED, 10, i))
        p = int(rng.integers(2, 10))
        r = int(rng.integers(1, p // 2 + 1))
        Q = random_orthogonal(p, rng)
        B1, B2 = Q[:, :r], Q[:, r:2 * r]
        worst_self = max(worst_self, subspace_distance_sq(B1, B1))
        worst_orth = max(worst_orth, abs(subspace_distance(B1, B2) - 1))
        worst_rot = max(worst_rot, subspace_distance_sq(B1, B1 @ random_orthogonal(r, rng)))
    elapsed = time.perf_counter() - start
    ok = max(worst_self, worst_orth, worst_rot) <= 1e-10 and elapsed < 10
    acceptance(10, ok, f"M(B,B)^2 {worst_self:.1e}, |M_orth-1| {worst_orth:.1e}, "
                       f"rotation {worst_rot:.1e}, {elapsed:.2f}s")
    assert ok


def test_c11_scale_equivariance(acceptance):
    same_groups = same_adj = same_demix = 0
    worst = 0.0
    for i in range(50):
        X, _ = build_model("1", 500, derive_seed(MASTER_SEED, 11, i))
        a = segment(X)
        b = segment(MultivariateSeries(X.values * 3.7))
        same_groups += a.groups == b.groups
        same_adj += np.array_equal(a.adjacency, b.adjacency)
        same_demix += np.array_equal(a.demixing, b.demixing)
        if a.demixing.shape == b.demixing.shape:
            worst = max(worst, float(np.abs(a.demixing - b.demixing).max()))
    ok = same_groups == same_adj == same_demix == 50
    acceptance(11, ok, f"identical groups {same_groups}/50, adjacency {same_adj}/50, "
                       f"demixing bitwise {same_demix}/50 (max abs diff {worst:.1e})")
    assert ok


def test_c12_forecast_oracle(acceptance):
    train, windows = 500, 100
    X, truth = build_model("1", train + windows, derive_seed(MASTER_SEED, 12))

    def pipeline(x, steps):
        return forecast_pipeline(x, steps).forecast

    def oracle(x, steps):
        mu = x.mean(axis=0)
        fc, _ = forecast_grouped(x - mu, truth.mixing, truth.groups(), steps)
        return fc + mu

    mse_pipe, _ = evaluate_forecasts(*rolling_forecasts(X, train, windows, 1, pipeline))
    mse_orac, _ = evaluate_forecasts(*rolling_forecasts(X, train, windows, 1, oracle))
    ratio = float(mse_pipe[0] / mse_orac[0])
    ok = abs(ratio - 1) <= 0.10
    acceptance(12, ok, f"1-step MSE pipeline {mse_pipe[0]:.4g} vs oracle {mse_orac[0]:.4g} "
                       f"(ratio {ratio:.3f})")
    assert ok
