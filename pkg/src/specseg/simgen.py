"""Simulation of latent segmented models and the replication study harness."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import InputError, SpecSegError
from .metrics import evaluate_segmentation
from .segmentation import SegmentConfig, segment
from .series import MultivariateSeries

__all__ = [
    "ArmaSpec",
    "Component",
    "LatentModelSpec",
    "PRESETS",
    "DEFAULT_LENGTHS",
    "DEFAULT_BURN_IN",
    "simulate_arma",
    "random_orthogonal",
    "preset",
    "build_model",
    "latent_series",
    "derive_seed",
    "StudyTable",
    "run_study",
]

DEFAULT_BURN_IN = 500


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class ArmaSpec:
    """``z_t = sum ar_i z_{t-i} + e_t + sum ma_j e_{t-j}``, ``e_t ~ N(0, sd^2)``."""

    ar: tuple = ()
    ma: tuple = ()
    innovation_sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        object.__setattr__(self, "ma", tuple(float(m) for m in self.ma))
        if self.innovation_sd < 0:
            raise InputError("innovation_sd must be nonnegative")
        if not self.is_stationary():
            raise InputError(f"AR polynomial {self.ar} is not stationary")

    def is_stationary(self) -> bool:
        if not self.ar:
            return True
        # roots of 1 - a1 z - ... - aq z^q, highest power first for np.roots
        coeffs = np.r_[-np.asarray(self.ar)[::-1], 1.0]
        roots = np.roots(coeffs)
        return bool(np.all(np.abs(roots) > 1.0 + 1e-8))


def simulate_arma(spec: ArmaSpec, T: int, burn_in: int = DEFAULT_BURN_IN,
                  seed=None) -> np.ndarray:
    """Simulate ``T`` values of a Gaussian ARMA process after a burn-in."""
    if burn_in < 0:
        raise InputError("burn_in must be nonnegative")
    if not spec.is_stationary():
        raise InputError(f"AR polynomial {spec.ar} is not stationary")
    rng = _rng(seed)
    e = rng.standard_normal(T + burn_in) * spec.innovation_sd
    z = signal.lfilter(np.r_[1.0, spec.ma], np.r_[1.0, -np.asarray(spec.ar)], e)
    return z[burn_in:]


def random_orthogonal(p: int, seed=None) -> np.ndarray:
    """Haar-distributed ``p x p`` orthogonal matrix.

    QR of a Gaussian matrix with the columns of Q rescaled by the signs of
    diag(R), which makes the factorisation unique and the law Haar.
    """
    if p < 1:
        raise InputError("dimension must be positive")
    rng = _rng(seed)
    Z = rng.standard_normal((p, p))
    Q, R = np.linalg.qr(Z)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


@dataclass(frozen=True)
class Component:
    """One latent coordinate: ``weight * z_{source, t + offset}``."""

    source: int
    offset: int = 0
    weight: float = 1.0


@dataclass(frozen=True)
class LatentModelSpec:
    """Latent model ``X_t = A Y_t`` with grouped ARMA-driven coordinates.

    ``components`` are listed group by group, in the order given by
    ``group_sizes``. Coordinates of different groups must draw on different
    sources so that the groups are uncoherent.
    """

    group_sizes: tuple
    sources: tuple
    components: tuple
    mixing: np.ndarray | None = None
    seed: int | None = None
    name: str = "custom"

    def __post_init__(self):
        sizes = tuple(int(d) for d in self.group_sizes)
        object.__setattr__(self, "group_sizes", sizes)
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "components", tuple(self.components))
        if any(d < 1 for d in sizes) or sum(sizes) != len(self.components):
            raise InputError("group sizes must be positive and sum to the number of components")
        bounds = np.cumsum((0,) + sizes)
        used = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            srcs = {c.source for c in self.components[a:b]}
            if any(s < 0 or s >= len(self.sources) for s in srcs):
                raise InputError("component refers to an unknown source")
            used.append(srcs)
        for i in range(len(used)):
            for j in range(i + 1, len(used)):
                if used[i] & used[j]:
                    raise InputError("groups must not share innovation sources")
        if self.mixing is not None:
            A = np.asarray(self.mixing, dtype=float)
            if A.shape != (self.p, self.p) or np.abs(A.T @ A - np.eye(self.p)).max() > 1e-10:
                raise InputError("mixing matrix must be p x p orthogonal")
            object.__setattr__(self, "mixing", A)

    @property
    def p(self) -> int:
        return len(self.components)

    @property
    def m(self) -> int:
        return len(self.group_sizes)

    def blocks(self):
        if self.mixing is None:
            raise InputError("model has no mixing matrix")
        bounds = np.cumsum((0,) + self.group_sizes)
        return [self.mixing[:, a:b] for a, b in zip(bounds[:-1], bounds[1:])]

    def groups(self):
        bounds = np.cumsum((0,) + self.group_sizes)
        return [list(range(a, b)) for a, b in zip(bounds[:-1], bounds[1:])]

    def with_mixing(self, A, seed=None) -> "LatentModelSpec":
        return LatentModelSpec(self.group_sizes, self.sources, self.components,
                               A, seed, self.name)


def _lead_lag(source, n, weights=None):
    weights = weights or [1.0] * n
    return [Component(source, k, w) for k, w in zip(range(n), weights)]


def _preset_table():
    a1 = ArmaSpec((0.5, 0.3), (-0.9, 0.3, 1.2, 1.3), 1.0)
    a2 = ArmaSpec((0.8, -0.5), (1.0, 0.8, 1.8), math.sqrt(3.0))
    a3 = ArmaSpec((-0.7, -0.5), (-1.0, -0.8), math.sqrt(5.0))
    m1 = LatentModelSpec((3, 2, 1), (a1, a2, a3),
                         _lead_lag(0, 3) + _lead_lag(1, 2) + _lead_lag(2, 1),
                         name="1")

    b1 = ArmaSpec((0.9,), (0.8, -0.2))
    b2 = ArmaSpec((1.25, -0.75, 0.3), ())
    b3 = ArmaSpec((), (1.0, -1.0, -0.8))
    m2 = LatentModelSpec((3, 2, 1), (b1, b2, b3),
                         _lead_lag(0, 3) + _lead_lag(1, 2) + _lead_lag(2, 1),
                         name="2")

    c1 = ArmaSpec((0.45,), (), math.sqrt(3.0))
    c2 = ArmaSpec((0.8, -0.5), (1.0, 0.8, 1.8), math.sqrt(5.0))
    c3 = ArmaSpec((-0.7, -0.5), (-1.0, -0.8), 1.0)
    m3 = LatentModelSpec((4, 3, 2), (c1, c2, c3),
                         _lead_lag(0, 4, [1.0, 0.7, -0.5, 0.2]) + _lead_lag(1, 3)
                         + _lead_lag(2, 2, [1.0, -0.9]),
                         name="3")

    d1 = ArmaSpec((-0.4, 0.5), (1.0, 0.8, 1.5, 1.8))
    d2 = ArmaSpec((0.85, -0.3), (1.0, 0.5, 1.2))
    d3 = ArmaSpec((0.9, -0.6), (0.5,))
    m4 = LatentModelSpec((4, 3, 2), (d1, d2, d3),
                         _lead_lag(0, 4) + _lead_lag(1, 3) + _lead_lag(2, 2),
                         name="4")

    e1 = ArmaSpec((0.75,), (1.0, -0.7, -0.6))
    m5 = LatentModelSpec((7,), (e1,), _lead_lag(0, 7), name="5")
    return {"1": m1, "2": m2, "3": m3, "4": m4, "5": m5}


PRESETS = _preset_table()

DEFAULT_LENGTHS = {
    "1": (200, 500, 1000),
    "2": (200, 500, 1000),
    "3": (200, 500, 1000),
    "4": (500, 1000, 2000),
    "5": (200, 500, 1000),
}


def preset(name) -> LatentModelSpec:
    key = str(name).lower().removeprefix("model").strip()
    try:
        return PRESETS[key]
    except KeyError:
        raise InputError(f"unknown model preset {name!r}; choose 1-5") from None


def latent_series(spec: LatentModelSpec, T: int, seed=None,
                  burn_in: int = DEFAULT_BURN_IN) -> np.ndarray:
    """Simulate the latent ``T x p`` series ``Y``.

    Each source is simulated once, long enough for every lead, and each
    coordinate is a shifted (and weighted) slice of that single path.
    """
    rng = _rng(seed)
    lead = [0] * len(spec.sources)
    for c in spec.components:
        lead[c.source] = max(lead[c.source], c.offset)
    paths = [simulate_arma(s, T + lead[i], burn_in, rng)
             for i, s in enumerate(spec.sources)]
    Y = np.empty((T, spec.p))
    for k, c in enumerate(spec.components):
        Y[:, k] = c.weight * paths[c.source][c.offset:c.offset + T]
    return Y


def build_model(model, T: int, seed=None, burn_in: int = DEFAULT_BURN_IN):
    """Simulate ``X = A Y`` from a preset name or a custom spec.

    A fresh Haar mixing matrix is drawn unless the custom spec carries one.
    Returns ``(X, truth)`` where ``truth`` records the mixing matrix used.
    """
    spec = model if isinstance(model, LatentModelSpec) else preset(model)
    if T < 2 * spec.p:
        raise InputError(f"need T >= 2p, got T={T}, p={spec.p}")
    rng = _rng(seed)
    Y = latent_series(spec, T, rng, burn_in)
    A = spec.mixing if spec.mixing is not None else random_orthogonal(spec.p, rng)
    truth = spec.with_mixing(A, seed if isinstance(seed, (int, np.integer)) else None)
    return MultivariateSeries(Y @ A.T), truth


def derive_seed(master: int, *key: int) -> int:
    """Deterministic 63-bit seed for a replication, independent of run order."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


STUDY_COLUMNS = ("model", "T", "rep", "seed", "correct", "m_hat", "max_m2", "avg_m2", "note")
SUMMARY_COLUMNS = ("model", "T", "pct_correct", "mean_max_m2", "mean_avg_m2", "reps")


@dataclass
class StudyTable:
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)

    def for_length(self, T):
        return [r for r in self.rows if r["T"] == T]

    def summary_for(self, T):
        return next(s for s in self.summary if s["T"] == T)

    @staticmethod
    def _csv(rows, cols):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in cols})
        return buf.getvalue()

    def rows_csv(self) -> str:
        return self._csv(self.rows, STUDY_COLUMNS)

    def summary_csv(self) -> str:
        return self._csv(self.summary, SUMMARY_COLUMNS)


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return "" if v is None else v


def _one_rep(model_name, spec, T, rep, seed, config, burn_in):
    row = {"model": model_name, "T": T, "rep": rep, "seed": seed,
           "correct": False, "m_hat": None, "max_m2": math.nan,
           "avg_m2": math.nan, "note": ""}
    try:
        X, truth = build_model(spec, T, seed, burn_in)
        res = segment(X, config)
        rep_ = evaluate_segmentation(res, truth)
        row.update(correct=rep_.correct, m_hat=rep_.m_hat,
                   max_m2=rep_.max_m2, avg_m2=rep_.avg_m2)
    except (SpecSegError, np.linalg.LinAlgError) as exc:
        row["note"] = f"{type(exc).__name__}: {exc}"
    return row


def _summarize(model_name, T, rows):
    ok = [r for r in rows if r["correct"]]
    def mean(key, rs):
        return float(np.mean([r[key] for r in rs])) if rs else math.nan
    def median(key, rs):
        return float(np.median([r[key] for r in rs])) if rs else math.nan
    valid = [r for r in rows if not math.isnan(r["avg_m2"])]
    return {
        "model": model_name, "T": T, "reps": len(rows),
        "pct_correct": 100.0 * len(ok) / len(rows),
        "mean_max_m2": mean("max_m2", ok),
        "mean_avg_m2": mean("avg_m2", ok),
        "median_avg_m2": median("avg_m2", ok),
        "uncond_mean_avg_m2": mean("avg_m2", valid),
        "uncond_median_avg_m2": median("avg_m2", valid),
    }


def run_study(model, lengths, reps: int, config: SegmentConfig | None = None,
              seed: int = 0, threads: int = 1, burn_in: int = DEFAULT_BURN_IN) -> StudyTable:
    """Replicate build -> segment -> evaluate over lengths and replications.

    Replication ``(T, rep)`` uses ``derive_seed(seed, T, rep)``, so the table
    is identical for any thread count.
    """
    if reps < 1:
        raise InputError("reps must be at least 1")
    config = config or SegmentConfig()
    spec = model if isinstance(model, LatentModelSpec) else preset(model)
    name = spec.name
    jobs = [(T, r, derive_seed(seed, T, r)) for T in lengths for r in range(reps)]
    run = lambda j: _one_rep(name, spec, j[0], j[1], j[2], config, burn_in)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]
    table = StudyTable(rows=rows)
    for T in lengths:
        table.summary.append(_summarize(name, T, table.for_length(T)))
    return table
