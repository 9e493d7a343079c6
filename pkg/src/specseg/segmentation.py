"""Spectral segmentation of a multivariate series into uncoherent groups.

The pipeline: smooth the spectral matrix, sum its real part over the grid,
rotate the series onto the eigenvectors of that sum, test every pair of
rotated components for zero coherence, FDR-adjust, and read the groups off
the connected components of the rejection graph.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .errors import DegenerateSpectrumError, EigenSolverError, InputError
from .series import FrequencyBand, MultivariateSeries, as_series, demean
from .spectral import KernelSpec, SpectralEstimate, smooth_spectral

__all__ = [
    "FdrMethod",
    "SegmentConfig",
    "EigenSummary",
    "PairTestReport",
    "SegmentationResult",
    "EigengapWarning",
    "accumulate_sx",
    "symmetric_eigen",
    "transform",
    "coherence_statistic",
    "standardize_statistic",
    "null_moments",
    "coherence_pvalue",
    "fdr_adjust",
    "build_adjacency",
    "connected_components",
    "segment",
]

FLOOR_REL = 1e-12
FLOOR_MAX_FRACTION = 0.10


class EigengapWarning(UserWarning):
    """Eigenvalues of different groups are nearly equal."""


class FdrMethod(str, enum.Enum):
    BH = "bh"
    BY = "by"

    @classmethod
    def parse(cls, value) -> "FdrMethod":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown FDR method {value!r}") from None


@dataclass(frozen=True)
class SegmentConfig:
    kernel: KernelSpec = field(default_factory=KernelSpec)
    alpha: float = 0.05
    fdr: FdrMethod = FdrMethod.BH
    band: FrequencyBand | None = None
    eigengap_threshold: float = 1e-6

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise InputError(f"alpha must lie in [0, 1), got {self.alpha}")
        object.__setattr__(self, "fdr", FdrMethod.parse(self.fdr))

    def to_dict(self):
        return {
            "kernel": self.kernel.family.value,
            "q": self.kernel.q,
            "alpha": self.alpha,
            "fdr": self.fdr.value,
            "band": None if self.band is None else self.band.to_list(),
        }


@dataclass(frozen=True)
class EigenSummary:
    s_matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class PairTestReport:
    statistic: np.ndarray
    pvalue_raw: np.ndarray
    pvalue_adjusted: np.ndarray
    alpha: float


@dataclass(frozen=True)
class SegmentationResult:
    eigen: EigenSummary
    report: PairTestReport
    adjacency: np.ndarray
    groups: list
    permutation: np.ndarray
    demixing: np.ndarray
    mixing: np.ndarray
    config: SegmentConfig | None = None

    @property
    def m_hat(self) -> int:
        return len(self.groups)

    def group_blocks(self):
        """Columns of the mixing matrix belonging to each group, in group order."""
        out, start = [], 0
        for g in self.groups:
            out.append(self.mixing[:, start:start + len(g)])
            start += len(g)
        return out

    def latent(self, series) -> np.ndarray:
        """Segmented series ``demixing @ X_t`` (rows are time)."""
        return as_series(series).values @ self.demixing.T

    def to_dict(self):
        cfg = self.config.to_dict() if self.config is not None else None
        return {
            "m_hat": self.m_hat,
            "groups": [[i + 1 for i in g] for g in self.groups],
            "demixing": self.demixing.tolist(),
            "mixing": self.mixing.tolist(),
            "eigenvalues": self.eigen.eigenvalues.tolist(),
            "pvalues_raw": _nan_to_none(self.report.pvalue_raw),
            "pvalues_adjusted": _nan_to_none(self.report.pvalue_adjusted),
            "adjacency": self.adjacency.astype(int).tolist(),
            "config": cfg,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _nan_to_none(a):
    return [[None if np.isnan(v) else float(v) for v in row] for row in a]


def _band_mask(spec: SpectralEstimate, band):
    if band is None:
        return np.ones(spec.grid.count, dtype=bool)
    mask = band.mask(spec.frequencies)
    if not mask.any():
        raise InputError(f"band ({band.lo}, {band.hi}) contains no grid frequencies")
    return mask


def accumulate_sx(spec: SpectralEstimate, band: FrequencyBand | None = None) -> np.ndarray:
    """Sum of the real parts of the spectral matrices over the (band) grid."""
    mask = _band_mask(spec, band)
    S = spec.matrices[mask].real.sum(axis=0)
    return 0.5 * (S + S.T)


def symmetric_eigen(S) -> EigenSummary:
    """Eigendecomposition with descending eigenvalues and a fixed sign convention.

    Each eigenvector is flipped so its largest-magnitude entry is positive,
    ties going to the lowest index.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InputError(f"expected a square matrix, got shape {S.shape}")
    if not np.allclose(S, S.T, rtol=0, atol=1e-8 * max(1.0, np.abs(S).max())):
        raise InputError("matrix is not symmetric")
    try:
        vals, vecs = linalg.eigh(S)
    except linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    lead = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[lead, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    return EigenSummary(S, vals, vecs)


def transform(series, L) -> MultivariateSeries:
    """Rowwise ``L' X_t``."""
    x = as_series(series).values
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != x.shape[1]:
        raise InputError(f"transform of shape {L.shape} does not match p={x.shape[1]}")
    return MultivariateSeries(x @ L)


def _floor_level(spec: SpectralEstimate) -> float:
    diag = np.einsum("wii->wi", spec.matrices).real
    level = diag.sum() / (spec.p * spec.grid.count)
    return FLOOR_REL * max(level, np.finfo(float).tiny)


def _coherence(spec: SpectralEstimate, mask, floor):
    m = spec.matrices[mask]
    diag = np.einsum("wii->wi", m).real
    floored = diag < floor
    d = np.maximum(diag, floor)
    num = np.abs(m) ** 2
    return num / (d[:, :, None] * d[:, None, :]), floored


def coherence_statistic(spec: SpectralEstimate, a: int, b: int,
                        band: FrequencyBand | None = None) -> float:
    """Integrated squared coherence between components ``a`` and ``b``.

    Riemann sum over the positive grid with cell width ``2 pi / T``, doubled
    for the mirror-image negative frequencies.
    """
    if a == b:
        raise InputError("coherence statistic needs two distinct components")
    return float(_all_statistics(spec, band, pairs=[(a, b)])[a, b])


def _all_statistics(spec, band, pairs=None):
    mask = _band_mask(spec, band)
    coh, floored = _coherence(spec, mask, _floor_level(spec))
    p, nw = spec.p, int(mask.sum())
    bad = floored.sum(axis=0) > FLOOR_MAX_FRACTION * nw
    if pairs is None:
        pairs = [(a, b) for a in range(p) for b in range(a + 1, p)]
    stat = np.full((p, p), np.nan)
    width = 2.0 * np.pi / spec.T
    for a, b in pairs:
        if bad[a] or bad[b]:
            raise DegenerateSpectrumError(
                f"diagonal spectrum of component {a if bad[a] else b} is near zero "
                f"on more than {FLOOR_MAX_FRACTION:.0%} of frequencies")
        stat[a, b] = stat[b, a] = 2.0 * width * coh[:, a, b].sum()
    return stat


def null_moments(T: int, kernel: KernelSpec) -> tuple[float, float]:
    """Null mean and standard deviation of ``T sqrt(h) D``.

    With the estimator normalised as in :mod:`specseg.spectral` and ``D``
    integrated over ``[-pi, pi]``, the centring is ``4 pi^2 mu0 / sqrt(h)``
    and the spread ``sqrt(8) pi sigma0``.
    """
    h = kernel.bandwidth(T)
    center = 4.0 * np.pi**2 * kernel.mu0 / math.sqrt(h)
    scale = math.sqrt(8.0) * np.pi * math.sqrt(kernel.sigma0_sq)
    return center, scale


def standardize_statistic(stat, T: int, kernel: KernelSpec):
    """Map ``D`` to its asymptotically standard normal null version."""
    h = kernel.bandwidth(T)
    center, scale = null_moments(T, kernel)
    return (T * math.sqrt(h) * np.asarray(stat, dtype=float) - center) / scale


def coherence_pvalue(stat, T: int, kernel: KernelSpec):
    """One-sided upper-tail p-value of the zero-coherence test."""
    z = standardize_statistic(stat, T, kernel)
    p = stats.norm.sf(z)
    return float(p) if np.ndim(p) == 0 else p


def fdr_adjust(pvals, method="bh") -> np.ndarray:
    """Step-up FDR adjusted p-values (Benjamini-Hochberg or -Yekutieli)."""
    method = FdrMethod.parse(method)
    p = np.asarray(pvals, dtype=float).ravel()
    n = p.size
    if n == 0:
        return p.copy()
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise InputError("p-values must lie in [0, 1]")
    order = np.argsort(p, kind="stable")
    ranked = p[order] * n / np.arange(1, n + 1)
    if method is FdrMethod.BY:
        ranked *= np.sum(1.0 / np.arange(1, n + 1))
    ranked = np.minimum.accumulate(ranked[::-1])[::-1]
    out = np.empty(n)
    out[order] = np.clip(ranked, 0.0, 1.0)
    return out


def build_adjacency(report: PairTestReport) -> np.ndarray:
    """``e_ab = 1`` iff the adjusted p-value is at most alpha."""
    adj = report.pvalue_adjusted <= report.alpha
    adj = np.where(np.isnan(report.pvalue_adjusted), False, adj)
    adj = adj | adj.T
    np.fill_diagonal(adj, False)
    return adj.astype(np.int8)


def connected_components(E) -> list[list[int]]:
    """Connected components (0-based), ordered by smallest member."""
    E = np.asarray(E)
    p = E.shape[0]
    seen = np.zeros(p, dtype=bool)
    groups = []
    for start in range(p):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in np.flatnonzero(E[v]):
                if not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        groups.append(sorted(comp))
    return groups


def _pair_tests(spec_y: SpectralEstimate, config: SegmentConfig) -> PairTestReport:
    p = spec_y.p
    stat = _all_statistics(spec_y, config.band)
    iu = np.triu_indices(p, 1)
    raw = np.full((p, p), np.nan)
    adj = np.full((p, p), np.nan)
    if iu[0].size:
        pr = np.atleast_1d(coherence_pvalue(stat[iu], spec_y.T, config.kernel))
        pa = fdr_adjust(pr, config.fdr)
        raw[iu], adj[iu] = pr, pa
        raw.T[iu], adj.T[iu] = pr, pa
    return PairTestReport(stat, raw, adj, config.alpha)


def _cross_group_gap(eigenvalues, groups):
    label = np.empty(len(eigenvalues), dtype=int)
    for k, g in enumerate(groups):
        label[g] = k
    diff = np.abs(eigenvalues[:, None] - eigenvalues[None, :])
    cross = label[:, None] != label[None, :]
    return float(diff[cross].min()) if cross.any() else math.inf


def segment(series, config: SegmentConfig | None = None) -> SegmentationResult:
    """Estimate the demixing matrix and the group structure."""
    config = config or SegmentConfig()
    x = as_series(series)
    if x.T < 2 * x.p:
        raise InputError(f"need T >= 2p, got T={x.T}, p={x.p}")
    xc = demean(x)
    spec_x = smooth_spectral(xc, config.kernel)
    eig = symmetric_eigen(accumulate_sx(spec_x, config.band))
    L = eig.eigenvectors
    spec_y = spec_x.rotated(L)
    report = _pair_tests(spec_y, config)
    adj = build_adjacency(report)
    groups = connected_components(adj)

    perm = np.array([i for g in groups for i in g], dtype=int)
    mixing = L[:, perm]
    demixing = mixing.T.copy()

    gap = _cross_group_gap(eig.eigenvalues, groups)
    scale = max(abs(eig.eigenvalues[0]), np.finfo(float).tiny)
    if gap / scale < config.eigengap_threshold:
        warnings.warn(f"relative eigengap between groups is {gap / scale:.3g}",
                      EigengapWarning, stacklevel=2)
    return SegmentationResult(eig, report, adj, groups, perm, demixing, mixing, config)
