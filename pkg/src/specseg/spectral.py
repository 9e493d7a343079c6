"""Periodogram, kernel-smoothed spectral matrices and kernel constants.

Conventions
-----------
The DFT is ``J(w) = (2 pi T)^(-1/2) sum_{t=1}^T X_t exp(-i t w)`` and the
periodogram is ``I(w) = J(w) J(w)^*``. The smoothed estimate at ``w`` is

    f(w) = (2 pi / T) sum_j K_h(w - w_j) I(w_j),   K_h(x) = K(x / h) / h,

summed over one full period of Fourier frequencies ``w_j = 2 pi j / T`` with
``w - w_j`` wrapped into ``[-pi, pi)``. The ``2 pi / T`` weight makes the
estimate of white noise with variance ``s2`` flat at ``s2 / (2 pi)``.
"""

from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import InputError
from .series import FrequencyGrid, as_series, fourier_grid

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "SpectralEstimate",
    "kernel_value",
    "kernel_constants",
    "dft",
    "periodogram",
    "smooth_spectral",
    "smoothed_at",
    "DEFAULT_Q",
]

DEFAULT_Q = 0.15
Q_MIN, Q_MAX = 2.0 / 9.0, 0.5


class KernelFamily(str, enum.Enum):
    BARTLETT_PRIESTLEY = "bp"
    PARZEN = "parzen"

    @classmethod
    def parse(cls, value) -> "KernelFamily":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "bp": cls.BARTLETT_PRIESTLEY,
            "bartlett_priestley": cls.BARTLETT_PRIESTLEY,
            "bartlettpriestley": cls.BARTLETT_PRIESTLEY,
            "parzen": cls.PARZEN,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InputError(f"unknown kernel family {value!r}") from None


def _bp(theta):
    theta = np.asarray(theta, dtype=float)
    out = 3.0 / (4.0 * np.pi) * (1.0 - theta**2 / np.pi**2)
    return np.where(np.abs(theta) <= np.pi, out, 0.0)


def _parzen(theta):
    # Parzen shape on [-1, 1] stretched to [-pi, pi]; the shape integrates to 3/4.
    u = np.abs(np.asarray(theta, dtype=float)) / np.pi
    inner = 1.0 - 6.0 * u**2 + 6.0 * u**3
    outer = 2.0 * (1.0 - u) ** 3
    shape = np.where(u <= 0.5, inner, np.where(u <= 1.0, outer, 0.0))
    return shape * 4.0 / (3.0 * np.pi)


_KERNELS = {
    KernelFamily.BARTLETT_PRIESTLEY: (_bp, ()),
    KernelFamily.PARZEN: (_parzen, (-np.pi / 2, 0.0, np.pi / 2)),
}


def _kernel_fn(family):
    return _KERNELS[KernelFamily.parse(family)]


@functools.lru_cache(maxsize=None)
def _constants(family: KernelFamily):
    kern, brk = _kernel_fn(family)
    opts = dict(epsabs=1e-13, epsrel=1e-13, limit=200)

    mu0 = integrate.quad(lambda u: kern(u) ** 2, -np.pi, np.pi,
                         points=brk or None, **opts)[0]

    def autocorr(v):
        lo, hi = max(-np.pi, -np.pi - v), min(np.pi, np.pi - v)
        if hi <= lo:
            return 0.0
        pts = [b for b in brk + tuple(b - v for b in brk) if lo < b < hi]
        return integrate.quad(lambda u: kern(u) * kern(u + v), lo, hi,
                              points=sorted(pts) or None, **opts)[0]

    # the autocorrelation is even in v
    outer_pts = sorted({abs(b) * k for b in brk for k in (1, 2)} - {0.0})
    half = integrate.quad(lambda v: autocorr(v) ** 2, 0.0, 2 * np.pi,
                          points=[x for x in outer_pts if 0 < x < 2 * np.pi] or None,
                          **opts)[0]
    sigma0_sq = 2.0 * np.pi * 2.0 * half
    return float(mu0), float(sigma0_sq)


def kernel_constants(family) -> tuple[float, float]:
    """Return ``(mu0, sigma0_sq)`` for a kernel family.

    ``mu0 = int K(u)^2 du`` over ``[-pi, pi]`` and
    ``sigma0_sq = 2 pi int (int K(u) K(u + v) du)^2 dv`` over ``v`` in
    ``[-2 pi, 2 pi]``, both by adaptive quadrature. Values are cached.
    """
    return _constants(KernelFamily.parse(family))


@dataclass(frozen=True)
class KernelSpec:
    """Smoothing kernel with bandwidth ``h = T**(-q)``."""

    family: KernelFamily = KernelFamily.BARTLETT_PRIESTLEY
    q: float = DEFAULT_Q
    mu0: float = field(init=False)
    sigma0_sq: float = field(init=False)

    def __post_init__(self):
        fam = KernelFamily.parse(self.family)
        q = float(self.q)
        if not (0.0 < q < Q_MAX):
            raise InputError(f"bandwidth exponent q must lie in (0, 1/2), got {q}")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "q", q)
        mu0, s2 = kernel_constants(fam)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "sigma0_sq", s2)

    @property
    def in_rate_window(self) -> bool:
        """Whether ``h = T**(-q)`` meets the asymptotic rate ``2/9 < q < 1/2``.

        The recommended finite-sample choice ``q = 0.15`` lies below it.
        """
        return Q_MIN < self.q < Q_MAX

    def bandwidth(self, T: int) -> float:
        return float(T) ** (-self.q)

    def __call__(self, theta):
        return _kernel_fn(self.family)[0](theta)

    def scaled(self, x, h: float):
        """``K_h(x) = K(x / h) / h``."""
        return self(np.asarray(x, dtype=float) / h) / h


def kernel_value(kernel, theta):
    """Evaluate the kernel (not bandwidth scaled) at ``theta``."""
    if isinstance(kernel, KernelSpec):
        return kernel(theta)
    return _kernel_fn(kernel)[0](theta)


def _wrap(x):
    return (np.asarray(x) + np.pi) % (2.0 * np.pi) - np.pi


def dft(series) -> np.ndarray:
    """DFT at all ``T`` Fourier frequencies ``2 pi j / T``, ``j = 0..T-1``.

    Returns a ``(T, p)`` complex array.
    """
    x = as_series(series).values
    T = x.shape[0]
    j = np.arange(T)
    # numpy sums from t=0; the phase factor shifts the origin to t=1
    phase = np.exp(-2j * np.pi * j / T)[:, None]
    return np.fft.fft(x, axis=0) * phase / math.sqrt(2.0 * np.pi * T)


def _direct_dft(x, omegas):
    T = x.shape[0]
    t = np.arange(1, T + 1)
    E = np.exp(-1j * np.outer(omegas, t))
    return E @ x / math.sqrt(2.0 * np.pi * T)


def _outer(J):
    return J[:, :, None] * J[:, None, :].conj()


def periodogram(series, grid) -> np.ndarray:
    """Periodogram matrices ``I(w) = J(w) J(w)^*`` at the grid frequencies.

    ``grid`` may be a :class:`FrequencyGrid` or any array of frequencies.
    Fourier frequencies are evaluated through the FFT, anything else by
    direct summation. Returns an ``(n, p, p)`` complex array.
    """
    x = as_series(series).values
    T = x.shape[0]
    w = np.asarray(grid.frequencies if isinstance(grid, FrequencyGrid) else grid,
                   dtype=float).ravel()
    idx = w * T / (2.0 * np.pi)
    ridx = np.rint(idx)
    if w.size and np.allclose(idx, ridx, rtol=0, atol=1e-9):
        J = dft(x)[ridx.astype(int) % T]
    else:
        J = _direct_dft(x, w)
    return _outer(J)


def _weights(kernel: KernelSpec, T: int, omegas) -> np.ndarray:
    h = kernel.bandwidth(T)
    wj = 2.0 * np.pi * np.arange(T) / T
    d = _wrap(np.asarray(omegas, dtype=float)[:, None] - wj[None, :])
    return kernel.scaled(d, h) * (2.0 * np.pi / T)


def _apply(W, I):
    n, p = W.shape[0], I.shape[1]
    flat = I.reshape(I.shape[0], p * p)
    out = W @ flat.real + 1j * (W @ flat.imag)
    out = out.reshape(n, p, p)
    return 0.5 * (out + out.conj().transpose(0, 2, 1))


def smoothed_at(series, kernel: KernelSpec, omegas) -> np.ndarray:
    """Kernel-smoothed spectral matrices at arbitrary frequencies in ``[-pi, pi]``."""
    x = as_series(series).values
    T = x.shape[0]
    if T < 4:
        raise InputError(f"series length must be >= 4, got {T}")
    I = _outer(dft(x))
    return _apply(_weights(kernel, T, np.atleast_1d(omegas)), I)


@dataclass(frozen=True)
class SpectralEstimate:
    """Smoothed spectral matrices on a frequency grid.

    ``matrices`` has shape ``(F, p, p)``; ``T`` is the length of the series
    the estimate was computed from.
    """

    grid: FrequencyGrid
    matrices: np.ndarray
    bandwidth_used: float
    T: int
    kernel: KernelSpec | None = None

    @property
    def p(self) -> int:
        return self.matrices.shape[1]

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies

    def rotated(self, L) -> "SpectralEstimate":
        """Spectral estimate of ``L' X_t`` given that of ``X_t``."""
        L = np.asarray(L, dtype=float)
        m = np.einsum("ia,wij,jb->wab", L, self.matrices, L, optimize=True)
        m = 0.5 * (m + m.conj().transpose(0, 2, 1))
        return SpectralEstimate(self.grid, m, self.bandwidth_used, self.T, self.kernel)

    def subset(self, mask) -> "SpectralEstimate":
        mask = np.asarray(mask, dtype=bool)
        return SpectralEstimate(FrequencyGrid(self.grid.frequencies[mask]),
                                self.matrices[mask], self.bandwidth_used, self.T,
                                self.kernel)

    def to_json(self) -> str:
        m = self.matrices
        inter = np.stack([m.real, m.imag], axis=-1)
        return json.dumps({
            "T": self.T,
            "bandwidth": self.bandwidth_used,
            "kernel": None if self.kernel is None else self.kernel.family.value,
            "q": None if self.kernel is None else self.kernel.q,
            "grid": self.grid.frequencies.tolist(),
            "matrices": inter.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "SpectralEstimate":
        d = json.loads(text)
        inter = np.asarray(d["matrices"], dtype=float)
        kernel = None if d["kernel"] is None else KernelSpec(d["kernel"], d["q"])
        return cls(FrequencyGrid(d["grid"]), inter[..., 0] + 1j * inter[..., 1],
                   d["bandwidth"], int(d["T"]), kernel)


def smooth_spectral(series, kernel: KernelSpec | None = None) -> SpectralEstimate:
    """Kernel-smoothed spectral matrix estimate on the positive Fourier grid.

    The series should already be demeaned.
    """
    kernel = kernel or KernelSpec()
    x = as_series(series).values
    T = x.shape[0]
    grid = fourier_grid(T)
    mats = smoothed_at(x, kernel, grid.frequencies)
    return SpectralEstimate(grid, mats, kernel.bandwidth(T), T, kernel)
