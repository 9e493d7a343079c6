"""Independent reference computations shared by the test modules."""

import math

import numpy as np

from specseg.spectral import kernel_value

BP = "bp"


def direct_periodogram(x, w):
    """O(T) summation per frequency, straight from the DFT definition."""
    T = x.shape[0]
    out = []
    for om in w:
        J = sum(x[t - 1] * np.exp(-1j * t * om) for t in range(1, T + 1))
        J = J / math.sqrt(2 * math.pi * T)
        out.append(np.outer(J, J.conj()))
    return np.array(out)


def bp_kernel(theta):
    return 3 / (4 * math.pi) * (1 - theta**2 / math.pi**2) if abs(theta) <= math.pi else 0.0


def brute_force_smooth(x, q):
    """Double loop over target and Fourier frequencies with the explicit BP formula."""
    T, p = x.shape
    h = T ** (-q)
    js = range(-((T - 1) // 2), T // 2 + 1)
    I = {j: direct_periodogram(x, [2 * math.pi * j / T])[0] for j in js}
    out = []
    for k in range(1, (T - 1) // 2 + 1):
        om = 2 * math.pi * k / T
        acc = np.zeros((p, p), complex)
        for j in js:
            d = om - 2 * math.pi * j / T
            d = (d + math.pi) % (2 * math.pi) - math.pi
            acc += bp_kernel(d / h) / h * I[j]
        out.append(acc * 2 * math.pi / T)
    return np.array(out)


def gauss_legendre(f, a, b, n=40):
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * np.sum(w * f(mid + half * x))


def simpson(f, a, b, n=2000):
    x = np.linspace(a, b, n + 1)
    y = f(x)
    hstep = (b - a) / n
    return hstep / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def sigma0_sq_gl():
    def C(v):
        return np.array([gauss_legendre(lambda u: kernel_value(BP, u) * kernel_value(BP, u + vv),
                                        -math.pi, math.pi - vv) for vv in np.atleast_1d(v)])
    return 2 * math.pi * 2 * gauss_legendre(lambda v: C(v) ** 2, 0.0, 2 * math.pi)


def sigma0_sq_simpson():
    def C(v):
        return np.array([simpson(lambda u: kernel_value(BP, u) * kernel_value(BP, u + vv),
                                 -math.pi, math.pi - vv, 400) for vv in np.atleast_1d(v)])
    return 2 * math.pi * 2 * simpson(lambda v: C(v) ** 2, 0.0, 2 * math.pi, 400)
