"""Quadrature rules, monotone Hermite interpolation and finite-difference helpers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.special import gamma

from .errors import DomainError


def sphere_area(n: int) -> float:
    """Area of the unit n-sphere in R^{n+1}."""
    return 2.0 * np.pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0)


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def simpson_weights(count: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``count`` equispaced nodes (count odd)."""
    if count < 3 or count % 2 == 0:
        raise DomainError(f"Simpson rule needs an odd node count >= 3, got {count}")
    w = np.full(count, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def fritsch_carlson(x: np.ndarray, y: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    """Limit Hermite slopes so the cubic interpolant is monotone on monotone data.

    Slopes that are not finite are replaced by the PCHIP estimate first.
    """
    slopes = np.array(slopes, dtype=float)
    bad = ~np.isfinite(slopes)
    if bad.any():
        slopes[bad] = PchipInterpolator(x, y).derivative()(x[bad])
    delta = np.diff(y) / np.diff(x)
    for k, d in enumerate(delta):
        if d == 0.0:
            slopes[k] = slopes[k + 1] = 0.0
            continue
        a = slopes[k] / d
        b = slopes[k + 1] / d
        if a < 0.0:
            slopes[k] = 0.0
            a = 0.0
        if b < 0.0:
            slopes[k + 1] = 0.0
            b = 0.0
        s = a * a + b * b
        if s > 9.0:
            tau = 3.0 / np.sqrt(s)
            slopes[k] = tau * a * d
            slopes[k + 1] = tau * b * d
    return slopes


class MonotoneCubic:
    """Piecewise cubic Hermite interpolant with monotonicity-limited slopes.

    Exact at the nodes; refuses to extrapolate.
    """

    def __init__(self, x, y, slopes=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(np.diff(x) <= 0):
            raise DomainError("interpolation abscissae must be strictly increasing")
        if slopes is None:
            slopes = np.full_like(y, np.nan)
        self.x = x
        self.y = y
        self.slopes = fritsch_carlson(x, y, slopes)
        self._spline = CubicHermiteSpline(x, y, self.slopes, extrapolate=False)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def __call__(self, xq):
        xq = np.asarray(xq, dtype=float)
        lo, hi = self.domain
        span = hi - lo
        if np.any(xq < lo - 1e-13 * span) or np.any(xq > hi + 1e-13 * span):
            raise DomainError(f"value outside interpolation range [{lo:.6g}, {hi:.6g}]")
        out = self._spline(np.clip(xq, lo, hi))
        # exact reproduction of node values
        idx = np.searchsorted(self.x, xq)
        idx = np.clip(idx, 0, len(self.x) - 1)
        hit = self.x[idx] == xq
        if np.ndim(out) == 0:
            return float(self.y[idx]) if hit else float(out)
        out = np.array(out)
        out[hit] = self.y[idx[hit]]
        return out


def fd_weights(x0: float, nodes: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0`` (Fornberg)."""
    nodes = np.asarray(nodes, dtype=float)
    m = len(nodes)
    c = np.zeros((m, order + 1))
    c1 = 1.0
    c4 = nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, m):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@lru_cache(maxsize=64)
def _product_simpson(count: int, power: int) -> np.ndarray:
    theta = np.linspace(0.0, np.pi, count)
    h = theta[1] - theta[0]
    x, w = gauss_legendre(12)
    out = np.zeros(count)
    for j in range(0, count - 2, 2):
        t = theta[j] + 2.0 * h * x
        s = (t - theta[j]) / h  # local coordinate in [0, 2]
        weight = np.sin(t) ** power * (2.0 * h) * w
        out[j] += np.sum(weight * 0.5 * (s - 1.0) * (s - 2.0))
        out[j + 1] += np.sum(weight * s * (2.0 - s))
        out[j + 2] += np.sum(weight * 0.5 * s * (s - 1.0))
    return out


def product_simpson_weights(count: int, power: int) -> np.ndarray:
    """Weights w_i with sum w_i f_i ~ int_0^pi f(theta) sin(theta)^power d theta.

    Piecewise-quadratic interpolation of f over panel pairs, integrated exactly
    against sin^power, so constant f is integrated to rounding error.
    """
    if count < 3 or count % 2 == 0:
        raise DomainError(f"Simpson rule needs an odd node count >= 3, got {count}")
    return _product_simpson(int(count), int(power)).copy()
