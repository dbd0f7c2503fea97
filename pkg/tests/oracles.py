"""Independent reference computations used only by the tests."""

from __future__ import annotations

import math

import numpy as np
from scipy import special


def j0_series(x: float, terms: int = 40) -> float:
    """J_0 from its power series sum (-1)^m (x/2)^(2m) / (m!)^2."""
    total, term = 0.0, 1.0
    q = -(x * x) / 4.0
    for m in range(terms):
        if m:
            term *= q / (m * m)
        total += term
    return total


def y0_series(x: float, terms: int = 40) -> float:
    """Y_0 from (2/pi)[(ln(x/2)+gamma) J_0 + sum (-1)^(m+1) H_m (x/2)^(2m)/(m!)^2]."""
    gamma = 0.57721566490153286061
    s, term, harm = 0.0, 1.0, 0.0
    q = -(x * x) / 4.0
    for m in range(1, terms):
        term *= q / (m * m)
        harm += 1.0 / m
        s -= harm * term
    return (2.0 / math.pi) * ((math.log(x / 2.0) + gamma) * j0_series(x, terms) + s)


def _graded_panels(lo, hi, width, first=1e-6, ratio=0.25):
    """Panels on [lo, hi], geometrically graded towards lo."""
    edges = [lo]
    h = hi - lo
    pos = []
    t = min(width, h)
    while t > first:
        pos.append(t)
        t *= ratio
    edges += sorted(lo + p for p in pos)
    m = max(1, math.ceil((hi - (lo + min(width, h))) / width))
    edges += list(np.linspace(lo + min(width, h), hi, m + 1)[1:])
    return np.unique(np.array(edges))


def convolution_2d(k: float, f_radial, a: float, r: float, nphi: int = 256, npts: int = 20) -> complex:
    """(i/4) int H_0(k|x-y|) f(|y|) dy at x = (r, 0), in polar coordinates about x."""
    xg, wg = np.polynomial.legendre.leggauss(npts)
    xg, wg = 0.5 * (xg + 1), 0.5 * wg
    edges = _graded_panels(0.0, r + a, math.pi / (4 * k))
    lo, hl = edges[:-1], np.diff(edges)
    rho = (lo[:, None] + hl[:, None] * xg).ravel()
    wr = (hl[:, None] * wg).ravel()
    phi = 2 * math.pi * np.arange(nphi) / nphi
    y1 = r + rho[:, None] * np.cos(phi)
    y2 = rho[:, None] * np.sin(phi)
    fy = f_radial(np.hypot(y1, y2))
    ang = fy.sum(axis=1) * (2 * math.pi / nphi)
    return 0.25j * np.sum(special.hankel1(0, k * rho) * rho * wr * ang)


def jn_series_mp(n: int, x: float, dps: int = 60) -> float:
    """J_n(x) from its power series in extended precision."""
    import mpmath

    with mpmath.workdps(dps):
        xh = mpmath.mpf(x) / 2
        term = xh**n / mpmath.factorial(n)
        total = term
        m = 0
        while True:
            m += 1
            term *= -xh * xh / (m * (m + n))
            total += term
            if abs(term) < mpmath.mpf(10) ** (-dps + 5) * abs(total) and m > x:
                break
        return float(total)
