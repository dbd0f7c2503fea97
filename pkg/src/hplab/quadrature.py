"""Composite Gauss-Legendre rules on panelled intervals."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gauss_legendre(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def panel_edges(lo: float, hi: float, width: float, breaks=()) -> np.ndarray:
    """Sorted edges covering [lo, hi] with every panel no wider than ``width``.

    ``breaks`` inside (lo, hi) become edges, so integrands that are only
    piecewise smooth are integrated panel by panel.
    """
    pts = [lo, hi] + [b for b in breaks if lo < b < hi]
    pts = np.unique(np.asarray(pts, dtype=float))
    out = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(1, math.ceil((b - a) / width - 1e-12))
        out.append(np.linspace(a, b, m + 1)[1:])
    return np.concatenate(out)


def composite_rule(edges: np.ndarray, npts: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Flattened nodes and weights of a Gauss rule on each panel."""
    x, w = gauss_legendre(npts)
    lo = edges[:-1, None]
    hl = np.diff(edges)[:, None]
    return (lo + hl * x).ravel(), (hl * w).ravel()
