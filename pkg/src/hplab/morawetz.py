"""Morawetz multiplier identities on analytic fields and on computed
outgoing solutions, plus two-sided probes of the solution operator norm.

Conventions: L v = k^-2 Lap v + v, so an outgoing solution of the Helmholtz
problem with data f satisfies L u = -f; M_{beta,alpha} v = x.grad v - i k beta v + alpha v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .context import WaveContext, angular_weight
from .errors import ValidationError
from .radial_model import (
    CellResponses, ModeProblem, csol_bound, data_norm2, exact_mode_solution, norm_rule,
    quasimode_ratio,
)

# ---------------------------------------------------------------------------
# analytic test fields


@dataclass(frozen=True)
class PlaneWaveField:
    """v(x) = p(x1, x2) exp(i k eta.x) with p a polynomial (coefficient grid c[i, j] of x1^i x2^j)."""

    coeffs: np.ndarray
    eta: tuple
    k: float

    def _poly(self, x1, x2, d1=0, d2=0):
        c = np.asarray(self.coeffs, dtype=complex)
        if d1:
            c = P.polyder(c, d1, axis=0)
        if d2:
            c = P.polyder(c, d2, axis=1)
        return P.polyval2d(x1, x2, c)

    def evaluate(self, x1, x2):
        """(v, grad v as [v_1, v_2], Hessian as [[v_11, v_12], [v_12, v_22]])."""
        k, (e1, e2) = self.k, self.eta
        E = np.exp(1j * k * (e1 * x1 + e2 * x2))
        p = self._poly(x1, x2)
        p1, p2 = self._poly(x1, x2, 1, 0), self._poly(x1, x2, 0, 1)
        p11, p12, p22 = self._poly(x1, x2, 2, 0), self._poly(x1, x2, 1, 1), self._poly(x1, x2, 0, 2)
        ik = 1j * k
        v = p * E
        g = [(p1 + ik * e1 * p) * E, (p2 + ik * e2 * p) * E]
        h11 = (p11 + 2 * ik * e1 * p1 + (ik * e1) ** 2 * p) * E
        h22 = (p22 + 2 * ik * e2 * p2 + (ik * e2) ** 2 * p) * E
        h12 = (p12 + ik * (e1 * p2 + e2 * p1) + (ik) ** 2 * e1 * e2 * p) * E
        return v, g, [[h11, h12], [h12, h22]]


def field_library(k: float) -> list[PlaneWaveField]:
    """Polynomials times plane waves used by the identity checks."""
    one = np.array([[1.0]])
    lin = np.array([[0.0, 1j], [1.0, 0.0]])  # x1 + i x2
    quad = np.array([[0.3, -1.0, 0.0], [0.0, 0.5j, 0.0], [1.0, 0.0, 0.0]])
    cub = np.zeros((4, 4), dtype=complex)
    cub[3, 0], cub[1, 2], cub[0, 1], cub[2, 1] = 1.0, -2.0j, 0.7, 0.25
    return [
        PlaneWaveField(one, (0.0, 0.0), k),
        PlaneWaveField(one, (1.0, 0.0), k),
        PlaneWaveField(lin, (1.0, 0.0), k),
        PlaneWaveField(quad, (0.6, 0.8), k),
        PlaneWaveField(cub, (0.28, -0.96), k),
        PlaneWaveField(quad, (1.3, 0.4), k),
    ]


def sample_points(radius: float = 1.0, n: int = 41, avoid_origin: bool = False):
    """Tensor grid on [-radius, radius]^2; shifted off the origin on request."""
    t = np.linspace(-radius, radius, n)
    if avoid_origin:
        t = t + 0.5 * (t[1] - t[0]) / math.pi
    return np.meshgrid(t, t, indexing="ij")


# ---------------------------------------------------------------------------
# multiplier and identities


def _beta_fn(beta):
    if isinstance(beta, str):
        if beta != "r":
            raise ValidationError(f"beta must be a number or 'r', got {beta!r}")

        def radial(x1, x2):
            r = np.hypot(x1, x2)
            if np.any(r == 0):
                raise ValidationError("beta = r needs points away from the origin")
            return r, [x1 / r, x2 / r]

        return radial
    b = float(beta)
    return lambda x1, x2: (np.full(np.shape(x1), b), [np.zeros(np.shape(x1))] * 2)


@dataclass(frozen=True)
class MorawetzMultiplier:
    """M v = x.grad v - i k beta v + alpha v with beta constant or beta = r ('r'), alpha constant."""

    beta: float | str
    alpha: float

    def apply(self, k: float, x1, x2, v, g):
        b, _ = _beta_fn(self.beta)(x1, x2)
        return x1 * g[0] + x2 * g[1] - 1j * k * b * v + self.alpha * v


def helmholtz_L(k: float, v, hess):
    return (hess[0][0] + hess[1][1]) / k**2 + v


def flux_vector(k: float, mult: MorawetzMultiplier, x1, x2, v, g):
    """Q = 2 k^-1 Re(conj(M v) k^-1 grad v) + (|v|^2 - k^-2 |grad v|^2) x, as [Q_1, Q_2]."""
    Mv = mult.apply(k, x1, x2, v, g)
    e = np.abs(v) ** 2 - (np.abs(g[0]) ** 2 + np.abs(g[1]) ** 2) / k**2
    return [2.0 * np.real(np.conj(Mv) * g[0]) / k**2 + e * x1, 2.0 * np.real(np.conj(Mv) * g[1]) / k**2 + e * x2]


def flux_divergence(k: float, mult: MorawetzMultiplier, x1, x2, v, g, h):
    """div Q from analytic first and second derivatives."""
    b, db = _beta_fn(mult.beta)(x1, x2)
    a = mult.alpha
    xs = (x1, x2)
    Mv = mult.apply(k, x1, x2, v, g)
    # grad(M v)_i = v_i + sum_j x_j v_ji - i k (beta v_i + v beta_i) + alpha v_i
    gM = [g[i] + xs[0] * h[0][i] + xs[1] * h[1][i] - 1j * k * (b * g[i] + v * db[i]) + a * g[i] for i in range(2)]
    lap = h[0][0] + h[1][1]
    div1 = 2.0 * np.real(np.conj(gM[0]) * g[0] + np.conj(gM[1]) * g[1] + np.conj(Mv) * lap) / k**2
    grad_e = [2.0 * np.real(np.conj(v) * g[i]) - 2.0 * np.real(np.conj(g[0]) * h[0][i] + np.conj(g[1]) * h[1][i]) / k**2
              for i in range(2)]
    e = np.abs(v) ** 2 - (np.abs(g[0]) ** 2 + np.abs(g[1]) ** 2) / k**2
    return div1 + 2.0 * e + x1 * grad_e[0] + x2 * grad_e[1]


def identity_terms(k: float, field: PlaneWaveField, mult: MorawetzMultiplier, x1, x2, d: int = 2):
    """(lhs, rhs) of the general multiplier identity at the points."""
    v, g, h = field.evaluate(x1, x2)
    _, db = _beta_fn(mult.beta)(x1, x2)
    a = mult.alpha
    lhs = 2.0 * np.real(np.conj(mult.apply(k, x1, x2, v, g)) * helmholtz_L(k, v, h))
    grad2 = np.abs(g[0]) ** 2 + np.abs(g[1]) ** 2
    cross = 2.0 * np.real(np.conj(v) * (1j * (db[0] * g[0] + db[1] * g[1]))) / k
    rhs = (flux_divergence(k, mult, x1, x2, v, g, h) - cross
           - (d - 2 * a) * np.abs(v) ** 2 - (2 * a - d + 2) * grad2 / k**2)
    return lhs, rhs


def identity_residual(field: PlaneWaveField, beta, alpha: float, points=None, d: int = 2) -> float:
    """Max |lhs - rhs| of the multiplier identity over the sample points."""
    x1, x2 = sample_points(avoid_origin=beta == "r") if points is None else points
    lhs, rhs = identity_terms(field.k, field, MorawetzMultiplier(beta, alpha), x1, x2, d)
    return float(np.max(np.abs(lhs - rhs)))


def radial_identity_residual(field: PlaneWaveField, alpha: float, points=None, d: int = 2) -> float:
    """Max residual of the beta = r special case written with |k^-1 v_r - i v|^2."""
    x1, x2 = sample_points(avoid_origin=True) if points is None else points
    k = field.k
    v, g, h = field.evaluate(x1, x2)
    mult = MorawetzMultiplier("r", alpha)
    r = np.hypot(x1, x2)
    vr = (x1 * g[0] + x2 * g[1]) / r
    grad2 = np.abs(g[0]) ** 2 + np.abs(g[1]) ** 2
    lhs = 2.0 * np.real(np.conj(mult.apply(k, x1, x2, v, g)) * helmholtz_L(k, v, h))
    rhs = (flux_divergence(k, mult, x1, x2, v, g, h) - np.abs(vr / k - 1j * v) ** 2
           + (2 * alpha - (d - 1)) * (np.abs(v) ** 2 - grad2 / k**2) - (grad2 - np.abs(vr) ** 2) / k**2)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# radial flux on circles


def radial_flux_forms(k: float, r, alpha: float, u, ur, grad2):
    """Three equal expressions for Q_{r,alpha}(u).xhat on |x| = r.

    grad2 is |grad u|^2. The third form carries -alpha^2 |u|^2 / r^2.
    """
    m = ur - 1j * k * u + alpha * u / r  # M_{r,alpha} u / r
    f1 = r / k**2 * (2.0 * np.real(ur * np.conj(m)) + k**2 * np.abs(u) ** 2 - grad2)
    f2 = r / k**2 * (np.abs(ur) ** 2 + 2.0 * np.real(ur * np.conj(-1j * k * u + alpha * u / r))
                     + k**2 * np.abs(u) ** 2 - (grad2 - np.abs(ur) ** 2))
    f3 = r / k**2 * (np.abs(m) ** 2 - alpha**2 * np.abs(u) ** 2 / r**2 - (grad2 - np.abs(ur) ** 2))
    return f1, f2, f3


def circle_trace(problems: Sequence[ModeProblem], radius: float, npts: int):
    """u, u_r and r^-1 u_theta on npts equispaced angles of the circle |x| = radius."""
    th = 2.0 * math.pi * np.arange(npts) / npts
    u = np.zeros(npts, dtype=complex)
    ur = np.zeros(npts, dtype=complex)
    ut = np.zeros(npts, dtype=complex)
    for p in problems:
        U, Up = exact_mode_solution(p, np.array([radius]), derivative=True)
        u += U[0] * np.cos(p.n * th)
        ur += Up[0] * np.cos(p.n * th)
        ut += -p.n * U[0] * np.sin(p.n * th) / radius
    return th, u, ur, ut


def flux_points(k: float, radius: float) -> int:
    return max(64, int(math.ceil(8.0 * k * radius)))


def flux_integral(problems: Sequence[ModeProblem], radius: float, alpha: float | None = None) -> float:
    """int_{|x| = radius} Q_{radius,alpha}(u).xhat by the periodic trapezoid rule."""
    if not problems:
        return 0.0
    ctx = problems[0].ctx
    alpha = (ctx.d - 1) / 2.0 if alpha is None else alpha
    npts = max(flux_points(ctx.k, radius), 4 * max(p.n for p in problems) + 8)
    _, u, ur, ut = circle_trace(problems, radius, npts)
    q = radial_flux_forms(ctx.k, radius, alpha, u, ur, np.abs(ur) ** 2 + np.abs(ut) ** 2)[0]
    return float(np.sum(q) * radius * 2.0 * math.pi / npts)


def flux_scale(problems: Sequence[ModeProblem], radius: float) -> float:
    """Normalisation R ||u||^2_{H1_k} on the circle, used for sign tolerances."""
    s = 0.0
    for p in problems:
        U, Up = exact_mode_solution(p, np.array([radius]), derivative=True)
        w = angular_weight(p.n) * radius
        s += w * (abs(U[0]) ** 2 * (1 + (p.n / (p.ctx.k * radius)) ** 2) + abs(Up[0]) ** 2 / p.ctx.k**2)
    return radius * s


def flux_sign_check(problems: Sequence[ModeProblem], radius: float | None = None, rel_tol: float = 1e-8) -> float:
    """Boundary flux with alpha = (d-1)/2; must be <= rel_tol * normalisation."""
    ctx = problems[0].ctx
    radius = ctx.R if radius is None else radius
    if any(p.f.support > radius for p in problems):
        raise ValidationError("data must be supported inside the circle")
    q = flux_integral(problems, radius)
    if q > rel_tol * flux_scale(problems, radius):
        raise AssertionError(f"flux {q:.6g} is positive at radius {radius:g}")
    return q


# ---------------------------------------------------------------------------
# integrated identity on the disk


@dataclass(frozen=True)
class IntegratedIdentity:
    source_term: float  # -int_{B_R} 2 Re(conj(M u) f)
    h1k_norm2: float
    boundary_flux: float
    m_norm: float
    f_norm: float

    @property
    def residual(self) -> float:
        return self.source_term + self.h1k_norm2 - self.boundary_flux

    @property
    def chain_holds(self) -> bool:
        return self.h1k_norm2 <= 2.0 * self.m_norm * self.f_norm * (1 + 1e-12)


def integrated_identity(problems: Sequence[ModeProblem]) -> IntegratedIdentity:
    """Integrate the identity with beta = R and alpha = (d-1)/2 over B_R for a computed solution."""
    ctx = problems[0].ctx
    k, R = ctx.k, ctx.R
    alpha = (ctx.d - 1) / 2.0
    src = h1 = m2 = 0.0
    for p in problems:
        r, w = norm_rule(ctx, 0.0, R, p.f.all_breaks)
        u, up = exact_mode_solution(p, r, derivative=True)
        f = p.f(r)
        Mu = r * up - 1j * k * R * u + alpha * u
        wt = angular_weight(p.n) * w * r
        src += -2.0 * float(np.real(np.sum(np.conj(Mu) * f * wt)))
        h1 += float(np.sum((np.abs(u) ** 2 * (1 + (p.n / (k * r)) ** 2) + np.abs(up) ** 2 / k**2) * wt))
        m2 += float(np.sum(np.abs(Mu) ** 2 * wt))
    fn = math.sqrt(sum(data_norm2(p) for p in problems))
    return IntegratedIdentity(src, h1, flux_integral(problems, R, alpha), math.sqrt(m2), fn)


# ---------------------------------------------------------------------------
# two-sided probes of the solution operator norm


@dataclass(frozen=True)
class CsolRow:
    k: float
    R: float
    observed_ratio: float
    paper_bound: float
    quasimode_ratio: float
    draws: int

    def csv(self) -> list[str]:
        return [f"{v:.17g}" for v in (self.k, self.R, self.observed_ratio, self.paper_bound, self.quasimode_ratio)]


CSOL_HEADER = ["k", "R", "observed_ratio", "paper_bound", "quasimode_ratio"]
PROBE_MODES = (0, 1, 2, 4, 8)


def csol_two_sided(ks: Sequence[float], R: float = 1.0, ndraws: int = 50, cells: int = 16,
                   modes: Sequence[int] = PROBE_MODES, seed: int = 0, offset: int = 0) -> list[CsolRow]:
    """Per k: the largest H1_k/L2 ratio over random cell data and the cell span, and the quasimode ratio."""
    rows = []
    for i, k in enumerate(ks):
        ctx = WaveContext(float(k), R)
        rng = np.random.default_rng(np.random.SeedSequence([seed, offset + i]))
        cr = CellResponses(ctx, modes, cells)
        observed = max(float(cr.random_ratios(ndraws, rng).max()), cr.subspace_max())
        rows.append(CsolRow(ctx.k, R, observed, csol_bound(ctx.kR, ctx.d), quasimode_ratio(ctx), ndraws))
    return rows
