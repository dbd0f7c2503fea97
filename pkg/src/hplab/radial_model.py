"""Mode-separated Helmholtz problem on the disk B_R.

A field on the disk is written F(r, theta) = sum_n F_n(r) cos(n theta) with
n >= 0, so squared L2 norms add across modes with the angular weights of
:func:`hplab.context.angular_weight`. Each mode carries its own radial
problem, exact solution (radial Green kernel) and k-weighted norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .context import WaveContext, angular_weight
from .dtn import DtnCoefficient, dtn_coefficient
from .errors import DegenerateDenominatorError, QuadratureError, ValidationError
from .quadrature import composite_rule, gauss_legendre, panel_edges
from .specfun import CylinderTable

QUAD_TOL = 1e-9
_MAX_HALVINGS = 4


def bump(t):
    """C-infinity bump exp(1 - 1/(1 - t^2)) on |t| < 1, equal to 1 at t = 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
    return out


@dataclass(frozen=True)
class RadialProfile:
    """Complex radial function on [start, support], zero elsewhere.

    ``breaks`` lists radii where the function is not smooth; quadrature
    panels are aligned with them.
    """

    func: Callable[[np.ndarray], np.ndarray]
    support: float
    breaks: tuple = ()
    label: str = "profile"
    start: float = 0.0

    @property
    def all_breaks(self) -> tuple:
        return tuple(self.breaks) + (self.start, self.support)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.asarray(self.func(r), dtype=complex)
        return np.where((r <= self.support) & (r >= self.start), out, 0.0)

    @classmethod
    def zero(cls, support: float = 1.0) -> "RadialProfile":
        return cls(lambda r: np.zeros_like(r, dtype=complex), support, label="zero")

    @classmethod
    def piecewise_constant(cls, edges: Sequence[float], values: Sequence[complex]) -> "RadialProfile":
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=complex)
        if edges.size != values.size + 1 or np.any(np.diff(edges) <= 0) or edges[0] < 0:
            raise ValidationError("piecewise-constant profile needs increasing edges, one more than values")

        def f(r):
            idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, values.size - 1)
            inside = (r >= edges[0]) & (r <= edges[-1])
            return np.where(inside, values[idx], 0.0)

        nz = np.flatnonzero(values)
        lo, hi = (nz[0], nz[-1] + 1) if nz.size else (0, values.size)
        inner = tuple(float(e) for e in edges[lo + 1:hi])
        return cls(f, float(edges[hi]), inner, label="cells", start=float(edges[lo]))

    @classmethod
    def smooth_bump(cls, a: float, amplitude: complex = 1.0) -> "RadialProfile":
        return cls(lambda r: amplitude * bump(r / a), a, label="bump")

    @classmethod
    def resonant_bump(cls, k: float, n: int, a: float, amplitude: complex = 1.0) -> "RadialProfile":
        """bump(r/a) * J_n(k r): a fixed envelope carrying the mode's own oscillation."""

        def f(r):
            r = np.asarray(r, dtype=float)
            out = np.zeros(r.shape, dtype=complex)
            m = (r > 0) & (r < a)
            if m.any():
                tab = CylinderTable(n, k * r[m])
                out[m] = amplitude * bump(r[m] / a) * tab.j(n)
            if n == 0:
                out[r == 0] = amplitude
            return out

        return cls(f, a, label=f"resonant{n}")


@dataclass(frozen=True)
class ModeProblem:
    ctx: WaveContext
    n: int
    f: RadialProfile
    d: DtnCoefficient = field(repr=False, default=None)

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError(f"mode index must be >= 0, got {self.n}")
        if self.f.support > self.ctx.R * (1 + 1e-12):
            raise ValidationError("data must be supported inside B_R")
        if self.d is None:
            object.__setattr__(self, "d", dtn_coefficient(self.ctx, self.n))
        elif self.d.mode != self.n or not math.isclose(self.d.kR, self.ctx.kR, rel_tol=1e-14):
            raise ValidationError("DtN coefficient does not match the mode problem")

    @property
    def weight(self) -> float:
        return angular_weight(self.n)


# ---------------------------------------------------------------------------
# exact solution


def _pow_ratio(num, den, n):
    """(num/den)**n for 0 <= num <= den, with 0**0 = 1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return np.power(q, n)


def _scaled_at(n: int, x: np.ndarray):
    if x.size == 0:
        e = np.zeros(0, dtype=complex)
        return e, e, e, e
    return CylinderTable(n, x).scaled(n)


def _green_apply(k: float, n: int, f: RadialProfile, r: np.ndarray, width: float, npts: int):
    """u_n and u_n' at radii r for one panel width and Gauss order."""
    a, a0 = f.support, f.start
    edges = panel_edges(a0, a, width, f.breaks)
    xg, wg = gauss_legendre(npts)
    lo, hl = edges[:-1], np.diff(edges)
    s = lo[:, None] + hl[:, None] * xg
    g = f(s) * s * (hl[:, None] * wg)
    jt, _, ht, _ = _scaled_at(n, (k * s).ravel())
    jt = jt.reshape(s.shape)
    ht = ht.reshape(s.shape)

    npan = lo.size
    i_edge = np.zeros(npan + 1, dtype=complex)  # scaled inner integral at each edge
    k_edge = np.zeros(npan + 1, dtype=complex)  # scaled outer integral at each edge
    for i in range(npan):
        e0, e1 = edges[i], edges[i + 1]
        i_edge[i + 1] = i_edge[i] * _pow_ratio(e0, e1, n) + np.sum(jt[i] * g[i] * _pow_ratio(s[i], e1, n))
    for i in range(npan - 1, -1, -1):
        e0, e1 = edges[i], edges[i + 1]
        k_edge[i] = k_edge[i + 1] * _pow_ratio(e0, e1, n) + np.sum(ht[i] * g[i] * _pow_ratio(e0, s[i], n))

    r = np.asarray(r, dtype=float)
    inner = np.zeros(r.size, dtype=complex)
    outer = np.zeros(r.size, dtype=complex)
    beyond = r >= a
    inner[beyond] = i_edge[-1] * _pow_ratio(a, r[beyond], n)
    before = r <= a0
    outer[before] = k_edge[0] * _pow_ratio(r[before], a0, n)
    ins = ~(beyond | before)
    if ins.any():
        ri = r[ins]
        idx = np.clip(np.searchsorted(edges, ri, side="right") - 1, 0, npan - 1)
        el, er = edges[idx], edges[idx + 1]
        # partial panels [el, r] and [r, er]
        sl = el[:, None] + (ri - el)[:, None] * xg
        wl = (ri - el)[:, None] * wg
        sr = ri[:, None] + (er - ri)[:, None] * xg
        wr = (er - ri)[:, None] * wg
        jl, _, _, _ = _scaled_at(n, (k * sl).ravel())
        _, _, hr, _ = _scaled_at(n, (k * sr).ravel())
        jl = jl.reshape(sl.shape)
        hr = hr.reshape(sr.shape)
        inner[ins] = i_edge[idx] * _pow_ratio(el, ri, n) + np.sum(
            jl * f(sl) * sl * wl * _pow_ratio(sl, ri[:, None], n), axis=1)
        part = np.sum(hr * f(sr) * sr * wr * _pow_ratio(ri[:, None], sr, n), axis=1)
        # (r/s)^n is sharply peaked when r << er; grade the panel geometrically
        for j in np.flatnonzero((er > 2.0 * ri) & (n > 0)):
            g_edges = ri[j] * 2.0 ** np.arange(int(math.log2(er[j] / ri[j])) + 1)
            g_edges = np.append(g_edges[g_edges < er[j]], er[j])
            sg = g_edges[:-1, None] + np.diff(g_edges)[:, None] * xg
            wgr = np.diff(g_edges)[:, None] * wg
            _, _, hg, _ = _scaled_at(n, (k * sg).ravel())
            part[j] = np.sum(hg.reshape(sg.shape) * f(sg) * sg * wgr * _pow_ratio(ri[j], sg, n))
        outer[ins] = k_edge[idx + 1] * _pow_ratio(ri, er, n) + part

    jr, jrp, hr_, hrp = _scaled_at(n, k * r)
    c = 0.5j * math.pi * k * k
    u = c * (hr_ * inner + jr * outer)
    up = c * k * (hrp * inner + jrp * outer)
    return u, up


def exact_mode_solution(p: ModeProblem, r, derivative: bool = False, tol: float = QUAD_TOL):
    """Outgoing solution u_n(r) of k^-2(u'' + u'/r - n^2 u/r^2) + u = -f_n.

    Uses u_n(r) = (i pi k^2 / 2) int J_n(k min(r,s)) H_n(k max(r,s)) f_n(s) s ds
    on panels no wider than pi/(4k); a 24-point rule checks the 16-point one
    and panels are halved until they agree to ``tol`` (relative to max |u|).
    Valid for any r > 0, including r > R.
    """
    r_in = np.asarray(r, dtype=float)
    rr = np.atleast_1d(r_in).ravel()
    if np.any(rr <= 0) or not np.all(np.isfinite(rr)):
        raise ValidationError("exact mode solution needs finite radii r > 0")
    k = p.ctx.k
    width = min(math.pi / (4.0 * k), (p.f.support - p.f.start) / 4.0)
    for _ in range(_MAX_HALVINGS + 1):
        u1, d1 = _green_apply(k, p.n, p.f, rr, width, 16)
        u2, d2 = _green_apply(k, p.n, p.f, rr, width, 24)
        scale = max(np.max(np.abs(u2)), 1e-300)
        dscale = max(np.max(np.abs(d2)), 1e-300)
        err = max(np.max(np.abs(u1 - u2)) / scale, np.max(np.abs(d1 - d2)) / dscale)
        if err <= tol:
            break
        width *= 0.5
    else:
        raise QuadratureError(f"exact mode solution (n={p.n}, k={k:g}) reached only {err:.2e} estimated error")
    u2 = u2.reshape(r_in.shape) if r_in.ndim else complex(u2[0])
    if derivative:
        d2 = d2.reshape(r_in.shape) if r_in.ndim else complex(d2[0])
        return u2, d2
    return u2


def exact_solution_1d(k: float, f: Callable, lo: float, hi: float, x, npts: int = 24):
    """u(x) = (i k / 2) int_lo^hi exp(i k |x - s|) f(s) ds, the outgoing 1-d solution."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.size, dtype=complex)
    width = math.pi / (4.0 * k)
    for i, xi in enumerate(x):
        s, w = composite_rule(panel_edges(lo, hi, width, (xi,)), npts)
        out[i] = 0.5j * k * np.sum(np.exp(1j * k * np.abs(xi - s)) * f(s) * w)
    return out


def outgoing_ratio(p: ModeProblem, r1: float, r2: float) -> complex:
    """u_n(r1) H_n(k r2) / (u_n(r2) H_n(k r1)); equals 1 for r1, r2 beyond the support."""
    u = exact_mode_solution(p, np.array([r1, r2]))
    k, n = p.ctx.k, p.n
    tab = CylinderTable(n, np.array([k * r1, k * r2]))
    _, _, ht, _ = tab.scaled(n)
    # H(k r2)/H(k r1) = Ht(k r2)/Ht(k r1) * (r1/r2)^n
    hq = ht[1] / ht[0] * (r1 / r2) ** n
    return complex(u[0] * hq / u[1])


# ---------------------------------------------------------------------------
# norms


@dataclass
class ModeNorms:
    """Squared norms of one mode (angular weight included)."""

    n: int
    l2: float
    h1k: float
    h2k: float


def norm_rule(ctx: WaveContext, lo: float, hi: float, breaks=(), npts: int = 16):
    width = min(math.pi / (4.0 * ctx.k), (hi - lo) / 4.0)
    return composite_rule(panel_edges(lo, hi, width, breaks), npts)


def second_derivative(k: float, n: int, r, u, up, f):
    """U'' from the radial equation U'' = -U'/r + n^2 U/r^2 - k^2 (U + f)."""
    return -up / r + n * n * u / (r * r) - k * k * (u + f)


def mode_norms_from_values(k: float, n: int, r, w, u, up, upp=None) -> ModeNorms:
    """Squared L2, H1_k and H2_k norms of U(r) cos(n theta) from nodal values.

    The second-order part is the Hessian Frobenius norm written in polar
    form: |U''|^2 + |U'/r - n^2 U/r^2|^2 + 2 n^2 |U'/r - U/r^2|^2.
    """
    wt = angular_weight(n) * w * r
    au2 = np.abs(u) ** 2
    l2 = float(np.sum(wt * au2))
    grad = np.abs(up) ** 2 + (n * n) * au2 / (r * r)
    h1 = l2 + float(np.sum(wt * grad)) / k**2
    h2 = h1
    if upp is not None:
        hess = (np.abs(upp) ** 2 + np.abs(up / r - n * n * u / (r * r)) ** 2
                + 2.0 * n * n * np.abs(up / r - u / (r * r)) ** 2)
        h2 = h1 + float(np.sum(wt * hess)) / k**4
    return ModeNorms(n, l2, h1, h2)


def data_norm2(p: ModeProblem) -> float:
    """Squared L2(B_R) norm of f_n(r) cos(n theta)."""
    r, w = norm_rule(p.ctx, 0.0, p.f.support, p.f.all_breaks)
    return float(p.weight * np.sum(np.abs(p.f(r)) ** 2 * r * w))


def solution_norms(p: ModeProblem, radius: float | None = None) -> ModeNorms:
    """Norms of the exact mode solution over B_radius (default B_R)."""
    R = p.ctx.R if radius is None else radius
    r, w = norm_rule(p.ctx, 0.0, R, p.f.all_breaks)
    u, up = exact_mode_solution(p, r, derivative=True)
    upp = second_derivative(p.ctx.k, p.n, r, u, up, p.f(r))
    return mode_norms_from_values(p.ctx.k, p.n, r, w, u, up, upp)


def _check_same_ctx(ctx: WaveContext, problems: Sequence[ModeProblem]):
    if not problems:
        raise ValidationError("at least one mode problem is required")
    for p in problems:
        if p.ctx != ctx:
            raise ValidationError("all mode problems must share one WaveContext")


def csol_ratio(ctx: WaveContext, problems: Sequence[ModeProblem]) -> float:
    """||u||_{H1_k(B_R)} / ||f||_{L2(B_R)} for data given mode by mode."""
    _check_same_ctx(ctx, problems)
    num = sum(solution_norms(p).h1k for p in problems)
    den = sum(data_norm2(p) for p in problems)
    if den <= 0.0:
        raise DegenerateDenominatorError("data has zero L2 norm")
    return math.sqrt(num / den)


def h2k_ratio_check(ctx: WaveContext, problems: Sequence[ModeProblem], solutions=None) -> float:
    """||u||_{H2_k(B_R)} / ||f||_{L2(B_R)}.

    ``solutions`` optionally maps a mode index to a callable r -> (U, U')
    (for instance a fine discrete solution); the exact solver is used
    otherwise.
    """
    _check_same_ctx(ctx, problems)
    num = 0.0
    for p in problems:
        if solutions is None or p.n not in solutions:
            num += solution_norms(p).h2k
            continue
        r, w = norm_rule(ctx, 0.0, ctx.R, p.f.all_breaks)
        u, up = solutions[p.n](r)
        upp = second_derivative(ctx.k, p.n, r, u, up, p.f(r))
        num += mode_norms_from_values(ctx.k, p.n, r, w, u, up, upp).h2k
    den = sum(data_norm2(p) for p in problems)
    if den <= 0.0:
        raise DegenerateDenominatorError("data has zero L2 norm")
    return math.sqrt(num / den)


def separated_form(p: ModeProblem, u: Callable, v: Callable) -> complex:
    """a_n(u, v) for radial callables returning (value, derivative) at r.

    a_n(u,v) = int (k^-2 (u' v'* + n^2/r^2 u v*) - u v*) r dr - k^-1 d_n R u(R) v(R)*.
    The two-dimensional form of U cos(n theta) and V cos(n theta) is
    angular_weight(n) times this.
    """
    ctx = p.ctx
    k, R, n = ctx.k, ctx.R, p.n
    r, w = norm_rule(ctx, 0.0, R)
    uu, du = u(r)
    vv, dv = v(r)
    body = np.sum((k**-2 * (du * np.conj(dv) + n * n * uu * np.conj(vv) / r**2) - uu * np.conj(vv)) * r * w)
    uR, _ = u(np.array([R]))
    vR, _ = v(np.array([R]))
    bnd = p.d.value * R * uR[0] * np.conj(vR[0]) / k
    return complex(body - bnd)


# ---------------------------------------------------------------------------
# data families


def csol_bound(kR: float, d: int = 2) -> float:
    """Upper bound 2kR sqrt(1 + ((d-1)/(2kR))^2) on the solution operator norm."""
    return 2.0 * kR * math.sqrt(1.0 + ((d - 1) / (2.0 * kR)) ** 2)


DEFAULT_MODES = (0, 1, 2)


def resonant_family(ctx: WaveContext, a: float | None = None, modes: Sequence[int] = DEFAULT_MODES):
    """Fixed-shape data: bump(r/a) J_n(k r) on modes 0, 1, 2 with a = 0.4 R."""
    a = 0.4 * ctx.R if a is None else a
    return [ModeProblem(ctx, n, RadialProfile.resonant_bump(ctx.k, n, a)) for n in modes]


def bump_family(ctx: WaveContext, a: float | None = None, modes: Sequence[int] = DEFAULT_MODES):
    """Non-oscillating data: bump(r/a) on each listed mode."""
    a = 0.4 * ctx.R if a is None else a
    return [ModeProblem(ctx, n, RadialProfile.smooth_bump(a)) for n in modes]


class CellResponses:
    """Exact responses to piecewise-constant data, one column per (mode, cell).

    Norms of any linear combination follow from Gram matrices, so many
    random draws cost one solve per cell.
    """

    def __init__(self, ctx: WaveContext, modes: Sequence[int], cells: int, radius: float | None = None):
        self.ctx = ctx
        self.modes = tuple(int(n) for n in modes)
        self.edges = np.linspace(0.0, ctx.R if radius is None else radius, cells + 1)
        r, w = norm_rule(ctx, 0.0, ctx.R, tuple(self.edges[1:-1]))
        self.h1_gram = {}
        self.l2_gram = {}
        self.f_gram = {}
        for n in self.modes:
            cols_u, cols_d = [], []
            for c in range(cells):
                vals = np.zeros(cells)
                vals[c] = 1.0
                prof = RadialProfile.piecewise_constant(self.edges, vals)
                p = ModeProblem(ctx, n, prof)
                u, up = exact_mode_solution(p, r, derivative=True)
                cols_u.append(u)
                cols_d.append(up)
            U = np.array(cols_u)
            D = np.array(cols_d)
            wt = angular_weight(n) * w * r
            mass = (U * wt) @ U.conj().T
            stiff = ((D * wt) @ D.conj().T + n * n * ((U * wt / r**2) @ U.conj().T)) / ctx.k**2
            self.l2_gram[n] = mass
            self.h1_gram[n] = mass + stiff
            area = 0.5 * (self.edges[1:] ** 2 - self.edges[:-1] ** 2)
            self.f_gram[n] = angular_weight(n) * area

    def ratio(self, coeffs: dict) -> float:
        """H1_k/L2 ratio for data sum_n sum_c coeffs[n][c] 1_cell(r) cos(n theta)."""
        num = den = 0.0
        for n, z in coeffs.items():
            z = np.asarray(z, dtype=complex)
            num += float(np.real(z @ self.h1_gram[n] @ z.conj()))
            den += float(np.sum(self.f_gram[n] * np.abs(z) ** 2))
        if den <= 0:
            raise DegenerateDenominatorError("data has zero L2 norm")
        return math.sqrt(num / den)

    def random_ratios(self, ndraws: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty(ndraws)
        cells = self.edges.size - 1
        for i in range(ndraws):
            coeffs = {n: rng.standard_normal(cells) + 1j * rng.standard_normal(cells) for n in self.modes}
            out[i] = self.ratio(coeffs)
        return out

    def subspace_max(self) -> float:
        """Largest H1_k/L2 ratio attained anywhere in the span of the cells."""
        best = 0.0
        for n in self.modes:
            d = 1.0 / np.sqrt(self.f_gram[n])
            g = d[:, None] * self.h1_gram[n] * d[None, :]
            g = 0.5 * (g + g.conj().T)
            best = max(best, float(np.linalg.eigvalsh(g)[-1]))
        return math.sqrt(best)


# ---------------------------------------------------------------------------
# quasimode


def quasimode_profile(R: float):
    """chi(r/R) = (1 - (r/R)^2)^2 and its first two r-derivatives."""

    def g(r):
        t2 = (r / R) ** 2
        inside = r <= R
        val = np.where(inside, (1 - t2) ** 2, 0.0)
        d1 = np.where(inside, -4.0 * r / R**2 * (1 - t2), 0.0)
        d2 = np.where(inside, -4.0 / R**2 * (1 - t2) + 8.0 * r**2 / R**4, 0.0)
        return val, d1, d2

    return g


def quasimode_modes(ctx: WaveContext, r, nmax: int | None = None):
    """Mode data of u = exp(i k x1) chi(|x|/R) and f = -(k^-2 Lap + 1) u.

    Returns arrays (U, U', f) of shape (nmax+1, len(r)) in the cos(n theta)
    basis: exp(i k r cos t) = J_0 + 2 sum_n i^n J_n cos(n t).
    """
    k = ctx.k
    nmax = int(math.ceil(ctx.kR)) + 40 if nmax is None else nmax
    r = np.asarray(r, dtype=float)
    tab = CylinderTable(nmax, k * r)
    g, g1, g2 = quasimode_profile(ctx.R)(r)
    U = np.empty((nmax + 1, r.size), dtype=complex)
    Up = np.empty_like(U)
    F = np.empty_like(U)
    for n in range(nmax + 1):
        c = 1.0 if n == 0 else 2.0 * (1j) ** n
        j, jp = tab.j(n), tab.jprime(n)
        U[n] = c * j * g
        Up[n] = c * (k * jp * g + j * g1)
        F[n] = -c * (2.0 * k * jp * g1 + j * (g2 + g1 / r)) / k**2
    return U, Up, F


def quasimode_ratio(ctx: WaveContext, nmax: int | None = None) -> float:
    """||u||_{H1_k} / ||f||_{L2} for the plane-wave quasimode; grows like kR."""
    r, w = norm_rule(ctx, 0.0, ctx.R)
    U, Up, F = quasimode_modes(ctx, r, nmax)
    num = den = 0.0
    for n in range(U.shape[0]):
        m = mode_norms_from_values(ctx.k, n, r, w, U[n], Up[n])
        num += m.h1k
        den += float(angular_weight(n) * np.sum(np.abs(F[n]) ** 2 * r * w))
    return math.sqrt(num / den)


# ---------------------------------------------------------------------------
# interpolation of mode solutions onto arbitrary radii


class RadialInterpolant:
    """Piecewise Chebyshev interpolation of (U, U') on [0, rmax].

    Nodes are Chebyshev points of the first kind, so r = 0 is never sampled.
    """

    def __init__(self, func: Callable, rmax: float, width: float, npts: int = 16, breaks=()):
        self.edges = panel_edges(0.0, rmax, width, breaks)
        j = np.arange(npts)
        self._t = -np.cos((2 * j + 1) * np.pi / (2 * npts))
        self._w = (-1.0) ** j * np.sin((2 * j + 1) * np.pi / (2 * npts))
        lo, hl = self.edges[:-1, None], np.diff(self.edges)[:, None]
        nodes = lo + hl * 0.5 * (self._t + 1.0)
        u, du = func(nodes.ravel())
        self.u = np.asarray(u).reshape(nodes.shape)
        self.du = np.asarray(du).reshape(nodes.shape)

    def __call__(self, r) -> tuple[np.ndarray, np.ndarray]:
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        e = np.clip(np.searchsorted(self.edges, flat, side="right") - 1, 0, self.edges.size - 2)
        lo, hi = self.edges[e], self.edges[e + 1]
        t = 2.0 * (flat - lo) / (hi - lo) - 1.0
        diff = t[:, None] - self._t[None, :]
        exact = diff == 0.0
        diff[exact] = 1.0
        c = self._w / diff
        hit = exact.any(axis=1)
        c[hit] = exact[hit].astype(float)
        s = c.sum(axis=1)
        u = np.einsum("ij,ij->i", c, self.u[e]) / s
        du = np.einsum("ij,ij->i", c, self.du[e]) / s
        outside = flat > self.edges[-1]
        u[outside] = 0.0
        du[outside] = 0.0
        return u.reshape(r.shape), du.reshape(r.shape)


def mode_interpolant(p: ModeProblem, rmax: float, npts: int = 16, tol: float = QUAD_TOL) -> RadialInterpolant:
    """Interpolant of the exact mode solution on [0, rmax]."""
    width = min(math.pi / (4.0 * p.ctx.k), rmax / 4.0)
    return RadialInterpolant(lambda r: exact_mode_solution(p, r, derivative=True, tol=tol), rmax, width, npts,
                             p.f.all_breaks)
