"""Scaled Fourier transform on periodic grids, Fourier multipliers and the
low/high frequency splitting of cut-off Helmholtz solutions.

The transform is F_k v(xi) = int exp(-i k x.xi) v(x) dx, realised on the grid
x_j = -L + j dx (j = 0..N-1) with frequencies xi_m = 2 pi m / (2 k L).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft

from .context import WaveContext
from .errors import EllipticityError, GridError, SymbolBoundError, ValidationError
from .radial_model import QUAD_TOL, ModeProblem, csol_bound, data_norm2, mode_interpolant, resonant_family

ALPHA_MAX = 6
_BOUND_SLACK = 1e-12


# ---------------------------------------------------------------------------
# grids and fields


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid on [-L, L)^dim for wavenumber ctx.k."""

    ctx: WaveContext
    L: float
    N: int
    dim: int = 2

    def __post_init__(self):
        if self.N < 2 or self.N % 2:
            raise GridError(f"N must be even and >= 2, got {self.N}")
        if self.dim not in (1, 2):
            raise GridError(f"grid dimension must be 1 or 2, got {self.dim}")
        if not self.L > 0:
            raise GridError("box half-width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return 2.0 * math.pi / (self.ctx.k * 2.0 * self.L)

    @property
    def cell(self) -> float:
        return self.dx**self.dim

    @property
    def freq_cell(self) -> float:
        return self.dxi**self.dim

    @property
    def x1d(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @property
    def xi1d(self) -> np.ndarray:
        """Frequencies in FFT order."""
        return scipy.fft.fftfreq(self.N, d=1.0 / self.N) * self.dxi

    @property
    def xi_max(self) -> float:
        return self.N / 2 * self.dxi

    def coords(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.x1d] * self.dim), indexing="ij")

    def freqs(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.xi1d] * self.dim), indexing="ij")

    def _phase(self) -> np.ndarray:
        # exp(i k L xi_m) = (-1)^m
        m = np.rint(scipy.fft.fftfreq(self.N, d=1.0 / self.N)).astype(int)
        s = np.where(m % 2, -1.0, 1.0)
        if self.dim == 1:
            return s
        return s[:, None] * s[None, :]


@dataclass
class SpectralField:
    grid: SpectralGrid
    samples: np.ndarray
    domain: str = "space"

    def __post_init__(self):
        shape = (self.grid.N,) * self.grid.dim
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != shape:
            raise ValidationError(f"samples have shape {self.samples.shape}, grid needs {shape}")
        if self.domain not in ("space", "freq"):
            raise ValidationError("domain must be 'space' or 'freq'")


def scaled_ft(v: SpectralField) -> SpectralField:
    """Forward transform with continuum normalisation (times the cell volume)."""
    if v.domain != "space":
        raise ValidationError("forward transform expects a space-domain field")
    g = v.grid
    F = scipy.fft.fftn(v.samples) * g.cell * g._phase()
    return SpectralField(g, F, "freq")


def inverse_ft(F: SpectralField) -> SpectralField:
    if F.domain != "freq":
        raise ValidationError("inverse transform expects a frequency-domain field")
    g = F.grid
    v = scipy.fft.ifftn(F.samples * g._phase()) / g.cell
    return SpectralField(g, v, "space")


def l2_norm(v: SpectralField) -> float:
    """Spatial L2 norm (sum |v|^2 dx^d)^(1/2) of a space-domain field."""
    return math.sqrt(float(np.sum(np.abs(v.samples) ** 2)) * v.grid.cell)


def spectral_l2(F: SpectralField, weight=None) -> float:
    """(k/2pi)^(d/2) (sum weight |F|^2 dxi^d)^(1/2)."""
    g = F.grid
    a2 = np.abs(F.samples) ** 2
    if weight is not None:
        a2 = a2 * weight
    return math.sqrt((g.ctx.k / (2 * math.pi)) ** g.dim * float(np.sum(a2)) * g.freq_cell)


def bracket(grid: SpectralGrid) -> np.ndarray:
    """<xi> = (1 + |xi|^2)^(1/2) on the frequency grid."""
    return np.sqrt(1.0 + sum(x * x for x in grid.freqs()))


def sobolev_norm(v: SpectralField, s: float) -> float:
    """|||v|||_{H^s_k} from the Fourier side."""
    F = v if v.domain == "freq" else scaled_ft(v)
    return spectral_l2(F, bracket(F.grid) ** (2 * s))


def multi_indices(dim: int, order: int) -> list[tuple]:
    """All alpha with |alpha| = order, lexicographically descending."""
    return [a for a in itertools.product(range(order, -1, -1), repeat=dim) if sum(a) == order]


def derivative_norm(F: SpectralField, alpha: Sequence[int]) -> float:
    """||(k^-1 d)^alpha v||_{L2} = (k/2pi)^(d/2) ||xi^alpha F_k v||."""
    w = np.ones(F.samples.shape)
    for x, a in zip(F.grid.freqs(), alpha):
        w = w * x ** (2 * a)
    return spectral_l2(F, w)


def multi_norm(v: SpectralField, s: int) -> float:
    """||v||_{H^s_k} = (sum_{|alpha| <= s} ||(k^-1 d)^alpha v||^2)^(1/2)."""
    F = v if v.domain == "freq" else scaled_ft(v)
    xs = F.grid.freqs()
    w = np.zeros(F.samples.shape)
    for order in range(s + 1):
        for alpha in multi_indices(F.grid.dim, order):
            t = np.ones(F.samples.shape)
            for x, a in zip(xs, alpha):
                t = t * x ** (2 * a)
            w = w + t
    return spectral_l2(F, w)


def norm_equivalence_constants(grid: SpectralGrid, s: int) -> tuple[float, float]:
    """Extremes over the grid of <xi>^(2s) / sum_{|alpha| <= s} xi^(2 alpha)."""
    xs = grid.freqs()
    den = np.zeros(xs[0].shape)
    for order in range(s + 1):
        for alpha in multi_indices(grid.dim, order):
            t = np.ones(xs[0].shape)
            for x, a in zip(xs, alpha):
                t = t * x ** (2 * a)
            den = den + t
    q = bracket(grid) ** (2 * s) / den
    return float(q.min()), float(q.max())


# ---------------------------------------------------------------------------
# symbols


@dataclass
class FourierSymbol:
    """a(xi) with the declared bound |a(xi)| <= bound * <xi>^order."""

    order: float
    rule: Callable[[Sequence[np.ndarray]], np.ndarray]
    bound: float
    name: str = "symbol"
    _cache: dict = field(default_factory=dict, repr=False)

    def values(self, grid: SpectralGrid) -> np.ndarray:
        key = (grid.N, grid.L, grid.dim, grid.ctx.k)
        if key not in self._cache:
            a = np.asarray(self.rule(grid.freqs()), dtype=complex) * np.ones((grid.N,) * grid.dim)
            lim = self.bound * bracket(grid) ** self.order
            excess = np.abs(a) - lim * (1 + _BOUND_SLACK)
            if np.any(excess > 0):
                raise SymbolBoundError(f"{self.name}: |a| exceeds {self.bound:g}<xi>^{self.order:g} "
                                       f"by {excess.max():.3e} on the grid")
            self._cache[key] = a
        return self._cache[key]

    def __call__(self, *xi) -> np.ndarray:
        return np.asarray(self.rule([np.asarray(x, dtype=float) for x in xi]), dtype=complex)

    def times(self, other: "FourierSymbol") -> "FourierSymbol":
        return FourierSymbol(self.order + other.order, lambda xs: self.rule(xs) * other.rule(xs),
                             self.bound * other.bound, f"({self.name})({other.name})")


def _absxi2(xs) -> np.ndarray:
    return sum(np.asarray(x) ** 2 for x in xs)


def symbol_one() -> FourierSymbol:
    return FourierSymbol(0, lambda xs: np.ones_like(np.asarray(xs[0]), dtype=complex), 1.0, "1")


def symbol_helmholtz() -> FourierSymbol:
    """p(xi) = |xi|^2 - 1, the symbol of -k^-2 Lap - 1."""
    return FourierSymbol(2, lambda xs: _absxi2(xs) - 1.0, 1.0, "|xi|^2-1")


def symbol_elliptic() -> FourierSymbol:
    """|xi|^2 + 1, the symbol of -k^-2 Lap + 1."""
    return FourierSymbol(2, lambda xs: _absxi2(xs) + 1.0, 1.0, "|xi|^2+1")


def symbol_bracket(s: float) -> FourierSymbol:
    return FourierSymbol(s, lambda xs: (1.0 + _absxi2(xs)) ** (s / 2.0), 1.0, f"<xi>^{s:g}")


def _exp_inv(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 1 for t <= 0, 0 for t >= 1, built from exp(-1/t)."""
    a, b = _exp_inv(1.0 - np.asarray(t, dtype=float)), _exp_inv(np.asarray(t, dtype=float))
    return a / (a + b)


def smooth_step_derivs(t):
    """smooth_step and its first two derivatives."""
    t = np.asarray(t, dtype=float)
    s = 1.0 - t

    def e_and_derivs(x):
        e = _exp_inv(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = np.where(x > 0, e / np.where(x > 0, x, 1.0) ** 2, 0.0)
            d2 = np.where(x > 0, e * (1.0 / np.where(x > 0, x, 1.0) ** 4 - 2.0 / np.where(x > 0, x, 1.0) ** 3), 0.0)
        return e, d1, d2

    A, A1, A2 = e_and_derivs(s)
    A1, A2 = -A1, A2  # d/dt of e(1 - t)
    B, B1, B2 = e_and_derivs(t)
    D = A + B
    num = A1 * B - A * B1
    num1 = A2 * B - A * B2
    val = A / D
    d1 = num / D**2
    d2 = (num1 * D - 2.0 * num * (A1 + B1)) / D**3
    return val, d1, d2


def cutoff_symbol(lam: float, kind: str = "smooth") -> FourierSymbol:
    """chi_lambda: the indicator of |xi| <= lam, or its smooth version dropping to 0 at 2 lam."""
    if not lam > 1:
        raise ValidationError(f"cutoff lambda must exceed 1, got {lam}")
    if kind == "sharp":
        return FourierSymbol(0, lambda xs: (np.sqrt(_absxi2(xs)) <= lam).astype(complex), 1.0, f"chi_{lam:g}")
    if kind == "smooth":
        return FourierSymbol(0, lambda xs: smooth_step((np.sqrt(_absxi2(xs)) - lam) / lam).astype(complex),
                             1.0, f"chi~_{lam:g}")
    raise ValidationError(f"cutoff kind must be 'sharp' or 'smooth', got {kind!r}")


def complement(a: FourierSymbol) -> FourierSymbol:
    """1 - a for a cutoff a with values in [0, 1]."""
    return FourierSymbol(0, lambda xs: 1.0 - a.rule(xs), 1.0, f"1-{a.name}")


def split_constant(lam: float, kind: str) -> float:
    """sup |xi| over the cutoff's support: lam (sharp) or 2 lam (smooth)."""
    return lam if kind == "sharp" else 2.0 * lam


def ellipticity_constant(lam0: float) -> float:
    """C with ||xi|^2 - 1| >= C <xi>^2 for |xi| >= lam0: (1 + 2/(lam0^2 - 1))^-1."""
    if not lam0 > 1:
        raise ValidationError("lambda_0 must exceed 1")
    return 1.0 / (1.0 + 2.0 / (lam0 * lam0 - 1.0))


# ---------------------------------------------------------------------------
# multipliers


def apply_multiplier(a: FourierSymbol, v: SpectralField) -> SpectralField:
    """a(k^-1 D) v = F_k^-1 (a F_k v)."""
    F = scaled_ft(v) if v.domain == "space" else v
    return inverse_ft(SpectralField(F.grid, a.values(F.grid) * F.samples, "freq"))


def random_bandlimited(grid: SpectralGrid, rng: np.random.Generator, band: float = 3.0) -> SpectralField:
    """Random field whose transform is supported in |xi| <= band."""
    shape = (grid.N,) * grid.dim
    F = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    F[np.sqrt(_absxi2(grid.freqs())) > band] = 0.0
    return inverse_ft(SpectralField(grid, F, "freq"))


def mapping_norm_check(a: FourierSymbol, s: float, grid: SpectralGrid, trials: int = 100,
                       rng: np.random.Generator | None = None, band: float = 3.0) -> float:
    """max over random fields of |||a v|||_{H^(s-m)} / |||v|||_{H^s}; at most the declared bound."""
    rng = np.random.default_rng(0) if rng is None else rng
    best = 0.0
    for _ in range(trials):
        v = random_bandlimited(grid, rng, band)
        F = scaled_ft(v)
        aF = SpectralField(grid, a.values(grid) * F.samples, "freq")
        best = max(best, sobolev_norm(aF, s - a.order) / sobolev_norm(F, s))
    if best > a.bound * (1 + 1e-10):
        raise SymbolBoundError(f"{a.name}: mapping ratio {best:.6g} exceeds declared bound {a.bound:g}")
    return best


def elliptic_factorization(a: FourierSymbol, b: FourierSymbol, c: float, grid: SpectralGrid) -> FourierSymbol:
    """q = a / b on supp a (0 elsewhere), after checking |b| >= c <xi>^m_b there."""
    av, bv = a.values(grid), b.values(grid)
    supp = av != 0
    lower = c * bracket(grid) ** b.order
    bad = supp & (np.abs(bv) < lower * (1 - 1e-12))
    if np.any(bad):
        xs = [x[bad][0] for x in grid.freqs()]
        raise EllipticityError(f"|b| < {c:g}<xi>^{b.order:g} on supp a, e.g. at xi = {xs}")

    def rule(xs):
        av_, bv_ = np.asarray(a.rule(xs), dtype=complex), np.asarray(b.rule(xs), dtype=complex)
        out = np.zeros(np.broadcast(av_, bv_).shape, dtype=complex)
        nz = np.broadcast_to(av_ != 0, out.shape)
        out[nz] = (np.broadcast_to(av_, out.shape)[nz] / np.broadcast_to(bv_, out.shape)[nz])
        return out

    return FourierSymbol(a.order - b.order, rule, a.bound / c, f"({a.name})/({b.name})")


# ---------------------------------------------------------------------------
# spatial cutoff and grid design


def spatial_cutoff(R: float, outer: float = 1.75):
    """phi(r) = 1 on B_R, 0 outside B_{outer R}; returns (phi, phi', phi'') as functions of r."""
    w = (outer - 1.0) * R

    def phi(r):
        v, d1, d2 = smooth_step_derivs((np.asarray(r, dtype=float) - R) / w)
        return v, d1 / w, d2 / (w * w)

    return phi


def design_grid(ctx: WaveContext, lam: float = 2.0, kind: str = "smooth", ppw: float = 12.0,
                min_n: int = 64) -> SpectralGrid:
    """Grid with max |xi| >= 4 lam, >= ppw points per wavelength and L = 2R + 4 dx."""
    base = 2.0 * ctx.R
    need = max(8.0 * lam * ctx.k * base / math.pi, 2.0 * ppw * ctx.k * base / (2.0 * math.pi), min_n)
    N = int(need) + 8
    while True:
        N = scipy.fft.next_fast_len(N)
        N += N % 2
        L = base / (1.0 - 8.0 / N)
        g = SpectralGrid(ctx, L, N, 2)
        if g.xi_max >= 4 * lam and g.dx <= 2 * math.pi / (ppw * ctx.k):
            return g
        N += 2


def check_grid(grid: SpectralGrid, lam: float):
    if grid.L < 2.0 * grid.ctx.R + 4.0 * grid.dx * (1 - 1e-12):
        raise GridError(f"box half-width {grid.L:g} leaves fewer than 4 cells of padding beyond 2R")
    if grid.xi_max < 4.0 * lam:
        raise GridError(f"max |xi| = {grid.xi_max:g} is below 4 lambda = {4 * lam:g}")


# ---------------------------------------------------------------------------
# splitting


@dataclass
class SplitResult:
    u_low: SpectralField
    u_high: SpectralField
    phi_u: SpectralField
    lam: float
    kind: str
    high_h2: float
    full_h2: float
    low_table: dict

    def reconstruction_error(self) -> float:
        d = self.u_low.samples + self.u_high.samples - self.phi_u.samples
        return float(np.max(np.abs(d)) / max(np.max(np.abs(self.phi_u.samples)), 1e-300))


def split(phi_u: SpectralField, lam: float = 2.0, kind: str = "smooth", alpha_max: int = ALPHA_MAX) -> SplitResult:
    """u_low = Pi_L(phi u), u_high = (I - Pi_L)(phi u) with norm tables."""
    g = phi_u.grid
    check_grid(g, lam)
    chi = cutoff_symbol(lam, kind)
    F = scaled_ft(phi_u)
    cv = chi.values(g)
    Flow = SpectralField(g, cv * F.samples, "freq")
    Fhigh = SpectralField(g, (1.0 - cv) * F.samples, "freq")
    table = {}
    for order in range(alpha_max + 1):
        for alpha in multi_indices(g.dim, order):
            table[alpha] = derivative_norm(Flow, alpha)
    return SplitResult(inverse_ft(Flow), inverse_ft(Fhigh), phi_u, lam, kind,
                       multi_norm(Fhigh, 2), multi_norm(F, 2), table)


@dataclass
class DiskSamples:
    """Exact solution of mode-separated disk data sampled on a spectral grid.

    ``u`` and ``u_r`` are kept on B_2R; ``psi`` tapers them to zero between
    the support of phi and 2R so that psi*u is smooth and periodic.
    """

    grid: SpectralGrid
    u: np.ndarray
    u_r: np.ndarray
    f: np.ndarray
    phi: np.ndarray
    phi_r: np.ndarray
    phi_rr: np.ndarray
    psi: np.ndarray
    r: np.ndarray
    f_norm: float

    @property
    def phi_u(self) -> SpectralField:
        return SpectralField(self.grid, self.phi * self.u)


def sample_disk_solution(grid: SpectralGrid, problems: Sequence[ModeProblem], outer: float = 1.75,
                         tol: float = QUAD_TOL) -> DiskSamples:
    ctx = grid.ctx
    x1, x2 = grid.coords()
    r = np.hypot(x1, x2)
    th = np.arctan2(x2, x1)
    rmax = 2.0 * ctx.R
    inside = r < rmax
    ri = r[inside]
    u = np.zeros(r.shape, dtype=complex)
    ur = np.zeros(r.shape, dtype=complex)
    f = np.zeros(r.shape, dtype=complex)
    fn2 = 0.0
    for p in problems:
        U, Ur = mode_interpolant(p, rmax, tol=tol)(ri)
        c = np.cos(p.n * th[inside])
        u[inside] += U * c
        ur[inside] += Ur * c
        f += p.f(r) * np.cos(p.n * th)
        fn2 += data_norm2(p)
    phi, phi_r, phi_rr = spatial_cutoff(ctx.R, outer)(r)
    psi = smooth_step((r - outer * ctx.R) / ((2.0 - outer) * ctx.R))
    return DiskSamples(grid, u, ur, f, phi, phi_r, phi_rr, psi, r, math.sqrt(fn2))


def commutator_residual(s: DiskSamples) -> tuple[float, float]:
    """Check P(phi u) - phi P u - [P, phi] u = 0, [P, phi]u = -k^-2 (u Lap phi + 2 grad phi . grad u).

    P u is applied spectrally to psi*u, which equals u wherever phi is nonzero.
    Returns (max residual relative to max |P(phi u)|, max |[P,phi]u| on B_R
    and outside B_2R).
    """
    g = s.grid
    k = g.ctx.k
    P = symbol_helmholtz()
    lhs = apply_multiplier(P, s.phi_u).samples
    Pu = apply_multiplier(P, SpectralField(g, s.psi * s.u)).samples
    with np.errstate(divide="ignore", invalid="ignore"):
        lap_phi = s.phi_rr + np.where(s.r > 0, s.phi_r / np.where(s.r > 0, s.r, 1.0), 0.0)
    comm = -(s.u * lap_phi + 2.0 * s.phi_r * s.u_r) / k**2
    rel = float(np.max(np.abs(lhs - s.phi * Pu - comm)) / np.max(np.abs(lhs)))
    outside = (s.r <= g.ctx.R) | (s.r >= 2.0 * g.ctx.R)
    return rel, float(np.max(np.abs(comm[outside]))) if outside.any() else 0.0


@dataclass
class SplitReport:
    k: float
    lam: float
    kind: str
    rho_high: float
    rho_full: float
    ratio_low: dict
    csol_2r: float
    reconstruction: float


def splitting_bounds_report(ks: Sequence[float], R: float = 1.0, lam: float = 2.0, kind: str = "smooth",
                            family=resonant_family) -> list[SplitReport]:
    """Per k: rho_high, rho_full and ||(k^-1 d)^alpha u_low|| / (C_A^|alpha| ||f||).

    C_A is the cutoff's support radius: lam for the sharp cutoff, 2 lam for
    the smooth one.
    """
    out = []
    for k in ks:
        ctx = WaveContext(float(k), R)
        grid = design_grid(ctx, lam, kind)
        s = sample_disk_solution(grid, family(ctx))
        res = split(s.phi_u, lam, kind)
        ca = split_constant(lam, kind)
        ratios = {a: v / (ca ** sum(a) * s.f_norm) for a, v in res.low_table.items()}
        out.append(SplitReport(float(k), lam, kind, res.high_h2 / s.f_norm, res.full_h2 / s.f_norm, ratios,
                               csol_bound(2.0 * ctx.kR), res.reconstruction_error()))
    return out


def split_csv_rows(reports: Sequence[SplitReport]) -> list[list[str]]:
    rows = []
    for rep in reports:
        for alpha, v in rep.ratio_low.items():
            rows.append([f"{rep.k:.17g}", f"{rep.lam:.17g}", ":".join(str(a) for a in alpha), f"{v:.17g}",
                         f"{rep.rho_high:.17g}", f"{rep.rho_full:.17g}"])
    return rows


SPLIT_HEADER = ["k", "lambda", "alpha_multi", "ratio_low", "rho_high", "rho_full"]
