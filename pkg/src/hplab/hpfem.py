"""hp finite elements for one angular mode on the radial interval [0, R].

The basis is hat functions plus integrated-Legendre bubbles
(P_j - P_{j-2}) / sqrt(2(2j-1)), j = 2..p, which makes p-enrichment nested.
For n >= 1 the vertex function at r = 0 is dropped so that u(0) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .context import WaveContext, angular_weight
from .errors import DegenerateDenominatorError, GramError, SingularSystemError, ValidationError
from .quadrature import gauss_legendre
from .radial_model import ModeProblem, RadialProfile, exact_mode_solution

_DENSE_LIMIT = 2500


def shape_functions(p: int, t: np.ndarray):
    """Values and t-derivatives of the p+1 local functions at t in [-1, 1].

    Local order: left hat, right hat, bubbles of degree 2..p.
    """
    t = np.asarray(t, dtype=float)
    val = np.empty((p + 1, t.size))
    der = np.empty((p + 1, t.size))
    val[0], val[1] = 0.5 * (1 - t), 0.5 * (1 + t)
    der[0], der[1] = -0.5, 0.5
    if p >= 2:
        leg = [np.ones_like(t), t.copy()]
        for j in range(1, p):
            leg.append(((2 * j + 1) * t * leg[j] - j * leg[j - 1]) / (j + 1))
        for j in range(2, p + 1):
            c = 1.0 / math.sqrt(2.0 * (2 * j - 1))
            val[j] = c * (leg[j] - leg[j - 2])
            der[j] = math.sqrt((2 * j - 1) / 2.0) * leg[j - 1]
    return val, der


class HpSpace:
    """Radial mesh 0 = r_0 < ... < r_M = R with uniform degree p."""

    def __init__(self, edges: Sequence[float], p: int, constrained: bool = False):
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise ValidationError("mesh needs at least two breakpoints")
        h = np.diff(edges)
        if np.any(h <= 0):
            raise ValidationError("mesh elements must have positive length")
        if edges[0] != 0.0:
            raise ValidationError("radial mesh must start at r = 0")
        if h.max() > 2.0 * h.min() * (1 + 1e-12):
            raise ValidationError("mesh is not quasi-uniform (max h > 2 min h)")
        if int(p) < 1:
            raise ValidationError(f"degree must be >= 1, got {p}")
        self.edges = edges
        self.p = int(p)
        self.constrained = bool(constrained)
        M = h.size
        full = np.empty((M, self.p + 1), dtype=np.int64)
        base = np.arange(M) * self.p
        full[:, 0] = base
        full[:, 1] = base + self.p
        for j in range(2, self.p + 1):
            full[:, j] = base + (j - 1)
        # dropped dof becomes -1
        self.dof_table = full - 1 if self.constrained else full
        self.dim = M * self.p + 1 - (1 if self.constrained else 0)

    @classmethod
    def uniform(cls, R: float, h: float, p: int, constrained: bool = False) -> "HpSpace":
        M = max(1, math.ceil(R / h - 1e-12))
        return cls(np.linspace(0.0, R, M + 1), p, constrained)

    @classmethod
    def for_mode(cls, R: float, h: float, p: int, n: int) -> "HpSpace":
        return cls.uniform(R, h, p, constrained=n >= 1)

    @property
    def R(self) -> float:
        return float(self.edges[-1])

    @property
    def h(self) -> float:
        return float(np.diff(self.edges).max())

    @property
    def num_elements(self) -> int:
        return self.edges.size - 1

    def enrich(self, dp: int = 1) -> "HpSpace":
        return HpSpace(self.edges, self.p + dp, self.constrained)

    def refine(self, factor: int = 2) -> "HpSpace":
        M = self.num_elements
        e = np.concatenate([np.linspace(a, b, factor + 1)[:-1] for a, b in zip(self.edges[:-1], self.edges[1:])]
                           + [self.edges[-1:]])
        assert e.size == M * factor + 1
        return HpSpace(e, self.p, self.constrained)

    def quadrature(self, npts: int):
        """Per-element Gauss nodes (M, q), weights (M, q) and reference points (q,)."""
        x, w = gauss_legendre(npts)
        lo = self.edges[:-1, None]
        hl = np.diff(self.edges)[:, None]
        return lo + hl * x, hl * w, 2.0 * x - 1.0

    def evaluate(self, coeffs: np.ndarray, r) -> tuple[np.ndarray, np.ndarray]:
        """Values and r-derivatives of sum_i c_i phi_i at radii r in [0, R]."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        e = np.clip(np.searchsorted(self.edges, r, side="right") - 1, 0, self.num_elements - 1)
        lo, hi = self.edges[e], self.edges[e + 1]
        t = 2.0 * (r - lo) / (hi - lo) - 1.0
        val, der = shape_functions(self.p, t)
        dofs = self.dof_table[e]  # (nr, p+1)
        c = np.concatenate([np.asarray(coeffs), [0.0]])  # index -1 -> 0
        cl = c[np.where(dofs < 0, c.size - 1, dofs)]
        u = np.sum(cl * val.T, axis=1)
        du = np.sum(cl * der.T, axis=1) * 2.0 / (hi - lo)
        return u, du


@dataclass
class System:
    A: sps.csc_matrix
    b: np.ndarray
    space: HpSpace
    problem: ModeProblem
    qorder: int


@dataclass
class DiscreteSolution:
    space: HpSpace
    coefficients: np.ndarray
    mode: int
    residual: float = 0.0

    def __call__(self, r):
        return self.space.evaluate(self.coefficients, r)


MATRIX_EXTRA = 6


def quad_points(ctx: WaveContext, V: HpSpace, extra: int = 0) -> int:
    """Gauss points per element: p + ceil(k h) + 2, plus ``extra``."""
    return V.p + math.ceil(ctx.k * V.h) + 2 + extra


def _element_matrices(V: HpSpace, k: float, n: int, q: int):
    """Local stiffness (with n^2/r^2), mass and H1_k Gram blocks, shape (M, p+1, p+1)."""
    r, w, t = V.quadrature(q)
    val, der = shape_functions(V.p, t)
    jac = 2.0 / np.diff(V.edges)[:, None]
    wr = w * r
    dphi = der[None, :, :] * jac[:, None, :]  # (M, p+1, q)
    stiff = np.einsum("eiq,ejq,eq->eij", dphi, dphi, wr)
    mass = np.einsum("iq,jq,eq->eij", val, val, wr)
    if n:
        stiff = stiff + n * n * np.einsum("iq,jq,eq->eij", val, val, w / r)
    return stiff, mass


def _scatter(V: HpSpace, blocks: np.ndarray) -> sps.csc_matrix:
    dofs = V.dof_table
    rows = np.repeat(dofs, V.p + 1, axis=1).ravel()
    cols = np.tile(dofs, (1, V.p + 1)).ravel()
    vals = blocks.reshape(blocks.shape[0], -1).ravel()
    keep = (rows >= 0) & (cols >= 0)
    return sps.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(V.dim, V.dim)).tocsc()


def _load(V: HpSpace, f: RadialProfile, q: int) -> np.ndarray:
    """b_i = int f phi_i r dr, splitting elements at the profile's breakpoints."""
    x, wq = gauss_legendre(q)
    b = np.zeros(V.dim, dtype=complex)
    cuts = np.array(sorted(set(f.all_breaks)))
    for e in range(V.num_elements):
        lo, hi = V.edges[e], V.edges[e + 1]
        if lo >= f.support:
            break
        inner = cuts[(cuts > lo) & (cuts < hi)]
        pts = np.concatenate([[lo], inner, [hi]])
        a, c = pts[:-1, None], np.diff(pts)[:, None]
        r = (a + c * x).ravel()
        w = (c * wq).ravel()
        t = 2.0 * (r - lo) / (hi - lo) - 1.0
        val, _ = shape_functions(V.p, t)
        loc = val @ (f(r) * r * w)
        dofs = V.dof_table[e]
        m = dofs >= 0
        np.add.at(b, dofs[m], loc[m])
    return b


def assemble(p: ModeProblem, V: HpSpace, extra_quad: int = 0) -> System:
    """A_ij = a_n(phi_j, phi_i) and b_i = int f_n phi_i r dr."""
    ctx = p.ctx
    if abs(V.R - ctx.R) > 1e-12 * ctx.R:
        raise ValidationError("space must cover [0, R]")
    if p.n >= 1 and not V.constrained:
        raise ValidationError("modes n >= 1 need the constraint u(0) = 0")
    # a few points beyond the minimum resolve the n^2/r term near the origin
    q = quad_points(ctx, V, MATRIX_EXTRA + extra_quad)
    stiff, mass = _element_matrices(V, ctx.k, p.n, q)
    A = _scatter(V, stiff / ctx.k**2 - mass).astype(complex).tolil()
    A[V.dim - 1, V.dim - 1] -= p.d.value * ctx.R / ctx.k
    b = _load(V, p.f, max(q, V.p + 2) + 8 + extra_quad)
    return System(A.tocsc(), b, V, p, q)


def gram_matrix(V: HpSpace, k: float, n: int, extra_quad: int = 0) -> sps.csc_matrix:
    """H1_k Gram matrix k^-2 (u', v')_r + k^-2 n^2 (u/r, v/r)_r + (u, v)_r."""
    q = V.p + 2 + MATRIX_EXTRA + extra_quad
    stiff, mass = _element_matrices(V, k, n, q)
    return _scatter(V, stiff / k**2 + mass)


def solve_galerkin(system: System) -> DiscreteSolution:
    A, b = system.A, system.b
    try:
        lu = spla.splu(A)
        x = lu.solve(b)
    except RuntimeError as exc:
        raise SingularSystemError(f"Galerkin matrix is singular (mode {system.problem.n}, "
                                  f"k={system.problem.ctx.k:g}, dim={A.shape[0]}): {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(f"Galerkin solve produced non-finite values (mode {system.problem.n})")
    nb = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b) / nb if nb > 0 else float(np.linalg.norm(A @ x))
    return DiscreteSolution(system.space, x, system.problem.n, res)


# ---------------------------------------------------------------------------
# exact reference and errors


class ModeReference:
    """Exact solution sampled on the Gauss nodes of a space.

    ``values`` may replace the exact solver by a callable r -> (u, u').
    """

    def __init__(self, p: ModeProblem, V: HpSpace, extra_quad: int = 6, values=None):
        self.problem = p
        self.space = V
        q = quad_points(p.ctx, V, extra_quad)
        self.r, self.w, self.t = V.quadrature(q)
        if values is None:
            values = exact_mode_solution(p, self.r.ravel(), derivative=True)
        elif callable(values):
            values = values(self.r.ravel())
        u, du = values
        self.u = np.asarray(u).reshape(self.r.shape)
        self.du = np.asarray(du).reshape(self.r.shape)

    def h1k_products(self, V: HpSpace | None = None) -> np.ndarray:
        """(u, phi_i)_{H1_k} for every basis function of V (same mesh)."""
        V = self.space if V is None else V
        k, n = self.problem.ctx.k, self.problem.n
        val, der = shape_functions(V.p, self.t)
        jac = 2.0 / np.diff(V.edges)[:, None]
        wr = self.w * self.r
        loc = (np.einsum("eq,iq->ei", self.u * wr, val)
               + np.einsum("eq,iq,e->ei", self.du * wr, der, jac[:, 0]) / k**2)
        if n:
            loc = loc + n * n * np.einsum("eq,iq->ei", self.u * self.w / self.r, val) / k**2
        out = np.zeros(V.dim, dtype=complex)
        dofs = V.dof_table
        m = dofs >= 0
        np.add.at(out, dofs[m], loc[m])
        return out

    def errors(self, coeffs, V: HpSpace | None = None) -> tuple[float, float]:
        """(H1_k error, L2 error) of a discrete function, per mode (no angular weight)."""
        V = self.space if V is None else V
        uh, duh = V.evaluate(coeffs, self.r.ravel())
        eu = self.u.ravel() - uh
        ed = self.du.ravel() - duh
        r, w = self.r.ravel(), self.w.ravel()
        k, n = self.problem.ctx.k, self.problem.n
        l2 = float(np.sum(np.abs(eu) ** 2 * r * w))
        grad = np.abs(ed) ** 2 + (n * n) * np.abs(eu) ** 2 / r**2
        h1 = l2 + float(np.sum(grad * r * w)) / k**2
        return math.sqrt(h1), math.sqrt(l2)

    def norm_h1k(self) -> float:
        return self.errors(np.zeros(self.space.dim))[0]


def _spd_solver(G: sps.csc_matrix):
    """Factor a Hermitian positive-definite Gram matrix; GramError otherwise."""
    if G.shape[0] <= _DENSE_LIMIT:
        try:
            fac = scipy.linalg.cho_factor(G.toarray(), lower=True)
        except np.linalg.LinAlgError as exc:
            raise GramError(f"Gram matrix is not positive definite: {exc}") from exc
        return lambda rhs: scipy.linalg.cho_solve(fac, rhs)
    lu = spla.splu(G, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options={"SymmetricMode": True})
    if np.any(lu.U.diagonal().real <= 0):
        raise GramError("Gram matrix is not positive definite")
    return lu.solve


def best_approximation(ref: ModeReference, V: HpSpace | None = None):
    """H1_k-orthogonal projection of the exact solution onto V; returns (coeffs, error)."""
    V = ref.space if V is None else V
    ctx = ref.problem.ctx
    G = gram_matrix(V, ctx.k, ref.problem.n)
    c = _spd_solver(G)(ref.h1k_products(V))
    return c, ref.errors(c, V)[0]


def best_approximation_error(u_exact, V: HpSpace, ctx: WaveContext) -> float:
    """min over V of ||u - v||_{H1_k} for u given as a ModeProblem or ModeReference."""
    ref = u_exact if isinstance(u_exact, ModeReference) else ModeReference(u_exact, V)
    if ref.problem.ctx != ctx:
        raise ValidationError("context mismatch")
    return best_approximation(ref, V)[1]


def galerkin_error(ref: ModeReference, sol: DiscreteSolution) -> tuple[float, float]:
    return ref.errors(sol.coefficients, sol.space)


def galerkin_orthogonality(system: System, sol: DiscreteSolution, ref: ModeReference) -> float:
    """max_i |a_n(u - u_N, phi_i)| / (||u||_{H1_k} ||phi_i||_{H1_k})."""
    V, p = system.space, system.problem
    k, n = p.ctx.k, p.n
    val, der = shape_functions(V.p, ref.t)
    jac = 2.0 / np.diff(V.edges)[:, None]
    wr = ref.w * ref.r
    loc = (np.einsum("eq,iq,e->ei", ref.du * wr, der, jac[:, 0]) / k**2
           - np.einsum("eq,iq->ei", ref.u * wr, val))
    if n:
        loc = loc + n * n * np.einsum("eq,iq->ei", ref.u * ref.w / ref.r, val) / k**2
    au = np.zeros(V.dim, dtype=complex)
    m = V.dof_table >= 0
    np.add.at(au, V.dof_table[m], loc[m])
    uR = exact_mode_solution(p, p.ctx.R)
    au[-1] -= p.d.value * p.ctx.R * uR / k
    resid = au - system.A @ sol.coefficients
    gdiag = np.sqrt(gram_matrix(V, k, n).diagonal())
    return float(np.max(np.abs(resid) / gdiag) / ref.norm_h1k())


# ---------------------------------------------------------------------------
# constants


def continuity_constant(system: System) -> float:
    """||L^-1 A L^-H||_2 with G = L L^H the H1_k Gram matrix: sup |a(u,v)|/(|u||v|) on V."""
    V, p = system.space, system.problem
    G = gram_matrix(V, p.ctx.k, p.n).toarray()
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise GramError(str(exc)) from exc
    X = scipy.linalg.solve_triangular(L, system.A.toarray(), lower=True)
    Y = scipy.linalg.solve_triangular(L, X.conj().T, lower=True).conj().T
    return float(np.linalg.norm(Y, 2))


def garding_gap(system: System, v: np.ndarray) -> float:
    """Re a(v,v) - (||v||^2_{H1_k} - 2||v||^2_{L2}); nonnegative by the Garding inequality."""
    V, p = system.space, system.problem
    k, n = p.ctx.k, p.n
    stiff, mass = _element_matrices(V, k, n, quad_points(p.ctx, V, MATRIX_EXTRA))
    Mm = _scatter(V, mass)
    G = _scatter(V, stiff / k**2 + mass)
    a = np.vdot(v, system.A.T @ v)  # a(v,v) = sum_ij v_j conj(v_i) A_ij
    return float(a.real - (np.vdot(v, G @ v).real - 2.0 * np.vdot(v, Mm @ v).real))


@dataclass
class ModeDiagnostics:
    """Per-mode squared errors (angular weight included)."""

    n: int
    err_g2: float
    err_b2: float
    err_l2_2: float
    norm2: float
    dof: int
    residual: float


def mode_diagnostics(p: ModeProblem, V: HpSpace, ref: ModeReference | None = None) -> ModeDiagnostics:
    ref = ModeReference(p, V) if ref is None else ref
    sol = solve_galerkin(assemble(p, V))
    eg, el2 = galerkin_error(ref, sol)
    _, eb = best_approximation(ref, V)
    w = angular_weight(p.n)
    return ModeDiagnostics(p.n, w * eg**2, w * eb**2, w * el2**2, w * ref.norm_h1k() ** 2, V.dim, sol.residual)


def quasioptimality_constant(k: float, spaces: dict, problems: Sequence[ModeProblem],
                             diagnostics: Sequence[ModeDiagnostics] | None = None) -> float:
    """Root-sum-of-squares Galerkin error over root-sum-of-squares best error."""
    diags = diagnostics or [mode_diagnostics(p, spaces[p.n]) for p in problems]
    num = math.sqrt(sum(d.err_g2 for d in diags))
    den = math.sqrt(sum(d.err_b2 for d in diags))
    if den <= 1e-13 * max(1.0, math.sqrt(sum(d.norm2 for d in diags))):
        raise DegenerateDenominatorError("best-approximation error vanishes; C_qo undefined")
    return num / den


def eta_estimate(ctx: WaveContext, V: HpSpace, n: int, ndata: int = 32, cells: int = 16,
                 rng: np.random.Generator | None = None) -> float:
    """Sampled lower estimate of eta for mode n on V.

    S*f is conj(u[conj f]); conjugation commutes with the real basis, so the
    best-approximation error of S*f equals that of u[conj f]. Responses to
    each cell indicator are projected once and random data combine them.
    """
    if ndata < 1:
        raise ValidationError("eta estimate needs at least one data vector")
    rng = np.random.default_rng(0) if rng is None else rng
    resid, fmass = cell_residual_gram(ctx, V, n, cells)
    best = 0.0
    for _ in range(ndata):
        z = rng.standard_normal(cells) + 1j * rng.standard_normal(cells)
        num = float(np.real(z @ resid @ z.conj()))
        den = float(np.sum(fmass * np.abs(z) ** 2))
        best = max(best, math.sqrt(max(num, 0.0) / den))
    return best


def cell_residual_gram(ctx: WaveContext, V: HpSpace, n: int, cells: int = 16):
    """H1_k Gram of (u_c - Pi u_c) for cell-indicator data, and the cell L2 masses."""
    edges = np.linspace(0.0, ctx.R, cells + 1)
    G = gram_matrix(V, ctx.k, n)
    solve = _spd_solver(G)
    errs = []
    for c in range(cells):
        vals = np.zeros(cells)
        vals[c] = 1.0
        p = ModeProblem(ctx, n, RadialProfile.piecewise_constant(edges, vals))
        ref = ModeReference(p, V)
        coeffs = solve(ref.h1k_products(V))
        uh, duh = V.evaluate(coeffs, ref.r.ravel())
        errs.append((ref.u.ravel() - uh, ref.du.ravel() - duh))
    r, w = ref.r.ravel(), ref.w.ravel()
    E = np.array([e for e, _ in errs])
    D = np.array([d for _, d in errs])
    wt = r * w
    gram = (E * wt) @ E.conj().T + ((D * wt) @ D.conj().T + n * n * ((E * wt / r**2) @ E.conj().T)) / ctx.k**2
    fmass = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2)
    return gram, fmass


def overrefined_reference(p: ModeProblem, V: HpSpace) -> DiscreteSolution:
    """Galerkin solution on (p+2, h/4), used as a cross-check of the exact reference."""
    W = V.refine(4).enrich(2)
    return solve_galerkin(assemble(p, W))
