"""Integer-order Bessel and Hankel functions of real positive argument.

J_n comes from Miller's backward recurrence normalised with the identity
J_0 + 2 sum_k J_2k = 1; Y_0 and Y_1 come from Neumann series over the same
J_n values and Y_n from forward recurrence. Both recurrences rescale on the
fly, so every value is held as ``mantissa * 2**exponent`` and orders far
beyond the argument stay representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BesselOverflowError, DomainError

MAX_ORDER = 500
EULER_GAMMA = 0.57721566490153286061
_RESCALE_BITS = 500
_BIG = 2.0 ** _RESCALE_BITS
_SMALL = 2.0 ** -_RESCALE_BITS


@dataclass(frozen=True)
class CylinderPair:
    """J_n, Y_n and their derivatives at one argument.

    True values are ``j * 2**j_exp`` (also ``jprime``) and ``y * 2**y_exp``
    (also ``yprime``). Plain evaluations have both exponents equal to zero.
    """

    order: int
    argument: float
    j: complex
    y: float
    jprime: float
    yprime: float
    j_exp: int = 0
    y_exp: int = 0

    def wronskian(self) -> float:
        """J Y' - J' Y; exact in the graded representation since exponents cancel."""
        scale = math.ldexp(1.0, self.j_exp + self.y_exp)
        return (self.j.real * self.yprime - self.jprime * self.y) * scale


def _miller_start(nmax: int, xmax: float) -> int:
    start = max(nmax, math.ceil(xmax)) + 20 + math.ceil(15.0 * max(xmax, 1.0) ** (1.0 / 3.0))
    return start + (start % 2)


class CylinderTable:
    """J_n, Y_n (n = 0..nmax) and derivatives at an array of arguments.

    Arrays are indexed ``[n, i]``. ``jm * 2**je`` is J_n(x_i); ``ym * 2**ye``
    is Y_n(x_i); the derivative mantissas ``jpm``/``ypm`` share the exponent of
    the function value of the same order.
    """

    def __init__(self, nmax: int, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.ndim != 1:
            x = x.ravel()
        if not np.all(np.isfinite(x)) or np.any(x <= 0):
            raise DomainError("Bessel functions are evaluated only for finite x > 0")
        if nmax < 0 or nmax > MAX_ORDER:
            raise DomainError(f"order must lie in [0, {MAX_ORDER}], got {nmax}")
        self.nmax = int(nmax)
        self.x = x
        top = max(self.nmax, 1) + 1
        self._compute(top)

    def _compute(self, top: int):
        x = self.x
        m = x.size
        start = _miller_start(top, float(x.max()))

        raw = np.zeros((top + 1, m))
        shift = np.zeros((top + 1, m), dtype=np.int64)
        v_next = np.zeros(m)
        v = np.ones(m)
        s = np.zeros(m, dtype=np.int64)
        norm = np.zeros(m)
        neu0 = np.zeros(m)
        neu1 = np.zeros(m)

        def accumulate(idx, val):
            # Normalisation J_0 + 2 sum J_2j, and the Neumann sums for Y_0
            # (sum (-1)^j J_2j / j) and Y_1 (sum (-1)^j (J_{2j-1} - J_{2j+1}) / j).
            nonlocal norm, neu0, neu1
            if idx == 0:
                norm = norm + val
            elif idx % 2 == 0:
                j = idx // 2
                norm = norm + 2.0 * val
                neu0 = neu0 + (-1.0 if j % 2 else 1.0) * val / j
            else:
                jp = (idx + 1) // 2
                neu1 = neu1 + (-1.0 if jp % 2 else 1.0) * val / jp
                jq = (idx - 1) // 2
                if jq >= 1:
                    neu1 = neu1 - (-1.0 if jq % 2 else 1.0) * val / jq

        accumulate(start, v)
        for n in range(start, 0, -1):
            v_prev = (2.0 * n / x) * v - v_next
            idx = n - 1
            accumulate(idx, v_prev)
            v_next, v = v, v_prev
            big = np.abs(v) > _BIG
            if big.any():
                v = np.where(big, v * _SMALL, v)
                v_next = np.where(big, v_next * _SMALL, v_next)
                norm = np.where(big, norm * _SMALL, norm)
                neu0 = np.where(big, neu0 * _SMALL, neu0)
                neu1 = np.where(big, neu1 * _SMALL, neu1)
                s = s + np.where(big, _RESCALE_BITS, 0)
            if idx <= top:
                raw[idx] = v
                shift[idx] = s
            if idx + 1 <= top:
                # v_next changed scale with v; keep its stored copy consistent
                raw[idx + 1] = v_next
                shift[idx + 1] = s

        s0 = shift[0].copy()
        jm = raw / norm
        je = shift - s0
        j0 = jm[0]
        j1 = np.ldexp(jm[1], je[1])
        log_term = np.log(x / 2.0) + EULER_GAMMA
        y0 = (2.0 / np.pi) * (log_term * j0 - 2.0 * neu0 / norm)
        y1 = (2.0 / np.pi) * (log_term * j1 - j0 / x + neu1 / norm)

        ym = np.zeros((top + 1, m))
        ye = np.zeros((top + 1, m), dtype=np.int64)
        ym[0], ym[1] = y0, y1
        t = np.zeros(m, dtype=np.int64)
        y_prev, y_cur = y0.copy(), y1.copy()
        for n in range(1, top):
            y_new = (2.0 * n / x) * y_cur - y_prev
            big = np.abs(y_new) > _BIG
            if big.any():
                y_new = np.where(big, y_new * _SMALL, y_new)
                y_cur = np.where(big, y_cur * _SMALL, y_cur)
                t = t + np.where(big, _RESCALE_BITS, 0)
            ym[n + 1] = y_new
            ye[n + 1] = t
            y_prev, y_cur = y_cur, y_new

        jpm = np.empty_like(jm)
        ypm = np.empty_like(ym)
        jpm[0] = -np.ldexp(jm[1], je[1] - je[0])
        ypm[0] = -np.ldexp(ym[1], ye[1] - ye[0])
        nn = np.arange(1, top + 1)[:, None]
        jpm[1:] = np.ldexp(jm[:-1], je[:-1] - je[1:]) - (nn / x) * jm[1:]
        ypm[1:] = np.ldexp(ym[:-1], ye[:-1] - ye[1:]) - (nn / x) * ym[1:]

        keep = self.nmax + 1
        self.jm, self.je, self.jpm = jm[:keep], je[:keep], jpm[:keep]
        self.ym, self.ye, self.ypm = ym[:keep], ye[:keep], ypm[:keep]

    # plain values ---------------------------------------------------------
    def j(self, n: int) -> np.ndarray:
        return np.ldexp(self.jm[n], self.je[n])

    def jprime(self, n: int) -> np.ndarray:
        return np.ldexp(self.jpm[n], self.je[n])

    def y(self, n: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            out = np.ldexp(self.ym[n], self.ye[n])
        if not np.all(np.isfinite(out)):
            raise BesselOverflowError(f"Y_{n}(x) overflows for x = {self.x[~np.isfinite(out)].min():g}")
        return out

    def yprime(self, n: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            out = np.ldexp(self.ypm[n], self.ye[n])
        if not np.all(np.isfinite(out)):
            raise BesselOverflowError(f"Y_{n}'(x) overflows for x = {self.x[~np.isfinite(out)].min():g}")
        return out

    def wronskian(self, n: int) -> np.ndarray:
        """J_n Y_n' - J_n' Y_n computed on mantissas; should equal 2/(pi x)."""
        return np.ldexp(self.jm[n] * self.ypm[n] - self.jpm[n] * self.ym[n], self.je[n] + self.ye[n])

    def hankel_ratio(self, n: int) -> np.ndarray:
        """H_n^(1)'(x) / H_n^(1)(x), finite for every order."""
        rel = self.je[n] - self.ye[n]
        num = np.ldexp(self.jpm[n], rel) + 1j * self.ypm[n]
        den = np.ldexp(self.jm[n], rel) + 1j * self.ym[n]
        return num / den

    def scaled(self, n: int):
        """Return (Jt, Jt', Ht, Ht') with Jt = J_n*s and Ht = H_n/s, s = n!(2/x)^n.

        The products Jt(x1)*Ht(x2)*(x1/x2)**n reproduce J_n(x1)*H_n(x2) without
        leaving the double range; the primes carry the same scale factor as
        the function values (they are derivatives in x, not of Jt).
        """
        log2s = math.lgamma(n + 1) / math.log(2.0) + n * (1.0 - np.log2(self.x))
        ej = self.je[n] + log2s
        ey = self.ye[n] - log2s
        jt = _ldexp_float(self.jm[n], ej)
        jtp = _ldexp_float(self.jpm[n], ej)
        rel = self.je[n] - self.ye[n]
        hm = np.ldexp(self.jm[n], rel) + 1j * self.ym[n]
        hpm = np.ldexp(self.jpm[n], rel) + 1j * self.ypm[n]
        ht = _ldexp_float(hm, ey)
        htp = _ldexp_float(hpm, ey)
        return jt, jtp, ht, htp


def _ldexp_float(m, e):
    ei = np.floor(e)
    frac = np.exp2(e - ei)
    ei = ei.astype(np.int64)
    if np.iscomplexobj(m):
        return np.ldexp((m * frac).real, ei) + 1j * np.ldexp((m * frac).imag, ei)
    return np.ldexp(m * frac, ei)


def _check_scalar(n: int, x: float):
    if not isinstance(n, (int, np.integer)):
        raise DomainError(f"order must be an integer, got {n!r}")
    if not (x > 0 and math.isfinite(x)):
        raise DomainError(f"argument must be finite and > 0, got {x!r}")
    if abs(n) > MAX_ORDER:
        raise DomainError(f"|order| must not exceed {MAX_ORDER}, got {n}")


def bessel_jy(n: int, x: float, graded: bool = False) -> CylinderPair:
    """J_n(x), Y_n(x) and derivatives.

    With ``graded=True`` the result keeps the mantissa/exponent split, which
    never overflows; otherwise an overflow of Y raises BesselOverflowError.
    Negative orders use C_{-n} = (-1)^n C_n.
    """
    _check_scalar(n, x)
    sign = -1.0 if (n < 0 and n % 2) else 1.0
    m = abs(int(n))
    tab = CylinderTable(m, [x])
    if graded:
        return CylinderPair(
            order=int(n), argument=float(x),
            j=complex(sign * tab.jm[m, 0]), y=float(sign * tab.ym[m, 0]),
            jprime=float(sign * tab.jpm[m, 0]), yprime=float(sign * tab.ypm[m, 0]),
            j_exp=int(tab.je[m, 0]), y_exp=int(tab.ye[m, 0]),
        )
    return CylinderPair(
        order=int(n), argument=float(x),
        j=complex(sign * tab.j(m)[0]), y=float(sign * tab.y(m)[0]),
        jprime=float(sign * tab.jprime(m)[0]), yprime=float(sign * tab.yprime(m)[0]),
    )


def hankel1(n: int, x: float) -> tuple[complex, complex]:
    """H_n^(1)(x) and its derivative."""
    c = bessel_jy(n, x)
    return complex(c.j.real, c.y), complex(c.jprime, c.yprime)
