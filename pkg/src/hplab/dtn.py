"""Per-mode Dirichlet-to-Neumann coefficients for the disk and the 1-d line."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .context import WaveContext
from .errors import ValidationError
from .specfun import CylinderTable, MAX_ORDER


@dataclass(frozen=True)
class DtnCoefficient:
    """d_n at one kR.

    For n far above kR the imaginary part is below the smallest double and
    ``value.imag`` rounds to 0; ``im_mantissa * 2**im_exp`` keeps it exact.
    """

    mode: int
    kR: float
    value: complex
    im_mantissa: float = 0.0
    im_exp: int = 0

    @property
    def dissipative(self) -> bool:
        """Re d_n <= 0: the boundary term never adds energy."""
        return self.value.real <= 0.0

    @property
    def radiating(self) -> bool:
        return self.im_mantissa > 0.0 if self.im_mantissa else self.value.imag > 0.0

    def log10_imag(self) -> float:
        if self.im_mantissa:
            return float(np.log10(self.im_mantissa) + self.im_exp * np.log10(2.0))
        return float(np.log10(self.value.imag))


def _require_2d(ctx: WaveContext):
    if ctx.d != 2:
        raise ValidationError(f"disk DtN coefficients need d=2, got d={ctx.d}")


def dtn_values(kR: float, nmax: int) -> np.ndarray:
    """d_n = H_n'(kR)/H_n(kR) for n = 0..nmax as a complex array.

    The ratio is formed from mantissas, so it stays finite even when
    H_n(kR) itself overflows.
    """
    if nmax < 0 or nmax > MAX_ORDER:
        raise ValidationError(f"nmax must lie in [0, {MAX_ORDER}], got {nmax}")
    tab = CylinderTable(nmax, [kR])
    return np.array([tab.hankel_ratio(n)[0] for n in range(nmax + 1)])


def _split(v: float) -> tuple[float, int]:
    m, e = np.frexp(v)
    return float(m), int(e)


def _graded_sum(terms) -> tuple[float, int]:
    """Sum of (mantissa, exponent) pairs without over/underflow."""
    terms = [(m, e) for m, e in terms if m != 0.0]
    if not terms:
        return 0.0, 0
    top = max(e for _, e in terms)
    total = sum(np.ldexp(m, e - top) for m, e in terms)
    m, e = _split(total)
    return m, e + top


def _graded_imag(tab: CylinderTable, n: int) -> tuple[float, int]:
    # Im d_n = (J Y' - J' Y) / (J^2 + Y^2), evaluated on normalised mantissas.
    je, ye = int(tab.je[n, 0]), int(tab.ye[n, 0])
    j, jp = _split(tab.jm[n, 0]), _split(tab.jpm[n, 0])
    y, yp = _split(tab.ym[n, 0]), _split(tab.ypm[n, 0])
    w = _graded_sum([
        (j[0] * yp[0], j[1] + yp[1] + je + ye),
        (-jp[0] * y[0], jp[1] + y[1] + je + ye),
    ])
    den = _graded_sum([
        (j[0] ** 2, 2 * (j[1] + je)),
        (y[0] ** 2, 2 * (y[1] + ye)),
    ])
    m, e = _split(w[0] / den[0])
    return m, e + w[1] - den[1]


def _table(kR: float, nmax: int) -> list[DtnCoefficient]:
    if nmax < 0 or nmax > MAX_ORDER:
        raise ValidationError(f"nmax must lie in [0, {MAX_ORDER}], got {nmax}")
    tab = CylinderTable(nmax, [kR])
    out = []
    for n in range(nmax + 1):
        m, e = _graded_imag(tab, n)
        out.append(DtnCoefficient(n, float(kR), complex(tab.hankel_ratio(n)[0]), m, e))
    return out


def dtn_coefficient(ctx: WaveContext, n: int) -> DtnCoefficient:
    _require_2d(ctx)
    n = abs(int(n))
    return _table(ctx.kR, n)[n]


def dtn_table(ctx: WaveContext, nmax: int) -> list[DtnCoefficient]:
    _require_2d(ctx)
    return _table(ctx.kR, nmax)


def dtn_1d(ctx: WaveContext) -> complex:
    """Outgoing impedance on the line: u' = i k u, so the scaled coefficient is i."""
    if ctx.d != 1:
        raise ValidationError(f"dtn_1d needs d=1, got d={ctx.d}")
    return 1j


def dtn_csv(rows: list[DtnCoefficient]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "kR", "re_d", "im_d"])
    for c in rows:
        w.writerow([c.mode, f"{c.kR:.17g}", f"{c.value.real:.17g}", f"{c.value.imag:.17g}"])
    return buf.getvalue()
