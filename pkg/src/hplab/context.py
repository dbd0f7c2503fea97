from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class WaveContext:
    """Wavenumber ``k`` (1/length), truncation radius ``R`` (length), dimension ``d``.

    Only ``d`` in {1, 2} is supported; the three-dimensional DtN map is not
    implemented and is rejected here rather than approximated.
    """

    k: float
    R: float = 1.0
    d: int = 2

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValidationError(f"wavenumber k must be positive and finite, got {self.k!r}")
        if not (math.isfinite(self.R) and self.R > 0):
            raise ValidationError(f"radius R must be positive and finite, got {self.R!r}")
        if self.d not in (1, 2):
            raise ValidationError(f"dimension d={self.d!r} not supported (only 1 and 2)")

    @property
    def kR(self) -> float:
        return self.k * self.R

    def mode_cutoff(self) -> int:
        """Highest angular mode kept in full-disk computations."""
        return int(math.ceil(2.0 * self.kR)) + 32


def angular_weight(n: int) -> float:
    """Angular L2 weight of cos(n theta): 2*pi for n = 0, pi otherwise."""
    return 2.0 * math.pi if n == 0 else math.pi
