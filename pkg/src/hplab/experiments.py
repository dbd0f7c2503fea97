"""Wavenumber sweeps of the mode-separated finite element solver under three
meshing rules, with CSV output and a small key = value config format."""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .context import WaveContext
from .errors import HplabError, NumericalError, ValidationError
from .fourier_toolkit import splitting_bounds_report
from .hpfem import (
    HpSpace, assemble, continuity_constant, eta_estimate, mode_diagnostics, quasioptimality_constant,
)
from .radial_model import resonant_family

DEFAULT_K = (10.0, 14.0, 20.0, 28.0, 40.0, 57.0, 80.0)
CSV_HEADER = ["k", "R", "rule", "h", "p", "dof", "err_g", "err_b", "c_qo", "eta", "c_cont",
              "rho_high", "rho_full", "wall_ms"]


class RuleKind(str, enum.Enum):
    HK_CONST = "HK_CONST"
    HK2_CONST = "HK2_CONST"
    HP_LOG = "HP_LOG"


@dataclass(frozen=True)
class SweepRule:
    """Mesh width and degree as functions of k.

    HK_CONST: h k = c with p fixed; HK2_CONST: h k^2 = c with p = 1;
    HP_LOG: h k / p = c1 with p = ceil(c2 log(kR)).
    """

    kind: RuleKind
    c: float = 1.0
    p: int = 1
    c1: float = 0.5
    c2: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RuleKind(self.kind))
        for name in ("c", "c1", "c2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"rule constant {name} must be positive, got {v!r}")
        if self.p < 1:
            raise ValidationError("polynomial degree must be at least 1")

    @classmethod
    def hk_const(cls, hk: float = 1.0, p: int = 1) -> "SweepRule":
        return cls(RuleKind.HK_CONST, c=hk, p=p)

    @classmethod
    def hk2_const(cls, hk2: float = 10.0) -> "SweepRule":
        return cls(RuleKind.HK2_CONST, c=hk2, p=1)

    @classmethod
    def hp_log(cls, c1: float = 0.5, c2: float = 2.0) -> "SweepRule":
        return cls(RuleKind.HP_LOG, c1=c1, c2=c2)

    def target(self, k: float, R: float = 1.0) -> tuple[float, int]:
        """(h, p) prescribed by the rule."""
        if self.kind is RuleKind.HK_CONST:
            return self.c / k, self.p
        if self.kind is RuleKind.HK2_CONST:
            return self.c / k**2, 1
        p = max(1, math.ceil(self.c2 * math.log(k * R)))
        return self.c1 * p / k, p

    def mesh(self, k: float, R: float = 1.0) -> tuple[float, int]:
        """(h, p) of the uniform mesh actually used: h = R / ceil(R / h_rule) <= h_rule."""
        h, p = self.target(k, R)
        return R / max(1, math.ceil(R / h - 1e-12)), p


@dataclass
class SweepRecord:
    k: float
    R: float
    rule: str
    h: float
    p: int
    dof: int
    err_g: float
    err_b: float
    c_qo: float
    eta: float
    c_cont: float
    rho_high: float
    rho_full: float
    wall_ms: float = float("nan")
    valid: bool = True
    message: str = ""

    def row(self, timings: bool = False) -> list[str]:
        w = self.wall_ms if timings else float("nan")
        vals = [self.k, self.R, self.rule, self.h, self.p, self.dof, self.err_g, self.err_b, self.c_qo,
                self.eta, self.c_cont, self.rho_high, self.rho_full, w]
        return [v if isinstance(v, str) else (str(v) if isinstance(v, int) else f"{v:.17g}") for v in vals]


@dataclass(frozen=True)
class SweepTask:
    rule: SweepRule
    k: float
    R: float
    lam: float
    seed: int
    index: int
    eta_draws: int = 32
    with_split: bool = True


def _nan_record(t: SweepTask, h: float, p: int, msg: str) -> SweepRecord:
    nan = float("nan")
    return SweepRecord(t.k, t.R, t.rule.kind.value, h, p, 0, nan, nan, nan, nan, nan, nan, nan,
                       valid=False, message=msg)


def run_point(t: SweepTask) -> SweepRecord:
    """All measurements for one (rule, k): errors relative to the exact solution norm."""
    start = time.perf_counter()
    h, p = t.rule.mesh(t.k, t.R)
    ctx = WaveContext(t.k, t.R)
    rng = np.random.default_rng(np.random.SeedSequence([t.seed, t.index]))
    try:
        problems = resonant_family(ctx)
        spaces = {q.n: HpSpace.for_mode(t.R, h, p, q.n) for q in problems}
        diags = [mode_diagnostics(q, spaces[q.n]) for q in problems]
        c_qo = quasioptimality_constant(t.k, spaces, problems, diags)
        norm = math.sqrt(sum(d.norm2 for d in diags))
        err_g = math.sqrt(sum(d.err_g2 for d in diags)) / norm
        err_b = math.sqrt(sum(d.err_b2 for d in diags)) / norm
        c_cont = max(continuity_constant(assemble(q, spaces[q.n])) for q in problems)
        eta = max(eta_estimate(ctx, spaces[q.n], q.n, ndata=t.eta_draws, rng=rng) for q in problems)
        rho_high = rho_full = float("nan")
        if t.with_split:
            rep = splitting_bounds_report([t.k], t.R, t.lam)[0]
            rho_high, rho_full = rep.rho_high, rep.rho_full
    except NumericalError as exc:
        return _nan_record(t, h, p, f"{type(exc).__name__}: {exc}")
    dof = sum(V.dim for V in spaces.values())
    wall = 1e3 * (time.perf_counter() - start)
    return SweepRecord(t.k, t.R, t.rule.kind.value, h, p, dof, err_g, err_b, c_qo, eta, c_cont,
                       rho_high, rho_full, wall)


def run_sweep(rule: SweepRule, k_list: Sequence[float] = DEFAULT_K, R: float = 1.0, lam: float = 2.0,
              seed: int = 0, jobs: int = 1, with_split: bool = True) -> list[SweepRecord]:
    """One record per k, in input order; identical for any ``jobs``."""
    ks = [float(k) for k in k_list]
    if not ks:
        raise ValidationError("k list is empty")
    if any(not (math.isfinite(k) and k > 0) for k in ks):
        raise ValidationError("wavenumbers must be positive")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationError("k list must be strictly increasing")
    if jobs < 1:
        raise ValidationError("jobs must be at least 1")
    tasks = [SweepTask(rule, k, R, lam, seed, i, with_split=with_split) for i, k in enumerate(ks)]
    return ordered_map(run_point, tasks, jobs)


def ordered_map(func, items: Sequence, jobs: int = 1) -> list:
    """func over items in a process pool of at most ``jobs`` workers; results keep input order."""
    if jobs < 1:
        raise ValidationError("jobs must be at least 1")
    if jobs == 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(func, items))


def csv_text(records: Sequence[SweepRecord], timings: bool = False) -> str:
    """CSV with 17 significant digits; wall_ms is written as nan unless timings is set."""
    if not records:
        raise ValidationError("no sweep records to write")
    lines = [",".join(CSV_HEADER)] + [",".join(r.row(timings)) for r in records]
    return "\n".join(lines) + "\n"


def emit_csv(records: Sequence[SweepRecord], path, timings: bool = False) -> Path:
    text = csv_text(records, timings)
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise HplabError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


# ---------------------------------------------------------------------------
# config files


CONFIG_KEYS = ("rule", "hk", "hk2", "c1", "c2", "k_list", "R", "lambda", "seed", "out")


@dataclass
class SweepConfig:
    rule: str = "HP_LOG"
    hk: float = 1.0
    hk2: float = 10.0
    c1: float = 0.5
    c2: float = 2.0
    k_list: tuple = DEFAULT_K
    R: float = 1.0
    lam: float = 2.0
    seed: int = 0
    out: str = "-"
    extra: dict = field(default_factory=dict, repr=False)

    def sweep_rule(self) -> SweepRule:
        kind = self.rule.upper()
        if kind == RuleKind.HK_CONST.value:
            return SweepRule.hk_const(self.hk, 1)
        if kind == RuleKind.HK2_CONST.value:
            return SweepRule.hk2_const(self.hk2)
        if kind == RuleKind.HP_LOG.value:
            return SweepRule.hp_log(self.c1, self.c2)
        raise ValidationError(f"unknown rule {self.rule!r}; expected HK_CONST, HK2_CONST or HP_LOG")

    def updated(self, **kw) -> "SweepConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _convert(key: str, raw: str):
    try:
        if key in ("rule", "out"):
            return raw
        if key == "seed":
            return int(raw)
        if key == "k_list":
            return tuple(float(x) for x in raw.replace(";", ",").split(",") if x.strip())
        return float(raw)
    except ValueError as exc:
        raise ValidationError(f"bad value for {key}: {raw!r}") from exc


def parse_config(text: str) -> SweepConfig:
    """Parse ``key = value`` lines; blank lines and '#' comments are ignored."""
    cfg = SweepConfig()
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ValidationError(f"config line {lineno}: duplicate key {key!r}")
        seen.add(key)
        setattr(cfg, "lam" if key == "lambda" else key, _convert(key, raw))
    cfg.sweep_rule()
    return cfg


def load_config(path) -> SweepConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# summaries


def qo_spread(records: Sequence[SweepRecord]) -> float:
    c = [r.c_qo for r in records if r.valid]
    return max(c) / min(c)


def schatz_violations(records: Sequence[SweepRecord]) -> list[SweepRecord]:
    """Records with eta <= 1/(2 c_cont) whose C_qo exceeds 2 c_cont."""
    return [r for r in records if r.valid and r.eta <= 1.0 / (2.0 * r.c_cont) and r.c_qo > 2.0 * r.c_cont]
