"""Command-line entry point: ``hplab <command> [flags]``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from typing import Callable, Sequence

import numpy as np

from .context import WaveContext
from .errors import HplabError, NumericalError, ValidationError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return v


def _klist(text: str) -> tuple:
    return tuple(_positive(t) for t in text.split(",") if t.strip())


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def _jobs(text: str) -> int:
    v = _nonneg_int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _write(text: str, out: str):
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _csv(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_dtn_table(a) -> int:
    from .dtn import dtn_csv, dtn_table

    _write(dtn_csv(dtn_table(WaveContext(a.k, a.R), a.nmax)), a.out)
    return EXIT_OK


def _sweep_config(a):
    from .experiments import SweepConfig, load_config

    cfg = load_config(a.config) if getattr(a, "config", None) else SweepConfig()
    k = getattr(a, "k", None)
    return cfg.updated(rule=a.rule, k_list=k if k is None or isinstance(k, tuple) else (k,),
                       R=a.R, lam=getattr(a, "lam", None), seed=getattr(a, "seed", None), out=a.out)


def cmd_solve(a) -> int:
    from .experiments import SweepTask, csv_text, run_point

    cfg = _sweep_config(a)
    if len(cfg.k_list) != 1:
        raise ValidationError("solve takes a single wavenumber")
    rec = run_point(SweepTask(cfg.sweep_rule(), cfg.k_list[0], cfg.R, cfg.lam, cfg.seed, 0))
    if not rec.valid:
        raise _RecordFailure(rec)
    _write(csv_text([rec]), cfg.out)
    return EXIT_OK


class _RecordFailure(NumericalError):
    def __init__(self, rec):
        super().__init__(f"{rec.message} (k={rec.k:g}, R={rec.R:g}, rule={rec.rule}, h={rec.h:g}, p={rec.p})")


def cmd_sweep(a) -> int:
    from .experiments import csv_text, run_sweep

    cfg = _sweep_config(a)
    recs = run_sweep(cfg.sweep_rule(), cfg.k_list, cfg.R, cfg.lam, cfg.seed, a.jobs)
    _write(csv_text(recs), cfg.out)
    bad = [r for r in recs if not r.valid]
    for r in bad:
        print(f"invalid record: {r.message} (k={r.k:g}, rule={r.rule})", file=sys.stderr)
    return EXIT_NUMERIC if bad else EXIT_OK


def cmd_split(a) -> int:
    from .fourier_toolkit import SPLIT_HEADER, split_csv_rows

    from .experiments import ordered_map

    reps = [r[0] for r in ordered_map(_SplitJob(a.R, a.lam, a.cutoff), [[k] for k in a.k], a.jobs)]
    _write(_csv(SPLIT_HEADER, split_csv_rows(reps)), a.out)
    return EXIT_OK


class _SplitJob:
    def __init__(self, R, lam, cutoff):
        self.R, self.lam, self.cutoff = R, lam, cutoff

    def __call__(self, ks):
        from .fourier_toolkit import splitting_bounds_report

        return splitting_bounds_report(ks, self.R, self.lam, self.cutoff)


class _CsolJob:
    def __init__(self, R, seed):
        self.R, self.seed = R, seed

    def __call__(self, item):
        from .morawetz import csol_two_sided

        i, k = item
        return csol_two_sided([k], self.R, seed=self.seed, offset=i)


def cmd_morawetz(a) -> int:
    from .morawetz import CSOL_HEADER

    from .experiments import ordered_map

    ks = [k / a.R for k in a.k] if a.kr else list(a.k)
    # one job per k; the seed sequence is keyed by the position in the list
    rows = [r[0] for r in ordered_map(_CsolJob(a.R, a.seed), list(enumerate(ks)), a.jobs)]
    _write(_csv(CSOL_HEADER, [r.csv() for r in rows]), a.out)
    return EXIT_OK


def _selftest_checks() -> list[tuple[str, Callable[[], bool]]]:
    from .dtn import dtn_table
    from .fourier_toolkit import (
        design_grid, l2_norm, random_bandlimited, scaled_ft, spectral_l2, split,
    )
    from .hpfem import HpSpace, mode_diagnostics
    from .morawetz import field_library, identity_residual, integrated_identity
    from .radial_model import csol_bound, csol_ratio, resonant_family
    from .specfun import CylinderTable

    def wronskian():
        x = np.geomspace(0.05, 500.0, 40)
        t = CylinderTable(200, x)
        ref = 2.0 / (math.pi * x)
        return all(np.max(np.abs(t.wronskian(n) / ref - 1)) <= 1e-10 for n in range(201))

    def dtn_signs():
        return all(c.dissipative and c.radiating for kR in (0.5, 20.0, 200.0)
                   for c in dtn_table(WaveContext(kR), 100))

    def csol_upper():
        ctx = WaveContext(10.0)
        return csol_ratio(ctx, resonant_family(ctx)) <= csol_bound(10.0)

    def plancherel():
        g = design_grid(WaveContext(5.0))
        v = random_bandlimited(g, np.random.default_rng(0))
        return abs(spectral_l2(scaled_ft(v)) / l2_norm(v) - 1) <= 1e-10

    def partition():
        g = design_grid(WaveContext(5.0))
        return split(random_bandlimited(g, np.random.default_rng(1), 6.0)).reconstruction_error() <= 1e-12

    def identity():
        return all(identity_residual(f, 1.0, 0.5) <= 1e-9 for f in field_library(5.0))

    def integrated():
        ii = integrated_identity(resonant_family(WaveContext(5.0)))
        return ii.boundary_flux <= 0 and ii.chain_holds

    def quasi_optimal():
        ctx = WaveContext(10.0)
        p = resonant_family(ctx)[0]
        d = mode_diagnostics(p, HpSpace.for_mode(1.0, 0.25, 5, 0))
        return d.err_b2 <= d.err_g2 <= 4.0 * d.err_b2

    return [("bessel wronskian", wronskian), ("dtn sign properties", dtn_signs),
            ("solution bound", csol_upper), ("discrete plancherel", plancherel),
            ("frequency partition", partition), ("multiplier identity", identity),
            ("integrated identity", integrated), ("galerkin quasi-optimality", quasi_optimal)]


def cmd_selftest(a) -> int:
    failed = 0
    for name, check in _selftest_checks():
        ok = bool(check())
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hplab", description="Helmholtz solver verification toolkit.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    out_help = "output destination (file path, or - for standard output; default -)"
    ncores = os.cpu_count() or 1
    jobs_help = f"worker processes (count, default {ncores}); output does not depend on it"

    p = sub.add_parser("dtn-table", help="Dirichlet-to-Neumann coefficients d_n (dimensionless) as CSV")
    p.add_argument("--k", type=_positive, required=True, help="wavenumber k (1/length)")
    p.add_argument("--R", type=_positive, default=1.0, help="truncation radius R (length, default 1)")
    p.add_argument("--nmax", type=_nonneg_int, default=20, help="highest angular mode n (count, default 20)")
    p.add_argument("--out", default="-", help=out_help)
    p.add_argument("--jobs", type=_jobs, default=1, help="worker processes (count); a single task, so unused")
    p.set_defaults(func=cmd_dtn_table)

    def sweep_flags(p, single: bool):
        p.add_argument("--config", help="config file of key = value lines (path); flags override it")
        if single:
            p.add_argument("--k", type=_positive, help="wavenumber k (1/length)")
        else:
            p.add_argument("--k", type=_klist, help="comma-separated increasing wavenumbers k (1/length)")
        p.add_argument("--R", type=_positive, help="truncation radius R (length, default 1)")
        p.add_argument("--rule", choices=["HK_CONST", "HK2_CONST", "HP_LOG"],
                       help="meshing rule (no unit): HK_CONST (h k fixed), HK2_CONST (h k^2 fixed) or HP_LOG")
        p.add_argument("--lambda", dest="lam", type=_positive,
                       help="frequency cutoff lambda (dimensionless, in units of k; default 2)")
        p.add_argument("--seed", type=_nonneg_int, help="random seed (integer, default 0)")
        p.add_argument("--out", help=out_help)

    p = sub.add_parser("solve", help="finite element errors and constants at one wavenumber as CSV")
    sweep_flags(p, True)
    p.add_argument("--jobs", type=_jobs, default=1, help="worker processes (count); a single task, so unused")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="wavenumber sweep under a meshing rule as CSV")
    sweep_flags(p, False)
    p.add_argument("--jobs", type=_jobs, default=ncores, help=jobs_help)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("split", help="low/high frequency splitting norms as CSV")
    p.add_argument("--k", type=_klist, default=(10.0, 20.0, 40.0, 80.0),
                   help="comma-separated wavenumbers k (1/length, default 10,20,40,80)")
    p.add_argument("--R", type=_positive, default=1.0, help="truncation radius R (length, default 1)")
    p.add_argument("--lambda", dest="lam", type=_positive, default=2.0,
                   help="frequency cutoff lambda (dimensionless, in units of k; default 2)")
    p.add_argument("--cutoff", choices=["smooth", "sharp"], default="smooth",
                   help="cutoff profile (no unit; default smooth)")
    p.add_argument("--out", default="-", help=out_help)
    p.add_argument("--jobs", type=_jobs, default=ncores, help=jobs_help)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("morawetz", help="observed solution-operator norms against the bound as CSV")
    p.add_argument("--k", type=_klist, default=(5.0, 20.0, 80.0),
                   help="comma-separated wavenumbers k (1/length, default 5,20,80)")
    p.add_argument("--kr", action="store_true", help="read --k values as dimensionless kR instead of k")
    p.add_argument("--R", type=_positive, default=1.0, help="truncation radius R (length, default 1)")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="random seed (integer, default 0)")
    p.add_argument("--out", default="-", help=out_help)
    p.add_argument("--jobs", type=_jobs, default=ncores, help=jobs_help)
    p.set_defaults(func=cmd_morawetz)

    p = sub.add_parser("selftest", help="quick invariant checks (no units); prints PASS/FAIL per check")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc} (argv: {' '.join(argv or sys.argv[1:])})",
              file=sys.stderr)
        return EXIT_NUMERIC
    except HplabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
