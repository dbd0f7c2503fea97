"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

import conftest
from oracles import convolution_2d, j0_series, y0_series

from hplab.context import WaveContext
from hplab.dtn import dtn_coefficient, dtn_table
from hplab.experiments import SweepRule, qo_spread, run_sweep, schatz_violations
from hplab.fourier_toolkit import (
    apply_multiplier, bracket, complement, cutoff_symbol, design_grid, ellipticity_constant, l2_norm,
    mapping_norm_check, random_bandlimited, scaled_ft, sobolev_norm, spectral_l2, splitting_bounds_report,
    symbol_bracket, symbol_elliptic, symbol_helmholtz, symbol_one,
)
from hplab.morawetz import (
    csol_two_sided, field_library, flux_sign_check, identity_residual, radial_identity_residual,
)
from hplab.radial_model import (
    ModeProblem, RadialProfile, bump, bump_family, exact_mode_solution, quasimode_ratio,
    resonant_family,
)
from hplab.specfun import CylinderTable, bessel_jy


def verdict(number: int, ok: bool, detail: str):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_1_special_functions():
    with Clock() as clk:
        x = np.geomspace(0.05, 500, 40)
        tab = CylinderTable(200, x)
        worst = max(float(np.max(np.abs(tab.wronskian(n) * np.pi * x / 2 - 1))) for n in range(201))
        c = bessel_jy(0, 1.0)
        ej = abs(c.j.real - j0_series(1.0)) / abs(j0_series(1.0))
        ey = abs(c.y.real - y0_series(1.0)) / abs(y0_series(1.0))
    ok = worst <= 1e-10 and ej <= 1e-12 and ey <= 1e-12 and clk.seconds < 5
    verdict(1, ok, f"wronskian rel {worst:.2e}, J0(1) {ej:.1e}, Y0(1) {ey:.1e}, {clk.seconds:.2f} s")


def test_criterion_2_dtn_signs():
    with Clock() as clk:
        # Im d_n underflows double precision for n >> kR; radiating reads the graded value
        bad = [(kR, c.mode) for kR in (0.5, 1.0, 5.0, 20.0, 100.0, 200.0)
               for c in dtn_table(WaveContext(kR), 100) if not (c.value.real <= 0 and c.radiating)]
        d0 = dtn_coefficient(WaveContext(1000.0), 0).value
    ok = not bad and abs(d0 - 1j) <= 1e-2 and clk.seconds < 2
    verdict(2, ok, f"{len(bad)} sign violations, |d_0(1000) - i| = {abs(d0 - 1j):.2e}, {clk.seconds:.2f} s")


def test_criterion_3_convolution_cross_check():
    k, a = 20.0, 0.5
    with Clock() as clk:
        p = ModeProblem(WaveContext(k), 0, RadialProfile.smooth_bump(a))
        rs = np.linspace(0.05, 1.0, 20)
        u = exact_mode_solution(p, rs)
        # L u = -f with L = k^-2 Delta + 1 means u = k^2 (Phi_k * f)
        ref = np.array([k * k * convolution_2d(k, lambda s: bump(s / a), a, r, nphi=1024, npts=24) for r in rs])
    err = float(np.max(np.abs(u - ref) / np.abs(ref)))
    verdict(3, err <= 1e-7 and clk.seconds < 30, f"max rel diff {err:.2e} at 20 radii, {clk.seconds:.1f} s")


def test_criterion_4_solution_operator_bounds():
    with Clock() as clk:
        rows = csol_two_sided([5.0, 20.0, 80.0], ndraws=50)
        q40 = quasimode_ratio(WaveContext(40.0))
    upper = all(r.observed_ratio <= r.paper_bound * (1 + 1e-6) for r in rows)
    q20 = rows[1].quasimode_ratio
    lower = q20 >= 0.2 * 20 and q40 >= 0.2 * 40
    obs = ", ".join(f"kR {r.k:g}: {r.observed_ratio:.3g} <= {r.paper_bound:.4g}" for r in rows)
    verdict(4, upper and lower and clk.seconds < 60,
            f"{obs}; quasimode/kR {q20 / 20:.3f}, {q40 / 40:.3f}; {clk.seconds:.1f} s")


def test_criterion_5_identity_and_flux():
    rng = np.random.default_rng(11)
    worst = 0.0
    for k in (1.0, 5.0, 20.0):
        for field in field_library(k):
            for _ in range(5):
                worst = max(worst, identity_residual(field, rng.uniform(-2, 2), rng.uniform(-2, 2)))
            worst = max(worst, identity_residual(field, "r", 0.5), radial_identity_residual(field, 0.5))
    fluxes = []
    for i, k in enumerate((3.0, 7.0, 12.0, 20.0, 33.0)):
        ctx = WaveContext(k)
        for fam in (bump_family, resonant_family):
            fluxes.append(flux_sign_check(fam(ctx, a=0.3 + 0.1 * (i % 3))))
    ok = worst <= 1e-9 and len(fluxes) == 10 and all(q <= 0 for q in fluxes)
    verdict(5, ok, f"identity residual {worst:.2e}, flux max {max(fluxes):.3e} over {len(fluxes)} solutions")


def test_criterion_6_fourier_toolkit():
    grid = design_grid(WaveContext(10.0))
    rng = np.random.default_rng(21)
    v = random_bandlimited(grid, rng, band=6.0)
    planch = abs(spectral_l2(scaled_ft(v)) / l2_norm(v) - 1)

    a, b = symbol_bracket(-2), cutoff_symbol(2.0)
    comp = np.max(np.abs(apply_multiplier(b, apply_multiplier(a, v)).samples
                         - apply_multiplier(a.times(b), v).samples)) / np.max(np.abs(v.samples))

    checks = [(symbol_one(), 1), (symbol_bracket(-2), 0), (complement(cutoff_symbol(2.0)), 2),
              (symbol_helmholtz(), 2), (cutoff_symbol(2.0), 0)]
    # bound met up to rounding of the transform pair
    mapping_ok = all(mapping_norm_check(s, order, grid, trials=100, rng=rng) <= s.bound * (1 + 1e-12)
                     for s, order in checks)

    slack = 0.0
    for _ in range(10):
        w = random_bandlimited(grid, rng, band=5.0)
        Pw = l2_norm(apply_multiplier(symbol_elliptic(), w))
        slack = max(slack, (sobolev_norm(w, 2) - Pw) / Pw)

    c = ellipticity_constant(2.0)
    xi1, xi2 = grid.freqs()
    mod = np.sqrt(xi1**2 + xi2**2)
    mask = mod >= 2
    margin = float(np.min(np.abs(mod[mask] ** 2 - 1) - c * bracket(grid)[mask] ** 2))
    equality = abs(abs(2.0**2 - 1) - c * (1 + 2.0**2))

    ok = (planch <= 1e-10 and comp <= 1e-12 and mapping_ok and slack <= 1e-9
          and margin >= -1e-12 and equality <= 1e-12)
    verdict(6, ok, f"plancherel {planch:.1e}, composition {comp:.1e}, mapping ok {mapping_ok}, "
                   f"elliptic slack {slack:.1e}, 3/5 margin {margin:.1e}, equality {equality:.1e}")


def test_criterion_7_splitting():
    lam = 2.0
    with Clock() as clk:
        reps = splitting_bounds_report([10.0, 20.0, 40.0, 80.0], 1.0, lam, "smooth")
    recon = max(r.reconstruction for r in reps)
    high = reps[-1].rho_high / reps[0].rho_high
    full = reps[-1].rho_full / reps[0].rho_full
    # ratio_low is already divided by (2 lambda)^|alpha| ||f||
    low = max(max(r.ratio_low.values()) / (r.csol_2r * 1.05) for r in reps)
    ok = recon <= 1e-12 and high <= 2 and full >= 4 and low <= 1 and clk.seconds < 180
    verdict(7, ok, f"reconstruction {recon:.1e}, rho_high ratio {high:.2e}, rho_full ratio {full:.2f}, "
                   f"low-part bound usage {low:.3f}, {clk.seconds:.1f} s")


@pytest.fixture(scope="module")
def default_sweeps():
    start = time.perf_counter()
    sweeps = {
        "HP_LOG": run_sweep(SweepRule.hp_log(), jobs=1),
        "HK_CONST": run_sweep(SweepRule.hk_const(1.0, 1), jobs=1),
        "HK2_CONST": run_sweep(SweepRule.hk2_const(), jobs=1),
    }
    return sweeps, time.perf_counter() - start


def test_criterion_8_pollution_contrast(default_sweeps):
    sweeps, seconds = default_sweeps
    valid = all(r.valid for recs in sweeps.values() for r in recs)
    hp = qo_spread(sweeps["HP_LOG"])
    hk = sweeps["HK_CONST"]
    hk_growth = hk[-1].c_qo / hk[0].c_qo
    errs = [r.err_g for r in sweeps["HK2_CONST"]]
    hk2 = max(errs) / min(errs)
    ok = valid and hp <= 2 and hk_growth >= 2 and hk2 <= 2 and seconds < 300
    verdict(8, ok, f"HP_LOG C_qo spread {hp:.3f}, HK_CONST C_qo(80)/C_qo(10) {hk_growth:.2f}, "
                   f"HK2_CONST err_g spread {hk2:.2f}, {seconds:.0f} s")


def test_criterion_9_schatz_loop(default_sweeps):
    recs = default_sweeps[0]["HP_LOG"]
    active = [r for r in recs if r.eta <= 1 / (2 * r.c_cont)]
    bad = schatz_violations(recs)
    verdict(9, not bad and all(r.valid for r in recs),
            f"{len(active)} of {len(recs)} points meet the eta threshold, {len(bad)} violations")


CLI_RUNS = [
    ["dtn-table", "--k", "20", "--nmax", "100"],
    ["solve", "--k", "20", "--rule", "HP_LOG", "--seed", "5"],
    ["sweep", "--rule", "HK_CONST", "--k", "10,14,20", "--seed", "5"],
    ["split", "--k", "10,20,40,80"],
    ["morawetz", "--k", "5,20,80", "--seed", "5"],
]


def _cli(argv):
    res = subprocess.run([sys.executable, "-m", "hplab.cli", *argv, "--out", "-"], capture_output=True, check=False)
    return res.returncode, res.stdout


def test_criterion_10_determinism():
    diffs = []
    for argv in CLI_RUNS:
        c1, a = _cli(argv + ["--jobs", "1"])
        c8, b = _cli(argv + ["--jobs", "8"])
        if c1 != 0 or c8 != 0 or a != b or not a:
            diffs.append(argv[0])
    verdict(10, not diffs, f"{len(CLI_RUNS) - len(diffs)} of {len(CLI_RUNS)} commands byte-identical"
                           + (f"; differing: {', '.join(diffs)}" if diffs else ""))
