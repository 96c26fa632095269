"""Acceptance suite: one PASS/FAIL line per criterion, printed to the terminal.

Every criterion also carries a wall-clock budget; a slow pass counts as FAIL.
"""
import math
import time

import mpmath
import pytest

from gkcs import verify
from gkcs.model import SpectrumMode, derive_params
from gkcs.specfun import hyp1f1_1_eta
from gkcs.states import StateConfig, build_combined_cs, default_omega

mpmath.mp.dps = 40


@pytest.fixture
def emit(capsys):
    def _emit(number, ok, elapsed, budget, summary):
        ok = ok and elapsed < budget
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {summary} "
                  f"[{elapsed:.2f}s, budget {budget:g}s]")
        return ok
    return _emit


def test_criterion_01_commutators(emit):
    t0 = time.perf_counter()
    r = verify.check_commutators(40)
    scaled = verify.check_commutators(40, derive_params(m=2.0, B=3.0, hbar=0.5))
    elapsed = time.perf_counter() - t0
    worst = max(r.residual, scaled.residual)
    ok = r.passed and scaled.passed and r.details["corner_exact"]
    assert emit(1, ok, elapsed, 1.0,
                f"N=40 max residual={worst:.1e} tol=1e-14 corner={r.details['corner']:g}")


def test_criterion_02_moments(emit):
    t0 = time.perf_counter()
    reports = [verify.check_moment_discrete("shifted", "exp", n) for n in range(41)]
    reports += [verify.check_moment_discrete("unshifted", "gamma32", n, kappa=k)
                for k in (0.5, 1.0, 2.0) for n in range(41)]
    elapsed = time.perf_counter() - t0
    worst = max(r.residual for r in reports)
    ok = all(r.passed for r in reports)
    assert emit(2, ok, elapsed, 1.0, f"{len(reports)} moments, max residual={worst:.1e} tol=1e-10")


def test_criterion_03_hyp1f1(emit):
    def oracle(x):
        x = mpmath.mpf(x)
        return float(mpmath.exp(x) * mpmath.sqrt(mpmath.pi) * mpmath.erf(mpmath.sqrt(x))
                     / (2 * mpmath.sqrt(x)))

    xs = (0.1, 1.0, 5.0, 20.0, 40.0)
    refs = [oracle(x) for x in xs]
    t0 = time.perf_counter()
    vals = [hyp1f1_1_eta(1.5, x) for x in xs]
    elapsed = time.perf_counter() - t0
    worst = max(abs(v - r) / abs(r) for v, r in zip(vals, refs))
    assert emit(3, worst <= 1e-10, elapsed, 1.0, f"max relative error={worst:.1e} tol=1e-10")


def test_criterion_04_laguerre_identity(emit):
    # the (s - sigma)**n closed form; the corrected variant is exercised in test_verify
    t0 = time.perf_counter()
    r = verify.check_laguerre_grid(kappa=1.0, form="printed")
    elapsed = time.perf_counter() - t0
    failing = int(r.details["failing_points"])
    assert emit(4, r.passed, elapsed, 10.0,
                f"27-point grid, max residual={r.residual:.3g} tol=1e-7 ({failing} points over)")


def test_criterion_05_discrete_resolution(emit):
    t0 = time.perf_counter()
    shifted = verify.check_resolution_discrete("shifted", cutoff=20, order=64)
    unshifted = verify.check_resolution_discrete("unshifted", cutoff=20, order=64, measure="gamma32")
    conv = [verify.check_resolution_convergence(m, orders=(32, 64, 128), cutoff=20)
            for m in ("shifted", "unshifted")]
    elapsed = time.perf_counter() - t0
    ok = shifted.passed and unshifted.passed and all(c.passed for c in conv)
    assert emit(5, ok, elapsed, 30.0,
                f"shifted={shifted.residual:.1e} (tol 1e-9) unshifted={unshifted.residual:.1e} "
                f"(tol 1e-8) halving ratio={max(c.residual for c in conv):.2g} (tol 1)")


def test_criterion_06_continuous_resolution(emit):
    t0 = time.perf_counter()
    r = verify.check_resolution_continuous()
    elapsed = time.perf_counter() - t0
    ok = r.passed and r.details["monotone"] and r.details["diagonal_factor_error"] == 0.0
    res = ", ".join(f"{x:.1e}" for x in r.details["residuals"])
    assert emit(6, ok, elapsed, 30.0, f"window residuals [{res}] tol=1e-2, diagonal factor exact")


def test_criterion_07_cross_term(emit):
    t0 = time.perf_counter()
    averaged = verify.check_cross_term()
    raw = verify.check_cross_term(average=False)
    elapsed = time.perf_counter() - t0
    ratio = raw.details["ratio_to_fg"]
    ok = averaged.passed and ratio > 0.1
    assert emit(7, ok, elapsed, 5.0,
                f"averaged block={averaged.residual:.1e} tol=1e-12; unaveraged/fg={ratio:.3f} > 0.1")


def test_criterion_08_temporal(emit):
    p = derive_params()
    times = tuple(t / p.omega_c for t in (0.1, 1.0, 10.0))
    t0 = time.perf_counter()
    reports = []
    for mode in SpectrumMode:
        for fixed in ("l", "n"):
            cs = build_combined_cs(1.0, 0.3, 0.8, 0.2, 1.0, 0.4, 0.5,
                                   StateConfig(mode=mode, fixed=fixed))
            reports.append(verify.check_temporal_stability(cs, times, p))
    elapsed = time.perf_counter() - t0
    worst = max(r.residual for r in reports)
    ok = all(r.passed for r in reports)
    assert emit(8, ok, elapsed, 1.0,
                f"both modes and constructions with beta phase, max deviation={worst:.1e} tol=1e-12")


def test_criterion_09_continuity(emit):
    t0 = time.perf_counter()
    reports = [verify.check_continuity(StateConfig(mode=m, fixed=f))
               for m in SpectrumMode for f in ("l", "n")]
    elapsed = time.perf_counter() - t0
    ok = all(r.passed and r.details["decreasing"] for r in reports)
    worst = max(r.residual for r in reports)
    assert emit(9, ok, elapsed, 5.0, f"20 halvings, final distance={worst:.1e} tol=1e-6")


def test_criterion_10_poisson(emit):
    t0 = time.perf_counter()
    reports = [verify.check_poisson_mean(J) for J in (0.5, 2.0, 4.0)]
    elapsed = time.perf_counter() - t0
    worst = max(r.residual for r in reports)
    assert emit(10, all(r.passed for r in reports), elapsed, 1.0,
                f"<n> - J max={worst:.1e} tol=1e-9")


def test_printed_time_map_is_not_stable():
    # companion to criterion 8: the "+" signs on gamma' and beta do not track the evolution
    p = derive_params()
    cs = build_combined_cs(1.0, 0.3, 0.8, 0.2, 1.0, 0.4, 0.5, StateConfig(mode="shifted", fixed="n"))
    dev = verify.printed_label_map_deviation(cs, 1.0, p, default_omega(p, cs.discrete.cutoff))
    assert dev > 0.1 and math.isfinite(dev)
