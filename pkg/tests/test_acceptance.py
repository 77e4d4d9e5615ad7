"""Acceptance criteria 1-12, one pass/fail line per criterion.

Each test appends its verdict to ``conftest.ACCEPTANCE_LINES``; the lines are
printed in the terminal summary.  Reference values are closed forms derived
by hand for power-law data and are frozen here.
"""

import math

import numpy as np
import pytest

from tvlaplace.approx import ApproximationSchedule, run_convergence_study
from tvlaplace.datum import RadialDatum, Term
from tvlaplace.growth import AffinePlus, Constant, HingePlus, Rational1, Rational2, Trapezoid
from tvlaplace.lorentz import (
    dual_norm_bounds,
    norm_lorentz_q1,
    norm_marcinkiewicz,
    quasinorm_marcinkiewicz,
    sobolev_constant,
)
from tvlaplace.solver import (
    WeakTrace,
    boundary_check,
    bump_family,
    classify_regime,
    construct_radial_solution,
    green_identity,
    tampered_profiles,
    total_variation,
    weak_residual,
)

from .conftest import ACCEPTANCE_LINES
from .strategies import random_datum

N3 = 3
ONE = Constant(1.0)


def record(k, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}")
    assert ok, detail


def boun():
    return RadialDatum(N3, 1.0, (Term(2.0, 1.0), Term(2.0, 0.5)))


def ball(lam, rho=0.5):
    return RadialDatum(N3, 1.0, (Term(lam, 1.0, 0.0, rho),))


def inverse_r(lam):
    return RadialDatum.power(N3, 1.0, lam, 1.0)


def critical_datum(lam):
    return RadialDatum(N3, 1.0, (Term(2.0, 1.0), Term(lam, 0.0)))


GRID = np.linspace(1e-3, 1.0, 2001)

# (label, datum, growth, policy) for every construction in criteria 1-7
CASES = [
    ("boun", boun(), ONE, "minimal"),
    ("ball_trivial", ball(1.0), ONE, "minimal"),
    ("ball_nontrivial", ball(4.0), ONE, "minimal"),
    ("threshold_equal", inverse_r(2.0), ONE, "minimal"),
    ("threshold_above", inverse_r(2.0 + 1e-9), ONE, "minimal"),
    ("nonbv", inverse_r(5.0), Rational1(), "minimal"),
    ("bv", inverse_r(2.5), Rational1(), "minimal"),
    ("critical", critical_datum(math.pi / 2), Rational2(), "minimal"),
    ("jump", inverse_r(3.0), Trapezoid(1.0, 2.0), "minimal"),
    ("weak_boundary", inverse_r(3.0), HingePlus(1.0), "upper"),
]


def test_criterion_01_boun():
    con = construct_radial_solution(boun(), ONE)
    err = float(np.max(np.abs(con.profile.h(GRID) - 4.0 * (1.0 - np.sqrt(GRID)))))
    eta_err = float(np.max(np.abs(con.field.eta(GRID) + 1.0)))
    ok = err <= 1e-9 and eta_err <= 1e-9
    record(1, ok, f"boun max|h - 4(1-sqrt r)| = {err:.2e}, max|xi r + 1| = {eta_err:.2e} (tol 1e-9)")


def test_criterion_02_ball():
    rho = 0.5
    triv = construct_radial_solution(ball(1.0), ONE)
    r_in, r_out = GRID[GRID < rho], GRID[GRID > rho]
    eta_in = float(np.max(np.abs(triv.field.eta(r_in) + 0.5)))
    eta_out = float(np.max(np.abs(triv.field.eta(r_out) + 0.5 * (rho / r_out) ** 2)))
    margin = triv.field.feasibility_margin
    trivial_ok = (
        "Trivial" in triv.report.tags and triv.profile.is_zero()
        and eta_in <= 1e-12 and eta_out <= 1e-12 and margin >= 0
    )
    nt = construct_radial_solution(ball(4.0), ONE)
    ref = np.where(GRID < rho, 2.0 * np.log(rho / GRID), 0.0)
    err = float(np.max(np.abs(nt.profile.h(GRID) - ref)))
    nt_ok = "Nontrivial" in nt.report.tags and not nt.profile.jumps and err <= 1e-9
    record(
        2, trivial_ok and nt_ok,
        f"lambda=1 Trivial, field errors {eta_in:.1e}/{eta_out:.1e}, margin {margin:.3g}; "
        f"lambda=4 max|h - 2 log(rho/r)| = {err:.2e}, jumps {len(nt.profile.jumps)}",
    )


def test_criterion_03_threshold():
    at = classify_regime(inverse_r(2.0), ONE)
    above = classify_regime(inverse_r(2.0 + 1e-9), ONE)
    ok = "Trivial" in at.tags and "Nontrivial" in above.tags
    record(3, ok, f"lambda=N-1 -> {sorted(at.tags)}, lambda=N-1+1e-9 -> {sorted(above.tags)}")


def test_criterion_04_nonbv():
    con = construct_radial_solution(inverse_r(5.0), Rational1())
    r = GRID[GRID < 1.0]
    err = float(np.max(np.abs(con.profile.h(r) / (r**-3.0 - 1.0) - 1.0)))
    tv = total_variation(con.profile)
    bv = construct_radial_solution(inverse_r(2.5), Rational1())
    tv_bv = total_variation(bv.profile)
    ok = (
        err <= 1e-9 and tv == math.inf and "NontrivialNonBV" in con.report.tags
        and math.isfinite(tv_bv) and "NontrivialNonBV" not in bv.report.tags
    )
    record(
        4, ok,
        f"lambda=5 rel err vs r^-3 - 1 = {err:.2e}, TV = {tv}, tags {sorted(con.report.tags)}; "
        f"lambda=2.5 TV = {tv_bv:.6g}",
    )


def test_criterion_05_nonexistence():
    rep = classify_regime(critical_datum(2.0), Rational2())
    con = construct_radial_solution(critical_datum(math.pi / 2), Rational2())
    r = np.linspace(0.01, 1.0, 2001)
    err = float(np.max(np.abs(con.profile.h(r) - np.tan(math.pi / 2 * (1.0 - r)))))
    ok = "NonexistentRadial" in rep.tags and "Nontrivial" in con.report.tags and err <= 1e-8
    record(
        5, ok,
        f"lambda=2 -> {sorted(rep.tags)}; lambda=pi/2 max|h - tan(lambda(1-r))| on [0.01,1] = {err:.2e}",
    )


def test_criterion_06_jump():
    f, g = inverse_r(3.0), Trapezoid(1.0, 2.0)
    con = construct_radial_solution(f, g)
    jumps = con.profile.jumps
    res = weak_residual(con.profile, con.field, f, g, bump_family(1.0, 20))
    ok = (
        len(jumps) == 1
        and abs(jumps[0].radius - math.exp(-0.5)) <= 1e-10
        and (jumps[0].lower, jumps[0].upper) == pytest.approx((1.0, 2.0), abs=1e-12)
        and res.max_abs <= 1e-6
    )
    detail = ", ".join(f"r*={j.radius:.15f} values ({j.lower:g},{j.upper:g})" for j in jumps)
    record(6, ok, f"{len(jumps)} jump(s): {detail}; weak residual {res.max_abs:.2e} (tol 1e-6)")


def test_criterion_07_weak_boundary():
    con = construct_radial_solution(inverse_r(3.0), HingePlus(1.0), policy="upper")
    tr = boundary_check(con.profile, con.field)
    ok = (
        isinstance(tr, WeakTrace)
        and abs(con.profile.boundary_value - 1.0) <= 1e-12
        and abs(tr.normal_trace + 1.0) <= 1e-9
    )
    record(7, ok, f"boundary value {con.profile.boundary_value:g}, {type(tr).__name__} [z,nu] = {tr.normal_trace:.12g}")


def test_criterion_08_norms():
    s2 = abs(sobolev_constant(2) - 1.0 / (2.0 * math.sqrt(math.pi)))
    rng = np.random.default_rng(20240808)
    sandwich_bad = 0
    for _ in range(100):
        f = random_datum(rng)
        qp = float(rng.uniform(1.2, 6.0))
        q = qp / (qp - 1.0)
        low = quasinorm_marcinkiewicz(f, qp)
        mid = norm_marcinkiewicz(f, qp)
        if math.isinf(low) or math.isinf(mid):
            sandwich_bad += not (math.isinf(low) and math.isinf(mid))
            continue
        sandwich_bad += not (low <= mid * (1 + 1e-9) and mid <= q * low * (1 + 1e-9))
    q = 1.5
    a, b = 0.25, 0.75
    vol = 4.0 * math.pi / 3.0 * (b**3 - a**3)
    E = RadialDatum(N3, 1.0, (Term(vol ** (-1.0 / q), 0.0, a, b),))
    lor = abs(norm_lorentz_q1(E, q) - 1.0)
    data = [c[1] for c in CASES] + [critical_datum(2.0), inverse_r(2.0), E]
    bracket_bad = sum(
        not (br.lower <= br.upper * (1 + 1e-12)) for br in (dual_norm_bounds(f) for f in data)
    )
    lam_err = max(
        abs(dual_norm_bounds(RadialDatum.power(N, 1.0, lam, 1.0)).lower - lam / (N - 1))
        for N in (2, 3, 5) for lam in (0.5, 2.0, 7.0)
    )
    ok = s2 <= 1e-12 and sandwich_bad == 0 and lor <= 1e-10 and bracket_bad == 0 and lam_err <= 1e-9
    record(
        8, ok,
        f"|S_2 - 1/(2 sqrt pi)| = {s2:.1e}; sandwich violations {sandwich_bad}/100; "
        f"Lorentz indicator error {lor:.1e}; bracket violations {bracket_bad}; "
        f"annuli lower vs lambda/(N-1) {lam_err:.1e}",
    )


def test_criterion_09_transform():
    f = boun()
    base = construct_radial_solution(f, ONE).profile
    r = np.geomspace(1e-4, 1.0, 1501)
    worst = {}
    for g in (Constant(2.0), AffinePlus(1.0, 1.0), Rational1()):
        direct = construct_radial_solution(f, g).profile.h(r)
        mapped = np.array([g.inverse(float(v)) for v in base.h(r)])
        worst[g.family] = float(np.max(np.abs(direct - mapped)))
    ok = max(worst.values()) <= 1e-9
    record(9, ok, "sup|direct - G^-1(u_1)| " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_10_convergence():
    f = inverse_r(5.0)
    table = run_convergence_study(f, ONE, ApproximationSchedule("TruncateDatum", (10, 100, 1000, 10000)))
    errs = [r.error for r in table.rows]
    strictly = all(b < a for a, b in zip(errs[:-1], errs[1:]))
    bound = f.integral()
    bv_ok = all(r.feasible and r.bv <= bound * (1 + 1e-12) for r in table.rows)
    ok = strictly and errs[-1] <= 1e-3 and bv_ok
    record(
        10, ok,
        "L1 errors " + ", ".join(f"{e:.2e}" for e in errs)
        + f"; max BV {max(r.bv for r in table.rows):.5g} <= int f = {bound:.5g}",
    )


def test_criterion_11_discrimination():
    bumps = bump_family(1.0, 20)
    worst_pass, best_tamper, n_tamper = 0.0, math.inf, 0
    for _, f, g, policy in CASES:
        con = construct_radial_solution(f, g, policy)
        res = weak_residual(con.profile, con.field, f, g, bumps)
        worst_pass = max(worst_pass, res.max_abs)
        # tampers are relative to the solution, so they are only
        # meaningful when the solution itself is not negligibly small
        if float(np.max(np.abs(con.profile.h(GRID)))) < 1e-2:
            continue
        for _, p, fl in tampered_profiles(con.profile, con.field):
            best_tamper = min(best_tamper, weak_residual(p, fl, f, g, bumps).max_abs)
            n_tamper += 1
    ok = worst_pass <= 1e-6 and best_tamper > 1e-3
    record(
        11, ok,
        f"max residual of {len(CASES)} constructions {worst_pass:.1e} (tol 1e-6); "
        f"min residual of {n_tamper} tampered profiles {best_tamper:.2e} (> 1e-3)",
    )


def test_criterion_12_green():
    bounded = []
    for label, f, g, policy in CASES:
        prof = construct_radial_solution(f, g, policy)
        if not prof.profile.unbounded_at_origin:
            bounded.append((label, green_identity(prof.profile, prof.field).defect))
    worst = max(d for _, d in bounded)
    ok = worst <= 1e-6 and len(bounded) >= 3
    record(12, ok, "Green defect " + ", ".join(f"{k} {d:.1e}" for k, d in bounded) + " (tol 1e-6)")
