"""Radial solutions of -div(Du/|Du|) + g(u)|Du| = f on B_R and their verification.

Write u(x) = h(|x|), z(x) = xi(|x|) x and eta = xi r, the normal component of
z on spheres.  With g = 1 and D(r) = E(r) - r^(N-1), where
E(r) = int_0^r rho^(N-1) f, the field on flat parts of u satisfies
r^(N-1) eta = K - E, and eta = -1 wherever u strictly decreases.  The
admissible choice is the Skorokhod reflection of D at its running maximum
L(r) = sup_{s <= r} max(D(s), 0): u decreases on {D = L, L increasing} and

    w(r) = int_r^R (f - (N-1)/rho) 1[D = L] d rho,     eta = (L - E) / r^(N-1).

A general g is handled by the change of unknown G(h) = w.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .datum import Piece, RadialDatum, ball_volume, sphere_area
from .errors import (
    InapplicableDatumError,
    InfeasibleFieldError,
    NonexistenceError,
    VerificationError,
)
from .growth import FlatInterval, GrowthSpec, classify_growth, select
from .lorentz import _maximize_log, dual_norm_bounds

FIELD_TOL = 1e-9
_QUAD = dict(epsabs=1e-13, epsrel=1e-12, limit=400)


def _quad_split(fun, a: float, b: float, points: Sequence[float] = ()) -> float:
    """int_a^b fun, split at the given interior points."""
    cuts = [a] + sorted(p for p in set(points) if a < p < b) + [b]
    # intervals spanning several decades get geometric sub-panels so that
    # features near the left end are not missed
    graded = [cuts[0]]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if lo > 0 and hi / lo > 1e3:
            graded.extend(np.geomspace(lo, hi, int(math.log10(hi / lo)) + 2)[1:-1])
        graded.append(hi)
    cuts = graded
    total = 0.0
    with warnings.catch_warnings():
        # round-off warnings fire once the requested 1e-12 is below attainable accuracy
        warnings.simplefilter("ignore", IntegrationWarning)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi > lo:
                total += quad(fun, lo, hi, **_QUAD)[0]
    return total


_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def panel_nodes(R: float, cuts: Sequence[float] = (), panels: int = 64, grading: int = 40):
    """Composite 32-point Gauss-Legendre nodes and weights on (0, R).

    Panels break at every cut, at R 2^-k (k <= grading) toward the origin
    and are at most R/panels long.
    """
    edges = {0.0, R} | {c for c in cuts if 0.0 < c < R}
    edges |= {R * 2.0**-k for k in range(1, grading + 1)}
    edges |= set(np.linspace(0.0, R, panels + 1)[1:-1])
    e = np.array(sorted(edges))
    lo, hi = e[:-1], e[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    r = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return r, w


# ----------------------------------------------------------------------
# potential and envelope


def potential_Psi(f: RadialDatum, r) -> float:
    """Psi(r) = int_r^R (f - (N-1)/rho) d rho."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0) or np.any(r_arr > f.R):
        raise ValueError("r must lie in (0, R]")
    return f.psi(r)


def _root_log(fun, lo: float, hi: float, lo_sign: float) -> float:
    """Root of fun on (lo, hi), searched in log r for full relative accuracy.

    ``lo`` may be 0, in which case the bracket is pushed toward the origin
    until fun takes the sign ``lo_sign``.
    """
    b = math.log(hi)
    if lo > 0:
        a = math.log(lo)
    else:
        a = b - 8.0
        while math.copysign(1.0, fun(math.exp(a))) != lo_sign:
            if a < -700.0:
                return 0.0
            a = 2.0 * a - b
    return math.exp(brentq(lambda x: fun(math.exp(x)), a, b, xtol=1e-15, rtol=1e-15))


def _phi_start(f: RadialDatum, p: Piece) -> float:
    """r f - (N-1) at the left end of a piece (limit from the right)."""
    if p.lo == 0.0:
        return p.log_coef - (f.N - 1)
    return f.curvature_gap(p, p.lo)


def _phi_zero(f: RadialDatum, p: Piece) -> float:
    """First r in [lo, hi] with r f(r) - (N-1) >= 0 on the piece (hi if none)."""
    if _phi_start(f, p) >= 0:
        return p.lo
    if f.curvature_gap(p, p.hi) <= 0:
        return p.hi
    return _root_log(lambda r: f.curvature_gap(p, r), p.lo, p.hi, -1.0)


@dataclass(frozen=True)
class Envelope:
    """The level function w = G(h) with its decrease set and running maximum.

    ``intervals`` are the maximal closed intervals of the decrease set on
    which w changes, ``increments`` their w-increments (the first may be
    inf when f has a strong 1/r singularity) and ``ceilings`` the running
    maximum L at the left end of each piece of the datum.
    """

    source: RadialDatum
    intervals: tuple[tuple[float, float], ...]
    increments: tuple[float, ...]
    ceilings: tuple[float, ...]

    @property
    def at_origin(self) -> float:
        return float(sum(self.increments))

    def is_zero(self) -> bool:
        return not self.intervals

    def _scalar(self, r: float) -> float:
        total = 0.0
        for (s, e), inc in zip(self.intervals, self.increments):
            if e <= r:
                continue
            total += inc if s >= r else self.source.excess(r, e)
        return max(total, 0.0)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if r.ndim == 0:
            return self._scalar(float(r))
        return np.array([self._scalar(float(x)) for x in r.ravel()]).reshape(r.shape)

    def ceiling(self, r: float) -> float:
        """Running maximum L(r)."""
        f = self.source
        k = max(i for i, p in enumerate(f.pieces) if p.lo <= r or i == 0)
        L = self.ceilings[k]
        D = float(f.moment(r)) - r ** (f.N - 1)
        return max(L, D) if self.in_decrease(r) else L

    def in_decrease(self, r: float) -> bool:
        return any(s <= r <= e for s, e in self.intervals)


def envelope_w(f: RadialDatum) -> Envelope:
    """Level function w by reflection of D = E - r^(N-1) at its running maximum.

    On every piece D' = r^(N-2) (r f - (N-1)) changes sign at most once, from
    - to +, so the decrease set meets each piece in at most one interval
    [s, hi] that starts where D climbs back to the incoming maximum.
    """
    N = f.N
    D = lambda r: float(f.moment(r)) - r ** (N - 1)
    L = 0.0
    raw, ceilings = [], []  # (start, end, log of start when it may underflow)
    for p in f.pieces:
        ceilings.append(L)
        if p.lo == 0.0 and _phi_start(f, p) < 0:
            # D < 0 near the origin; the start solves E(r) = r^(N-1), found in
            # log r because it can lie far below the smallest positive float
            lh = math.log(p.hi)
            if f.origin_ratio_log(lh) > 0:
                a = lh - 8.0
                while f.origin_ratio_log(a) >= 0:
                    a = 2.0 * a - lh
                xs = brentq(f.origin_ratio_log, a, lh, xtol=1e-15, rtol=1e-15)
                raw.append((math.exp(xs), p.hi, xs))
            L = max(L, D(p.hi))
            continue
        rc = _phi_zero(f, p)
        if rc >= p.hi:
            L = max(L, D(p.hi))
            continue
        d_hi = D(p.hi)
        d_rc = D(rc) if rc > 0 else 0.0
        # rounding in D(rc) is relative to E(rc) and rc^(N-1), not to 1
        scale = max(abs(L), float(f.moment(rc)), rc ** (N - 1))
        if d_rc >= L - 1e-14 * scale:
            s = rc
        elif d_hi <= L:
            continue
        else:
            s = _root_log(lambda r: D(r) - L, rc, p.hi, -1.0)
        raw.append((s, p.hi, None))
        L = max(L, d_hi)
    merged: list[list] = []
    for s, e, xs in raw:
        if merged and abs(s - merged[-1][1]) <= 1e-15 * f.R:
            merged[-1][1] = e
        else:
            merged.append([s, e, xs])
    intervals, increments = [], []
    for s, e, xs in merged:
        inc = f.excess(s, e) if xs is None else f.excess_log(xs, e)
        if inc > 0:
            intervals.append((s, e))
            increments.append(inc)
    return Envelope(f, tuple(intervals), tuple(increments), tuple(ceilings))


def single_sign_change(f: RadialDatum) -> bool:
    """True if r f - (N-1) goes from >= 0 to <= 0 at most once as r increases."""
    seen_negative = False
    for p in f.pieces:
        for v in (_phi_start(f, p), f.curvature_gap(p, p.hi)):
            if v < 0:
                seen_negative = True
            elif v > 0 and seen_negative:
                return False
    return True


def envelope_w_running_min(f: RadialDatum, r) -> np.ndarray | float:
    """w(r) = Psi(r) - min_{[r, R]} Psi, valid under the single-sign-change condition.

    Between consecutive candidates (piece edges and zeros of r f - (N-1))
    Psi is monotone, so the minimum over [r, R] is attained at a candidate.
    """
    if not single_sign_change(f):
        raise InapplicableDatumError(
            "construction inapplicable: r f(r) - (N-1) changes sign from - to +"
        )
    cands = sorted({p.lo for p in f.pieces} | {f.R} | {_phi_zero(f, p) for p in f.pieces})
    cands = [c for c in cands if c > 0]
    psi_c = {c: f.excess(c, f.R) for c in cands}

    def one(x):
        if x <= 0:
            return f.excess(0.0, f.R) - min(psi_c.values())
        px = f.excess(x, f.R)
        return px - min([px] + [psi_c[c] for c in cands if c >= x])

    r = np.asarray(r, dtype=float)
    if r.ndim == 0:
        return one(float(r))
    return np.array([one(float(x)) for x in r])


# ----------------------------------------------------------------------
# profile, field, report


@dataclass(frozen=True)
class Segment:
    kind: str  # "decrease" or "flat"
    lo: float
    hi: float
    value: float | None = None  # h on flat segments


@dataclass(frozen=True)
class Jump:
    radius: float
    lower: float  # h(r*+)
    upper: float  # h(r*-)


@dataclass(frozen=True)
class RadialProfile:
    """u(x) = h(|x|) as decrease/flat segments plus jumps.

    ``h`` and ``dh`` are vectorized callables; ``origin_power`` p means
    h ~ r^(-p) at the origin (0 for bounded or logarithmic growth).
    """

    N: int
    R: float
    segments: tuple[Segment, ...]
    jumps: tuple[Jump, ...]
    boundary_value: float
    unbounded_at_origin: bool
    origin_power: float
    h: Callable = field(repr=False, compare=False)
    dh: Callable = field(repr=False, compare=False)
    w: Callable = field(repr=False, compare=False)
    policy: str = "minimal"
    kinks: tuple[float, ...] = ()  # radii where h' may jump (datum breakpoints)

    def breakpoints(self) -> list[float]:
        pts = {s.lo for s in self.segments} | {s.hi for s in self.segments}
        return sorted(pts | {j.radius for j in self.jumps} | set(self.kinks))

    def segment_kind(self, r: float) -> str:
        for s in self.segments:
            if s.lo <= r <= s.hi:
                return s.kind
        return self.segments[-1].kind

    def is_zero(self) -> bool:
        return (
            all(s.kind == "flat" and s.value == 0.0 for s in self.segments)
            and not self.jumps
        )

    def lq_finite(self, q: float) -> bool:
        """int h^q r^(N-1) dr < inf, read off the exponent at the origin."""
        return self.origin_power * q < self.N


@dataclass(frozen=True)
class FieldProfile:
    """eta = xi r, with r^(N-1) eta = K - E(r) on flat segments."""

    N: int
    R: float
    segments: tuple[Segment, ...]
    constants: tuple[float | None, ...]  # K per segment, None on decrease segments
    feasibility_margin: float
    interface_mismatch: float
    eta: Callable = field(repr=False, compare=False)
    flux_density: Callable = field(repr=False, compare=False)

    def xi(self, r):
        r = np.asarray(r, dtype=float)
        return self.eta(r) / r


@dataclass(frozen=True)
class RegimeReport:
    tags: frozenset
    witnesses: dict
    envelope: Envelope | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {"tags": sorted(self.tags), "witnesses": self.witnesses}


class Construction(NamedTuple):
    profile: RadialProfile
    field: FieldProfile
    report: RegimeReport


# ----------------------------------------------------------------------
# construction


def _origin_power(f: RadialDatum, g: GrowthSpec, env: Envelope, w0: float) -> float:
    if math.isinf(w0):
        return g.log_power(f.origin_log_coef() - (f.N - 1))
    if w0 == g.G_inf and not isinstance(g.inverse(w0), FlatInterval):
        # d(r) = w0 - w(r) ~ c r^(1 - q) with q the strongest sub-1/r power
        return g.edge_power() * (1.0 - f.origin_max_q(below_one=True))
    return 0.0


def _segments(env: Envelope) -> list[Segment]:
    R = env.source.R
    out, pos = [], 0.0
    for s, e in env.intervals:
        if s > pos:
            out.append(Segment("flat", pos, s))
        out.append(Segment("decrease", s, e))
        pos = e
    if pos < R:
        out.append(Segment("flat", pos, R))
    return out


def _find_level(env: Envelope, seg: Segment, c: float) -> float:
    return _root_log(lambda r: env._scalar(r) - c, seg.lo, seg.hi, 1.0)


def construct_radial_solution(
    f: RadialDatum, g: GrowthSpec, policy: str = "minimal", envelope: str = "reflection"
) -> Construction:
    """Radial solution, field and regime tags for the datum f and growth g.

    ``policy`` picks the branch of G^-1 on flat levels of G: "minimal" takes
    the smallest preimage, "upper" the largest.  ``envelope`` may be set to
    "running_min" to use the closed formula that only covers data whose
    r f - (N-1) changes sign at most once.
    """
    if policy not in ("minimal", "upper"):
        raise ValueError("policy must be 'minimal' or 'upper'")
    if envelope not in ("reflection", "running_min"):
        raise ValueError("envelope must be 'reflection' or 'running_min'")
    N, R = f.N, f.R
    env = envelope_w(f)
    if envelope == "running_min":
        probe = np.geomspace(R * 1e-6, R, 64)
        ref = envelope_w_running_min(f, probe)
        if np.max(np.abs(ref - env(probe))) > 1e-9 * max(1.0, float(np.max(ref))):
            raise InapplicableDatumError("running-minimum envelope disagrees with reflection")
    gclass = classify_growth(g)
    w0 = env.at_origin
    G_inf = g.G_inf
    witnesses = {
        "w_origin": w0,
        "G_infinity": G_inf,
        "growth_class": gclass.tag,
        "policy": policy,
        "origin_log_coef": f.origin_log_coef(),
        "N_minus_1": N - 1,
    }
    if w0 > G_inf:
        report = RegimeReport(
            frozenset({"NonexistentRadial"}),
            {**witnesses, "inequality": "w(0+) > G(inf)"},
            env,
        )
        err = NonexistenceError(
            f"level above range of G: w(0+) = {w0!r} > G(inf) = {G_inf!r}"
        )
        err.report = report
        raise err
    if w0 == G_inf and math.isfinite(G_inf) and env.intervals and env.intervals[0][0] > 0:
        # h would be infinite on a whole ball around the origin
        report = RegimeReport(
            frozenset({"NonexistentRadial"}),
            {**witnesses, "inequality": "w = G(inf) on a ball"},
            env,
        )
        err = NonexistenceError("level G(inf) is reached on a ball around the origin")
        err.report = report
        raise err

    wsegs = _segments(env)

    # flat levels of G crossed by w become jumps or policy-selected plateaus
    jumps: list[Jump] = []
    plateau: dict[int, float] = {}
    for lo_s, hi_s in g.zero_intervals():
        c = float(g.G(lo_s))
        hi_s = hi_s if math.isfinite(hi_s) else lo_s
        for i, seg in enumerate(wsegs):
            if seg.kind == "flat":
                val = env._scalar(seg.lo if seg.lo > 0 else seg.hi)
                if val == c:
                    plateau[i] = hi_s if policy == "upper" else lo_s
                    edge = seg.hi if policy == "upper" else seg.lo
                    if 0.0 < edge < R and hi_s > lo_s:
                        jumps.append(Jump(edge, lo_s, hi_s))
                continue
            top = w0 if seg.lo == 0.0 else env._scalar(seg.lo)
            bottom = env._scalar(seg.hi)
            if bottom < c < top:
                r_star = _find_level(env, seg, c)
                if 0.0 < r_star < R and hi_s > lo_s:
                    jumps.append(Jump(r_star, lo_s, hi_s))
    jumps.sort(key=lambda j: j.radius)

    def h_of_level(t: float, i: int | None) -> float:
        if i is not None and i in plateau:
            return plateau[i]
        return select(g.inverse(min(t, G_inf)), policy)

    # limit of G^-1 at 0+: the top of a zero interval of g that starts at 0
    inv0 = g.inverse(0.0)
    h_zero_plus = inv0.hi if isinstance(inv0, FlatInterval) and math.isfinite(inv0.hi) else 0.0
    if wsegs[-1].kind == "decrease":
        boundary = h_zero_plus
    else:
        boundary = h_of_level(env._scalar(R), len(wsegs) - 1)

    seg_index = lambda r: next(
        (i for i, s in enumerate(wsegs) if s.lo <= r < s.hi), len(wsegs) - 1
    )

    def h_scalar(r: float) -> float:
        if r >= R:
            return boundary
        if r <= 0:
            return math.inf if math.isinf(w0) else h_of_level(w0, 0)
        return h_of_level(env._scalar(r), seg_index(r))

    def dh_scalar(r: float) -> float:
        if not 0 < r < R or wsegs[seg_index(r)].kind != "decrease":
            return 0.0
        gh = float(g.g(h_scalar(r)))
        dens = float(f(r)) - (N - 1) / r
        return -dens / gh if gh > 0 else -math.inf

    h = np.vectorize(h_scalar, otypes=[float])
    dh = np.vectorize(dh_scalar, otypes=[float])

    segments = tuple(
        Segment(s.kind, s.lo, s.hi, None if s.kind == "decrease" else h_scalar(0.5 * (s.lo + s.hi)))
        for s in wsegs
    )
    unbounded = math.isinf(w0) or (w0 == G_inf and math.isinf(h_scalar(0.0)))
    p = _origin_power(f, g, env, w0) if unbounded else 0.0
    profile = RadialProfile(
        N, R, segments, tuple(jumps), boundary, unbounded, p, h, dh, env, policy,
        tuple(float(x) for x in f.breakpoints if 0 < x < R),
    )
    fld = _build_field(f, env, segments)

    tags = set()
    if env.is_zero():
        tags.add("Trivial" if boundary == 0.0 else "Nontrivial")
    else:
        tags.add("Nontrivial")
    tv = total_variation(profile, N)
    if math.isinf(tv):
        tags.discard("Nontrivial")
        tags.add("NontrivialNonBV")
    if gclass.tag in ("VanishesNearZero", "VanishesOnInterval"):
        tags.add("NonUnique")
    if boundary > 0:
        tags.add("WeakBoundaryOnly")
    witnesses.update(
        {
            "boundary_value": boundary,
            "feasibility_margin": fld.feasibility_margin,
            "total_variation": tv,
            "origin_power": p,
            "unbounded_at_origin": unbounded,
            "jumps": [dataclasses.astuple(j) for j in jumps],
            "decrease_set": [list(iv) for iv in env.intervals],
        }
    )
    if "Trivial" in tags:
        witnesses["inequality"] = "w = 0 (D <= 0 on (0, R])"
    return Construction(profile, fld, RegimeReport(frozenset(tags), witnesses, env))


def _excess_flux(f: RadialDatum, K: float, r: float) -> float:
    """(E(r) - K) / r^(N-1), i.e. -eta on a flat segment with constant K."""
    if K == 0.0:
        return f.flux_ratio(r)
    return (float(f.moment(r)) - K) / r ** (f.N - 1)


def _build_field(f: RadialDatum, env: Envelope, segments: Sequence[Segment]) -> FieldProfile:
    N, R = f.N, f.R
    consts: list[float | None] = []
    margin = 1.0
    mismatch = 0.0
    for k, seg in enumerate(segments):
        if seg.kind == "decrease":
            consts.append(None)
            margin = 0.0
            continue
        K = env.ceiling(seg.lo) if seg.lo > 0 else 0.0
        # interface continuity on both sides
        for r0, flank in ((seg.lo, k - 1), (seg.hi, k + 1)):
            if 0 <= flank < len(segments) and segments[flank].kind == "decrease" and r0 > 0:
                mismatch = max(mismatch, abs(1.0 - _excess_flux(f, K, r0)))
        consts.append(K)
        lo = seg.lo if seg.lo > 0 else (seg.hi * 1e-12 or 0.5 * seg.hi)
        worst, _ = _maximize_log(lambda r, K=K: _excess_flux(f, K, r), lo, seg.hi)
        edge = max(_excess_flux(f, K, r) for r in (lo, seg.hi))
        margin = min(margin, 1.0 - max(worst, edge, 0.0))
    if mismatch > FIELD_TOL:
        raise InfeasibleFieldError(
            f"flat-segment constants disagree at an interface by {mismatch:.3e}"
        )
    if margin < -FIELD_TOL:
        raise InfeasibleFieldError(f"field exceeds the unit ball: margin {margin:.3e}")

    kinds = [(s.lo, s.hi, s.kind, K) for s, K in zip(segments, consts)]

    def eta_scalar(r: float) -> float:
        for lo, hi, kind, K in kinds:
            if lo <= r <= hi:
                if kind == "decrease":
                    return -1.0
                if r == 0.0:
                    return -f.origin_log_coef() / (N - 1)
                return -_excess_flux(f, K, r)
        return -1.0 if consts[-1] is None else -_excess_flux(f, consts[-1], R)

    def flux_scalar(r: float) -> float:
        """(r^(N-1) eta)' in the a.e. sense."""
        for lo, hi, kind, _ in kinds:
            if lo <= r <= hi:
                if kind == "decrease":
                    return -(N - 1) * r ** (N - 2)
                return -r ** (N - 1) * float(f(r))
        return 0.0

    return FieldProfile(
        N, R, tuple(segments), tuple(consts), margin, mismatch,
        np.vectorize(eta_scalar, otypes=[float]),
        np.vectorize(flux_scalar, otypes=[float]),
    )


def _constant_over_curvature(f: RadialDatum) -> float | None:
    """lambda if f = (N-1)/r + lambda on all of B_R, else None."""
    if len(f.pieces) != 1:
        return None
    p = f.pieces[0]
    log = p.log_coef
    rest = [(c, q) for c, q in zip(p.c, p.q) if q != 1.0]
    if log != f.N - 1 or len(rest) != 1 or rest[0][1] != 0.0:
        return None
    return float(rest[0][0])


def classify_regime(f: RadialDatum, g: GrowthSpec, policy: str = "minimal") -> RegimeReport:
    """Regime tags plus a cross-check against the dual-norm bracket.

    For radial data the bracket's lower end is sup_b E(b)/b^(N-1), and the
    decrease set is empty exactly when D <= 0, that is when this sup is at
    most 1.  A disagreement is reported as a verification failure.
    """
    try:
        report = construct_radial_solution(f, g, policy).report
    except NonexistenceError as exc:
        report = exc.report
        if math.isfinite(g.G_inf):
            report.witnesses["threshold"] = (
                f"w(0+) = {report.witnesses['w_origin']:.12g} must not exceed "
                f"G(inf) = {g.G_inf:.12g}"
            )
            lam = _constant_over_curvature(f)
            if lam is not None:
                # f = (N-1)/r + lambda gives w(0+) = lambda R
                crit = g.G_inf / f.R
                name = " = pi/(2R)" if g.G_inf == math.pi / 2 else ""
                report.witnesses["lambda"] = lam
                report.witnesses["lambda_critical"] = crit
                report.witnesses["threshold"] += f"; radial solutions need lambda <= G(inf)/R{name} = {crit:.12g}"
    bracket = dual_norm_bounds(f)
    report.witnesses["dual_lower"] = bracket.lower
    report.witnesses["dual_upper"] = bracket.upper
    env_zero = report.envelope.is_zero()
    if env_zero and bracket.lower > 1.0 + 1e-9:
        raise VerificationError("zero envelope but the dual lower bound exceeds 1")
    if not env_zero and bracket.lower <= 1.0 - 1e-9:
        raise VerificationError("nonzero envelope but the dual lower bound is below 1")
    return report


# ----------------------------------------------------------------------
# variation, boundary, weak form


def total_variation(sol: RadialProfile, N: int | None = None, level: Callable | None = None) -> float:
    """|D(level o h)|(B_R); ``level`` defaults to the identity.

    For nonincreasing h with r^(N-1) h(r) -> 0 at the origin, integration by
    parts over (0, R) turns the variation, jumps included, into

        N C_N [ (N-1) int_0^R h r^(N-2) dr - h(R-) R^(N-1) ].

    Near the origin h ~ r^(-p), so the variation is infinite iff p >= N - 1.
    """
    N = sol.N if N is None else N
    if level is None and sol.unbounded_at_origin and sol.origin_power >= N - 1:
        return math.inf
    if sol.is_zero():
        return 0.0
    hv = sol.h if level is None else (lambda r: level(sol.h(r)))
    R = sol.R
    integrand = lambda r: float(hv(r)) * r ** (N - 2)
    body = _quad_split(integrand, 0.0, R, sol.breakpoints())
    edge = float(hv(R)) * R ** (N - 1)
    return sphere_area(N) * ((N - 1) * body - edge)


def chain_rule_variation(sol: RadialProfile, g: GrowthSpec) -> float:
    """N C_N [ int g(h) |h'| r^(N-1) dr + sum over jumps of (G(upper) - G(lower)) r*^(N-1) ]."""
    N, R = sol.N, sol.R

    def dens(r):
        d = float(sol.dh(r))
        if d == 0.0:
            return 0.0
        return float(g.g(float(sol.h(r)))) * abs(d) * r ** (N - 1)

    body = _quad_split(dens, 0.0, R, sol.breakpoints())
    atoms = sum(
        (float(g.G(j.upper)) - float(g.G(j.lower))) * j.radius ** (N - 1) for j in sol.jumps
    )
    return sphere_area(N) * (body + atoms)


@dataclass(frozen=True)
class StrongTrace:
    value: float = 0.0


@dataclass(frozen=True)
class WeakTrace:
    value: float
    normal_trace: float
    sign_defect: float


def boundary_check(sol: RadialProfile, fld: FieldProfile, tol: float = FIELD_TOL):
    """Strong trace if h(R-) = 0, else the weak condition [z, nu] = -sign(h(R-))."""
    u = sol.boundary_value
    if u == 0.0:
        return StrongTrace(0.0)
    nt = float(fld.eta(sol.R))
    defect = abs(nt + math.copysign(1.0, u))
    if defect > tol:
        raise VerificationError(
            f"boundary value {u!r} with [z, nu] = {nt!r}: neither trace condition holds"
        )
    return WeakTrace(u, nt, defect)


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
    return out


def _dbump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    xm = x[m]
    out[m] = np.exp(1.0 - 1.0 / (1.0 - xm**2)) * (-2.0 * xm / (1.0 - xm**2) ** 2)
    return out


@dataclass(frozen=True)
class Bump:
    """Smooth radial test function B((r - c)/delta); c = 0 gives a bump centred at the origin."""

    center: float
    width: float

    def __call__(self, r):
        return _bump((np.asarray(r, dtype=float) - self.center) / self.width)

    def derivative(self, r):
        return _dbump((np.asarray(r, dtype=float) - self.center) / self.width) / self.width

    @property
    def support(self) -> tuple[float, float]:
        return max(self.center - self.width, 0.0), self.center + self.width


def bump_family(R: float, count: int = 20) -> list[Bump]:
    """``count`` bumps: a quarter centred at the origin, the rest spread over (0, R)."""
    n0 = max(count // 4, 1)
    origin = [Bump(0.0, R * t) for t in np.linspace(0.25, 0.95, n0)]
    n1 = count - n0
    width = 0.6 * R / max(n1, 1) + 0.04 * R
    centers = np.linspace(width, R - width, n1)
    return origin + [Bump(float(c), width) for c in centers]


@dataclass(frozen=True)
class Residuals:
    values: np.ndarray
    pairing_defect: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def weak_residual(
    sol: RadialProfile,
    fld: FieldProfile,
    f: RadialDatum,
    g: GrowthSpec,
    testfns: Sequence[Bump] | None = None,
) -> Residuals:
    """Residuals of the weak equation and the pairing defect on decrease segments.

    R(phi) = int_0^R [eta phi' + phi g(h)|h'| - phi f] r^(N-1) dr
             + sum over jumps of phi(r*) (G(upper) - G(lower)) r*^(N-1).
    """
    N, R = sol.N, sol.R
    testfns = bump_family(R) if testfns is None else testfns
    cuts = sol.breakpoints() + list(f.breakpoints)
    cuts += [e for phi in testfns for e in phi.support]
    r, wts = panel_nodes(R, cuts)
    wts = wts * r ** (N - 1)
    eta = np.asarray(fld.eta(r), dtype=float)
    d = np.asarray(sol.dh(r), dtype=float)
    fr = np.asarray(f(r), dtype=float)
    with np.errstate(invalid="ignore"):
        var = np.where(
            d == 0.0, 0.0,
            np.where(np.isinf(d), fr - (N - 1) / r, g.g(np.asarray(sol.h(r), dtype=float)) * np.abs(d)),
        )
    atoms = [(j.radius, (float(g.G(j.upper)) - float(g.G(j.lower))) * j.radius ** (N - 1)) for j in sol.jumps]
    out = []
    for phi in testfns:
        val = float(np.sum(wts * (eta * phi.derivative(r) + phi(r) * (var - fr))))
        val += sum(float(phi(rj)) * a for rj, a in atoms)
        out.append(val)

    defect = 0.0
    for seg in sol.segments:
        if seg.kind != "decrease":
            continue
        lo = seg.lo if seg.lo > 0 else seg.hi * 1e-6
        rs = np.geomspace(lo, seg.hi, 65)
        defect = max(defect, float(np.max(np.abs(fld.eta(rs) + 1.0))))
    return Residuals(np.array(out), defect)


# ----------------------------------------------------------------------
# tampering (detector sanity)


def _with(sol: RadialProfile, h, dh) -> RadialProfile:
    return dataclasses.replace(sol, h=h, dh=dh)


def tampered_profiles(sol: RadialProfile, fld: FieldProfile) -> list[tuple[str, RadialProfile, FieldProfile]]:
    """Ten perturbations of a constructed solution that a verifier has to reject."""
    R = sol.R
    h, dh, eta = sol.h, sol.dh, fld.eta
    out = [
        ("tilt", _with(sol, lambda r: h(r) + 0.1 * (R - np.asarray(r)), lambda r: dh(r) - 0.1), fld),
        ("scale", _with(sol, lambda r: 1.1 * h(r), lambda r: 1.1 * dh(r)), fld),
        ("parabola", _with(sol, lambda r: h(r) + 0.2 * (R**2 - np.asarray(r) ** 2),
                           lambda r: dh(r) - 0.4 * np.asarray(r)), fld),
        ("flattened", _with(sol, lambda r: 0.0 * np.asarray(r), lambda r: 0.0 * np.asarray(r)), fld),
        ("ripple", _with(sol, lambda r: h(r) + 0.05 * np.sin(2 * np.pi * np.asarray(r) / R),
                         lambda r: dh(r) + 0.1 * np.pi / R * np.cos(2 * np.pi * np.asarray(r) / R)), fld),
        ("damped", _with(sol, lambda r: 0.8 * h(r), lambda r: 0.8 * dh(r)), fld),
        ("field_scaled", sol, dataclasses.replace(fld, eta=lambda r: 0.9 * eta(r))),
        ("field_flipped", sol, dataclasses.replace(fld, eta=lambda r: -eta(r))),
        ("field_shifted", sol, dataclasses.replace(fld, eta=lambda r: eta(r) + 0.1 * np.asarray(r) / R)),
        ("steepened", _with(sol, lambda r: h(r) + 0.3 * (R - np.asarray(r)) ** 2,
                            lambda r: dh(r) - 0.6 * (R - np.asarray(r))), fld),
    ]
    return out


# ----------------------------------------------------------------------
# Green identity


@dataclass(frozen=True)
class GreenBalance:
    divergence_term: float  # int u div z dx
    pairing_term: float  # int (z, Du)
    boundary_term: float  # int [z, nu] u dH^(N-1)

    @property
    def defect(self) -> float:
        return abs(self.divergence_term + self.pairing_term - self.boundary_term)


def green_identity(sol: RadialProfile, fld: FieldProfile) -> GreenBalance:
    """Evaluate the three terms of int u div z + int (z, Du) = int [z, nu] u separately.

    div z dx is taken from the field ((r^(N-1) eta)' piecewise), (z, Du) from
    eta h' plus eta times the jump heights.  Needs r^(N-1) h -> 0 at the origin.
    """
    N, R = sol.N, sol.R
    if sol.unbounded_at_origin and sol.origin_power >= N - 1:
        raise ValueError("Green identity needs a profile of bounded variation")
    pts = sol.breakpoints()
    t_div = _quad_split(lambda r: float(sol.h(r)) * float(fld.flux_density(r)), 0.0, R, pts)

    def pair(r):
        d = float(sol.dh(r))
        return 0.0 if d == 0.0 else float(fld.eta(r)) * d * r ** (N - 1)

    t_pair = _quad_split(pair, 0.0, R, pts)
    t_pair += sum(float(fld.eta(j.radius)) * (j.lower - j.upper) * j.radius ** (N - 1) for j in sol.jumps)
    t_bdry = float(fld.eta(R)) * sol.boundary_value * R ** (N - 1)
    A = sphere_area(N)
    return GreenBalance(A * t_div, A * t_pair, A * t_bdry)


# ----------------------------------------------------------------------
# output


def default_grid(R: float, n: int = 2048) -> np.ndarray:
    """n nodes on (0, R], log-graded toward the origin."""
    return R * np.geomspace(1e-6, 1.0, n)


def solution_table(sol: RadialProfile, fld: FieldProfile, grid: np.ndarray) -> list[tuple]:
    rows = []
    for r in grid:
        r = float(r)
        rows.append((r, float(sol.h(r)), float(fld.eta(r)), float(sol.w(r)), sol.segment_kind(r)))
    return rows


def write_solution_csv(path, sol: RadialProfile, fld: FieldProfile, grid: np.ndarray) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("r,h,xi_times_r,w,segment_kind\n")
        for r, h, eta, w, kind in solution_table(sol, fld, grid):
            fh.write(f"{r!r},{h!r},{eta!r},{w!r},{kind}\n")
