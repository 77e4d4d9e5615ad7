"""Rearrangement-invariant quantities of radial data on a ball.

Everything is expressed through the distribution function mu_f, which has a
closed form on each piece of the datum.  Suprema and integrals over levels t
are split at the *level breakpoints* (the values of f at piece edges); on each
open level interval mu_f is either constant or smooth and strictly
decreasing, so a bounded Brent search or a Gauss-Kronrod rule is enough.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gammaln

from .datum import RadialDatum, ball_volume, sphere_area

_GRID = 64


@dataclass(frozen=True)
class RearrangementProfile:
    """Distribution function and decreasing rearrangement of a datum.

    ``levels`` are the values where mu_f may change analytic form, ascending
    and starting at 0.  ``unbounded`` tells whether f is unbounded near the
    origin, in which case the last level interval extends to infinity.
    """

    source: RadialDatum
    levels: tuple[float, ...]
    unbounded: bool

    @classmethod
    def of(cls, f: RadialDatum) -> "RearrangementProfile":
        vals = {0.0}
        unbounded = False
        for p in f.pieces:
            top, bottom = f.edge_values(p)
            for v in (top, bottom):
                if math.isinf(v):
                    unbounded = True
                elif v > 0:
                    vals.add(v)
        return cls(f, tuple(sorted(vals)), unbounded)

    # -- distribution function -------------------------------------------

    def mu(self, t: float) -> float:
        """|{f > t}|."""
        f = self.source
        C = ball_volume(f.N)
        total = 0.0
        for p in f.pieces:
            rho = f.level_radius(p, t)
            if rho > p.lo:
                total += C * (rho**f.N - p.lo**f.N)
        return total

    def mu_left(self, t: float) -> float:
        """|{f >= t}|, the left limit of mu at t."""
        f = self.source
        C = ball_volume(f.N)
        total = 0.0
        for p in f.pieces:
            top, bottom = f.edge_values(p)
            if p.is_constant() and p.c.size:
                rho = p.hi if top >= t else p.lo
            else:
                rho = f.level_radius(p, t)
            if rho > p.lo:
                total += C * (rho**f.N - p.lo**f.N)
        return total

    def superlevel_integral(self, t: float, closed: bool = False) -> float:
        """int_{f > t} f dx (or over {f >= t} when ``closed``)."""
        f = self.source
        total = 0.0
        for p in f.pieces:
            top, _ = f.edge_values(p)
            if closed and p.is_constant() and p.c.size:
                rho = p.hi if top >= t else p.lo
            else:
                rho = f.level_radius(p, t)
            if rho > p.lo:
                total += f.weighted_integral(p.lo, rho, f.N - 1)
        return sphere_area(f.N) * total

    # -- rearrangement -----------------------------------------------------

    def intervals(self):
        """Consecutive level intervals (lo, hi); hi may be inf."""
        lv = list(self.levels)
        out = list(zip(lv[:-1], lv[1:]))
        if self.unbounded:
            out.append((lv[-1], math.inf))
        return out

    def rearrangement(self, s: float) -> float:
        """f*(s) = sup{t > 0 : mu(t) > s}."""
        f = self.source
        if not 0.0 < s <= f.volume * (1 + 1e-14):
            raise ValueError(f"s must lie in (0, |B_R|] = (0, {f.volume}], got {s}")
        if self.mu(0.0) <= s:
            return 0.0
        for lo, hi in self.intervals():
            if math.isinf(hi):
                hi = max(lo, 1.0) * 2.0
                while self.mu(hi) > s:
                    hi *= 2.0
                return brentq(lambda t: self.mu(t) - s, lo, hi, xtol=1e-300, rtol=1e-15)
            if self.mu(hi) > s:
                continue
            if self.mu_left(hi) > s:
                return hi
            return brentq(lambda t: self.mu(t) - s, lo, hi, xtol=1e-300, rtol=1e-15)
        return self.levels[-1]

    def mean_rearrangement(self, s: float) -> float:
        """f**(s) = (1/s) int_0^s f*."""
        t = self.rearrangement(s)
        return (self.superlevel_integral(t) + t * (s - self.mu(t))) / s


def _origin_power(f: RadialDatum) -> tuple[float, float]:
    """(q_max, c_top): f ~ c_top r^{-q_max} near the origin."""
    qmax = f.origin_max_q()
    p = f.pieces[0]
    ctop = float(sum(c for c, q in zip(p.c, p.q) if q == qmax))
    return qmax, ctop


def _maximize_log(fun, lo: float, hi: float) -> tuple[float, float]:
    """Maximize fun(t) over (lo, hi), 0 < lo < hi < inf, searching in log t.

    Returns (value, argmax).  A coarse log grid brackets the best node, then
    bounded Brent refines inside the bracket.
    """
    a, b = math.log(lo), math.log(hi)
    xs = np.linspace(a, b, _GRID)
    vals = [fun(math.exp(x)) for x in xs]
    k = int(np.argmax(vals))
    best, arg = vals[k], math.exp(xs[k])
    left, right = xs[max(k - 1, 0)], xs[min(k + 1, _GRID - 1)]
    if right > left:
        res = minimize_scalar(
            lambda x: -fun(math.exp(x)), bounds=(left, right), method="bounded",
            options={"xatol": 1e-13},
        )
        if -res.fun > best:
            best, arg = -res.fun, math.exp(res.x)
    return best, arg


def distribution_function(f: RadialDatum, t: float) -> float:
    if t < 0:
        raise ValueError("level t must be nonnegative")
    return RearrangementProfile.of(f).mu(t)


def decreasing_rearrangement(f: RadialDatum, s: float) -> float:
    return RearrangementProfile.of(f).rearrangement(s)


def quasinorm_marcinkiewicz(f: RadialDatum, q: float) -> float:
    """[f]_q = sup_t t mu_f(t)^{1/q}; inf if f is not in L^{q,inf}."""
    if q <= 1:
        raise ValueError("q must exceed 1")
    prof = RearrangementProfile.of(f)
    if f.is_zero():
        return 0.0
    qmax, ctop = _origin_power(f)
    if prof.unbounded and q * qmax > f.N:
        return math.inf

    def obj(t):
        m = prof.mu(t)
        return t * m ** (1.0 / q) if m > 0 else 0.0

    best = 0.0
    for lo, hi in prof.intervals():
        if math.isinf(hi):
            best = max(best, obj(lo * 1e12 + 1.0))
            if q * qmax == f.N:
                best = max(best, ball_volume(f.N) ** (1.0 / q) * ctop)
            best = max(best, _maximize_log(obj, max(lo, 1e-300), lo * 1e12 + 1.0)[0])
            continue
        best = max(best, hi * prof.mu_left(hi) ** (1.0 / q))
        if lo > 0:
            best = max(best, obj(lo), _maximize_log(obj, lo, hi)[0])
    return best


def norm_lorentz_q1(f: RadialDatum, q: float) -> float:
    """(1/q) int_0^inf s^{1/q} f*(s) ds/s, computed as int_0^inf mu(t)^{1/q} dt."""
    if q <= 1:
        raise ValueError("q must exceed 1")
    if f.is_zero():
        return 0.0
    prof = RearrangementProfile.of(f)
    qmax, _ = _origin_power(f)
    if prof.unbounded and q * qmax >= f.N:
        return math.inf
    total = 0.0
    for lo, hi in prof.intervals():
        m_lo, m_hi = prof.mu(lo), prof.mu_left(hi) if not math.isinf(hi) else 0.0
        if not math.isinf(hi) and m_lo == m_hi:
            total += (hi - lo) * m_lo ** (1.0 / q)
            continue
        val, _ = quad(
            lambda t: prof.mu(t) ** (1.0 / q), lo, hi, epsabs=0.0, epsrel=1e-13, limit=200
        )
        total += val
    return total


def norm_marcinkiewicz(f: RadialDatum, qprime: float) -> float:
    """sup_s s^{1/q'} f**(s); inf if f is not in L^{q',inf}.

    On a plateau of f* the objective s^{1/q'-1} int_0^s f* has no interior
    maximum, so the supremum is taken over s = mu(t) and s = mu(t-) only.
    """
    if qprime <= 1:
        raise ValueError("q' must exceed 1")
    if f.is_zero():
        return 0.0
    prof = RearrangementProfile.of(f)
    alpha = 1.0 / qprime
    qmax, ctop = _origin_power(f)
    if prof.unbounded and qprime * qmax > f.N:
        return math.inf

    def obj(t, closed=False):
        m = prof.mu_left(t) if closed else prof.mu(t)
        if m <= 0:
            return 0.0
        return m ** (alpha - 1.0) * prof.superlevel_integral(t, closed=closed)

    best = obj(0.0)
    for lo, hi in prof.intervals():
        if math.isinf(hi):
            top = lo * 1e12 + 1.0
            best = max(best, obj(top), _maximize_log(obj, max(lo, 1e-300), top)[0])
            if qprime * qmax == f.N:
                C = ball_volume(f.N)
                best = max(best, C**alpha * f.N * ctop / (f.N - qmax))
            continue
        best = max(best, obj(hi, closed=True))
        if lo > 0:
            best = max(best, obj(lo), _maximize_log(obj, lo, hi)[0])
    return best


def sobolev_constant(N: int) -> float:
    """Best constant of W^{1,1}_0 into L^{N/(N-1),1}: Gamma(N/2+1)^{1/N} / (N sqrt(pi))."""
    if N < 2:
        raise ValueError("N must be >= 2")
    return math.exp(gammaln(0.5 * N + 1.0) / N) / (N * math.sqrt(math.pi))


@dataclass(frozen=True)
class DualBracket:
    lower: float
    upper: float
    argmax_radius: float


def ball_flux_ratio(f: RadialDatum, b: float) -> float:
    """int_{B_b} f dx / Per(B_b)."""
    return float(f.moment(b)) / b ** (f.N - 1)


def dual_norm_bounds(f: RadialDatum) -> DualBracket:
    """Bracket for ||f||_{W^{-1,inf}(B_R)}.

    The lower bound is sup over centred annuli {a < |x| < b} of mass over
    perimeter.  Shrinking a to 0 removes mass and perimeter together and never
    lowers the ratio, so the sweep reduces to balls B_b.  The upper bound is
    S_N ||f||_{L^{N,inf}}.
    """
    if f.is_zero():
        return DualBracket(0.0, 0.0, f.R)
    N = f.N
    best, arg = f.origin_log_coef() / (N - 1), 0.0
    for p in f.pieces:
        v = ball_flux_ratio(f, p.hi)
        if v > best:
            best, arg = v, p.hi
        lo = p.lo if p.lo > 0 else p.hi * 1e-9
        v, b = _maximize_log(lambda b: ball_flux_ratio(f, b), lo, p.hi)
        if v > best:
            best, arg = v, b
    upper = sobolev_constant(N) * norm_marcinkiewicz(f, N)
    return DualBracket(best, upper, arg)
