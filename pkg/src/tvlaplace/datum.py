"""Radial power-law data on a ball.

A datum is f(r) = sum_i c_i r^(-q_i) 1[a_i <= r < b_i] on B_R in R^N, with
c_i >= 0 and 0 <= q_i <= 1.  Cutting [0, R] at every support endpoint gives
*pieces* on which f is a plain sum of decreasing powers; most closed forms
below are assembled piece by piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import ScenarioError


def ball_volume(N: int) -> float:
    """Lebesgue measure C_N of the unit ball in R^N."""
    return math.exp(0.5 * N * math.log(math.pi) - gammaln(0.5 * N + 1.0))


def sphere_area(N: int) -> float:
    """H^{N-1} measure of the unit sphere, N * C_N."""
    return N * ball_volume(N)


@dataclass(frozen=True)
class Term:
    c: float
    q: float
    a: float = 0.0
    b: float | None = None  # None means "up to R"


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    c: np.ndarray
    q: np.ndarray

    @property
    def log_coef(self) -> float:
        """Sum of the coefficients of the 1/r terms active on this piece."""
        return float(self.c[self.q == 1.0].sum())

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        with np.errstate(divide="ignore"):  # f(0) = inf for singular terms
            for c, q in zip(self.c, self.q):
                out = out + c * r ** (-q)
        return out

    def is_constant(self) -> bool:
        return bool(np.all((self.q == 0.0) | (self.c == 0.0)))


@dataclass(frozen=True)
class RadialDatum:
    """Nonnegative radial datum on B_R in R^N built from power-law terms."""

    N: int
    R: float
    terms: tuple[Term, ...] = ()
    pieces: tuple[Piece, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ScenarioError("dimension N must be an integer >= 2")
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ScenarioError("radius R must be positive and finite")
        normalized = []
        for i, t in enumerate(self.terms):
            if not isinstance(t, Term):
                t = Term(*t) if isinstance(t, (tuple, list)) else Term(**t)
            b = self.R if t.b is None else float(t.b)
            if t.c < 0:
                raise ScenarioError(
                    f"terms[{i}].c: coefficient must be nonnegative "
                    "(the datum has to be a nonnegative function)"
                )
            if not 0.0 <= t.q <= 1.0:
                raise ScenarioError(
                    f"terms[{i}].q: exponent must lie in [0, 1] "
                    "so that f belongs to L^{N,inf}"
                )
            if not 0.0 <= t.a < b <= self.R * (1 + 1e-15):
                raise ScenarioError(f"terms[{i}]: support needs 0 <= a < b <= R")
            normalized.append(Term(float(t.c), float(t.q), float(t.a), min(b, self.R)))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "terms", tuple(normalized))
        object.__setattr__(self, "pieces", self._build_pieces())

    # ------------------------------------------------------------------
    # construction helpers

    @classmethod
    def power(cls, N, R, c, q, a=0.0, b=None) -> "RadialDatum":
        return cls(N, R, (Term(c, q, a, b),))

    def with_terms(self, terms: Iterable[Term]) -> "RadialDatum":
        return RadialDatum(self.N, self.R, tuple(terms))

    def scaled(self, factor: float) -> "RadialDatum":
        return self.with_terms(Term(t.c * factor, t.q, t.a, t.b) for t in self.terms)

    def _build_pieces(self) -> tuple[Piece, ...]:
        cuts = {0.0, self.R}
        for t in self.terms:
            cuts.update((t.a, t.b))
        cuts = sorted(cuts)
        pieces = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi <= lo:
                continue
            act = [t for t in self.terms if t.a <= lo and t.b >= hi and t.c > 0]
            pieces.append(
                Piece(
                    lo,
                    hi,
                    np.array([t.c for t in act], dtype=float),
                    np.array([t.q for t in act], dtype=float),
                )
            )
        return tuple(pieces)

    # ------------------------------------------------------------------
    # pointwise evaluation

    @property
    def volume(self) -> float:
        return ball_volume(self.N) * self.R**self.N

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([p.lo for p in self.pieces] + [self.R])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        with np.errstate(divide="ignore"):
            for t in self.terms:
                if t.c == 0:
                    continue
                mask = (r >= t.a) & (r < t.b)
                out = out + np.where(mask, t.c * np.abs(r) ** (-t.q), 0.0)
        return out

    def piece_at(self, r: float) -> Piece:
        for p in self.pieces:
            if p.lo <= r < p.hi:
                return p
        return self.pieces[-1]

    def is_zero(self) -> bool:
        return all(t.c == 0 for t in self.terms)

    def edge_values(self, piece: Piece) -> tuple[float, float]:
        """Limits f(lo+) and f(hi-) on a piece (f is nonincreasing there)."""
        if piece.c.size == 0:
            return 0.0, 0.0
        if piece.lo == 0.0 and np.any((piece.q > 0) & (piece.c > 0)):
            top = math.inf
        else:
            top = float(piece.value(piece.lo)) if piece.lo > 0 else float(piece.c.sum())
        return top, float(piece.value(piece.hi))

    def level_radius(self, piece: Piece, t: float) -> float:
        """Largest r in [lo, hi] with f(r) >= t on the piece (lo if none)."""
        top, bottom = self.edge_values(piece)
        if t >= top:
            return piece.lo
        if t <= bottom:
            return piece.hi
        if piece.c.size == 1:
            c, q = float(piece.c[0]), float(piece.q[0])
            return min(max((c / t) ** (1.0 / q), piece.lo), piece.hi)
        # search in log r so that radii far below hi keep full relative accuracy
        b = math.log(piece.hi)
        if piece.lo > 0:
            a = math.log(piece.lo)
        else:
            a = b - 8.0
            while float(piece.value(math.exp(a))) < t:
                if a < -700.0:
                    return 0.0
                a = 2.0 * a - b
        fun = lambda x: float(piece.value(math.exp(x))) - t  # noqa: E731
        # exp(log(r)) may miss r by an ulp, so recheck the bracket
        if fun(b) >= 0.0:
            return piece.hi
        if fun(a) <= 0.0:
            return math.exp(a) if piece.lo == 0.0 else piece.lo
        x = brentq(fun, a, b, xtol=1e-15, rtol=1e-15)
        return min(max(math.exp(x), piece.lo), piece.hi)

    # ------------------------------------------------------------------
    # closed-form integrals

    def moment(self, r):
        """E(r) = int_0^r rho^{N-1} f(rho) d rho; |S^{N-1}| E(r) is the mass of f in B_r."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        N = self.N
        for t in self.terms:
            if t.c == 0:
                continue
            hi = np.clip(r, t.a, t.b)
            out = out + t.c * (hi ** (N - t.q) - t.a ** (N - t.q)) / (N - t.q)
        return out if out.ndim else float(out)

    def integral(self) -> float:
        """int_{B_R} f dx."""
        return sphere_area(self.N) * float(self.moment(self.R))

    def weighted_integral(self, a: float, b: float, power: float) -> float:
        """int_a^b rho^power f(rho) d rho for power > -1 + max q."""
        total = 0.0
        for t in self.terms:
            lo, hi = max(a, t.a), min(b, t.b)
            if hi <= lo or t.c == 0:
                continue
            e = power - t.q + 1.0
            if e == 0.0:
                total += t.c * math.log(hi / lo) if lo > 0 else math.inf
            else:
                total += t.c * (hi**e - lo**e) / e
        return total

    def excess(self, a: float, b: float) -> float:
        """int_a^b (f(rho) - (N-1)/rho) d rho in closed form.

        Logarithmic parts are grouped per piece so that the 1/r terms cancel
        exactly against the curvature term; a = 0 is allowed and yields
        +inf, a finite value or -inf depending on the net 1/r coefficient.
        """
        if b <= a:
            return 0.0
        total = 0.0
        for p in self.pieces:
            lo, hi = max(a, p.lo), min(b, p.hi)
            if hi <= lo:
                continue
            net = p.log_coef - (self.N - 1)
            for c, q in zip(p.c, p.q):
                if q < 1.0:
                    e = 1.0 - q
                    if lo > 0:
                        # (hi^e - lo^e)/e without cancellation when e is tiny
                        total += c * hi**e * -math.expm1(e * math.log(lo / hi)) / e
                    else:
                        total += c * hi**e / e
            if net != 0.0:
                if lo == 0.0:
                    return math.inf if net > 0 else -math.inf
                total += net * math.log(hi / lo)
        return total

    def excess_log(self, x: float, b: float) -> float:
        """excess(exp(x), b) for exp(x) in the first piece, without forming exp(x).

        Radii far below the smallest float still have a meaningful excess
        when f is slightly weaker than (N-1)/r near the origin.
        """
        p = self.pieces[0]
        hi = min(b, p.hi)
        lh = math.log(hi)
        total = 0.0
        for c, q in zip(p.c, p.q):
            if q < 1.0:
                e = 1.0 - q
                total += c * math.exp(e * lh) * -math.expm1(e * (x - lh)) / e
        net = p.log_coef - (self.N - 1)
        if net != 0.0:
            total += net * (lh - x)
        return total + (self.excess(p.hi, b) if b > p.hi else 0.0)

    def origin_ratio_log(self, x: float) -> float:
        """E(r) / r^(N-1) - 1 at r = exp(x) in the first piece; nondecreasing in x."""
        p = self.pieces[0]
        return sum(c * math.exp((1.0 - q) * x) / (self.N - q) for c, q in zip(p.c, p.q)) - 1.0

    def flux_ratio(self, r: float) -> float:
        """E(r) / r^(N-1), evaluated termwise in the first piece to avoid underflow."""
        if r <= self.pieces[0].hi:
            return self.origin_ratio_log(math.log(r)) + 1.0
        return float(self.moment(r)) / r ** (self.N - 1)

    def psi(self, r):
        """Psi(r) = int_r^R (f - (N-1)/rho) d rho."""
        r = np.asarray(r, dtype=float)
        if r.ndim == 0:
            return self.excess(float(r), self.R)
        return np.array([self.excess(float(x), self.R) for x in r])

    def curvature_gap(self, piece: Piece, r: float) -> float:
        """r f(r) - (N - 1) on a piece; nondecreasing in r on each piece."""
        val = 0.0
        for c, q in zip(piece.c, piece.q):
            val += c if q == 1.0 else c * r ** (1.0 - q)
        return val - (self.N - 1)

    # ------------------------------------------------------------------
    # behaviour at the origin

    def origin_log_coef(self) -> float:
        return self.pieces[0].log_coef

    def origin_max_q(self, below_one: bool = False) -> float:
        p = self.pieces[0]
        qs = [q for c, q in zip(p.c, p.q) if c > 0 and (q < 1.0 or not below_one)]
        return max(qs) if qs else 0.0

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "R": self.R,
            "terms": [{"c": t.c, "q": t.q, "a": t.a, "b": t.b} for t in self.terms],
        }


def datum_from_terms(N: int, R: float, terms: Sequence[dict]) -> RadialDatum:
    return RadialDatum(N, R, tuple(Term(**t) for t in terms))
