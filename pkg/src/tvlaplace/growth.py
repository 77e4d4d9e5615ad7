"""Growth functions g, their primitives G and the (multivalued) inverse of G.

Every family is a frozen dataclass exposing ``g``, ``G``, ``G_inf`` and
``inverse``.  ``inverse`` returns a float on the strictly increasing range of
G and a :class:`FlatInterval` when the level is the value of G on an interval
where g vanishes; callers pick a branch with :func:`select`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NonexistenceError, ScenarioError


class FlatInterval(NamedTuple):
    lo: float
    hi: float


class GrowthSpec:
    """Base class; subclasses fill in g, G and usually a closed-form inverse."""

    family: ClassVar[str] = ""

    def g(self, s):
        raise NotImplementedError

    def G(self, s):
        raise NotImplementedError

    @property
    def G_inf(self) -> float:
        return math.inf

    def zero_intervals(self) -> list[tuple[float, float]]:
        """Maximal intervals [lo, hi] (hi may be inf) on which g vanishes."""
        return []

    def zero_points(self) -> list[float]:
        """Isolated zeros of g on [0, inf)."""
        return []

    def inf_g(self) -> float:
        """inf of g over [0, inf)."""
        raise NotImplementedError

    def tail_inf(self) -> tuple[float, float]:
        """(m, sigma) with g >= m > 0 on [sigma, inf); m = 0 if no such tail."""
        return self.inf_g(), 0.0

    def is_bounded(self) -> bool:
        return True

    def log_power(self, A: float) -> float:
        """Exponent p with G^{-1}(A log(1/r) + B) ~ C r^{-p} as r -> 0 (0 for sub-power growth)."""
        return 0.0

    def edge_power(self) -> float:
        """gamma with G^{-1}(G_inf - d) ~ d^{-gamma}; only for integrable g whose G never reaches G_inf."""
        raise NotImplementedError

    def level_crossings(self, k: float) -> list[float]:
        """Points where g crosses the level k (used by truncation)."""
        raise NotImplementedError

    def sup_g(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- inverse ---------------------------------------------------------

    def inverse(self, t: float):
        t = float(t)
        if t < 0:
            raise ValueError("level must be nonnegative")
        if t > self.G_inf:
            raise NonexistenceError(
                f"level above range of G: {t!r} > G(inf) = {self.G_inf!r}"
            )
        for lo, hi in self.zero_intervals():
            if t == float(self.G(lo)):
                return FlatInterval(lo, hi)
        if t == self.G_inf:
            return math.inf
        return self._inverse_point(t)

    def _inverse_point(self, t: float) -> float:
        # generic strictly-increasing branch: bracket and bisect
        if t == 0.0:
            return 0.0
        hi = 1.0
        while float(self.G(hi)) < t:
            hi *= 2.0
        return brentq(lambda s: float(self.G(s)) - t, 0.0, hi, xtol=1e-300, rtol=1e-15)


def select(inv, policy: str = "minimal") -> float:
    if isinstance(inv, FlatInterval):
        return inv.hi if policy == "upper" else inv.lo
    return inv


def primitive_G(g: GrowthSpec, s: float) -> float:
    if s < 0:
        raise ValueError("s must be nonnegative")
    return float(g.G(s))


def inverse_G(g: GrowthSpec, t: float):
    return g.inverse(t)


# ----------------------------------------------------------------------
# named families


@dataclass(frozen=True)
class Constant(GrowthSpec):
    m: float = 1.0
    family: ClassVar[str] = "constant"

    def __post_init__(self):
        if not self.m > 0:
            raise ScenarioError("growth.m must be positive")

    def g(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.m) + 0.0

    def G(self, s):
        return self.m * np.asarray(s, dtype=float)

    def _inverse_point(self, t):
        return t / self.m

    def inf_g(self):
        return self.m

    def sup_g(self):
        return self.m

    def level_crossings(self, k):
        return []

    def to_dict(self):
        return {"family": self.family, "m": self.m}


@dataclass(frozen=True)
class AffinePlus(GrowthSpec):
    """g(s) = base + slope * s."""

    base: float = 1.0
    slope: float = 1.0
    family: ClassVar[str] = "affine_plus"

    def __post_init__(self):
        if self.base < 0 or self.slope < 0 or self.base + self.slope == 0:
            raise ScenarioError("affine_plus needs base >= 0, slope >= 0, not both 0")

    def g(self, s):
        return self.base + self.slope * np.asarray(s, dtype=float)

    def G(self, s):
        s = np.asarray(s, dtype=float)
        return self.base * s + 0.5 * self.slope * s * s

    def _inverse_point(self, t):
        # stable root of slope/2 s^2 + base s - t = 0
        return 2.0 * t / (self.base + math.sqrt(self.base**2 + 2.0 * self.slope * t))

    def zero_points(self):
        return [0.0] if self.base == 0 else []

    def inf_g(self):
        return self.base

    def tail_inf(self):
        if self.base > 0:
            return self.base, 0.0
        return self.slope, 1.0

    def is_bounded(self):
        return self.slope == 0

    def sup_g(self):
        return self.base if self.slope == 0 else math.inf

    def level_crossings(self, k):
        if self.slope == 0 or k <= self.base:
            return []
        return [(k - self.base) / self.slope]

    def to_dict(self):
        return {"family": self.family, "base": self.base, "slope": self.slope}


@dataclass(frozen=True)
class Rational1(GrowthSpec):
    """g(s) = 1/(1+s): vanishes at infinity, not integrable."""

    family: ClassVar[str] = "rational1"

    def g(self, s):
        return 1.0 / (1.0 + np.asarray(s, dtype=float))

    def G(self, s):
        return np.log1p(np.asarray(s, dtype=float))

    def _inverse_point(self, t):
        return math.expm1(t)

    def inf_g(self):
        return 0.0

    def sup_g(self):
        return 1.0

    def log_power(self, A):
        return A

    def level_crossings(self, k):
        return [1.0 / k - 1.0] if 0 < k < 1 else []

    def to_dict(self):
        return {"family": self.family}


@dataclass(frozen=True)
class Rational2(GrowthSpec):
    """g(s) = 1/(1+s^2): integrable, G(inf) = pi/2."""

    family: ClassVar[str] = "rational2"

    def g(self, s):
        s = np.asarray(s, dtype=float)
        return 1.0 / (1.0 + s * s)

    def G(self, s):
        return np.arctan(np.asarray(s, dtype=float))

    @property
    def G_inf(self):
        return math.pi / 2

    def _inverse_point(self, t):
        return math.tan(t)

    def inf_g(self):
        return 0.0

    def sup_g(self):
        return 1.0

    def edge_power(self):
        return 1.0

    def level_crossings(self, k):
        return [math.sqrt(1.0 / k - 1.0)] if 0 < k < 1 else []

    def to_dict(self):
        return {"family": self.family}


@dataclass(frozen=True)
class HingePlus(GrowthSpec):
    """g(s) = (s - a)_+: vanishes on [0, a]."""

    a: float = 1.0
    family: ClassVar[str] = "hinge_plus"

    def __post_init__(self):
        if not self.a > 0:
            raise ScenarioError("hinge_plus needs a > 0")

    def g(self, s):
        return np.maximum(np.asarray(s, dtype=float) - self.a, 0.0)

    def G(self, s):
        d = np.maximum(np.asarray(s, dtype=float) - self.a, 0.0)
        return 0.5 * d * d

    def _inverse_point(self, t):
        return self.a + math.sqrt(2.0 * t)

    def zero_intervals(self):
        return [(0.0, self.a)]

    def inf_g(self):
        return 0.0

    def tail_inf(self):
        return 1.0, self.a + 1.0

    def is_bounded(self):
        return False

    def sup_g(self):
        return math.inf

    def level_crossings(self, k):
        return [self.a + k] if k > 0 else []

    def to_dict(self):
        return {"family": self.family, "a": self.a}


@dataclass(frozen=True)
class Trapezoid(GrowthSpec):
    """g = a - s on [0, a), 0 on [a, b], s - b beyond."""

    a: float = 1.0
    b: float = 2.0
    family: ClassVar[str] = "trapezoid"

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ScenarioError("trapezoid needs 0 < a < b")

    def g(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s < self.a, self.a - s, np.maximum(s - self.b, 0.0))

    def G(self, s):
        s = np.asarray(s, dtype=float)
        a, b = self.a, self.b
        low = a * s - 0.5 * s * s
        d = np.maximum(s - b, 0.0)
        return np.where(s <= a, low, 0.5 * a * a + 0.5 * d * d)

    def _inverse_point(self, t):
        a, b = self.a, self.b
        if t < 0.5 * a * a:
            return (2.0 * t) / (a + math.sqrt(a * a - 2.0 * t))
        return b + math.sqrt(2.0 * (t - 0.5 * a * a))

    def zero_intervals(self):
        return [(self.a, self.b)]

    def inf_g(self):
        return 0.0

    def tail_inf(self):
        return 1.0, self.b + 1.0

    def is_bounded(self):
        return False

    def sup_g(self):
        return math.inf

    def level_crossings(self, k):
        out = [self.a - k] if 0 < k < self.a else []
        return out + ([self.b + k] if k > 0 else [])

    def to_dict(self):
        return {"family": self.family, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class PiecewiseLinear(GrowthSpec):
    """Linear interpolation of knots (s_i, g_i), s_0 = 0, constant beyond the last knot."""

    knots: tuple[tuple[float, float], ...] = ((0.0, 1.0),)
    family: ClassVar[str] = "piecewise_linear"
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = tuple((float(s), float(v)) for s, v in self.knots)
        if not knots or knots[0][0] != 0.0:
            raise ScenarioError("piecewise_linear knots must start at s = 0")
        if any(b[0] <= a[0] for a, b in zip(knots[:-1], knots[1:])):
            raise ScenarioError("piecewise_linear knots must be strictly increasing in s")
        if any(v < 0 for _, v in knots):
            raise ScenarioError("piecewise_linear values must be nonnegative")
        object.__setattr__(self, "knots", knots)
        s, v = self._sv()
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(s))])
        object.__setattr__(self, "_cum", cum)

    def _sv(self):
        return (np.array([k[0] for k in self.knots]), np.array([k[1] for k in self.knots]))

    def g(self, s):
        xs, vs = self._sv()
        return np.interp(np.asarray(s, dtype=float), xs, vs)

    def G(self, s):
        s = np.asarray(s, dtype=float)
        xs, vs = self._sv()
        j = np.clip(np.searchsorted(xs, s, side="right") - 1, 0, len(xs) - 1)
        x0, v0 = xs[j], vs[j]
        slope = np.where(j < len(xs) - 1, (vs[np.minimum(j + 1, len(xs) - 1)] - v0)
                         / np.where(j < len(xs) - 1, xs[np.minimum(j + 1, len(xs) - 1)] - x0, 1.0), 0.0)
        d = s - x0
        return self._cum[j] + v0 * d + 0.5 * slope * d * d

    @property
    def G_inf(self):
        return math.inf if self.knots[-1][1] > 0 else float(self._cum[-1])

    def zero_intervals(self):
        out = []
        xs, vs = self._sv()
        i = 0
        while i < len(xs):
            if vs[i] == 0:
                j = i
                while j + 1 < len(xs) and vs[j + 1] == 0:
                    j += 1
                hi = math.inf if j == len(xs) - 1 else xs[j]
                if hi > xs[i]:
                    out.append((float(xs[i]), float(hi)))
                i = j + 1
            else:
                i += 1
        return out

    def zero_points(self):
        xs, vs = self._sv()
        flat = {lo for lo, _ in self.zero_intervals()} | {hi for _, hi in self.zero_intervals()}
        return [float(x) for x, v in zip(xs, vs) if v == 0 and x not in flat]

    def inf_g(self):
        return float(min(v for _, v in self.knots))

    def tail_inf(self):
        last = self.knots[-1]
        if last[1] <= 0:
            return 0.0, 0.0
        xs, vs = self._sv()
        k = len(xs) - 1
        while k > 0 and vs[k - 1] > 0:
            k -= 1
        return float(vs[k:].min()), float(xs[k])

    def sup_g(self):
        return float(max(v for _, v in self.knots))

    def _inverse_point(self, t):
        xs, vs = self._sv()
        j = int(np.searchsorted(self._cum, t, side="right") - 1)
        j = min(max(j, 0), len(xs) - 1)
        v0 = vs[j]
        slope = (vs[j + 1] - v0) / (xs[j + 1] - xs[j]) if j < len(xs) - 1 else 0.0
        rem = t - self._cum[j]
        if slope == 0.0:
            d = rem / v0
        else:
            disc = max(v0 * v0 + 2.0 * slope * rem, 0.0)
            d = 2.0 * rem / (v0 + math.sqrt(disc)) if v0 + math.sqrt(disc) > 0 else 0.0
        return float(xs[j] + d)

    def level_crossings(self, k):
        xs, vs = self._sv()
        out = []
        for (x0, v0), (x1, v1) in zip(zip(xs[:-1], vs[:-1]), zip(xs[1:], vs[1:])):
            if (v0 - k) * (v1 - k) < 0:
                out.append(float(x0 + (k - v0) * (x1 - x0) / (v1 - v0)))
        return out

    def to_dict(self):
        return {"family": self.family, "knots": [list(k) for k in self.knots]}


# ----------------------------------------------------------------------
# derived families used by the approximation schemes


@dataclass(frozen=True)
class Shifted(GrowthSpec):
    """g + eps."""

    base: GrowthSpec
    eps: float
    family: ClassVar[str] = "shifted"

    def g(self, s):
        return self.base.g(s) + self.eps

    def G(self, s):
        return self.base.G(s) + self.eps * np.asarray(s, dtype=float)

    def inf_g(self):
        return self.base.inf_g() + self.eps

    def sup_g(self):
        return self.base.sup_g() + self.eps

    def is_bounded(self):
        return self.base.is_bounded()

    def log_power(self, A):
        return 0.0

    def to_dict(self):
        return {"family": self.family, "base": self.base.to_dict(), "eps": self.eps}


@dataclass(frozen=True)
class Truncated(GrowthSpec):
    """T_k(g) = min(g, k), with G_k assembled from the crossings of g with k."""

    base: GrowthSpec
    k: float
    family: ClassVar[str] = "truncated"

    def g(self, s):
        return np.minimum(self.base.g(s), self.k)

    def _cuts(self):
        return sorted(c for c in self.base.level_crossings(self.k) if c > 0)

    def G(self, s):
        s = np.asarray(s, dtype=float)
        return np.vectorize(self._G_scalar, otypes=[float])(s)

    def _G_scalar(self, s):
        total, lo = 0.0, 0.0
        for c in self._cuts() + [math.inf]:
            hi = min(c, s)
            if hi > lo:
                mid = lo + 0.5 * (hi - lo) if math.isfinite(hi) else lo + 1.0
                if float(self.base.g(mid)) > self.k:
                    total += self.k * (hi - lo)
                else:
                    total += float(self.base.G(hi) - self.base.G(lo))
            lo = max(lo, hi)
            if c >= s:
                break
        return total

    @property
    def G_inf(self):
        # min(g, k) is integrable on (0, inf) exactly when g is
        if math.isinf(self.base.G_inf):
            return math.inf
        return self._G_scalar(math.inf)

    def zero_intervals(self):
        return self.base.zero_intervals()

    def zero_points(self):
        return self.base.zero_points()

    def inf_g(self):
        return min(self.base.inf_g(), self.k)

    def tail_inf(self):
        m, sigma = self.base.tail_inf()
        return min(m, self.k), sigma

    def sup_g(self):
        return min(self.base.sup_g(), self.k)

    def log_power(self, A):
        return self.base.log_power(A)

    def edge_power(self):
        return self.base.edge_power()

    def to_dict(self):
        return {"family": self.family, "base": self.base.to_dict(), "k": self.k}


def truncate_growth(g: GrowthSpec, k: float) -> GrowthSpec:
    """T_k(g); returns ``g`` itself when k is at or above sup g."""
    if k >= g.sup_g():
        return g
    return Truncated(g, k)


def shift_growth(g: GrowthSpec, eps: float) -> GrowthSpec:
    return Shifted(g, eps)


_FAMILIES = {
    cls.family: cls
    for cls in (Constant, AffinePlus, Rational1, Rational2, HingePlus, Trapezoid, PiecewiseLinear)
}


def growth_from_dict(d: dict) -> GrowthSpec:
    d = dict(d)
    fam = d.pop("family", None)
    if fam not in _FAMILIES:
        raise ScenarioError(f"growth.family: unknown family {fam!r}")
    if fam == "piecewise_linear":
        d["knots"] = tuple(tuple(k) for k in d.get("knots", ()))
    try:
        return _FAMILIES[fam](**d)
    except TypeError as exc:
        raise ScenarioError(f"growth: {exc}") from None


# ----------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class GrowthClass:
    tag: str
    m: float
    sigma: float
    G_infinity: float
    integrable: bool
    zero_set: tuple = ()
    warnings: tuple[str, ...] = ()

    @property
    def ell(self) -> float | None:
        return self.zero_set[0][1] if self.tag == "VanishesNearZero" else None


TAGS = (
    "StandardBounded",
    "StandardUnbounded",
    "TouchesAxisNonIntegrable",
    "VanishesAtInfinityNonIntegrable",
    "Integrable",
    "VanishesNearZero",
    "VanishesOnInterval",
)


def classify_growth(g: GrowthSpec) -> GrowthClass:
    """Place g in one row of the existence/uniqueness/regularity table."""
    G_inf = g.G_inf
    integrable = math.isfinite(G_inf)
    m_tail, sigma = g.tail_inf()
    intervals = tuple(g.zero_intervals())
    common = dict(m=m_tail, sigma=sigma, G_infinity=G_inf, integrable=integrable)
    if integrable:
        return GrowthClass("Integrable", zero_set=intervals, **common)
    if intervals:
        lo, hi = intervals[0]
        if lo == 0.0:
            return GrowthClass(
                "VanishesNearZero", zero_set=intervals,
                warnings=("g vanishes on [0, l]: solutions are not unique",), **common,
            )
        return GrowthClass(
            "VanishesOnInterval", zero_set=intervals,
            warnings=("g vanishes on an interval: solutions are not unique and may jump",),
            **common,
        )
    m = g.inf_g()
    if m > 0:
        tag = "StandardBounded" if g.is_bounded() else "StandardUnbounded"
        return GrowthClass(tag, **{**common, "m": m, "sigma": 0.0})
    if g.zero_points():
        return GrowthClass("TouchesAxisNonIntegrable", zero_set=tuple(g.zero_points()), **common)
    return GrowthClass("VanishesAtInfinityNonIntegrable", **common)
