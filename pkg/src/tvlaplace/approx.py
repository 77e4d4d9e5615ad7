"""Approximation schemes and convergence tables.

Three schemes approximate a problem by easier ones: truncating the datum
(f_n = min(f, n)), truncating the growth (min(g, k)) and shifting the growth
(g + 1/n).  Each approximate problem is solved exactly with the radial
construction and compared with the limit solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .datum import RadialDatum, Term, sphere_area
from .errors import ScenarioError, TVLaplaceError
from .growth import GrowthSpec, shift_growth, truncate_growth
from .solver import RadialProfile, _quad_split, construct_radial_solution, total_variation

SCHEMES = ("TruncateDatum", "TruncateGrowth", "ShiftGrowth")
METRICS = ("L1", "Linf")


def truncate_datum(f: RadialDatum, n: float) -> RadialDatum:
    """T_n(f) = min(f, n), again a power-law datum.

    Each piece is cut at the radius where f crosses n: inside it the
    datum is the constant n, outside the original terms are kept.
    """
    if not n > 0:
        raise ValueError("truncation level must be positive")
    terms = []
    for p in f.pieces:
        if p.c.size == 0:
            continue
        rho = f.level_radius(p, n)
        if rho > p.lo:
            terms.append(Term(float(n), 0.0, p.lo, rho))
        if rho < p.hi:
            terms.extend(Term(float(c), float(q), rho, p.hi) for c, q in zip(p.c, p.q))
    return RadialDatum(f.N, f.R, tuple(terms))


@dataclass(frozen=True)
class ApproximationSchedule:
    scheme: str
    params: tuple[float, ...]
    metric: str = "L1"
    delta: float | None = None  # excised radius for the Linf metric; default R/100

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ScenarioError(f"scheme must be one of {SCHEMES}")
        if self.metric not in METRICS:
            raise ScenarioError(f"metric must be one of {METRICS}")
        ps = tuple(float(p) for p in self.params)
        if not ps or any(b <= a for a, b in zip(ps[:-1], ps[1:])) or ps[0] <= 0:
            raise ScenarioError("params must be positive and strictly increasing")
        if self.delta is not None and not self.delta > 0:
            raise ScenarioError("delta must be positive")
        object.__setattr__(self, "params", ps)


@dataclass(frozen=True)
class StudyRow:
    param: float
    error: float
    bv: float
    bv_bound: float
    feasible: bool
    message: str = ""

    @property
    def bound_holds(self) -> bool:
        return self.feasible and self.bv <= self.bv_bound * (1 + 1e-9)


@dataclass(frozen=True)
class ConvergenceTable:
    schedule: ApproximationSchedule
    rows: tuple[StudyRow, ...]
    monotone_from: int | None
    rate: float | None
    extras: dict = field(default_factory=dict)

    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    def to_csv(self) -> str:
        lines = ["param,error,bv_bound,feasible"]
        for r in self.rows:
            lines.append(f"{r.param!r},{r.error!r},{r.bv_bound!r},{str(r.feasible).lower()}")
        return "\n".join(lines) + "\n"


def profile_distance(a: RadialProfile, b: RadialProfile, metric: str = "L1", delta: float | None = None) -> float:
    """L1(B_R) distance, or sup over delta <= r <= R."""
    R, N = a.R, a.N
    pts = a.breakpoints() + b.breakpoints()
    if metric == "L1":
        return sphere_area(N) * _quad_split(
            lambda r: abs(float(a.h(r)) - float(b.h(r))) * r ** (N - 1), 0.0, R, pts
        )
    delta = R / 100 if delta is None else delta
    grid = np.unique(np.concatenate([np.linspace(delta, R, 4001), [p for p in pts if delta <= p <= R]]))
    return float(np.max(np.abs(a.h(grid) - b.h(grid))))


def _approximate_problem(f: RadialDatum, g: GrowthSpec, scheme: str, n: float):
    if scheme == "TruncateDatum":
        return truncate_datum(f, n), g
    if scheme == "TruncateGrowth":
        return f, truncate_growth(g, n)
    return f, shift_growth(g, 1.0 / n)


def _bv_bound(f: RadialDatum, g: GrowthSpec, fa: RadialDatum, ga: GrowthSpec, scheme: str) -> float:
    """Uniform estimate of int |Du_n|.

    With g >= m > 0 everywhere it is (1/m) int f; when g >= m only on a
    tail [sigma, inf) it is (sigma + 1/m) int f.  Both use the limit datum,
    which dominates the truncated ones.
    """
    m_all = g.inf_g()
    total = f.integral()
    if scheme == "ShiftGrowth" or m_all <= 0:
        m, sigma = g.tail_inf()
        if m <= 0:
            return math.inf
        return (sigma + 1.0 / m) * total
    return total / m_all


def run_convergence_study(f: RadialDatum, g: GrowthSpec, sched: ApproximationSchedule, policy: str = "minimal") -> ConvergenceTable:
    exact = construct_radial_solution(f, g, policy).profile
    rows = []
    for n in sched.params:
        fa, ga = _approximate_problem(f, g, sched.scheme, n)
        bound = _bv_bound(f, g, fa, ga, sched.scheme)
        try:
            approx = construct_radial_solution(fa, ga, policy).profile
        except TVLaplaceError as exc:
            rows.append(StudyRow(n, math.nan, math.nan, bound, False, str(exc)))
            continue
        err = profile_distance(approx, exact, sched.metric, sched.delta)
        bv = total_variation(approx)
        rows.append(StudyRow(n, err, bv, bound, True))
    errs = [r.error for r in rows]
    monotone_from = None
    for i in range(len(errs)):
        tail = errs[i:]
        if all(not math.isnan(e) for e in tail) and all(b <= a for a, b in zip(tail[:-1], tail[1:])):
            monotone_from = i
            break
    rate = None
    good = [(r.param, r.error) for r in rows if r.feasible and r.error > 0 and not math.isnan(r.error)]
    if len(good) >= 2:
        x = np.log([p for p, _ in good])
        y = np.log([e for _, e in good])
        rate = float(-np.polyfit(x, y, 1)[0])
    return ConvergenceTable(sched, tuple(rows), monotone_from, rate)
