"""First- and second-order stochastic dominance checks.

Every CDF-like input is piecewise linear between its ``breakpoints``
(possibly jumping at them) and right-continuous: gamble CDFs are the
constant case, gridded noise mixtures the linear one.  On the union of
both inputs' breakpoints the gap ``F_Y - F_X`` is therefore linear on each
segment, so its infimum and the infimum of its running integral can be
read off exactly from values at the breakpoints, the segment midpoints and
the sign changes inside segments.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .measures import AtomGridMixture, Gamble, GriddedDensity, cdf

DEFAULT_TOL = 1e-9
TAIL_ROUNDOFF = 1e-14


class Relation(str, enum.Enum):
    FIRST_STRICT = "FIRST_STRICT"
    SECOND_STRICT = "SECOND_STRICT"
    NONE = "NONE"
    EQUAL_DISTRIBUTION = "EQUAL_DISTRIBUTION"


@dataclass(frozen=True)
class DominanceVerdict:
    relation: Relation
    worst_violation: float
    witness_point: float
    truncation_mass: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def holds(self) -> bool:
        return self.relation in (Relation.FIRST_STRICT, Relation.SECOND_STRICT)

    def to_json(self) -> dict:
        def num(v):
            return None if v is None or not np.isfinite(v) else float(v)

        return {
            "relation": self.relation.value,
            "worst_violation": num(self.worst_violation),
            "witness_point": num(self.witness_point),
            "truncation_mass": float(self.truncation_mass),
        }


class CallableCDF:
    """Wrap an arbitrary CDF evaluated on a fixed point set.

    The verdict is then only as good as the point set; used for analytic
    CDFs in diagnostics and tests.
    """

    kind = "linear"
    truncation_mass = 0.0

    def __init__(self, func, points):
        self._func = func
        self.breakpoints = np.unique(np.asarray(points, dtype=float))

    def __call__(self, x):
        return self._func(np.asarray(x, dtype=float))


def as_cdf(obj):
    """Coerce gambles and grids to CDF-like objects; mixtures pass through."""
    if isinstance(obj, Gamble):
        return cdf(obj)
    return obj


@dataclass
class _GapProfile:
    points: np.ndarray     # union of breakpoints
    at: np.ndarray         # gap at each point (right value)
    left: np.ndarray       # left limit at points[1:]
    mid: np.ndarray        # gap at segment midpoints
    left_tail: float
    right_tail: float


def _profile(fx, fy) -> _GapProfile:
    pts = np.union1d(np.asarray(fx.breakpoints, dtype=float),
                     np.asarray(fy.breakpoints, dtype=float))
    if pts.size == 0:
        pts = np.array([0.0])
    span = max(1.0, pts[-1] - pts[0])
    outside = np.array([pts[0] - span, pts[-1] + span])
    tails = fy(outside) - fx(outside)
    at = fy(pts) - fx(pts)
    mids = 0.5 * (pts[:-1] + pts[1:])
    mid = fy(mids) - fx(mids)
    left = 2.0 * mid - at[:-1]
    return _GapProfile(pts, at, left, mid, float(tails[0]), float(tails[1]))


def _truncation(*objs) -> float:
    return float(max(getattr(o, "truncation_mass", 0.0) for o in objs))


def _first_exceed(pts, mids, at, mid, tol):
    """Left-to-right scan for the first evaluated point with gap above tol."""
    xs = np.empty(pts.size + mids.size)
    vs = np.empty_like(xs)
    xs[0::2] = pts
    vs[0::2] = at
    xs[1::2] = mids
    vs[1::2] = mid
    hit = np.nonzero(vs > tol)[0]
    return (float(xs[hit[0]]), float(vs[hit[0]])) if hit.size else (float("nan"), float("nan"))


def check_fosd(fx, fy, tol: float = DEFAULT_TOL) -> DominanceVerdict:
    """Is ``X >_1 Y``?  ``fx``/``fy`` are CDFs (or gambles / mixtures)."""
    fx, fy = as_cdf(fx), as_cdf(fy)
    p = _profile(fx, fy)
    values = np.concatenate([[p.left_tail, p.right_tail], p.at, p.left])
    worst = float(values.min())
    sup_abs = float(np.abs(values).max())
    witness, best = _first_exceed(p.points, 0.5 * (p.points[:-1] + p.points[1:]), p.at, p.mid, tol)
    diag = {"sup_abs_gap": sup_abs, "n_points": int(p.points.size), "tol": tol,
            "max_gap": float(values.max())}
    if sup_abs <= tol:
        relation = Relation.EQUAL_DISTRIBUTION
    elif worst >= -tol and np.isfinite(witness):
        relation = Relation.FIRST_STRICT
    else:
        relation = Relation.NONE
        if worst < -tol:
            idx = int(np.argmin(values))
            diag["violation_index"] = idx
    return DominanceVerdict(relation, worst, witness, _truncation(fx, fy), diag)


def running_integral(fx, fy) -> tuple[np.ndarray, np.ndarray, float]:
    """Exact ``x -> int_{-inf}^x (F_Y - F_X)`` at the breakpoints, plus its infimum."""
    fx, fy = as_cdf(fx), as_cdf(fy)
    p = _profile(fx, fy)
    # equal off-grid masses cancel only up to roundoff
    if abs(p.left_tail) > TAIL_ROUNDOFF:
        raise ValueError("running integral diverges: CDFs differ at minus infinity")
    widths = np.diff(p.points)
    integ = np.concatenate([[0.0], np.cumsum(widths * p.mid)])
    inf = float(integ.min())
    # sign change - to + inside a segment is a local minimum of the integral
    g0, g1 = p.at[:-1], p.left
    cross = (g0 < 0) & (g1 > 0)
    if np.any(cross):
        frac = -g0[cross] / (g1[cross] - g0[cross])
        at_root = integ[:-1][cross] + 0.5 * g0[cross] * frac * widths[cross]
        inf = min(inf, float(at_root.min()))
    if p.right_tail < -TAIL_ROUNDOFF:
        inf = -np.inf
    return p.points, integ, inf


def check_sosd(fx, fy, tol: float = DEFAULT_TOL) -> DominanceVerdict:
    """Is ``X >_2 Y``?  Uses the running integral of ``F_Y - F_X``."""
    fx, fy = as_cdf(fx), as_cdf(fy)
    p = _profile(fx, fy)
    values = np.concatenate([[p.left_tail, p.right_tail], p.at, p.left])
    sup_abs = float(np.abs(values).max())
    pts, integ, worst = running_integral(fx, fy)
    hit = np.nonzero(integ > tol)[0]
    witness = float(pts[hit[0]]) if hit.size else float("nan")
    diag = {"sup_abs_gap": sup_abs, "n_points": int(pts.size), "tol": tol,
            "max_integral": float(integ.max())}
    if sup_abs <= tol:
        relation = Relation.EQUAL_DISTRIBUTION
    elif worst >= -tol and hit.size:
        relation = Relation.SECOND_STRICT
    else:
        relation = Relation.NONE
    return DominanceVerdict(relation, worst, witness, _truncation(fx, fy), diag)


def check_noised(x: Gamble, y: Gamble, z: GriddedDensity, order: int = 1,
                 tol: float = DEFAULT_TOL) -> DominanceVerdict:
    """Verdict for ``X + Z`` against ``Y + Z`` with gridded noise ``Z``."""
    fx, fy = AtomGridMixture(x, z), AtomGridMixture(y, z)
    return check_fosd(fx, fy, tol) if order == 1 else check_sosd(fx, fy, tol)


# ---------------------------------------------------------------------------
# Support diagnostics


class SupportStatus(str, enum.Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE_WITH_BOUNDED_NOISE = "INFEASIBLE_WITH_BOUNDED_NOISE"
    INFEASIBLE_IDENTICAL = "INFEASIBLE_IDENTICAL"


@dataclass(frozen=True)
class SupportExplanation:
    status: SupportStatus
    message: str

    @property
    def feasible(self) -> bool:
        return self.status is SupportStatus.FEASIBLE


def support_bound_diagnostic(x: Gamble, y: Gamble, z_support_bounded: bool = True) -> SupportExplanation:
    """Can a noise of the given support class make ``X + Z >_1 Y + Z``?

    With bounded noise the top of the support of ``X + Z`` must be at
    least that of ``Y + Z``, which forces ``max supp X >= max supp Y``.
    """
    if x.same_distribution(y):
        return SupportExplanation(SupportStatus.INFEASIBLE_IDENTICAL,
                                  "X and Y have the same distribution; no noise makes one strictly dominate")
    top_x, top_y = x.support[1], y.support[1]
    if z_support_bounded and top_x < top_y:
        return SupportExplanation(
            SupportStatus.INFEASIBLE_WITH_BOUNDED_NOISE,
            f"max supp X = {top_x:g} < max supp Y = {top_y:g}: bounded noise cannot work, "
            "the noise needs unbounded support with thick tails")
    return SupportExplanation(SupportStatus.FEASIBLE, "support condition satisfied")
