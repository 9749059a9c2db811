"""Explicit background noise for a pair of gambles.

A gap in means (or, at equal means, in variances) is turned into a signed
measure ``sigma`` of total mass one.  Convolving ``sigma`` with a suitable
probability law ``nu`` yields a probability law, and ``nu`` is the law of
the noise: ``Z = W + U_1 + ... + U_N`` with Gaussian ``W`` of standard
deviation ``sqrt(2) a``, i.i.d. ``U_i ~ pi`` and ``N`` geometric with
``P[N = n] = (1 - c) c^n``.

``pi`` and ``c`` come from ``m = rho_a * (sigma - delta)``: with
``pi_mode="negative"`` (default) ``pi`` is the normalised negative part of
``m`` and ``c = sqrt(2) ||m^-||``; with ``pi_mode="absolute"`` it is the
normalised ``|m|`` and ``c = sqrt(2) ||m||``.  Both make
``(sqrt(2)/c) m + pi`` a positive measure, which is all the positivity
argument needs; the first is half as large.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import special

from .dominance import DEFAULT_TOL, DominanceVerdict, check_noised
from .errors import (
    GridTooNarrow,
    InfeasibleMeanOrder,
    InfeasibleVarianceOrder,
    KernelTooNarrow,
    VerificationFailed,
)
from .measures import (
    Gamble,
    GriddedDensity,
    _gauss_cell_mass,
    cdf,
    convolve,
    gaussian_grid,
    lattice_bounds,
    moments,
    resample,
    uniform_grid,
)

FIRST, SECOND = "FIRST", "SECOND"
SQRT2 = math.sqrt(2.0)
SERIES_TAIL_TOL = 1e-10
CELLS_PER_A = 500
MAX_GRID_TRUNCATION = 1e-4
WINDOW_TAIL = 1e-12
LADDER_MAX_CELLS = 200_000
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)


def _order_name(order) -> str:
    if order in (1, "1", FIRST, "first"):
        return FIRST
    if order in (2, "2", SECOND, "second"):
        return SECOND
    raise ValueError(f"unknown dominance order {order!r}")


# ---------------------------------------------------------------------------
# The signed measure


@dataclass(frozen=True)
class SigmaMeasure:
    """Signed measure with a piecewise-linear density on ``[b_0, b_n)``.

    On piece ``j`` the density is ``intercept[j] + slope[j] * t``; it is
    zero outside the breakpoints.
    """

    order: str
    k: float
    breakpoints: np.ndarray
    intercept: np.ndarray
    slope: np.ndarray

    def density(self, t):
        t = np.asarray(t, dtype=float)
        b = self.breakpoints
        idx = np.searchsorted(b, t, side="right") - 1
        inside = (idx >= 0) & (idx < b.size - 1)
        j = np.clip(idx, 0, b.size - 2)
        return np.where(inside, self.intercept[j] + self.slope[j] * t, 0.0)

    def _pieces(self):
        return self.breakpoints[:-1], self.breakpoints[1:], self.intercept, self.slope

    def total_mass(self) -> float:
        b0, b1, al, be = self._pieces()
        return float(np.sum(al * (b1 - b0) + 0.5 * be * (b1 ** 2 - b0 ** 2)))

    def _integrate_abs(self, weight=None) -> float:
        """``int w(t) |density(t)| dt`` with ``w`` piecewise smooth; exact for polynomial ``w``
        of degree <= 2 between the split points."""
        splits = []
        b0, b1, al, be = self._pieces()
        total = 0.0
        extra = [] if weight is None else weight[1]
        for lo, hi, a_, s_ in zip(b0, b1, al, be):
            cuts = [lo, hi]
            if s_ != 0.0:
                root = -a_ / s_
                if lo < root < hi:
                    cuts.append(root)
            cuts.extend(c for c in extra if lo < c < hi)
            cuts = sorted(cuts)
            for u, v in zip(cuts[:-1], cuts[1:]):
                x = 0.5 * (v - u) * _GL_NODES + 0.5 * (u + v)
                f = np.abs(a_ + s_ * x)
                if weight is not None:
                    f = f * weight[0](x)
                total += 0.5 * (v - u) * float(np.dot(_GL_WEIGHTS, f))
        del splits
        return total

    def tv_norm(self) -> float:
        return self._integrate_abs()

    def abs_first_moment(self) -> float:
        """``int |y| d|sigma|(y)``."""
        return self._integrate_abs((np.abs, [0.0]))

    def pinsker_bound(self, a: float) -> float:
        """Upper bound ``int min(2, |y|/a) d|sigma|`` on ``||rho_a * sigma - rho_a||``."""
        return self._integrate_abs((lambda y: np.minimum(2.0, np.abs(y) / a), [0.0, -2 * a, 2 * a]))

    def gaussian_smoothed(self, s, a: float) -> np.ndarray:
        """Density of ``rho_a * sigma`` at ``s`` for Gaussian ``rho_a`` of std ``a``."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        b0, b1, al, be = self._pieces()
        for lo, hi, a_, s_ in zip(b0, b1, al, be):
            mass = _gauss_cell_mass(s - hi, s - lo, a)
            out += (a_ + s_ * s) * mass
            if s_ != 0.0:
                out += s_ * a * a * (_gauss_pdf(s - lo, a) - _gauss_pdf(s - hi, a))
        return out

    def mass_between(self, lo, hi) -> np.ndarray:
        """``sigma([lo, hi])`` (vectorised in ``lo``/``hi``)."""
        return self._cumulative(hi) - self._cumulative(lo)

    def _cumulative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        b0, b1, al, be = self._pieces()
        out = np.zeros_like(x)
        for lo, hi, a_, s_ in zip(b0, b1, al, be):
            u = np.clip(x, lo, hi)
            out += a_ * (u - lo) + 0.5 * s_ * (u ** 2 - lo ** 2)
        return out

    def support(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def as_stepped(self):
        if np.any(self.slope != 0):
            raise ValueError("second-order sigma has a piecewise-linear density")
        from .measures import SteppedFunction

        return SteppedFunction(self.breakpoints, np.concatenate([[0.0], self.intercept, [0.0]]))


def _gauss_pdf(x, sd):
    return np.exp(-0.5 * (x / sd) ** 2) / (sd * math.sqrt(2 * math.pi))


def _scale_of(*gambles: Gamble) -> float:
    return max(1.0, max(float(np.abs(g.values).max()) for g in gambles))


def build_sigma_first(x: Gamble, y: Gamble) -> SigmaMeasure:
    """``sigma`` with density ``(F_Y - F_X) / k`` and ``k = E[X] - E[Y]``."""
    k = x.mean - y.mean
    if not k > 1e-14 * _scale_of(x, y):
        raise InfeasibleMeanOrder(f"E[X] ≤ E[Y] ({x.mean:.6g} ≤ {y.mean:.6g})")
    diff = cdf(y) - cdf(x)
    inner = diff.levels[1:-1] / k
    return SigmaMeasure(FIRST, k, diff.breakpoints, inner, np.zeros_like(inner))


def build_sigma_second(x: Gamble, y: Gamble) -> SigmaMeasure:
    """``sigma`` with density ``(1/k) int_{-inf}^t (F_Y - F_X)`` and ``k = (Var Y - Var X)/2``."""
    scale = _scale_of(x, y)
    if abs(x.mean - y.mean) > 1e-12 * scale:
        raise InfeasibleVarianceOrder(f"means differ: E[X]={x.mean:.12g}, E[Y]={y.mean:.12g}")
    k = 0.5 * (y.variance - x.variance)
    if not k > 1e-14 * scale * scale:
        raise InfeasibleVarianceOrder(f"Var[X] ≥ Var[Y] ({x.variance:.6g} ≥ {y.variance:.6g})")
    diff = cdf(y) - cdf(x)
    b = diff.breakpoints
    d = diff.levels[1:-1]
    run = np.concatenate([[0.0], np.cumsum(d * np.diff(b))])[:-1]
    return SigmaMeasure(SECOND, k, b, (run - d * b[:-1]) / k, d / k)


def build_sigma(x: Gamble, y: Gamble, order=FIRST) -> SigmaMeasure:
    return build_sigma_first(x, y) if _order_name(order) == FIRST else build_sigma_second(x, y)


# ---------------------------------------------------------------------------
# Smoothing coefficient


def _span(sigma: SigmaMeasure) -> tuple[float, float]:
    """Support of ``sigma - delta``."""
    lo, hi = sigma.support()
    return min(lo, 0.0), max(hi, 0.0)


def _smoothing_grid(sigma: SigmaMeasure, a: float, h: float, width: float = 12.0):
    lo, hi = _span(sigma)
    j_lo, j_hi = lattice_bounds(lo - width * a, hi + width * a, h)
    centers = np.arange(j_lo, j_hi + 1) * h
    m = sigma.gaussian_smoothed(centers, a) - _gauss_pdf(centers, a)
    return j_lo, centers, m


def _weights(m: np.ndarray, h: float, pi_mode: str) -> np.ndarray:
    if pi_mode == "negative":
        return h * np.maximum(-m, 0.0)
    if pi_mode == "absolute":
        return h * np.abs(m)
    raise ValueError(f"unknown pi_mode {pi_mode!r}")


def smoothing_coefficient(sigma: SigmaMeasure, a: float, pi_mode: str = "negative",
                          cells_per_a: int = CELLS_PER_A) -> float:
    """``c`` at kernel width ``a`` (see module docstring)."""
    lo, hi = _span(sigma)
    h = max(a / cells_per_a, (hi - lo + 24 * a) / LADDER_MAX_CELLS)
    if h > a / 8:
        # kernel unresolvable at this width relative to the support of sigma
        return math.inf
    _, _, m = _smoothing_grid(sigma, a, h)
    return SQRT2 * float(_weights(m, h, pi_mode).sum())


def choose_a(sigma: SigmaMeasure, c_target: float = 0.5, pi_mode: str = "negative",
             cells_per_a: int = 200, max_steps: int = 80) -> float:
    """Kernel width on a doubling ladder with ``c(a) <= c_target``.

    The ladder is anchored at the Pinsker-safe width, where
    ``int min(2, |y|/a) d|sigma| <= c_target / factor`` is guaranteed by
    ``a >= factor * int |y| d|sigma| / c_target``; it starts 64 times below
    it, doubles until ``c`` clears the target and halves while it still does.
    """
    if not 0 < c_target < 1:
        raise ValueError("c_target must lie in (0, 1)")
    factor = SQRT2 if pi_mode == "absolute" else 1.0 / SQRT2
    safe = max(factor * sigma.abs_first_moment() / c_target, 1e-12)
    a = safe / 64.0

    def ok(width):
        return smoothing_coefficient(sigma, width, pi_mode, cells_per_a) <= c_target

    steps = 0
    if ok(a):
        while steps < max_steps and ok(a / 2):
            a /= 2
            steps += 1
        return a
    while not ok(a):
        a *= 2
        steps += 1
        if steps > max_steps:
            raise KernelTooNarrow("doubling ladder did not reach c_target")
    return a


# ---------------------------------------------------------------------------
# Noise specification


@dataclass(frozen=True)
class NoiseSpec:
    """``Z = W + U_1 + ... + U_N``.

    ``kernel`` is ``("GAUSSIAN", sigma_w)`` or ``("UNIFORM_PAIR", a)``
    (``W`` the sum of two independent uniforms on ``[-a, a]``).
    """

    kernel: tuple
    c: float
    K: int
    pi: GriddedDensity
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 <= self.c < 1:
            raise KernelTooNarrow(f"c = {self.c!r} is not in [0, 1)")
        if self.kernel[0] not in ("GAUSSIAN", "UNIFORM_PAIR"):
            raise ValueError(f"unknown kernel {self.kernel[0]!r}")

    @property
    def kernel_type(self) -> str:
        return self.kernel[0]

    @property
    def sigma_w(self) -> float:
        kind, p = self.kernel
        return float(p) if kind == "GAUSSIAN" else float(p) * math.sqrt(2.0 / 3.0)

    @property
    def expected_n(self) -> float:
        return self.c / (1 - self.c)

    @property
    def var_n(self) -> float:
        return self.c / (1 - self.c) ** 2

    def pi_moments(self) -> tuple[float, float]:
        mo = moments(self.pi, 2)
        return mo.mean, mo.variance

    @property
    def mean(self) -> float:
        return self.expected_n * self.pi_moments()[0]

    @property
    def variance(self) -> float:
        """Wald: ``Var W + E[N] Var U + Var N E[U]^2``."""
        mu, var = self.pi_moments()
        return self.sigma_w ** 2 + self.expected_n * var + self.var_n * mu * mu

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def series_mass(self) -> float:
        return 1.0 - self.c ** (self.K + 1)

    def kernel_grid(self, h: float) -> GriddedDensity:
        kind, p = self.kernel
        if kind == "GAUSSIAN":
            return gaussian_grid(float(p), h)
        box = uniform_grid(-float(p), float(p), h)
        return convolve(box, box)

    def materialize(self, lo: float | None = None, hi: float | None = None,
                    h: float | None = None, max_truncation: float = MAX_GRID_TRUNCATION,
                    window_tail: float = WINDOW_TAIL) -> GriddedDensity:
        """Density of ``Z`` on a lattice, with ``N`` cut at ``K``.

        Without ``lo``/``hi`` the window is the smallest one leaving at most
        ``window_tail`` of mass on either side.
        """
        h = self.pi.h if h is None else float(h)
        pi = self.pi if math.isclose(h, self.pi.h, rel_tol=1e-12) else resample(self.pi, h)
        return _compound(self.kernel_grid(h), pi, self.c, self.K, lo, hi,
                         max_truncation, window_tail)

    def to_json(self) -> dict:
        return {
            "kernel": {"type": self.kernel[0], "param": float(self.kernel[1])},
            "c": float(self.c),
            "K": int(self.K),
            "pi": self.pi.to_json(),
            "provenance": _jsonable(self.provenance),
        }

    @classmethod
    def from_json(cls, data: dict) -> "NoiseSpec":
        kern = data["kernel"]
        return cls((kern["type"], float(kern["param"])), float(data["c"]), int(data["K"]),
                   GriddedDensity.from_json(data["pi"]), dict(data.get("provenance", {})))

    def spec_hash(self) -> str:
        return _hash(self.to_json())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _hash(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _lattice_index(d: GriddedDensity) -> int:
    j = (d.lo + d.h / 2) / d.h
    r = round(j)
    if abs(j - r) > 1e-6:
        raise ValueError("grid is not centred on the lattice h Z")
    return int(r)


def series_truncation(c: float, tail_tol: float = SERIES_TAIL_TOL) -> int:
    """``ceil(log(tail_tol) / log(c))``: the smallest ``K`` with ``c^K <= tail_tol``."""
    if c <= 0:
        return 0
    return max(0, math.ceil(math.log(tail_tol) / math.log(c)))


def _compound(kernel: GriddedDensity, pi: GriddedDensity, c: float, K: int,
              lo, hi, max_truncation: float, window_tail: float) -> GriddedDensity:
    """``kernel * (1 - c) sum_{n <= K} c^n pi^(n)`` by one circular FFT.

    The buffer is long enough to hold every term exactly, so there is no
    wrap-around; the origin sits at buffer position 0.  The tails record
    mass cut off by the window only; the series deficit ``c^(K+1)`` is
    simply missing from the result.
    """
    h = kernel.h
    kj, pj = _lattice_index(kernel), _lattice_index(pi)
    p_lo, p_hi = pj, pj + pi.n - 1
    span_lo = kj + min(0, K * p_lo)
    span_hi = kj + kernel.n - 1 + max(0, K * p_hi)
    L = sfft.next_fast_len(span_hi - span_lo + 1, real=True)
    buf_k = np.zeros(L)
    buf_p = np.zeros(L)
    buf_k[np.arange(kj, kj + kernel.n) % L] = kernel.masses
    buf_p[np.arange(p_lo, p_hi + 1) % L] = pi.masses
    K_hat = sfft.rfft(buf_k)
    P_hat = c * sfft.rfft(buf_p)
    acc = np.ones_like(P_hat)
    for _ in range(K):
        acc = 1.0 + P_hat * acc
    nu = sfft.irfft(K_hat * (1 - c) * acc, L)
    idx = np.arange(span_lo, span_hi + 1)
    vals = nu[idx % L]
    if lo is None or hi is None:
        cum = np.cumsum(vals)
        left_cut = int(np.searchsorted(cum, window_tail, side="right"))
        rcum = np.cumsum(vals[::-1])
        right_cut = int(np.searchsorted(rcum, window_tail, side="right"))
        i0, i1 = left_cut, vals.size - right_cut
        if i1 <= i0:
            i0, i1 = 0, vals.size
    else:
        j_lo, j_hi = lattice_bounds(lo, hi, h)
        i0 = max(0, j_lo - span_lo)
        i1 = min(vals.size, j_hi - span_lo + 1)
        if i1 <= i0:
            raise GridTooNarrow("requested grid does not meet the support of Z")
    tail_left = float(vals[:i0].sum()) + kernel.tail_left
    tail_right = float(vals[i1:].sum()) + kernel.tail_right
    if tail_left + tail_right > max_truncation:
        raise GridTooNarrow(f"grid loses {tail_left + tail_right:.3g} of mass (> {max_truncation:g})")
    start = (idx[i0] - 0.5) * h
    return GriddedDensity(start, h, vals[i0:i1], tail_left, tail_right)


def smooth(sigma: SigmaMeasure, a: float, series_tail_tol: float = SERIES_TAIL_TOL,
           pi_mode: str = "negative", cells_per_a: int = CELLS_PER_A,
           h: float | None = None) -> NoiseSpec:
    """Build ``pi`` and ``c`` from ``rho_a * (sigma - delta)`` at width ``a``."""
    h = a / cells_per_a if h is None else float(h)
    j_lo, centers, m = _smoothing_grid(sigma, a, h)
    w = _weights(m, h, pi_mode)
    c = SQRT2 * float(w.sum())
    if c >= 1:
        raise KernelTooNarrow(f"c = {c:.4g} >= 1 at a = {a:.6g}; enlarge a")
    prov = {"order": sigma.order, "a": float(a), "pi_mode": pi_mode, "k": float(sigma.k)}
    if c == 0:
        pi = GriddedDensity((j_lo - 0.5) * h, h, np.ones(1))
        return NoiseSpec(("GAUSSIAN", SQRT2 * a), 0.0, 0, pi, prov)
    pi = _trim_probability(GriddedDensity((j_lo - 0.5) * h, h, w / w.sum()))
    return NoiseSpec(("GAUSSIAN", SQRT2 * a), c, series_truncation(c, series_tail_tol), pi, prov)


def _trim_probability(d: GriddedDensity, eps: float = 1e-17) -> GriddedDensity:
    cum = np.cumsum(d.masses)
    i0 = int(np.searchsorted(cum, eps, side="right"))
    rcum = np.cumsum(d.masses[::-1])
    i1 = d.n - int(np.searchsorted(rcum, eps, side="right"))
    if i1 <= i0:
        return d
    kept = d.masses[i0:i1]
    return GriddedDensity(d.lo + i0 * d.h, d.h, kept / kept.sum())


def kernel_distance(z: NoiseSpec, grid: GriddedDensity | None = None) -> float:
    """``int d|law(Z) - law(W)|`` on the lattice, ``W`` the kernel part alone.

    Since ``Z = W`` whenever ``N = 0``, half of this (the distance
    ``sup_A |P(Z in A) - P(W in A)|``) is at most ``c``.
    """
    from .measures import tv_norm

    grid = z.materialize() if grid is None else grid
    return tv_norm(grid - z.kernel_grid(grid.h))


# ---------------------------------------------------------------------------
# End-to-end


class Construction(NamedTuple):
    noise: NoiseSpec
    verdict: DominanceVerdict
    grid: GriddedDensity


def construct_and_verify(x: Gamble, y: Gamble, order=FIRST, c_target: float = 0.5,
                         tol: float = DEFAULT_TOL, series_tail_tol: float = SERIES_TAIL_TOL,
                         pi_mode: str = "negative", cells_per_a: int = CELLS_PER_A,
                         a: float | None = None) -> Construction:
    """Construct ``Z`` for ``(X, Y)`` and certify ``X + Z`` over ``Y + Z`` on its grid."""
    order = _order_name(order)
    sigma = build_sigma(x, y, order)
    if a is None:
        a = choose_a(sigma, c_target, pi_mode)
    z = smooth(sigma, a, series_tail_tol, pi_mode, cells_per_a)
    grid = z.materialize()
    verdict = check_noised(x, y, grid, 1 if order == FIRST else 2, tol)
    expected = "FIRST_STRICT" if order == FIRST else "SECOND_STRICT"
    if verdict.relation.value != expected:
        raise VerificationFailed(
            f"grid verdict {verdict.relation.value}, worst violation {verdict.worst_violation:.3g}",
            verdict, {"a": a, "c": z.c, "h": grid.h, "truncation_mass": grid.truncation_mass})
    return Construction(z, verdict, grid)


@dataclass(frozen=True)
class CompositeNoise:
    """Sum of independent noises plus a constant shift."""

    components: tuple
    shift: float = 0.0

    @property
    def mean(self) -> float:
        return sum(c.mean for c in self.components) + self.shift

    @property
    def variance(self) -> float:
        return sum(c.variance for c in self.components)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def step(self) -> float:
        return min(_component_step(c) for c in self.components)

    def materialize(self, h: float | None = None, max_cells: int = 1 << 21) -> GriddedDensity:
        h = self.step() if h is None else h
        spread = sum(_component_extent(c) for c in self.components)
        h = max(h, spread / max_cells)
        out = None
        for comp in self.components:
            g = comp.materialize(h=h)
            out = g if out is None else convolve(out, g)
        return out.shift(self.shift)

    def recentered(self, grid: GriddedDensity | None = None) -> tuple["CompositeNoise", GriddedDensity]:
        """Shift so the materialised law has mean zero."""
        grid = self.materialize() if grid is None else grid
        mu = moments(grid).mean
        return CompositeNoise(self.components, self.shift - mu), grid.shift(-mu)

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self.components], "shift": float(self.shift)}

    @classmethod
    def from_json(cls, data: dict) -> "CompositeNoise":
        from .closedform import UniformNoiseSpec

        comps = []
        for item in data["components"]:
            if item.get("kind") == "UNIFORM_SPEC":
                comps.append(UniformNoiseSpec.from_json(item))
            else:
                comps.append(NoiseSpec.from_json(item))
        return cls(tuple(comps), float(data.get("shift", 0.0)))

    def spec_hash(self) -> str:
        return _hash(self.to_json())


def _component_step(c) -> float:
    if isinstance(c, NoiseSpec):
        return c.pi.h
    return c.default_step()


def _component_extent(c) -> float:
    return 2 * 12 * c.std + abs(c.mean) * 2


def noise_from_json(data: dict):
    """Load a ``NoiseSpec``, ``UniformNoiseSpec`` or ``CompositeNoise`` payload."""
    from .closedform import UniformNoiseSpec

    if "components" in data:
        return CompositeNoise.from_json(data)
    if data.get("kind") == "UNIFORM_SPEC":
        return UniformNoiseSpec.from_json(data)
    return NoiseSpec.from_json(data)


class CommonNoise(NamedTuple):
    noise: CompositeNoise
    grid: GriddedDensity
    verdicts: dict


def construct_common_noise(gambles: Sequence[Gamble], c_target: float = 0.5,
                           tol: float = DEFAULT_TOL, **kwargs) -> CommonNoise:
    """One noise making every gamble dominate all gambles of lower mean.

    ``gambles`` must have strictly increasing means.  Adjacent pairs get
    their own noise; the common noise is their independent sum, which is
    noisier than each, and every pair ``i > j`` is re-verified on its grid.
    """
    gambles = list(gambles)
    if len(gambles) < 2:
        raise ValueError("need at least two gambles")
    means = [g.mean for g in gambles]
    for lo_, hi_ in zip(means[:-1], means[1:]):
        if not hi_ > lo_:
            raise InfeasibleMeanOrder(f"means not strictly increasing: {lo_:.6g} then {hi_:.6g}")
    comps = []
    for lower, upper in zip(gambles[:-1], gambles[1:]):
        comps.append(construct_and_verify(upper, lower, FIRST, c_target, tol, **kwargs).noise)
    noise = CompositeNoise(tuple(comps))
    grid = noise.materialize()
    verdicts = {}
    for i in range(len(gambles)):
        for j in range(i):
            v = check_noised(gambles[i], gambles[j], grid, 1, tol)
            verdicts[(i, j)] = v
            if v.relation.value != "FIRST_STRICT":
                raise VerificationFailed(f"pair ({i}, {j}) not certified on the common grid", v)
    return CommonNoise(noise, grid, verdicts)
