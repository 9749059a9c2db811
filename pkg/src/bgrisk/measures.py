"""Exact and gridded measures on the real line.

Two carriers are used throughout the package:

* :class:`Gamble` -- a finite list of atoms, the inputs ``X`` and ``Y``.
* :class:`GriddedDensity` -- cell masses on a uniform lattice whose cell
  centres sit at integer multiples of the step ``h``.  Within a cell the
  density is taken to be constant, so the CDF is piecewise linear and
  convolution of two lattices stays on the lattice.

:class:`SteppedFunction` holds piecewise-constant functions (CDFs of gambles
and their differences), and :class:`AtomGridMixture` is the exact law of
``gamble + gridded noise`` without discretising the atoms.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import signal, special

from .errors import MixedGridError

PROB_TOL = 1e-12
DIRECT_CONVOLVE_MAX = 4096


# ---------------------------------------------------------------------------
# Gambles


@dataclass(frozen=True)
class Gamble:
    """A finite-support random variable.

    ``values`` must be strictly increasing and ``probs`` positive, summing
    to one.  Use :meth:`from_pairs` for unsorted input or duplicate values.
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if v.size == 0 or v.shape != p.shape:
            raise ValueError("gamble needs matching, non-empty values and probs")
        if not np.all(np.isfinite(v)) or not np.all(np.isfinite(p)):
            raise ValueError("gamble atoms must be finite")
        if np.any(np.diff(v) <= 0):
            raise ValueError("atom values must be strictly increasing")
        if np.any(p <= 0) or np.any(p > 1):
            raise ValueError("atom probabilities must lie in (0, 1]")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        v.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], normalize: bool = False) -> "Gamble":
        merged: dict[float, float] = {}
        for value, prob in pairs:
            merged[float(value)] = merged.get(float(value), 0.0) + float(prob)
        items = sorted((v, p) for v, p in merged.items() if p > 0)
        values = np.array([v for v, _ in items])
        probs = np.array([p for _, p in items])
        if normalize:
            probs = probs / probs.sum()
        return cls(values, probs)

    @classmethod
    def point(cls, value: float) -> "Gamble":
        return cls(np.array([float(value)]), np.array([1.0]))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    @property
    def variance(self) -> float:
        return float(np.dot((self.values - self.mean) ** 2, self.probs))

    @property
    def support(self) -> tuple[float, float]:
        return float(self.values[0]), float(self.values[-1])

    def shift(self, c: float) -> "Gamble":
        return Gamble(self.values + c, self.probs)

    def same_distribution(self, other: "Gamble", tol: float = 1e-12) -> bool:
        return (
            self.values.shape == other.values.shape
            and np.allclose(self.values, other.values, rtol=0, atol=tol)
            and np.allclose(self.probs, other.probs, rtol=0, atol=tol)
        )

    def to_json(self) -> dict:
        return {"atoms": [[v, p] for v, p in self.atoms]}

    @classmethod
    def from_json(cls, data: dict) -> "Gamble":
        if "atoms" not in data:
            raise ValueError("gamble JSON needs an 'atoms' list")
        return cls.from_pairs(data["atoms"])

    def __repr__(self) -> str:
        body = ", ".join(f"({v:g}, {p:g})" for v, p in self.atoms)
        return f"Gamble[{body}]"


# ---------------------------------------------------------------------------
# Stepped functions


@dataclass(frozen=True)
class SteppedFunction:
    """Right-continuous piecewise-constant function.

    ``levels[0]`` is the value left of ``breakpoints[0]`` and ``levels[i]``
    the value on ``[breakpoints[i-1], breakpoints[i])``; ``levels[-1]`` is
    the right tail.
    """

    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        v = np.asarray(self.levels, dtype=float).reshape(-1)
        if v.size != b.size + 1:
            raise ValueError("need len(levels) == len(breakpoints) + 1")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "levels", v)

    kind = "step"

    @property
    def left(self) -> float:
        return float(self.levels[0])

    @property
    def right(self) -> float:
        return float(self.levels[-1])

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right")
        return self.levels[idx]

    def _combine(self, other: "SteppedFunction", op) -> "SteppedFunction":
        bp = np.union1d(self.breakpoints, other.breakpoints)
        probe = np.concatenate([[bp[0] - 1.0] if bp.size else [0.0], bp])
        return SteppedFunction(bp, op(self(probe), other(probe)))

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __add__(self, other):
        return self._combine(other, np.add)

    def scale(self, factor: float) -> "SteppedFunction":
        return SteppedFunction(self.breakpoints, self.levels * factor)

    def _inner(self) -> tuple[np.ndarray, np.ndarray]:
        if self.left != 0.0 or self.right != 0.0:
            raise ValueError("integral over the line diverges: tails are not zero")
        return np.diff(self.breakpoints), self.levels[1:-1]

    def integral(self) -> float:
        widths, vals = self._inner()
        return float(np.dot(widths, vals))

    def abs_integral(self) -> float:
        widths, vals = self._inner()
        return float(np.dot(widths, np.abs(vals)))

    def integral_to(self, x) -> np.ndarray:
        """Exact running integral from minus infinity; left tail must be zero."""
        if self.left != 0.0:
            raise ValueError("running integral diverges: left tail is not zero")
        x = np.asarray(x, dtype=float)
        b = self.breakpoints
        if b.size == 0:
            return np.zeros_like(x)
        cum = np.concatenate([[0.0], np.cumsum(np.diff(b) * self.levels[1:-1])])
        idx = np.searchsorted(b, x, side="right")
        base = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        start = np.where(idx > 0, b[np.maximum(idx - 1, 0)], x)
        return base + self.levels[idx] * (x - start)


def cdf(g: Gamble) -> SteppedFunction:
    """Right-continuous CDF of a gamble."""
    levels = np.concatenate([[0.0], np.cumsum(g.probs)])
    levels[-1] = 1.0
    return SteppedFunction(g.values.copy(), levels)


def mean_gap_via_cdf(x: Gamble, y: Gamble) -> float:
    """Integral of ``F_Y - F_X``; equals ``E[X] - E[Y]``."""
    return (cdf(y) - cdf(x)).integral()


# ---------------------------------------------------------------------------
# Gridded densities


def _gauss_cell_mass(lo, hi, sd):
    """Mass of N(0, sd^2) on [lo, hi] computed without cancellation in the tails."""
    lo = np.asarray(lo, dtype=float) / sd
    hi = np.asarray(hi, dtype=float) / sd
    upper = special.ndtr(-lo) - special.ndtr(-hi)
    lower = special.ndtr(hi) - special.ndtr(lo)
    return np.where(lo > 0, upper, lower)


@dataclass(frozen=True)
class GriddedDensity:
    """Cell masses on ``[lo, lo + n h)``.

    ``tail_left`` and ``tail_right`` record probability mass that was cut
    off the grid; it is treated as sitting at minus/plus infinity, so it
    enters the CDF as a constant offset but never changes a CDF difference
    between two mixtures of the same noise.
    """

    lo: float
    h: float
    masses: np.ndarray
    tail_left: float = 0.0
    tail_right: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if not self.h > 0:
            raise ValueError("grid step must be positive")
        if m.size == 0:
            raise ValueError("grid needs at least one cell")
        m.flags.writeable = False
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "h", float(self.h))

    kind = "linear"

    @property
    def n(self) -> int:
        return self.masses.size

    @property
    def hi(self) -> float:
        return self.lo + self.n * self.h

    @property
    def edges(self) -> np.ndarray:
        return self.lo + self.h * np.arange(self.n + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.lo + self.h * (np.arange(self.n) + 0.5)

    @property
    def breakpoints(self) -> np.ndarray:
        return self.edges

    @property
    def density(self) -> np.ndarray:
        return self.masses / self.h

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def truncation_mass(self) -> float:
        return float(self.tail_left + self.tail_right)

    def cumulative(self) -> np.ndarray:
        return self.tail_left + np.concatenate([[0.0], np.cumsum(self.masses)])

    def __call__(self, x):
        return self.cdf(x)

    def cdf(self, x):
        return np.interp(x, self.edges, self.cumulative())

    def is_probability(self, tol: float = 1e-9) -> bool:
        total = self.total_mass + self.truncation_mass
        return abs(total - 1.0) <= tol and bool(np.all(self.masses >= -tol))

    def shift(self, c: float) -> "GriddedDensity":
        return GriddedDensity(self.lo + c, self.h, self.masses, self.tail_left, self.tail_right)

    def scale_mass(self, factor: float) -> "GriddedDensity":
        return GriddedDensity(self.lo, self.h, self.masses * factor,
                              self.tail_left * factor, self.tail_right * factor)

    def __add__(self, other: "GriddedDensity") -> "GriddedDensity":
        return _align_binary(self, other, np.add)

    def __sub__(self, other: "GriddedDensity") -> "GriddedDensity":
        return _align_binary(self, other, np.subtract)

    def trim(self, eps: float = 0.0) -> "GriddedDensity":
        """Drop end cells whose absolute mass is at most ``eps``; dropped mass goes to the tails."""
        keep = np.nonzero(np.abs(self.masses) > eps)[0]
        if keep.size == 0:
            return self
        i, j = int(keep[0]), int(keep[-1]) + 1
        return GriddedDensity(
            self.lo + i * self.h, self.h, self.masses[i:j],
            self.tail_left + float(self.masses[:i].sum()),
            self.tail_right + float(self.masses[j:].sum()),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,density\n")
        for x, d in zip(self.centers, self.density):
            buf.write(f"{float(x)!r},{float(d)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GriddedDensity":
        rows = [r for r in text.strip().splitlines() if r.strip()]
        if not rows or rows[0].replace(" ", "") != "x,density":
            raise ValueError("density CSV must start with header 'x,density'")
        data = np.array([[float(t) for t in r.split(",")] for r in rows[1:]])
        x, d = data[:, 0], data[:, 1]
        if x.size < 2:
            raise ValueError("density CSV needs at least two rows")
        h = float(np.mean(np.diff(x)))
        if not np.allclose(np.diff(x), h, rtol=1e-6, atol=0):
            raise ValueError("density CSV rows must be evenly spaced")
        return cls(x[0] - h / 2, h, d * h)

    def to_json(self) -> dict:
        return {
            "lo": self.lo,
            "h": self.h,
            "masses": self.masses.tolist(),
            "tail_left": self.tail_left,
            "tail_right": self.tail_right,
        }

    @classmethod
    def from_json(cls, data: dict) -> "GriddedDensity":
        return cls(data["lo"], data["h"], np.asarray(data["masses"], dtype=float),
                   data.get("tail_left", 0.0), data.get("tail_right", 0.0))


def _same_step(a: GriddedDensity, b: GriddedDensity) -> bool:
    return math.isclose(a.h, b.h, rel_tol=1e-12, abs_tol=0.0)


def _align_binary(a: GriddedDensity, b: GriddedDensity, op) -> GriddedDensity:
    if not _same_step(a, b):
        raise MixedGridError(f"steps differ: {a.h!r} vs {b.h!r}")
    h = a.h
    offset = (b.lo - a.lo) / h
    k = round(offset)
    if abs(offset - k) > 1e-6:
        raise MixedGridError("grids are not aligned to a common lattice")
    start = min(0, k)
    stop = max(a.n, k + b.n)
    out_a = np.zeros(stop - start)
    out_b = np.zeros(stop - start)
    out_a[-start:-start + a.n] = a.masses
    out_b[k - start:k - start + b.n] = b.masses
    return GriddedDensity(a.lo + start * h, h, op(out_a, out_b),
                          op(a.tail_left, b.tail_left), op(a.tail_right, b.tail_right))


def lattice_bounds(lo: float, hi: float, h: float) -> tuple[int, int]:
    """First and last lattice-centre index whose cell meets ``[lo, hi]``."""
    j_lo = math.floor(lo / h + 0.5)
    j_hi = math.ceil(hi / h - 0.5)
    return j_lo, max(j_hi, j_lo)


def gaussian_grid(sd: float, h: float, mean: float = 0.0, width: float = 12.0) -> GriddedDensity:
    """Exact cell masses of N(mean, sd^2) on the lattice ``h Z`` over ``mean +- width sd``."""
    j_lo, j_hi = lattice_bounds(mean - width * sd, mean + width * sd, h)
    edges = (np.arange(j_lo, j_hi + 2) - 0.5) * h
    masses = _gauss_cell_mass(edges[:-1] - mean, edges[1:] - mean, sd)
    left = float(special.ndtr((edges[0] - mean) / sd))
    right = float(special.ndtr(-(edges[-1] - mean) / sd))
    return GriddedDensity(edges[0], h, masses, left, right)


def uniform_grid(a: float, b: float, h: float) -> GriddedDensity:
    """Exact cell masses of the uniform law on ``[a, b]``."""
    j_lo, j_hi = lattice_bounds(a, b, h)
    edges = (np.arange(j_lo, j_hi + 2) - 0.5) * h
    overlap = np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None)
    return GriddedDensity(edges[0], h, overlap / (b - a))


def resample(d: GriddedDensity, h: float) -> GriddedDensity:
    """Re-bin onto the lattice ``h Z``; exact for the piecewise-constant density."""
    j_lo, j_hi = lattice_bounds(d.lo, d.hi, h)
    edges = (np.arange(j_lo, j_hi + 2) - 0.5) * h
    masses = np.diff(d.cdf(edges))
    return GriddedDensity(edges[0], h, masses, d.tail_left, d.tail_right)


def convolve(a: GriddedDensity, b: GriddedDensity, allow_resample: bool = False,
             method: str = "auto") -> GriddedDensity:
    """Lattice convolution.  Centres add, so the result stays on ``h Z``.

    ``method`` is ``"direct"``, ``"fft"`` or ``"auto"`` (direct up to
    4096 cells, FFT above).
    """
    if not _same_step(a, b):
        if not allow_resample:
            raise MixedGridError(f"steps differ: {a.h!r} vs {b.h!r}")
        b = resample(b, a.h)
    if method == "auto":
        method = "direct" if max(a.n, b.n) <= DIRECT_CONVOLVE_MAX else "fft"
    if method == "direct":
        masses = np.convolve(a.masses, b.masses)
    elif method == "fft":
        masses = signal.fftconvolve(a.masses, b.masses)
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    A, B = a.total_mass, b.total_mass
    tail_left = a.tail_left * (B + b.tail_left) + b.tail_left * A
    tail_right = (a.tail_right * (B + b.tail_right) + b.tail_right * A
                  + a.tail_left * b.tail_right + a.tail_right * b.tail_left)
    return GriddedDensity(a.lo + b.lo + a.h / 2, a.h, masses, tail_left, tail_right)


# ---------------------------------------------------------------------------
# Gamble + noise


class AtomGridMixture:
    """Law of ``g + Z`` for a gamble ``g`` and gridded noise ``Z``.

    The CDF is ``sum_j p_j F_Z(x - v_j)``, piecewise linear with kinks at
    every grid edge shifted by every atom.
    """

    kind = "linear"

    def __init__(self, gamble: Gamble, noise: GriddedDensity):
        self.gamble = gamble
        self.noise = noise

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        edges = self.noise.edges
        cum = self.noise.cumulative()
        out = np.zeros_like(x)
        for v, p in zip(self.gamble.values, self.gamble.probs):
            out += p * np.interp(x - v, edges, cum)
        return out

    @property
    def breakpoints(self) -> np.ndarray:
        edges = self.noise.edges
        return np.unique(np.concatenate([edges + v for v in self.gamble.values]))

    @property
    def truncation_mass(self) -> float:
        return self.noise.truncation_mass

    @property
    def mean(self) -> float:
        return self.gamble.mean + moments(self.noise).mean

    @property
    def variance(self) -> float:
        return self.gamble.variance + moments(self.noise).variance


def convolve_gamble(g: Gamble, d: GriddedDensity) -> AtomGridMixture:
    return AtomGridMixture(g, d)


# ---------------------------------------------------------------------------
# Norms and moments


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    abs_moments: dict = field(default_factory=dict)

    def abs_moment(self, n: int) -> float:
        return self.abs_moments[n]


def tv_norm(m) -> float:
    """Total variation norm ``int d|m|`` of a signed measure."""
    if isinstance(m, GriddedDensity):
        return float(np.abs(m.masses).sum() + abs(m.tail_left) + abs(m.tail_right))
    if isinstance(m, SteppedFunction):
        return m.abs_integral()
    if hasattr(m, "tv_norm"):
        return float(m.tv_norm())
    raise TypeError(f"cannot take a total-variation norm of {type(m).__name__}")


def moments(d, n: int = 2) -> MomentSummary:
    """Mean, variance and absolute moments up to order ``n``.

    Gambles use exact atom sums; grids use midpoint quadrature normalised
    by the on-grid mass.
    """
    if n < 1:
        raise ValueError("moment order must be at least 1")
    if isinstance(d, Gamble):
        x, w = d.values, d.probs
    elif isinstance(d, GriddedDensity):
        x, w = d.centers, d.masses / d.masses.sum()
    else:
        raise TypeError(f"no moments for {type(d).__name__}")
    mean = float(np.dot(x, w))
    var = float(np.dot((x - mean) ** 2, w))
    absm = {k: float(np.dot(np.abs(x) ** k, w)) for k in range(1, n + 1)}
    return MomentSummary(mean, max(var, 0.0), absm)


def load_gamble(path) -> Gamble:
    with open(path) as fh:
        return Gamble.from_json(json.load(fh))
