"""Analytic noise constructions.

Two families:

* binary gambles ``g`` / ``-l`` with equal odds against ``Y = 0`` with a
  Gaussian kernel, where ``c`` and the law of ``U`` come from a single
  explicit function ``t``;
* the bounded-support family: one noise built from uniforms that works
  for every pair supported in ``[-M, M]`` with mean gap at least ``eps M``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize, special

from .errors import KernelTooNarrow, ParameterTooSmall
from .measures import Gamble, GriddedDensity, lattice_bounds
from .smoothing import (
    CELLS_PER_A,
    FIRST,
    SERIES_TAIL_TOL,
    SQRT2,
    NoiseSpec,
    SigmaMeasure,
    _hash,
    series_truncation,
)

QUAD_TOL = 1e-8
KERNEL_CONVENTIONS = ("split", "direct")


def _phi(x, a):
    return np.exp(-0.5 * (np.asarray(x, dtype=float) / a) ** 2) / (a * math.sqrt(2 * math.pi))


def _Phi(x, a):
    return special.ndtr(np.asarray(x, dtype=float) / a)


# ---------------------------------------------------------------------------
# Binary gambles


@dataclass(frozen=True)
class BinaryGamble:
    """Pays ``g`` or ``-l`` with probability one half each."""

    g: float
    l: float

    def __post_init__(self):
        if not (self.g > 0 and self.l > 0):
            raise ValueError("gain and loss must both be positive")

    @property
    def mean(self) -> float:
        return 0.5 * (self.g - self.l)

    def as_gamble(self) -> Gamble:
        return Gamble.from_pairs([(-self.l, 0.5), (self.g, 0.5)])


def t_function(b: BinaryGamble, a: float):
    """Density of ``rho_a * sigma - rho_a`` for the binary pair against zero.

    ``sigma`` has density ``-1/(g-l)`` on ``[-l, 0)`` and ``1/(g-l)`` on
    ``[0, g)``; its total mass is one.
    """
    if b.g == b.l:
        raise ValueError("g == l: the pair has no mean gap")
    if a <= 0:
        raise ValueError("kernel width must be positive")
    norm = 1.0 / (b.g - b.l)

    def t(s):
        s = np.asarray(s, dtype=float)
        return norm * (2 * _Phi(s, a) - _Phi(s - b.g, a) - _Phi(s + b.l, a)) - _phi(s, a)

    return t


def t_antiderivative(b: BinaryGamble, a: float):
    """``T`` with ``T' = t`` and ``T(-inf) = 0``."""
    norm = 1.0 / (b.g - b.l)

    def psi(u):
        u = np.asarray(u, dtype=float)
        return u * _Phi(u, a) + a * a * _phi(u, a)

    def T(s):
        s = np.asarray(s, dtype=float)
        return norm * (2 * psi(s) - psi(s - b.g) - psi(s + b.l)) - _Phi(s, a)

    return T


def _t_roots(t, lo: float, hi: float, n: int = 4001) -> list[float]:
    xs = np.linspace(lo, hi, n)
    ys = t(xs)
    roots = []
    for i in np.nonzero(np.sign(ys[:-1]) * np.sign(ys[1:]) < 0)[0]:
        roots.append(optimize.brentq(t, xs[i], xs[i + 1], xtol=1e-12 * max(1.0, abs(xs[i]))))
    return roots


class BinaryQuadrature(NamedTuple):
    c: float
    mean_u: float
    var_u: float
    breakpoints: tuple


def binary_quadrature(b: BinaryGamble, a: float, tol: float = QUAD_TOL,
                      lower_width: float = 40.0) -> BinaryQuadrature:
    """``c = sqrt(2) int_{-inf}^g |t|`` and the first two moments of ``f``.

    Adaptive Gauss-Kronrod on ``[-l - 40 a, g]`` split at ``-l``, ``0`` and
    the sign changes of ``t``; the Gaussian factor makes the omitted tail
    below ``exp(-800)``.
    """
    t = t_function(b, a)
    lo = -b.l - lower_width * a
    roots = _t_roots(t, -b.l - 8 * a, b.g)
    cuts = sorted({lo, -b.l, 0.0, b.g, *[r for r in roots if lo < r < b.g]})
    cuts = [x for x in cuts if x <= b.g]

    def integral(fn):
        total = 0.0
        with warnings.catch_warnings():
            # roundoff warnings arise only once the error is at machine level
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for u, v in zip(cuts[:-1], cuts[1:]):
                val, _ = integrate.quad(fn, u, v, epsabs=tol * 1e-3, epsrel=1e-10, limit=200)
                total += val
        return total

    abs_t = lambda s: abs(float(t(s)))
    mass = integral(abs_t)
    c = SQRT2 * mass
    mean_u = integral(lambda s: s * abs_t(s)) / mass
    second = integral(lambda s: (s - mean_u) ** 2 * abs_t(s)) / mass
    return BinaryQuadrature(c, mean_u, second, tuple(cuts))


def kernel_width(sigma_w: float, kernel_convention: str = "split") -> float:
    """Width ``a`` used inside ``t`` for a Gaussian part of std ``sigma_w``.

    ``"split"``: ``W`` is the two-fold self-convolution of ``rho_a``, so
    ``a = sigma_w / sqrt(2)``.  ``"direct"``: ``a = sigma_w``.
    """
    if kernel_convention == "split":
        return sigma_w / SQRT2
    if kernel_convention == "direct":
        return float(sigma_w)
    raise ValueError(f"unknown kernel convention {kernel_convention!r}")


def wald_std(sigma_w: float, c: float, mean_u: float, var_u: float) -> float:
    en, vn = c / (1 - c), c / (1 - c) ** 2
    return math.sqrt(sigma_w ** 2 + en * var_u + vn * mean_u ** 2)


def binary_construct(b: BinaryGamble, sigma_w: float, kernel_convention: str = "split",
                     series_tail_tol: float = SERIES_TAIL_TOL, cells_per_a: int = CELLS_PER_A,
                     tol: float = QUAD_TOL) -> NoiseSpec:
    """Gaussian ``W`` of std ``sigma_w`` plus a geometric sum of draws from ``f``.

    ``f = (sqrt(2)/c) |t|`` below ``g`` and zero above it.
    """
    if sigma_w <= 0:
        raise ValueError("sigma_w must be positive")
    a = kernel_width(sigma_w, kernel_convention)
    q = binary_quadrature(b, a, tol)
    if q.c >= 1:
        raise KernelTooNarrow(f"c = {q.c:.4g} >= 1 at sigma_w = {sigma_w:g}")
    h = a / cells_per_a
    T = t_antiderivative(b, a)
    j_lo, j_hi = lattice_bounds(q.breakpoints[0], b.g, h)
    edges = (np.arange(j_lo, j_hi + 2) - 0.5) * h
    edges[-1] = min(edges[-1], b.g)
    # exact cell integrals of |t| from the antiderivative, split at sign changes
    cuts = np.union1d(edges, [x for x in q.breakpoints if edges[0] < x < edges[-1]])
    pieces = np.abs(np.diff(T(cuts)))
    cell = np.searchsorted(edges, cuts[:-1], side="right") - 1
    masses = np.bincount(cell, weights=pieces, minlength=edges.size - 1)[: edges.size - 1]
    pi = GriddedDensity(edges[0], h, masses / masses.sum())
    prov = {
        "order": FIRST, "a": a, "kernel_convention": kernel_convention,
        "g": b.g, "l": b.l, "mean_u": q.mean_u, "var_u": q.var_u,
        "sigma_z": wald_std(sigma_w, q.c, q.mean_u, q.var_u), "pi_mode": "binary",
    }
    return NoiseSpec(("GAUSSIAN", float(sigma_w)), q.c, series_truncation(q.c, series_tail_tol), pi, prov)


def binary_sigma(b: BinaryGamble) -> SigmaMeasure:
    norm = 1.0 / (b.g - b.l)
    return SigmaMeasure(FIRST, b.mean, np.array([-b.l, 0.0, b.g]),
                        np.array([-norm, norm]), np.zeros(2))


# Reference values: (g, l, sigma_W) -> (c, sigma_Z)
TABLE1 = (
    (12.0, 10.0, 3500.0, 0.014, 3525.0),
    (12.0, 10.0, 4000.0, 0.011, 4025.0),
    (100.0, 50.0, 4500.0, 0.022, 4551.0),
    (100.0, 50.0, 10000.0, 0.010, 10050.0),
    (100.0, 70.0, 11000.0, 0.018, 11102.0),
)
TABLE1_C_TOL = 0.0015
TABLE1_SIGMA_REL_TOL = 0.002


@dataclass(frozen=True)
class Table1Row:
    g: float
    l: float
    sigma_w: float
    c: float
    sigma_z: float
    c_ref: float | None = None
    sigma_z_ref: float | None = None

    @property
    def c_err(self) -> float | None:
        return None if self.c_ref is None else self.c - self.c_ref

    @property
    def sigma_z_rel_err(self) -> float | None:
        return None if self.sigma_z_ref is None else (self.sigma_z - self.sigma_z_ref) / self.sigma_z_ref

    @property
    def within_tolerance(self) -> bool | None:
        if self.c_ref is None:
            return None
        return abs(self.c_err) <= TABLE1_C_TOL and abs(self.sigma_z_rel_err) <= TABLE1_SIGMA_REL_TOL


def table1(rows: list[tuple[float, float]] | None = None, sigma_w: float | None = None,
           kernel_convention: str = "split", tol: float = QUAD_TOL) -> list[Table1Row]:
    """Recompute the reference rows, optionally filtered by ``(g, l)``.

    With ``sigma_w`` every selected row is recomputed at that width and no
    reference values are attached.
    """
    out = []
    for g, l, sw, c_ref, s_ref in TABLE1:
        if rows is not None and (g, l) not in {(float(a), float(b)) for a, b in rows}:
            continue
        if sigma_w is not None:
            if any(r.g == g and r.l == l for r in out):
                continue
            sw, c_ref, s_ref = float(sigma_w), None, None
        a = kernel_width(sw, kernel_convention)
        q = binary_quadrature(BinaryGamble(g, l), a, tol)
        out.append(Table1Row(g, l, sw, q.c, wald_std(sw, q.c, q.mean_u, q.var_u), c_ref, s_ref))
    return out


# ---------------------------------------------------------------------------
# Bounded-support family


def uniform_bound(M: float, eps: float) -> float:
    return 16.0 * M / eps + 8.0 * M


@dataclass(frozen=True)
class UniformNoiseSpec:
    """``Z = R_1 + R_2 + U_1 + ... + U_N``.

    ``R_i`` uniform on ``[-a, a]``, ``U_i`` uniform on
    ``[-a-M, -a+M] u [a-M, a+M]``, ``P[N = n] = 2^(-1-n)``.
    """

    M: float
    eps: float
    a: float
    K: int = series_truncation(0.5)

    def __post_init__(self):
        if not (self.M > 0 and self.eps > 0):
            raise ValueError("M and eps must be positive")
        bound = uniform_bound(self.M, self.eps)
        if self.a < bound * (1 - 1e-12):
            raise ParameterTooSmall(f"a = {self.a:g} is below 16M/eps + 8M = {bound:g}")

    c = 0.5
    kernel_type = "UNIFORM_PAIR"

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def variance(self) -> float:
        return uniform_variance(self).wald

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def series_mass(self) -> float:
        return 1.0 - 0.5 ** (self.K + 1)

    def default_step(self) -> float:
        return self.M / 50.0

    def pi_grid(self, h: float) -> GriddedDensity:
        a, M = self.a, self.M
        j_lo, j_hi = lattice_bounds(-a - M, a + M, h)
        edges = (np.arange(j_lo, j_hi + 2) - 0.5) * h
        lo, hi = edges[:-1], edges[1:]
        left = np.clip(np.minimum(hi, -a + M) - np.maximum(lo, -a - M), 0, None)
        right = np.clip(np.minimum(hi, a + M) - np.maximum(lo, a - M), 0, None)
        return GriddedDensity(edges[0], h, (left + right) / (4 * M))

    def as_noise_spec(self, h: float | None = None) -> NoiseSpec:
        h = self.default_step() if h is None else float(h)
        prov = {"order": FIRST, "M": self.M, "eps": self.eps, "a": self.a, "family": "uniform"}
        return NoiseSpec(("UNIFORM_PAIR", self.a), 0.5, self.K, self.pi_grid(h), prov)

    def materialize(self, lo=None, hi=None, h=None, **kwargs) -> GriddedDensity:
        return self.as_noise_spec(h).materialize(lo, hi, **kwargs)

    def to_json(self) -> dict:
        return {"kind": "UNIFORM_SPEC", "M": self.M, "eps": self.eps, "a": self.a, "K": self.K}

    @classmethod
    def from_json(cls, data: dict) -> "UniformNoiseSpec":
        return cls(float(data["M"]), float(data["eps"]), float(data["a"]), int(data["K"]))

    def spec_hash(self) -> str:
        return _hash(self.to_json())


def uniform_construct(M: float, eps: float, a: float | None = None,
                      series_tail_tol: float = SERIES_TAIL_TOL) -> UniformNoiseSpec:
    """Noise working for every pair in ``[-M, M]`` with mean gap ``>= eps M``."""
    a = uniform_bound(M, eps) if a is None else float(a)
    return UniformNoiseSpec(float(M), float(eps), a, series_truncation(0.5, series_tail_tol))


class UniformVariance(NamedTuple):
    wald: float
    displayed: float

    @property
    def relative_deviation(self) -> float:
        return (self.displayed - self.wald) / self.wald


def uniform_variance(spec: UniformNoiseSpec) -> UniformVariance:
    """Wald variance ``2a^2/3 + E[N] (a^2 + M^2/3)`` with ``E[N] = 1``, and the
    closed form ``(2/3)(M/eps)^2 (1024 + 1024 eps + 257 eps^2)`` for comparison."""
    a, M, e = spec.a, spec.M, spec.eps
    wald = 2 * a * a / 3 + 1.0 * (a * a + M * M / 3)
    displayed = (2.0 / 3.0) * (M / e) ** 2 * (1024 + 1024 * e + 257 * e * e)
    return UniformVariance(wald, displayed)


def materialize_uniform(spec: UniformNoiseSpec, grid: tuple | None = None,
                        K: int | None = None) -> GriddedDensity:
    """Density of ``Z`` on the lattice; ``grid`` is ``(lo, hi, h)``."""
    if K is not None:
        spec = UniformNoiseSpec(spec.M, spec.eps, spec.a, int(K))
    if grid is None:
        return spec.materialize()
    lo, hi, h = grid
    return spec.materialize(lo, hi, h)


def uniform_m_a(sigma: SigmaMeasure, a: float, x) -> np.ndarray:
    """Density of ``(sigma - delta) * rho_a`` for the uniform kernel on ``[-a, a]``."""
    x = np.asarray(x, dtype=float)
    inside = (np.abs(x) <= a).astype(float)
    return sigma.mass_between(x - a, x + a) / (2 * a) - inside / (2 * a)


def uniform_m_a_bound(M: float, L: float, a: float) -> float:
    """Sup of ``|m_a|`` for a pair in ``[-M, M]`` with mean gap ``1/L``."""
    return M * L / a + 1.0 / (2 * a)
