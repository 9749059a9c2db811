"""Samplers for the noise laws and empirical CDF comparisons."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .measures import Gamble

CHUNK = 1 << 18


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray
    seed: int
    spec_hash: str
    reassigned: int = 0  # draws whose N exceeded K and were set to N = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(self.values.mean())

    def std(self) -> float:
        return float(self.values.std(ddof=1))

    def sidecar(self) -> dict:
        return {"seed": int(self.seed), "spec_hash": self.spec_hash, "n": self.n,
                "reassigned": int(self.reassigned), **self.meta}

    def write(self, csv_path) -> None:
        """Single-column CSV plus a ``.json`` sidecar next to it."""
        csv_path = Path(csv_path)
        np.savetxt(csv_path, self.values, fmt="%.17g", header="value", comments="")
        with open(csv_path.with_suffix(".json"), "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, csv_path) -> "SampleBatch":
        csv_path = Path(csv_path)
        values = np.loadtxt(csv_path, skiprows=1, ndmin=1)
        with open(csv_path.with_suffix(".json")) as fh:
            side = json.load(fh)
        return cls(values, side["seed"], side["spec_hash"], side.get("reassigned", 0))


def _streams(seed: int, n: int):
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return [(np.random.default_rng(s), k) for s, k in zip(children, sizes)]


def _geometric(rng, c: float, size: int, K: int):
    if c == 0:
        return np.zeros(size, dtype=np.int64), 0
    counts = rng.geometric(1.0 - c, size) - 1
    over = counts > K
    counts[over] = 0
    return counts, int(over.sum())


def _grouped_sum(counts: np.ndarray, draws: np.ndarray) -> np.ndarray:
    owner = np.repeat(np.arange(counts.size), counts)
    return np.bincount(owner, weights=draws, minlength=counts.size)


def _inverse_cdf(pi, u: np.ndarray) -> np.ndarray:
    """Linear interpolation of the CDF inside each cell."""
    cum = np.concatenate([[0.0], np.cumsum(pi.masses)])
    cum /= cum[-1]
    return np.interp(u, cum, pi.edges)


def _chunk_noise_spec(z, rng, size):
    counts, over = _geometric(rng, z.c, size, z.K)
    u = _inverse_cdf(z.pi, rng.random(int(counts.sum())))
    kind, p = z.kernel
    if kind == "GAUSSIAN":
        w = rng.normal(0.0, float(p), size)
    else:
        w = rng.uniform(-p, p, size) + rng.uniform(-p, p, size)
    return w + _grouped_sum(counts, u), over


def _chunk_uniform(z, rng, size):
    counts, over = _geometric(rng, 0.5, size, z.K)
    total = int(counts.sum())
    centres = np.where(rng.random(total) < 0.5, -z.a, z.a)
    u = centres + rng.uniform(-z.M, z.M, total)
    w = rng.uniform(-z.a, z.a, size) + rng.uniform(-z.a, z.a, size)
    return w + _grouped_sum(counts, u), over


def sample_noise(z, n: int, seed: int = 0) -> SampleBatch:
    """``n`` draws of ``Z``; identical for identical ``(z, n, seed)``.

    Draws are generated in fixed-size chunks, each with its own stream
    spawned from ``seed``.
    """
    from .closedform import UniformNoiseSpec
    from .smoothing import CompositeNoise

    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(z, CompositeNoise):
        subs = np.random.SeedSequence(seed).spawn(len(z.components))
        total = np.full(n, float(z.shift))
        over = 0
        for comp, ss in zip(z.components, subs):
            b = sample_noise(comp, n, int(ss.generate_state(1)[0]))
            total += b.values
            over += b.reassigned
        return SampleBatch(total, seed, z.spec_hash(), over)
    chunk = _chunk_uniform if isinstance(z, UniformNoiseSpec) else _chunk_noise_spec
    parts, over = [], 0
    for rng, size in _streams(seed, n):
        v, o = chunk(z, rng, size)
        parts.append(v)
        over += o
    return SampleBatch(np.concatenate(parts), seed, z.spec_hash(), over)


def sample_gamble(g: Gamble, n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9A3B]))
    return g.values[rng.choice(g.values.size, size=n, p=g.probs)]


def sample_noised(g: Gamble, z, n: int, seed: int = 0) -> SampleBatch:
    """Draws of ``g + Z``."""
    noise = sample_noise(z, n, seed)
    return SampleBatch(noise.values + sample_gamble(g, n, seed), seed, noise.spec_hash,
                       noise.reassigned)


def dkw_epsilon(n: int, alpha: float = 0.01) -> float:
    """Half-width of the DKW band at confidence ``1 - alpha``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def ecdf(values: np.ndarray, at: np.ndarray) -> np.ndarray:
    s = np.sort(values)
    return np.searchsorted(s, at, side="right") / s.size


def ks_distance(batch, cdf) -> float:
    """``sup |F_n - F|`` for a continuous-ish reference ``cdf``."""
    x = np.sort(batch.values if isinstance(batch, SampleBatch) else np.asarray(batch))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


@dataclass(frozen=True)
class EmpiricalVerdict:
    passed: bool
    worst_gap: float
    band: float
    witness: float

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_json(self) -> dict:
        return {"result": self.label, "worst_gap": self.worst_gap, "band": self.band,
                "witness": self.witness}


def empirical_fosd(xs, ys, band: float | None = None, alpha: float = 0.01) -> EmpiricalVerdict:
    """PASS when ``F_Y - F_X >= -band`` at every pooled sample point.

    The default band is the sum of the two one-sample DKW widths.
    """
    xv = xs.values if isinstance(xs, SampleBatch) else np.asarray(xs, dtype=float)
    yv = ys.values if isinstance(ys, SampleBatch) else np.asarray(ys, dtype=float)
    if band is None:
        band = dkw_epsilon(xv.size, alpha) + dkw_epsilon(yv.size, alpha)
    pts = np.union1d(xv, yv)
    gap = ecdf(yv, pts) - ecdf(xv, pts)
    i = int(np.argmin(gap))
    return EmpiricalVerdict(bool(gap[i] >= -band), float(gap[i]), float(band), float(pts[i]))
