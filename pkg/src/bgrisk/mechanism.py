"""Ordinal incentive compatibility by noising transfers.

A finite-type direct mechanism is described, per agent ``i``, true type
``theta`` and report ``r``, by the gamble over the agent's money payoff
that reporting ``r`` induces when the type is ``theta``.  If truthful
reporting strictly maximises the expected payoff, adding a suitable
zero-mean independent noise to each agent's transfer makes the truthful
gamble first-order dominate every misreport, so every agent with a
nondecreasing utility over money prefers to tell the truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .dominance import DEFAULT_TOL, DominanceVerdict, check_noised
from .errors import NotStrictlyBIC, VerificationFailed
from .measures import Gamble, GriddedDensity, moments
from .smoothing import CELLS_PER_A, FIRST, CompositeNoise, construct_and_verify

Key = tuple[int, str, str]


def _key(text: str) -> Key:
    i, t, r = text.split(":")
    return int(i), t, r


@dataclass(frozen=True)
class MechanismSpec:
    agents: int
    types: tuple
    gambles: dict
    prior: tuple = ()
    allocation: dict = field(default_factory=dict)

    def __post_init__(self):
        types = tuple(tuple(str(t) for t in ts) for ts in self.types)
        object.__setattr__(self, "types", types)
        if len(types) != self.agents:
            raise ValueError("need one type list per agent")
        for i, ts in enumerate(types):
            if len(set(ts)) != len(ts):
                raise ValueError(f"agent {i} has duplicate types")
            for t in ts:
                for r in ts:
                    if (i, t, r) not in self.gambles:
                        raise ValueError(f"missing gamble for agent {i}, type {t}, report {r}")
        if self.prior:
            total = sum(p for _, p in self.prior)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"prior sums to {total}")

    def gamble(self, i: int, true: str, report: str) -> Gamble:
        return self.gambles[(i, true, report)]

    def triples(self):
        for i, ts in enumerate(self.types):
            for t in ts:
                for r in ts:
                    if r != t:
                        yield i, t, r

    def to_json(self) -> dict:
        out = {
            "agents": self.agents,
            "types": [list(ts) for ts in self.types],
            "prior": [[list(p), w] for p, w in self.prior],
            "gambles": {f"{i}:{t}:{r}": g.to_json() for (i, t, r), g in sorted(self.gambles.items())},
        }
        if self.allocation:
            out["allocation"] = self.allocation
        return out

    @classmethod
    def from_json(cls, data: dict) -> "MechanismSpec":
        gambles = {_key(k): Gamble.from_json(v) for k, v in data["gambles"].items()}
        prior = tuple((tuple(str(x) for x in p), float(w)) for p, w in data.get("prior", []))
        return cls(int(data["agents"]), tuple(data["types"]), gambles, prior,
                   dict(data.get("allocation", {})))

    @classmethod
    def load(cls, path) -> "MechanismSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


class GapEntry(NamedTuple):
    agent: int
    true: str
    report: str
    gap: float


@dataclass(frozen=True)
class BICReport:
    entries: tuple
    tol: float

    @property
    def offending(self) -> tuple:
        return tuple(e for e in self.entries if not e.gap > self.tol)

    @property
    def passed(self) -> bool:
        return not self.offending

    def to_json(self) -> dict:
        return {"passed": self.passed,
                "entries": [e._asdict() for e in self.entries],
                "offending": [e._asdict() for e in self.offending]}


def check_strict_bic(m: MechanismSpec, tol: float = 1e-12) -> BICReport:
    """Mean gap ``E[truthful] - E[misreport]`` for every triple; passes iff all exceed ``tol``."""
    entries = tuple(GapEntry(i, t, r, m.gamble(i, t, t).mean - m.gamble(i, t, r).mean)
                    for i, t, r in m.triples())
    return BICReport(entries, tol)


@dataclass(frozen=True)
class OrdinalizedMechanism:
    base: MechanismSpec
    noises: dict           # agent -> CompositeNoise, recentred to mean zero
    grids: dict            # agent -> materialised density of that noise
    certificates: dict     # (agent, true, report) -> DominanceVerdict

    def noise_mean(self, i: int) -> float:
        return moments(self.grids[i]).mean

    @property
    def certified(self) -> bool:
        return all(v.relation.value == "FIRST_STRICT" for v in self.certificates.values())

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "noise": {str(i): z.to_json() for i, z in sorted(self.noises.items())},
            "noise_mean": {str(i): self.noise_mean(i) for i in sorted(self.noises)},
            "certification": [
                {"agent": i, "true": t, "report": r, **v.to_json()}
                for (i, t, r), v in sorted(self.certificates.items())
            ],
        }


def ordinalize(m: MechanismSpec, c_target: float = 0.5, tol: float = DEFAULT_TOL,
               cells_per_a: int = CELLS_PER_A) -> OrdinalizedMechanism:
    """Noise each agent's transfer so truth-telling is first-order dominant.

    For each agent the noise is the independent sum of one construction
    per (true type, misreport) pair, shifted to mean zero.  Adding
    independent noise to a certified pair keeps it certified, so the sum
    works for every pair at once; each pair is re-certified on the final
    materialised density.
    """
    report = check_strict_bic(m)
    if not report.passed:
        raise NotStrictlyBIC("truthful reporting is not a strict maximiser", report.offending)
    noises, grids, certs = {}, {}, {}
    for i, ts in enumerate(m.types):
        comps = []
        for t in ts:
            for r in ts:
                if r != t:
                    res = construct_and_verify(m.gamble(i, t, t), m.gamble(i, t, r), FIRST,
                                               c_target, tol, cells_per_a=cells_per_a)
                    comps.append(res.noise)
        if not comps:
            continue
        z, grid = CompositeNoise(tuple(comps)).recentered()
        noises[i], grids[i] = z, grid
        for t in ts:
            for r in ts:
                if r == t:
                    continue
                v = check_noised(m.gamble(i, t, t), m.gamble(i, t, r), grid, 1, tol)
                certs[(i, t, r)] = v
                if v.relation.value != "FIRST_STRICT":
                    raise VerificationFailed(f"agent {i}, type {t}, report {r} not certified", v,
                                             {"triple": (i, t, r)})
    return OrdinalizedMechanism(m, noises, grids, certs)


# ---------------------------------------------------------------------------
# Simulation


def random_utility(rng: np.random.Generator, lo: float, hi: float, knots: int = 16) -> Callable:
    """Nondecreasing piecewise-linear utility with ``knots`` knots on ``[lo, hi]``.

    Increments are exponential with a random share of flat segments, so
    both smooth and step-like risk attitudes appear.
    """
    xs = np.sort(np.concatenate([[lo, hi], rng.uniform(lo, hi, knots - 2)]))
    inc = rng.exponential(1.0, knots - 1) * (rng.random(knots - 1) > rng.uniform(0, 0.7))
    if not inc.any():
        inc[rng.integers(knots - 1)] = 1.0
    ys = np.concatenate([[0.0], np.cumsum(inc)])
    return lambda x: np.interp(x, xs, ys)


def reference_utilities(lo: float, hi: float) -> list[tuple[str, Callable]]:
    mid = 0.5 * (lo + hi)
    return [
        ("linear", lambda x: np.asarray(x, dtype=float)),
        ("cara1000", lambda x: -np.exp(-np.clip(x, lo, hi) / 1000.0)),
        ("step", lambda x: (np.asarray(x) >= mid).astype(float)),
    ]


class Violation(NamedTuple):
    utility: str
    agent: int
    true: str
    report: str
    mean_diff: float
    std_err: float


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    seed: int
    utilities: tuple
    checks: int
    violations: tuple
    worst_z: float    # smallest (mean difference / standard error) seen

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"trials": self.trials, "seed": self.seed, "utilities": list(self.utilities),
                "checks": self.checks, "passed": self.passed, "worst_z": self.worst_z,
                "violations": [v._asdict() for v in self.violations]}


def _expected(g: Gamble, u, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    for v, p in zip(g.values, g.probs):
        out += p * u(v + z)
    return out


def simulate_agents(om: OrdinalizedMechanism, utilities: Sequence | int = 50,
                    trials: int = 100_000, seed: int = 0,
                    include_reference: bool = True) -> SimulationReport:
    """Monte Carlo check that truth-telling wins for monotone utilities.

    ``utilities`` is a count of random ones or a list of ``(name, u)``.
    Expectations over the payoff gamble are exact; only ``Z`` is sampled,
    with the same draws for truthful and misreport so the comparison is
    paired.  A violation is a mean difference below ``-3`` standard errors.
    """
    from .montecarlo import sample_noise

    rng = np.random.default_rng(seed)
    draws = {i: sample_noise(z, trials, seed + 1 + i).values for i, z in om.noises.items()}
    vals = np.concatenate([g.values for g in om.base.gambles.values()])
    lo = float(vals.min() + min(d.min() for d in draws.values()))
    hi = float(vals.max() + max(d.max() for d in draws.values()))
    if isinstance(utilities, int):
        us = [(f"random{k}", random_utility(rng, lo, hi)) for k in range(utilities)]
    else:
        us = list(utilities)
    if include_reference:
        us = reference_utilities(lo, hi) + us
    violations, checks, worst = [], 0, np.inf
    for name, u in us:
        for i, ts in enumerate(om.base.types):
            if i not in draws:
                continue
            z = draws[i]
            for t in ts:
                truthful = _expected(om.base.gamble(i, t, t), u, z)
                for r in ts:
                    if r == t:
                        continue
                    d = truthful - _expected(om.base.gamble(i, t, r), u, z)
                    mean, se = float(d.mean()), float(d.std(ddof=1) / np.sqrt(d.size))
                    checks += 1
                    if se > 0:
                        worst = min(worst, mean / se)
                    if mean < -3 * se:
                        violations.append(Violation(name, i, t, r, mean, se))
    return SimulationReport(trials, seed, tuple(n for n, _ in us), checks, tuple(violations),
                            float(worst))
