"""Randomised property suites behind ``qkdcrit verify``."""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple

import numpy as np

from . import criteria, linalg
from .errors import EmptyKey, UnknownSuite
from .protocol import EveStrategy, SimConfig, ToeplitzHash, full_pipeline_assessment, run_bb84
from .states import CqState, random_cq_state


class SuiteResult(NamedTuple):
    """Outcome of one suite; ``worst_slack`` is the smallest raw margin seen.

    Margins down to minus the suite tolerance (1e-9 for the inequality
    suites) still count as passing.
    """

    name: str
    samples: int
    violations: int
    worst_slack: float
    seconds: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: samples={self.samples} violations={self.violations} "
            f"worst_slack={self.worst_slack:.3e} ({self.seconds:.2f}s)"
        )


def bloch_hemisphere(points: int = 10_000) -> np.ndarray:
    """Fibonacci lattice on the upper Bloch hemisphere, one row per measurement axis.

    An axis ``n`` and its antipode define the same projective measurement, so
    the hemisphere indexes every qubit projective measurement once.
    """
    k = np.arange(points) + 0.5
    z = 1.0 - k / points
    phi = math.pi * (1.0 + math.sqrt(5.0)) * k
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def bloch_sweep_success(p1: float, rho1, rho2, axes: np.ndarray | None = None) -> float:
    """Best success probability over projective qubit measurements on a grid.

    Each measurement ``{P_n, P_-n}`` is scored with both assignments of its
    outcomes to the two hypotheses; the trivial measurement is included.
    """
    axes = bloch_hemisphere() if axes is None else axes
    gamma = p1 * np.asarray(rho1) - (1.0 - p1) * np.asarray(rho2)
    v = np.array([2 * gamma[0, 1].real, -2 * gamma[0, 1].imag, (gamma[0, 0] - gamma[1, 1]).real])
    base = (1.0 - p1) + 0.5 * np.trace(gamma).real
    proj = np.abs(axes @ v)
    return float(max(base + 0.5 * proj.max(), p1, 1.0 - p1))


def _random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    return linalg.random_pure(dim, rng) if rng.random() < 0.3 else linalg.random_density(dim, rng)


def suite_fvdg(samples: int = 1000, seed: int = 0) -> SuiteResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, bad = math.inf, 0
    for _ in range(samples):
        dim = int(rng.integers(2, 9))
        res = criteria.fvdg_check(_random_state(dim, rng), _random_state(dim, rng))
        worst = min(worst, res.mid - res.lhs, res.rhs - res.mid)
        bad += not res.holds
    return SuiteResult("fvdg", samples, bad, worst, time.perf_counter() - t0)


def simulated_states(max_bits: int = 6, per_strategy: int = 8) -> list:
    """Eve memories from seeded runs of every attack, restricted to small keys."""
    out = []
    strategies = [
        EveStrategy("none"),
        EveStrategy("intercept-resend", intercept_prob=1.0),
        EveStrategy("intercept-resend", intercept_prob=0.5, basis_prob=0.8),
        EveStrategy("breidbart"),
        EveStrategy("correlated-flip", flip_prob=0.1, correlation_length=3.0),
    ]
    for eve in strategies:
        found = 0
        for s in range(200):
            cfg = SimConfig(n_raw=12, eve=eve, Q_tol=0.5, rng_seed=s, sample_fraction=0.25)
            try:
                run = run_bb84(cfg)
            except EmptyKey:
                continue
            if len(run.sifted_key) <= max_bits:
                out.append((cfg, run))
                found += 1
            if found == per_strategy:
                break
    return out


def suite_guessing_bound(samples: int = 50, seed: int = 0, include_simulated: bool = True) -> SuiteResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, bad, count = math.inf, 0, 0
    for _ in range(samples):
        n = int(rng.integers(1, 4))
        dim = int(rng.integers(1, 9))
        labels = int(rng.integers(1, (1 << n) + 1))
        st = random_cq_state(n, dim, rng, n_labels=labels)
        a = criteria.check_guessing_bound(st)
        worst = min(worst, a.slack)
        bad += not a.holds
        count += 1
    if include_simulated:
        for cfg, _ in simulated_states():
            res = full_pipeline_assessment(cfg)
            for a in (res.pre_pa, res.post_pa):
                worst = min(worst, a.slack)
                bad += not a.holds
                count += 1
    return SuiteResult("y1", count, bad, worst, time.perf_counter() - t0)


def suite_helstrom(samples: int = 200, seed: int = 0) -> SuiteResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    axes = bloch_hemisphere()
    worst, bad = math.inf, 0
    for k in range(samples):
        dim = 2 if k % 2 == 0 else 3
        p1 = float(rng.uniform())
        r1, r2 = _random_state(dim, rng), _random_state(dim, rng)
        value = criteria.helstrom(p1, r1, r2)
        g = criteria.guessing_probability(CqState(("0", "1"), [p1, 1.0 - p1], (r1, r2)))
        margin = 1e-7 - max(abs(g.lower - value), abs(g.upper - value))
        if dim == 2:
            margin = min(margin, 1e-4 - abs(bloch_sweep_success(p1, r1, r2, axes) - value))
        worst = min(worst, margin)
        bad += margin < 0
    return SuiteResult("helstrom", samples, bad, worst, time.perf_counter() - t0)


def pa_memories(n: int = 4, count: int = 6) -> list:
    """Eve memories with exactly ``n`` key bits from seeded attacked runs."""
    out = []
    for eve in (EveStrategy("intercept-resend"), EveStrategy("breidbart", intercept_prob=0.7)):
        found = 0
        for s in range(1000):
            try:
                run = run_bb84(SimConfig(n_raw=12, eve=eve, Q_tol=0.5, rng_seed=s, sample_fraction=0.25))
            except EmptyKey:
                continue
            if len(run.sifted_key) == n:
                out.append(run.eve_memory)
                found += 1
            if found == count:
                break
    return out


def suite_pa_monotone(samples: int = 200, seed: int = 0, n: int = 4) -> SuiteResult:
    """Exact check that hashing never makes the key harder to guess."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    memories = pa_memories(n)
    worst, bad, count = math.inf, 0, 0
    raw = [criteria.guessing_probability_exact(m) for m in memories]
    for l in range(1, n):
        for _ in range(samples):
            h = ToeplitzHash.from_rng(l, n, rng)
            for mem, p_raw in zip(memories, raw):
                p_hash = criteria.guessing_probability_exact(mem, key_map=h.hash_label)
                worst = min(worst, float(p_hash - p_raw))
                bad += p_hash < p_raw
                count += 1
    return SuiteResult("pa-monotone", count, bad, worst, time.perf_counter() - t0)


def toeplitz_collision_table(n: int = 3, l: int = 2) -> dict:
    """Collision probability of each distinct input pair over all ``2**(n+l-1)`` seeds."""
    seeds = list(itertools.product((0, 1), repeat=n + l - 1))
    inputs = list(itertools.product((0, 1), repeat=n))
    table = {}
    for x, y in itertools.combinations(inputs, 2):
        hits = sum(ToeplitzHash(l, n, s).apply(x) == ToeplitzHash(l, n, s).apply(y) for s in seeds)
        table[(x, y)] = hits / len(seeds)
    return table


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "fvdg": suite_fvdg,
    "y1": suite_guessing_bound,
    "helstrom": suite_helstrom,
    "pa-monotone": suite_pa_monotone,
}
DEFAULT_SAMPLES = {"fvdg": 1000, "y1": 50, "helstrom": 200, "pa-monotone": 200}


def run_suites(name: str, samples: int | None = None, seed: int = 0, jobs: int = 1) -> list[SuiteResult]:
    """Run one suite, or every suite for ``name == "all"``, in a fixed output order."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise UnknownSuite(name)

    def one(n):
        return SUITES[n](samples if samples is not None else DEFAULT_SAMPLES[n], seed)

    if jobs > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, names))
    return [one(n) for n in names]
