"""
Toy BB84 executions with an exactly known eavesdropper memory.

A run draws Alice's bits and bases, Bob's bases and the attack from a single
``numpy`` PCG64 stream seeded by ``SimConfig.rng_seed``, sifts on basis
agreement, discloses an evenly interleaved estimation sample, decides abort
against ``Q_tol``, books error-correction leakage and hashes the remaining
key with a Toeplitz matrix drawn from the same stream.

Eve's memory is the classical record of her measurements, one factor per
key position, embedded as orthogonal (diagonal) states:

* ``intercept-resend``: a position where Eve measured in Alice's basis holds
  ``|a⟩⟨a|``; every other position holds nothing useful and is dropped.
* ``breidbart``: Eve measures in the basis halfway between Z and X, so each
  attacked position gives ``diag(cos²(π/8), sin²(π/8))`` or its swap.
* ``correlated-flip``: Eve flips Bob's bits along a Markov chain and learns
  nothing about Alice's bits.

Monte Carlo trials use seeds ``SeedSequence(rng_seed, spawn_key=(i,))`` for
trial ``i``, so results do not depend on scheduling.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import criteria, keyrate
from .errors import ConfigInvalid, DimensionCap, DimensionMismatch, EmptyKey, OutOfRange
from .states import CqState, all_labels, bits_to_label, label_to_bits, product_cq_state

MAX_RAW_EXACT = 24
MAX_RAW_MONTE_CARLO = 1 << 20
MAX_MEMORY_BITS = 6
EVE_STRATEGIES = ("none", "intercept-resend", "breidbart", "correlated-flip")

_COS2 = math.cos(math.pi / 8) ** 2
_SIN2 = math.sin(math.pi / 8) ** 2


@dataclass(frozen=True)
class EveStrategy:
    """Attack model.

    ``intercept_prob`` is the fraction of positions attacked (intercept-resend
    and breidbart); ``basis_prob`` is the chance Eve measures in Z for
    intercept-resend; ``flip_prob`` and ``correlation_length`` define the
    stationary flip rate and mean run length of correlated-flip.
    """

    name: str = "none"
    intercept_prob: float = 1.0
    basis_prob: float = 0.5
    flip_prob: float = 0.0
    correlation_length: float = 1.0

    def validate(self) -> None:
        if self.name not in EVE_STRATEGIES:
            raise ConfigInvalid(f"unknown eve strategy {self.name!r}")
        for key in ("intercept_prob", "basis_prob", "flip_prob"):
            v = getattr(self, key)
            if not 0.0 <= v <= 1.0:
                raise ConfigInvalid(f"{key}={v} outside [0, 1]")
        if self.correlation_length < 1.0:
            raise ConfigInvalid("correlation_length must be at least 1")


@dataclass(frozen=True)
class SimConfig:
    n_raw: int = 16
    eve: EveStrategy = field(default_factory=EveStrategy)
    channel_flip_prob: float = 0.0
    Q_tol: float = 0.11
    sample_fraction: float = 0.25
    rng_seed: int = 0
    pa_output_bits: int = 2
    ec_efficiency: float = 1.2
    auth_bits: float = 0.0
    q: float = 1.0
    epsilon: float = 1e-10
    epsilon_cor: float = 1e-15

    def validate(self, exact: bool = True) -> None:
        """Range checks; ``exact`` applies the raw-length cap of exact memory analysis."""
        cap = MAX_RAW_EXACT if exact else MAX_RAW_MONTE_CARLO
        if self.n_raw < 1:
            raise ConfigInvalid("n_raw must be positive")
        if self.n_raw > cap:
            raise DimensionCap(f"n_raw={self.n_raw} exceeds cap {cap}")
        self.eve.validate()
        if not 0.0 <= self.channel_flip_prob < 0.5:
            raise ConfigInvalid("channel_flip_prob outside [0, 0.5)")
        if not 0.0 <= self.Q_tol <= 0.5:
            raise ConfigInvalid("Q_tol outside [0, 0.5]")
        if not 0.0 <= self.sample_fraction <= 1.0:
            raise ConfigInvalid("sample_fraction outside [0, 1]")
        if not 0 <= self.rng_seed < 1 << 64:
            raise ConfigInvalid("rng_seed must be a 64-bit unsigned integer")
        if self.pa_output_bits < 0:
            raise ConfigInvalid("pa_output_bits must be non-negative")
        if self.ec_efficiency < 1.0:
            raise ConfigInvalid("ec_efficiency below 1 is not achievable")
        if self.auth_bits < 0:
            raise ConfigInvalid("auth_bits must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        eve = data.pop("eve", data.pop("eve_strategy", {}))
        if isinstance(eve, str):
            eve = {"name": eve}
        known = set(cls.__dataclass_fields__) - {"eve"}
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(eve=EveStrategy(**eve), **data)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            try:
                data = tomllib.loads(text)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigInvalid(f"{path}: {exc}") from exc
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigInvalid(f"{path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class ToeplitzHash:
    """GF(2) Toeplitz matrix with ``entry(i, j) = seed[i − j + cols − 1]``."""

    rows: int
    cols: int
    seed_bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) & 1 for b in self.seed_bits)
        need = self.rows + self.cols - 1 if self.rows and self.cols else 0
        if len(bits) != need:
            raise DimensionMismatch(f"need {need} seed bits for {self.rows}x{self.cols}, got {len(bits)}")
        object.__setattr__(self, "seed_bits", bits)

    @classmethod
    def from_rng(cls, rows: int, cols: int, rng: np.random.Generator) -> "ToeplitzHash":
        need = rows + cols - 1 if rows and cols else 0
        return cls(rows, cols, tuple(int(b) for b in rng.integers(0, 2, size=need)))

    @classmethod
    def identity(cls, n: int) -> "ToeplitzHash":
        seed = [0] * (2 * n - 1)
        seed[n - 1] = 1
        return cls(n, n, tuple(seed))

    def matrix(self) -> np.ndarray:
        i = np.arange(self.rows)[:, None]
        j = np.arange(self.cols)[None, :]
        seed = np.asarray(self.seed_bits, dtype=np.int64)
        if seed.size == 0:
            return np.zeros((self.rows, self.cols), dtype=np.int64)
        return seed[i - j + self.cols - 1]

    def apply(self, bits) -> tuple:
        x = np.asarray(bits, dtype=np.int64).reshape(-1)
        if x.size != self.cols:
            raise DimensionMismatch(f"hash expects {self.cols} bits, got {x.size}")
        return tuple(int(b) for b in (self.matrix() @ x) % 2)

    def hash_label(self, label: str) -> str:
        return bits_to_label(self.apply(label_to_bits(label)))

    def to_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "seed_bits": list(self.seed_bits)}


def hash_cq_state(state: CqState, toeplitz: ToeplitzHash) -> CqState:
    """Cq state of the hashed key: weights ``p_x ρ_x`` summed over each preimage.

    Outputs without a preimage get zero probability and the maximally mixed
    memory state.
    """
    if toeplitz.cols != state.key_bits:
        raise DimensionMismatch(f"hash takes {toeplitz.cols} bits, key has {state.key_bits}")
    dim = state.dim_E
    out_labels = all_labels(toeplitz.rows)
    weights = {lab: np.zeros((dim, dim), dtype=complex) for lab in out_labels}
    for label, block in zip(state.labels, state.weighted_blocks()):
        weights[toeplitz.hash_label(label)] += block
    probs, states = [], []
    for lab in out_labels:
        p = float(np.trace(weights[lab]).real)
        probs.append(p)
        states.append(weights[lab] / p if p > 0 else np.eye(dim) / dim)
    probs = np.asarray(probs)
    return CqState(tuple(out_labels), probs / probs.sum(), tuple(states))


def _trivial_factor() -> CqState:
    return CqState(("0", "1"), [0.5, 0.5], (np.ones((1, 1)), np.ones((1, 1))))


def _copy_factor() -> CqState:
    return CqState(("0", "1"), [0.5, 0.5], (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))


def _breidbart_factor() -> CqState:
    return CqState(("0", "1"), [0.5, 0.5], (np.diag([_COS2, _SIN2]), np.diag([_SIN2, _COS2])))


_FACTORS = {"trivial": _trivial_factor, "copy": _copy_factor, "breidbart": _breidbart_factor}


@dataclass(frozen=True)
class ProtocolRun:
    """Everything one execution produced.

    ``memory_kinds[k]`` names the factor of Eve's memory attached to key bit
    ``k`` (``"trivial"``, ``"copy"`` or ``"breidbart"``); :attr:`eve_memory`
    materialises the joint cq state over all ``2**len(sifted_key)`` keys.
    """

    config: SimConfig
    raw_bits_alice: tuple
    bases_alice: tuple
    bases_bob: tuple
    raw_bits_bob: tuple
    sample_positions: tuple
    key_positions: tuple
    sifted_key: tuple
    bob_key: tuple
    qber_estimate: float
    aborted: bool
    leak_EC: int
    memory_kinds: tuple
    hash: ToeplitzHash
    final_key: tuple
    transcript: tuple

    def memory_factors(self) -> list[CqState]:
        return [_FACTORS[k]() for k in self.memory_kinds]

    @property
    def eve_memory(self) -> CqState:
        if len(self.sifted_key) > MAX_MEMORY_BITS:
            raise DimensionCap(
                f"exact memory needs at most {MAX_MEMORY_BITS} key bits, run has {len(self.sifted_key)}"
            )
        return product_cq_state(self.memory_factors())

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "raw_bits_alice": list(self.raw_bits_alice),
            "bases_alice": list(self.bases_alice),
            "bases_bob": list(self.bases_bob),
            "raw_bits_bob": list(self.raw_bits_bob),
            "sample_positions": list(self.sample_positions),
            "key_positions": list(self.key_positions),
            "sifted_key": list(self.sifted_key),
            "bob_key": list(self.bob_key),
            "qber_estimate": self.qber_estimate,
            "aborted": self.aborted,
            "leak_EC": self.leak_EC,
            "eve_memory": {
                "model": "product of per-bit classical records",
                "factors": list(self.memory_kinds),
            },
            "hash": self.hash.to_dict(),
            "final_key": list(self.final_key),
        }


class _Transmission(NamedTuple):
    alice: np.ndarray
    a_basis: np.ndarray
    b_basis: np.ndarray
    bob: np.ndarray
    kinds: np.ndarray
    attacked: int


def _flip_chain(n: int, p: float, length: float, rng: np.random.Generator) -> np.ndarray:
    fresh = rng.random(n) < p
    redraw = rng.random(n) < 1.0 / length
    out = np.empty(n, dtype=bool)
    state = bool(fresh[0]) if n else False
    for i in range(n):
        if i == 0 or redraw[i]:
            state = bool(fresh[i])
        out[i] = state
    return out


def _transmit(config: SimConfig, rng: np.random.Generator) -> _Transmission:
    # Draw order is fixed so a seed reproduces a run whatever the strategy.
    n = config.n_raw
    eve = config.eve
    alice = rng.integers(0, 2, size=n)
    a_basis = rng.integers(0, 2, size=n)
    b_basis = rng.integers(0, 2, size=n)
    attack_u = rng.random(n)
    eve_basis_u = rng.random(n)
    eve_coin = rng.integers(0, 2, size=n)
    bob_coin = rng.integers(0, 2, size=n)
    err1 = rng.random(n)
    err2 = rng.random(n)
    channel = rng.random(n) < config.channel_flip_prob

    kinds = np.array(["trivial"] * n, dtype=object)
    same = b_basis == a_basis
    bob = np.where(same, alice, bob_coin)
    attacked = np.zeros(n, dtype=bool)

    if eve.name == "intercept-resend":
        attacked = attack_u < eve.intercept_prob
        e_basis = np.where(eve_basis_u < eve.basis_prob, 0, 1)
        e_bit = np.where(e_basis == a_basis, alice, eve_coin)
        bob_attacked = np.where(b_basis == e_basis, e_bit, bob_coin)
        bob = np.where(attacked, bob_attacked, bob)
        kinds[attacked & (e_basis == a_basis)] = "copy"
    elif eve.name == "breidbart":
        attacked = attack_u < eve.intercept_prob
        y = alice ^ (err1 < _SIN2)
        bob_attacked = y ^ (err2 < _SIN2)
        bob = np.where(attacked, bob_attacked, bob)
        kinds[attacked] = "breidbart"
    elif eve.name == "correlated-flip":
        flips = _flip_chain(n, eve.flip_prob, eve.correlation_length, rng)
        bob = bob ^ flips
        attacked = flips

    bob = bob ^ channel
    return _Transmission(alice, a_basis, b_basis, bob, kinds, int(attacked.sum()))


def _sample_indices(s: int, fraction: float) -> list[int]:
    m = int(round(fraction * s))
    return sorted({(k * s) // m for k in range(m)}) if m else []


def _sift(config: SimConfig, tx: _Transmission):
    sifted = np.nonzero(tx.a_basis == tx.b_basis)[0]
    picks = set(_sample_indices(len(sifted), config.sample_fraction))
    sample = [int(p) for k, p in enumerate(sifted) if k in picks]
    key = [int(p) for k, p in enumerate(sifted) if k not in picks]
    errors = int(np.sum(tx.alice[sample] != tx.bob[sample])) if sample else 0
    qber = errors / len(sample) if sample else 0.0
    return sifted, sample, key, errors, qber


def run_bb84(config: SimConfig) -> ProtocolRun:
    """Execute one protocol run; identical configs give identical runs.

    Raises
    ------
    ConfigInvalid, DimensionCap
        On invalid parameters or ``n_raw`` above :data:`MAX_RAW_EXACT`.
    EmptyKey
        If sifting and sampling leave no key bits.
    """
    config.validate(exact=True)
    rng = np.random.Generator(np.random.PCG64(config.rng_seed))
    tx = _transmit(config, rng)
    sifted, sample, key_pos, errors, qber = _sift(config, tx)
    log = [
        f"prepare: n_raw={config.n_raw} seed={config.rng_seed}",
        f"transmit: eve={config.eve.name} attacked={tx.attacked} channel_flip={config.channel_flip_prob}",
        f"sift: agreed={len(sifted)}",
        f"estimate: sample={len(sample)} errors={errors} qber={qber:.6f}",
    ]
    if not key_pos:
        raise EmptyKey(f"no key bits left after sifting {len(sifted)} and sampling {len(sample)}")
    aborted = qber > config.Q_tol
    log.append(f"decide: aborted={aborted} Q_tol={config.Q_tol}")
    key = tuple(int(tx.alice[p]) for p in key_pos)
    bob_key = tuple(int(tx.bob[p]) for p in key_pos)
    leak = math.ceil(config.ec_efficiency * len(key) * keyrate.binary_entropy(qber))
    log.append(f"reconcile: key_bits={len(key)} leak_EC={leak}")
    rows = min(config.pa_output_bits, len(key))
    toeplitz = ToeplitzHash.from_rng(rows, len(key), rng)
    final = () if aborted else toeplitz.apply(key)
    if rows < config.pa_output_bits:
        log.append(f"amplify: requested {config.pa_output_bits} bits, clamped to {rows}")
    log.append(f"amplify: output_bits={rows} final={'aborted' if aborted else bits_to_label(final)}")
    return ProtocolRun(
        config=config,
        raw_bits_alice=tuple(int(b) for b in tx.alice),
        bases_alice=tuple(int(b) for b in tx.a_basis),
        bases_bob=tuple(int(b) for b in tx.b_basis),
        raw_bits_bob=tuple(int(b) for b in tx.bob),
        sample_positions=tuple(sample),
        key_positions=tuple(key_pos),
        sifted_key=key,
        bob_key=bob_key,
        qber_estimate=qber,
        aborted=aborted,
        leak_EC=leak,
        memory_kinds=tuple(str(tx.kinds[p]) for p in key_pos),
        hash=toeplitz,
        final_key=final,
        transcript=tuple(log),
    )


class PrivacyAmplification(NamedTuple):
    final_key: tuple
    hashed_memory: CqState


def apply_privacy_amplification(run: ProtocolRun, toeplitz: ToeplitzHash) -> PrivacyAmplification:
    """Hash the sifted key and Eve's memory with the same Toeplitz matrix."""
    if toeplitz.cols != len(run.sifted_key):
        raise DimensionMismatch(f"hash takes {toeplitz.cols} bits, key has {len(run.sifted_key)}")
    return PrivacyAmplification(toeplitz.apply(run.sifted_key), hash_cq_state(run.eve_memory, toeplitz))


def trial_seed(seed: int, index: int) -> int:
    """64-bit seed of Monte Carlo trial ``index``, derived with ``numpy.random.SeedSequence``."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


class AbortEstimate(NamedTuple):
    p_abort: float
    ci_halfwidth: float
    trials: int
    aborts: int
    mean_qber: float
    min_sample: int


def _abort_trial(config: SimConfig, index: int) -> tuple[bool, float, int]:
    rng = np.random.Generator(np.random.PCG64(trial_seed(config.rng_seed, index)))
    tx = _transmit(config, rng)
    _, sample, _, _, qber = _sift(config, tx)
    return qber > config.Q_tol, qber, len(sample)


def wilson_halfwidth(successes: int, trials: int, z: float = 1.959963984540054) -> float:
    """Half width of the Wilson score interval (95% by default)."""
    p = successes / trials
    denom = 1.0 + z * z / trials
    return z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom


def estimate_p_abort(config: SimConfig, trials: int, jobs: int = 1) -> AbortEstimate:
    """Monte Carlo abort frequency over ``trials`` independent runs.

    Only transmission, sifting and estimation are simulated, so ``n_raw``
    may go up to :data:`MAX_RAW_MONTE_CARLO`. Runs whose estimation sample is
    empty count as accepted; ``min_sample`` is the smallest sample seen.
    """
    if trials < 100:
        raise ConfigInvalid("estimate_p_abort needs at least 100 trials")
    config.validate(exact=False)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda i: _abort_trial(config, i), range(trials)))
    else:
        results = [_abort_trial(config, i) for i in range(trials)]
    aborts = sum(1 for a, _, _ in results if a)
    sampled = [q for _, q, m in results if m > 0]
    mean_qber = float(np.mean(sampled)) if sampled else 0.0
    min_sample = min(m for _, _, m in results)
    return AbortEstimate(aborts / trials, wilson_halfwidth(aborts, trials), trials, aborts, mean_qber, min_sample)


class PipelineResult(NamedTuple):
    run: ProtocolRun
    pre_pa: criteria.SecurityAssessment
    post_pa: criteria.SecurityAssessment
    rates: keyrate.RateReport
    hashed_memory: CqState


def rate_report_for_run(run: ProtocolRun, pre: criteria.SecurityAssessment) -> keyrate.RateReport:
    """Rate accounting of a run, using the certified guessing bound as ``ε_F``."""
    cfg = run.config
    n = len(run.sifted_key)
    notes = [keyrate.LENGTH_FOOTER, "epsilon_F taken as the certified pre-hash guessing bound"]
    l_tom_bits = 0
    if cfg.Q_tol >= 0.5:
        notes.append("Q_tol >= 1/2: no finite key")
    else:
        params = keyrate.KeyRateParams(
            n=n,
            q=cfg.q,
            Q_tol=cfg.Q_tol,
            epsilon=cfg.epsilon,
            epsilon_cor=cfg.epsilon_cor,
            leak_EC=run.leak_EC,
            auth_bits=cfg.auth_bits,
        )
        try:
            l_tom = keyrate.tomamichel_length(params)
            l_tom_bits = l_tom.bits
            if l_tom.entropy_saturated:
                notes.append("Q_tol + mu >= 1/2: no finite key")
        except OutOfRange:
            notes.append("Q_tol + mu >= 1: finite-key length undefined, reported as 0")
    phase_cost = math.ceil(n * keyrate.binary_entropy(run.qber_estimate))
    uni = keyrate.uniformity_rate(max(pre.p_guess_upper, 2.0 ** -n), n)
    h_min = -math.log2(pre.p_guess_upper)
    lhl = keyrate.leftover_hash_delta(run.hash.rows, h_min, 0.0)
    return keyrate.RateReport(
        n=n,
        l_tomamichel=l_tom_bits,
        l_koashi=keyrate.koashi_length(n, run.leak_EC, phase_cost),
        lam=uni.lam,
        l_uniform=uni.l_uniform,
        R_F=keyrate.final_rate(uni.l_uniform, run.leak_EC, cfg.auth_bits, n),
        delta_lhl=lhl.delta,
        notes=tuple(notes),
    )


def full_pipeline_assessment(config: SimConfig) -> PipelineResult:
    """Run once and assess the key before and after hashing.

    Hashing is analysed even when the run aborts, so both assessments are
    always present; ``run.final_key`` is empty in that case.
    """
    run = run_bb84(config)
    if len(run.sifted_key) > MAX_MEMORY_BITS:
        raise DimensionCap(
            f"exact assessment needs at most {MAX_MEMORY_BITS} key bits, run has {len(run.sifted_key)}"
        )
    memory = run.eve_memory
    pre = criteria.check_guessing_bound(memory)
    hashed = hash_cq_state(memory, run.hash)
    post = criteria.check_guessing_bound(hashed)
    return PipelineResult(run, pre, post, rate_report_for_run(run, pre), hashed)
