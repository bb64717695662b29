"""
Finite-key lengths and rates.

Two families of quantities live here side by side:

* the standard trace-distance accounting: leftover-hash distance and the
  finite-key length as a function of the sifted length, tolerated QBER,
  fluctuation term and error-correction leakage, plus the phase/bit error
  length ``n − K_Z − K_X``;
* the whole-key uniformity accounting, where the level ``ε_F ≡ 2^(−λn)``
  fixes the uniformity rate ``λ`` and the final rate is what remains after
  subtracting leakage and authentication.

Probabilities that can underflow are carried as base-10 logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

from . import logdomain
from .criteria import DEFAULT_EXPONENT, markov_epsilon_f_log10
from .errors import OutOfRange

# Rounded figures quoted in the literature for the (n = 10^4, ε_sec = 10^-20)
# regime, reported next to the exact values.
ROUNDED_REFERENCE = {
    (10_000, -20.0): {"p_suc_bound_log10": -7.0, "ideal_log10": -3000.0, "l_uniform": 30},
}

LENGTH_FOOTER = (
    "finite-key length read as floor(n*q - n*h2(Q_tol + mu(eps)) - 2*log2(1/(2*eps)) "
    "- leak_EC - log2(2/eps_cor)), clamped at 0"
)


def binary_entropy(p: float) -> float:
    """``h₂(p)`` in bits; 0 at the endpoints."""
    if p <= 0.0 or p >= 1.0:
        if p < 0.0 or p > 1.0:
            raise OutOfRange(f"binary entropy argument {p} outside [0, 1]")
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def chernoff_mu(n: int) -> Callable[[float], float]:
    """Default fluctuation term ``μ(ε) = √(ln(2/ε) / (2n))`` (Hoeffding-style).

    Any callable ``ε -> μ`` can be used in its place.
    """

    def mu(eps: float) -> float:
        return math.sqrt(math.log(2.0 / eps) / (2.0 * n))

    return mu


def _check_unit_open(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise OutOfRange(f"{name}={value} outside (0, 1)")


@dataclass(frozen=True)
class KeyRateParams:
    """Inputs of the finite-key length.

    ``mu`` defaults to :func:`chernoff_mu` for the given ``n``;
    ``h_min_smooth`` is only needed for the leftover-hash distance.
    """

    n: int
    q: float
    Q_tol: float
    epsilon: float
    epsilon_cor: float
    leak_EC: float = 0.0
    epsilon_prime: float = 1e-10
    auth_bits: float = 0.0
    h_min_smooth: float | None = None
    mu: Callable[[float], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise OutOfRange(f"n={self.n} must be positive")
        for name in ("epsilon", "epsilon_cor", "epsilon_prime"):
            _check_unit_open(name, getattr(self, name))
        if not 0.0 <= self.Q_tol < 0.5:
            raise OutOfRange(f"Q_tol={self.Q_tol} outside [0, 0.5)")
        for name in ("leak_EC", "auth_bits"):
            if getattr(self, name) < 0:
                raise OutOfRange(f"{name} must be non-negative")
        if self.q < 0:
            raise OutOfRange(f"q={self.q} must be non-negative")

    def mu_value(self) -> float:
        fn = self.mu if self.mu is not None else chernoff_mu(self.n)
        return float(fn(self.epsilon))


class LeftoverHash(NamedTuple):
    delta: float
    log2_hash_term: float
    vacuous: bool


def leftover_hash_delta(l: float, h_min_smooth: float, epsilon_prime: float) -> LeftoverHash:
    """Distance ``Δ = ½ √(2^(l − H)) + ε′`` of an ``l``-bit hashed key from ideal.

    ``log2_hash_term`` is ``log2`` of the first summand; ``vacuous`` flags
    ``Δ > 1``, beyond any possible trace distance.
    """
    if l < 0:
        raise OutOfRange(f"l={l} must be non-negative")
    if not 0.0 <= epsilon_prime < 1.0:
        raise OutOfRange(f"epsilon_prime={epsilon_prime} outside [0, 1)")
    log2_term = 0.5 * (l - h_min_smooth) - 1.0
    delta = math.inf if log2_term > 1000 else 2.0 ** log2_term + epsilon_prime
    return LeftoverHash(delta, log2_term, delta > 1.0)


def best_leftover_hash_delta(
    l: float, h_min_smooth: Callable[[float], float], epsilon_primes: Iterable[float]
) -> tuple[float, LeftoverHash]:
    """Minimise Δ over a grid of smoothing parameters; ``h_min_smooth`` maps ε′ to H."""
    best = None
    for ep in epsilon_primes:
        res = leftover_hash_delta(l, h_min_smooth(ep), ep)
        if best is None or res.delta < best[1].delta:
            best = (ep, res)
    if best is None:
        raise OutOfRange("empty smoothing grid")
    return best


class FiniteKeyLength(NamedTuple):
    bits: int
    value: float
    entropy_saturated: bool


def tomamichel_length(params: KeyRateParams) -> FiniteKeyLength:
    """Finite-key length for an ε-secret, ε_cor-correct key.

    ``floor(n q − n h₂(Q_tol + μ(ε)) − 2 log2(1/(2ε)) − leak_EC − log2(2/ε_cor))``
    clamped at zero. When ``Q_tol + μ(ε) ≥ ½`` no key is possible and the
    result is zero with ``entropy_saturated`` set.

    Raises
    ------
    OutOfRange
        If ``Q_tol + μ(ε) ≥ 1``.
    """
    arg = params.Q_tol + params.mu_value()
    if arg >= 1.0:
        raise OutOfRange(f"entropy argument Q_tol + mu = {arg} >= 1")
    if arg >= 0.5:
        return FiniteKeyLength(0, -math.inf, True)
    n = params.n
    value = (
        n * params.q
        - n * binary_entropy(arg)
        - 2.0 * math.log2(1.0 / (2.0 * params.epsilon))
        - params.leak_EC
        - math.log2(2.0 / params.epsilon_cor)
    )
    return FiniteKeyLength(max(0, math.floor(value)), value, False)


class UniformityRate(NamedTuple):
    lam: float
    l_uniform: int
    log2_epsilon_F: float


def uniformity_rate(
    epsilon_F: float | None = None, n: int = 1, *, log10_epsilon_F: float | None = None
) -> UniformityRate:
    """Rate ``λ = −log2(ε_F)/n`` and length ``floor(−log2 ε_F)`` of a key with ``P_suc ≤ ε_F = 2^(−λn)``.

    Give ``ε_F`` directly or as ``log10_epsilon_F`` when it underflows.
    """
    if n < 1:
        raise OutOfRange(f"n={n} must be positive")
    if log10_epsilon_F is None:
        if epsilon_F is None or not 0.0 < epsilon_F <= 1.0:
            raise OutOfRange(f"epsilon_F={epsilon_F} outside (0, 1]")
        log10_epsilon_F = math.log10(epsilon_F)
    if log10_epsilon_F > 0 or math.isnan(log10_epsilon_F):
        raise OutOfRange(f"epsilon_F=10^{log10_epsilon_F} outside (0, 1]")
    bits = -logdomain.log2_from_log10(log10_epsilon_F)
    # absorb log10 round-trip error so that ε_F = 2^-k gives exactly k bits
    l_uniform = math.floor(bits + 1e-9)
    return UniformityRate(bits / n, l_uniform, -bits)


def koashi_length(n: int, K_Z: float, K_X: float) -> int:
    """``max(0, n − K_Z − K_X)``: bit- and phase-error correction costs removed."""
    return max(0, math.floor(n - K_Z - K_X))


def final_rate(l_uniform: float, leak_EC: float, auth_bits: float, n: int) -> float:
    """Rate left after paying for error-correction leakage and authentication."""
    if n < 1:
        raise OutOfRange(f"n={n} must be positive")
    return max(0.0, l_uniform - leak_EC - auth_bits) / n


@dataclass(frozen=True)
class RateReport:
    n: int
    l_tomamichel: int
    l_koashi: int
    lam: float
    l_uniform: int
    R_F: float
    delta_lhl: float
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "l_tomamichel": self.l_tomamichel,
            "l_koashi": self.l_koashi,
            "lambda": self.lam,
            "l_uniform": self.l_uniform,
            "R_F": self.R_F,
            "delta_lhl": self.delta_lhl,
            "notes": list(self.notes),
        }


COLUMNS = (
    "n",
    "eps_sec_log10",
    "eps_F_log10",
    "p_suc_bound_log10",
    "ideal_log10",
    "lambda",
    "l_uniform",
    "R_F",
)


@dataclass(frozen=True)
class ReevaluationRow:
    """One claim re-read as a whole-key guessing statement.

    ``p_suc_bound_log10`` is the bound implied by the Markov level;
    ``ideal_log10`` is ``log10 2^-n``, what a perfectly uniform key gives.
    """

    n: int
    eps_sec_log10: float
    eps_F_log10: float
    p_suc_bound_log10: float
    ideal_log10: float
    lam: float
    l_uniform: int
    R_F: float
    leak_EC: float = 0.0
    auth_bits: float = 0.0
    label: str = ""
    reference: dict | None = None

    def values(self) -> dict:
        return {
            "n": self.n,
            "eps_sec_log10": self.eps_sec_log10,
            "eps_F_log10": self.eps_F_log10,
            "p_suc_bound_log10": self.p_suc_bound_log10,
            "ideal_log10": self.ideal_log10,
            "lambda": self.lam,
            "l_uniform": self.l_uniform,
            "R_F": self.R_F,
        }

    def display(self) -> dict:
        return {
            "eps_sec": logdomain.format_log10(self.eps_sec_log10),
            "eps_F": logdomain.format_log10(self.eps_F_log10),
            "p_suc_bound": logdomain.format_log10(self.p_suc_bound_log10),
            "ideal": logdomain.format_log10(self.ideal_log10),
        }

    def footnotes(self) -> list[str]:
        notes = []
        if self.l_uniform > self.n:
            notes.append(
                f"{self.label or 'row'}: l_uniform {self.l_uniform} exceeds n={self.n}; "
                "the claimed level is below what any n-bit key can reach"
            )
        if not self.reference:
            return notes
        ref = self.reference
        for key, exact in (
            ("p_suc_bound_log10", self.p_suc_bound_log10),
            ("ideal_log10", self.ideal_log10),
        ):
            notes.append(
                f"{self.label or 'row'}: {key} exact {exact:.2f}, rounded reference {ref[key]:.0f} "
                f"(same order of magnitude: {abs(exact - ref[key]) < max(1.0, 0.01 * abs(ref[key]))})"
            )
        notes.append(
            f"{self.label or 'row'}: l_uniform exact {self.l_uniform} bits, rounded reference about "
            f"{ref['l_uniform']} bits"
        )
        return notes


def reevaluate(
    n: int,
    log10_epsilon_sec: float,
    leak_EC: float = 0.0,
    auth_bits: float = 0.0,
    label: str = "",
    exponent: float = DEFAULT_EXPONENT,
) -> ReevaluationRow:
    """Table row for a claimed ``(n, ε_sec)``, everything in the log domain."""
    if n < 1:
        raise OutOfRange(f"n={n} must be positive")
    if leak_EC < 0 or auth_bits < 0:
        raise OutOfRange("leak_EC and auth_bits must be non-negative")
    eps_f = markov_epsilon_f_log10(log10_epsilon_sec, exponent)
    rate = uniformity_rate(n=n, log10_epsilon_F=eps_f)
    ref = ROUNDED_REFERENCE.get((int(n), round(log10_epsilon_sec, 9)))
    return ReevaluationRow(
        n=int(n),
        eps_sec_log10=log10_epsilon_sec,
        eps_F_log10=eps_f,
        p_suc_bound_log10=eps_f,
        ideal_log10=-n * logdomain.LOG10_2,
        lam=rate.lam,
        l_uniform=rate.l_uniform,
        R_F=final_rate(rate.l_uniform, leak_EC, auth_bits, n),
        leak_EC=leak_EC,
        auth_bits=auth_bits,
        label=label,
        reference=ref,
    )


def reevaluation_table(
    claims: Sequence[tuple], exponent: float = DEFAULT_EXPONENT
) -> list[ReevaluationRow]:
    """Rows for ``(n, epsilon_sec, leak_EC, auth_bits)`` tuples, in input order.

    ``epsilon_sec`` may be a float, a numeric string (``"1e-400"`` is fine)
    or a :class:`~decimal.Decimal`.
    """
    rows = []
    for n, eps, leak, auth in claims:
        rows.append(reevaluate(int(n), logdomain.log10_of(eps), leak, auth, exponent=exponent))
    return rows
