"""
Density operators and classical-quantum (cq) states.

A :class:`CqState` stores the ensemble ``{(p_x, ρ_E^x)}`` block by block; the
dense joint operator ``Σ_x p_x |x⟩⟨x| ⊗ ρ_E^x`` is only built on request by
:func:`cq_to_joint`. Key labels are bit strings written least significant
bit first, so ``"100"`` is the integer 1 and ``"001"`` is 4.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import DimensionCap, DimensionMismatch, NotState, OutOfRange

MAX_KEY_BITS = 12
PROB_ATOL = 1e-10


def _frozen(a) -> np.ndarray:
    m = np.array(a, dtype=complex)
    m.setflags(write=False)
    return m


def int_to_label(value: int, n: int) -> str:
    """Little-endian bit string of ``value`` with ``n`` bits."""
    return "".join(str((value >> i) & 1) for i in range(n))


def label_to_int(label: str) -> int:
    return sum(1 << i for i, c in enumerate(label) if c == "1")


def bits_to_label(bits: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def label_to_bits(label: str) -> tuple[int, ...]:
    return tuple(int(c) for c in label)


def all_labels(n: int) -> list[str]:
    """All ``2**n`` labels in increasing integer order."""
    return [int_to_label(v, n) for v in range(1 << n)]


@dataclass(frozen=True)
class DensityOperator:
    """A validated trace-one PSD matrix; the array is read-only."""

    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.check_state(self.matrix)
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @classmethod
    def pure(cls, vec) -> "DensityOperator":
        return cls(linalg.projector(vec))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)

    def to_json(self) -> dict:
        return linalg.matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, blob: dict) -> "DensityOperator":
        return cls(linalg.matrix_from_json(blob))


def _as_density(s) -> DensityOperator:
    return s if isinstance(s, DensityOperator) else DensityOperator(s)


@dataclass(frozen=True)
class CqState:
    """Classical key register correlated with a quantum memory.

    Attributes
    ----------
    labels : tuple of str
        Distinct key strings, all of the same bit length.
    probs : numpy.ndarray
        ``p_x`` for each label; non-negative and summing to one.
    states : tuple of DensityOperator
        ``ρ_E^x`` for each label, all of equal dimension.
    """

    labels: tuple
    probs: np.ndarray
    states: tuple

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if not labels:
            raise NotState("a cq state needs at least one label")
        n = len(labels[0])
        if any(len(x) != n or set(x) - {"0", "1"} for x in labels):
            raise NotState("labels must be bit strings of equal length")
        if len(set(labels)) != len(labels):
            raise NotState("labels must be distinct")
        if n > MAX_KEY_BITS:
            raise DimensionCap(f"key length {n} exceeds cap {MAX_KEY_BITS}")
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if probs.size != len(labels):
            raise DimensionMismatch(f"{probs.size} probabilities for {len(labels)} labels")
        if np.any(probs < -PROB_ATOL):
            raise NotState("negative probability")
        probs = np.clip(probs, 0.0, None)
        if abs(probs.sum() - 1.0) > PROB_ATOL:
            raise NotState(f"probabilities sum to {probs.sum()!r}")
        probs.setflags(write=False)
        states = tuple(_as_density(s) for s in self.states)
        if len(states) != len(labels):
            raise DimensionMismatch(f"{len(states)} states for {len(labels)} labels")
        if len({s.dim for s in states}) != 1:
            raise DimensionMismatch("conditional states differ in dimension")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "states", states)

    @property
    def key_bits(self) -> int:
        return len(self.labels[0])

    @property
    def dim_E(self) -> int:
        return self.states[0].dim

    def __len__(self) -> int:
        return len(self.labels)

    def weighted_blocks(self) -> list[np.ndarray]:
        """``p_x ρ_E^x`` for every label, in label order."""
        return [p * s.matrix for p, s in zip(self.probs, self.states)]

    def marginal_E(self) -> np.ndarray:
        return sum(self.weighted_blocks())

    def prob_of(self, label: str) -> float:
        try:
            return float(self.probs[self.labels.index(label)])
        except ValueError:
            return 0.0

    def with_label(self, label: str, state, prob: float = 0.0) -> "CqState":
        """Copy with one extra label; ``prob`` is taken from the first label's mass."""
        probs = list(self.probs)
        probs[0] -= prob
        return CqState(self.labels + (label,), probs + [prob], self.states + (_as_density(state),))

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "probs": [float(p) for p in self.probs],
            "states": [s.to_json() for s in self.states],
        }

    @classmethod
    def from_json(cls, blob) -> "CqState":
        if isinstance(blob, str):
            blob = json.loads(blob)
        return cls(
            tuple(blob["labels"]),
            blob["probs"],
            tuple(DensityOperator.from_json(s) for s in blob["states"]),
        )


def cq_to_joint(state: CqState) -> DensityOperator:
    """Dense operator ``Σ_x p_x |x⟩⟨x| ⊗ ρ_E^x`` on the full ``2**n``-value key register.

    Key value ``x`` owns rows ``k*dim_E`` to ``(k+1)*dim_E`` with
    ``k = label_to_int(x)``; absent labels leave zero blocks.
    """
    d = state.dim_E
    total = (1 << state.key_bits) * d
    linalg.check_dim(total)
    out = np.zeros((total, total), dtype=complex)
    for label, block in zip(state.labels, state.weighted_blocks()):
        k = label_to_int(label)
        out[k * d:(k + 1) * d, k * d:(k + 1) * d] = block
    return DensityOperator(out)


def ideal_cq_state(n: int, sigma_E) -> CqState:
    """Uniform ``n``-bit key independent of the memory state ``sigma_E``."""
    if n > MAX_KEY_BITS:
        raise DimensionCap(f"key length {n} exceeds cap {MAX_KEY_BITS}")
    sigma = _as_density(sigma_E)
    m = 1 << n
    return CqState(tuple(all_labels(n)), np.full(m, 1.0 / m), (sigma,) * m)


def ideal_state(n: int, sigma_E) -> DensityOperator:
    """Dense ``ω ⊗ σ_E`` with ``ω`` the uniform mixture over ``2**n`` key values."""
    if n > MAX_KEY_BITS:
        raise DimensionCap(f"key length {n} exceeds cap {MAX_KEY_BITS}")
    sigma = _as_density(sigma_E)
    linalg.check_dim((1 << n) * sigma.dim)
    omega = np.eye(1 << n) / (1 << n)
    return DensityOperator(linalg.tensor(omega, sigma.matrix))


def product_cq_state(factors: Sequence[CqState]) -> CqState:
    """Joint cq state of independent key segments; labels concatenate in order."""
    labels, probs, states = [""], [1.0], [np.ones((1, 1), dtype=complex)]
    for f in factors:
        nl, npb, ns = [], [], []
        for (la, pa, sa), (lb, pb, sb) in itertools.product(
            zip(labels, probs, states), zip(f.labels, f.probs, f.states)
        ):
            nl.append(la + lb)
            npb.append(pa * pb)
            ns.append(np.kron(sa, sb.matrix))
        labels, probs, states = nl, npb, ns
    total = sum(probs)
    return CqState(tuple(labels), np.asarray(probs) / total, tuple(states))


def random_cq_state(
    n: int,
    dim_E: int,
    rng: np.random.Generator,
    n_labels: int | None = None,
    rank: int | None = None,
) -> CqState:
    """Random cq state: Dirichlet(1) priors and Ginibre conditional states.

    ``n_labels`` below ``2**n`` draws a random subset of the key values;
    the rest carry zero probability implicitly.
    """
    m = 1 << n
    n_labels = m if n_labels is None else n_labels
    chosen = sorted(rng.choice(m, size=n_labels, replace=False))
    labels = tuple(int_to_label(int(v), n) for v in chosen)
    probs = rng.dirichlet(np.ones(n_labels))
    states = tuple(linalg.random_density(dim_E, rng, rank) for _ in chosen)
    return CqState(labels, probs, states)


@dataclass(frozen=True)
class PhaseErrorFamily:
    """One-bit AB key with bit-flip rate ``q`` and phase-error rate ``e``.

    Eve holds ``√(1−e)|0⟩ + (−1)^a √e|1⟩`` for Alice's bit ``a``; Bob's bit
    differs from Alice's with probability ``q``. The virtual X-basis state
    of Alice is ``σ_A = (1−e)|+⟩⟨+| + e|−⟩⟨−|``.
    """

    e: float
    q: float
    state_ab: CqState
    sigma_A: np.ndarray
    ideal: np.ndarray

    @property
    def eta_X(self) -> float:
        return self.e

    @property
    def eta_Z_conventional(self) -> float:
        return self.q

    @property
    def eta_Z_literal(self) -> float:
        return 1.0 - (1.0 - self.q) / 2.0


def phase_error_family(e: float, q: float) -> PhaseErrorFamily:
    if not (0.0 <= e <= 1.0 and 0.0 <= q <= 1.0):
        raise OutOfRange(f"e={e}, q={q} must lie in [0, 1]")
    labels, probs, states = [], [], []
    for a, b in itertools.product((0, 1), repeat=2):
        v = np.array([math.sqrt(1.0 - e), (-1) ** a * math.sqrt(e)], dtype=complex)
        labels.append(f"{a}{b}")
        probs.append(0.5 * (1.0 - q) if a == b else 0.5 * q)
        states.append(np.outer(v, v.conj()))
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    minus = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)
    sigma_a = (1.0 - e) * np.outer(plus, plus) + e * np.outer(minus, minus)
    return PhaseErrorFamily(e, q, CqState(tuple(labels), probs, tuple(states)), sigma_a, plus)
