"""
Security criteria on cq states.

This module evaluates, for a key register correlated with an eavesdropper's
memory:

* the trace distance to the ideal key, ``min_σ ½‖ρ_SE − ω ⊗ σ‖₁``;
* two-state discrimination (Helstrom) and whole-key guessing probability,
  each returned with an explicit measurement (lower bound) and a dual
  certificate (upper bound);
* the guessing bound ``P_guess ≤ 2^-n + d`` and the cube-root Markov level;
* the phase-error / bit-error quantities of the Koashi-style analysis and
  the Fuchs–van de Graaf sandwich.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from . import linalg
from .errors import (
    CertificateGap,
    DimensionCap,
    DimensionMismatch,
    NegativeProbability,
    NonConvergence,
    OutOfRange,
)
from .states import CqState, DensityOperator, label_to_int

MAX_GUESS_LABELS = 64
MAX_GUESS_DIM = 64
GAP_TOL = 1e-5
DEFAULT_EXPONENT = 1.0 / 3.0

EXACT_MIN = "exact-min"
REDUCED_SEED = "reduced-seed"
_D_MODE_NAMES = {EXACT_MIN: "exact-min", REDUCED_SEED: "reduced-state-upper-bound"}


# ---------------------------------------------------------------------------
# helpers


def _stack(state: CqState) -> np.ndarray:
    return np.stack(state.weighted_blocks())


def _herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2).conj())


def _project_to_simplex(w: np.ndarray) -> np.ndarray:
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, w.size + 1)
    r = np.nonzero(u - (css - 1.0) / k > 0)[0][-1]
    return np.clip(w - (css[r] - 1.0) / (r + 1), 0.0, None)


def _project_to_states(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(_herm(a))
    return (v * _project_to_simplex(w)) @ v.conj().T


def _diagonal_basis(blocks: np.ndarray, atol: float = 1e-12) -> np.ndarray | None:
    """A unitary that diagonalises every block simultaneously, or ``None``."""
    d = blocks.shape[1]
    scale = max(1e-300, float(np.max(np.abs(blocks))))
    off = blocks - blocks * np.eye(d)
    if np.max(np.abs(off)) <= atol * scale:
        return np.eye(d, dtype=complex)
    coeffs = 1.0 / (np.arange(len(blocks)) + math.sqrt(2.0))
    _, v = np.linalg.eigh(np.tensordot(coeffs, blocks, axes=1))
    rot = v.conj().T @ blocks @ v
    off = rot - rot * np.eye(d)
    if np.max(np.abs(off)) <= 1e-10 * scale:
        return v
    return None


def _diagonals(blocks: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """``⟨e|B_x|e⟩`` for each block, shape ``(labels, dim)``."""
    return np.real(np.einsum("ie,xij,je->xe", basis.conj(), blocks, basis))


# ---------------------------------------------------------------------------
# distance to the ideal key


class IdealDistance(NamedTuple):
    d: float
    sigma_star: np.ndarray
    mode: str
    converged: bool
    iterations: int


def distance_objective(state: CqState, sigma) -> float:
    """``½‖ρ_SE − ω ⊗ σ‖₁`` for a candidate memory state ``sigma``.

    Key values absent from ``state.labels`` contribute ``‖σ/M‖₁ = 1/M`` each.
    """
    m = 1 << state.key_bits
    sig = np.asarray(sigma, dtype=complex)
    w = np.linalg.eigvalsh(_herm(_stack(state) - sig / m))
    return float(0.5 * np.abs(w).sum() + 0.5 * (m - len(state)) / m)


def ideal_certificate(state: CqState, sigma) -> np.ndarray:
    """Dual-feasible operator ``σ/M + Σ_x (p_x ρ_x − σ/M)_+``.

    Its trace is ``2^-n + distance_objective(state, sigma)``, which is how the
    guessing bound is certified by construction.
    """
    m = 1 << state.key_bits
    sig = np.asarray(sigma, dtype=complex)
    w, v = np.linalg.eigh(_herm(_stack(state) - sig / m))
    pos = (v * np.clip(w, 0.0, None)[:, None, :]) @ np.swapaxes(v, -1, -2).conj()
    return sig / m + pos.sum(axis=0)


def _commuting_distance(state: CqState, basis: np.ndarray) -> tuple[float, np.ndarray]:
    # Pinching onto the joint eigenbasis cannot increase the objective, so the
    # optimum is diagonal there and the problem separates per basis vector:
    # minimise Σ_e φ_e(s_e) on the simplex, φ_e piecewise linear and convex.
    m = 1 << state.key_bits
    diag = _diagonals(_stack(state), basis)
    dim = diag.shape[1]
    segments = []
    for e in range(dim):
        cuts = np.sort(np.concatenate([m * diag[:, e], np.zeros(m - len(state))]))
        lo = 0.0
        for k, c in enumerate(cuts):
            if c > lo:
                segments.append(((2 * k - m) / (2.0 * m), e, c - lo))
                lo = c
        segments.append(((2 * len(cuts) - m) / (2.0 * m), e, math.inf))
    segments.sort(key=lambda s: (s[0], s[1]))
    alloc = np.zeros(dim)
    remaining = 1.0
    for _, e, width in segments:
        if remaining <= 0:
            break
        take = min(width, remaining)
        alloc[e] += take
        remaining -= take
    alloc /= alloc.sum()
    sigma = (basis * alloc) @ basis.conj().T
    return distance_objective(state, sigma), sigma


def trace_distance_to_ideal(
    state: CqState,
    mode: str = EXACT_MIN,
    max_iter: int = 5000,
    stall_tol: float = 1e-9,
    stall_window: int = 50,
    step0: float = 0.3,
    min_step: float = 1e-6,
) -> IdealDistance:
    """Distance of ``state`` from a uniform key independent of the memory.

    ``mode="reduced-seed"`` evaluates the objective at the reduced memory
    state ``Tr_S ρ_SE``, an upper bound on the minimum. ``mode="exact-min"``
    minimises over memory states: exactly when the conditional states
    commute, and otherwise by projected subgradient descent seeded at the
    reduced state with step ``step/√t`` (normalised subgradient). Whenever
    the best value improves by less than ``stall_tol`` over
    ``stall_window`` iterations the schedule restarts from the best point
    with half the step; the run converges once the step drops below
    ``min_step``. Hitting ``max_iter`` first issues :class:`NonConvergence`
    and returns the best value found, which is still an upper bound.
    """
    if mode not in _D_MODE_NAMES:
        raise ValueError(f"unknown mode {mode!r}")
    linalg.check_dim(len(state) * state.dim_E)
    seed = state.marginal_E()
    seed_value = distance_objective(state, seed)
    if mode == REDUCED_SEED:
        return IdealDistance(seed_value, seed, mode, True, 0)

    blocks = _stack(state)
    basis = _diagonal_basis(blocks)
    if basis is not None:
        value, sigma = _commuting_distance(state, basis)
        if value > seed_value:
            value, sigma = seed_value, seed
        return IdealDistance(value, sigma, mode, True, 0)

    m = 1 << state.key_bits
    const = 0.5 * (m - len(state)) / m
    dim = state.dim_E
    sigma = seed
    best, best_sigma = seed_value, seed
    history = [best]
    step, local_t = step0, 0
    for t in range(1, max_iter + 1):
        local_t += 1
        w, v = np.linalg.eigh(_herm(blocks - sigma / m))
        value = float(0.5 * np.abs(w).sum() + const)
        if value < best:
            best, best_sigma = value, sigma
        history.append(best)
        if local_t > stall_window and history[-stall_window - 1] - best < stall_tol:
            # stalled: restart the schedule from the best point with half the step
            step *= 0.5
            if step < min_step:
                return IdealDistance(best, best_sigma, mode, True, t)
            sigma, local_t = best_sigma, 0
            continue
        signs = (v * np.sign(w)[:, None, :]) @ np.swapaxes(v, -1, -2).conj()
        grad = -signs.sum(axis=0) / (2.0 * m)
        grad -= np.trace(grad) / dim * np.eye(dim)
        gnorm = np.linalg.norm(grad)
        if gnorm < 1e-15:
            return IdealDistance(best, best_sigma, mode, True, t)
        sigma = _project_to_states(sigma - (step / math.sqrt(local_t)) * grad / gnorm)
    warnings.warn(
        f"distance minimisation stopped after {max_iter} iterations; value is an upper bound",
        NonConvergence,
        stacklevel=2,
    )
    return IdealDistance(best, best_sigma, mode, False, max_iter)


# ---------------------------------------------------------------------------
# discrimination and guessing


def helstrom(p1: float, rho1, rho2) -> float:
    """Optimal success probability for telling ``rho1`` (prior ``p1``) from ``rho2``.

    ``½(1 + ‖p1 ρ1 − (1 − p1) ρ2‖₁)``; at equal priors this is
    ``½ + ¼‖ρ1 − ρ2‖₁``.
    """
    if not 0.0 <= p1 <= 1.0:
        raise OutOfRange(f"prior {p1} outside [0, 1]")
    r1 = linalg.check_state(rho1, "rho1")
    r2 = linalg.check_state(rho2, "rho2")
    if r1.shape != r2.shape:
        raise DimensionMismatch(f"{r1.shape} vs {r2.shape}")
    return 0.5 * (1.0 + linalg.trace_norm(p1 * r1 - (1.0 - p1) * r2))


class GuessingBounds(NamedTuple):
    lower: float
    upper: float
    method: str
    gap_flagged: bool
    povm: np.ndarray
    certificate: np.ndarray


def _pinv_sqrt(a: np.ndarray, rel: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(_herm(a))
    top = max(float(w.max()), 1e-300)
    keep = w > rel * top
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    kernel = v[:, ~keep] @ v[:, ~keep].conj().T
    return (v * inv) @ v.conj().T, kernel


def _povm_value(blocks: np.ndarray, povm: np.ndarray) -> float:
    return float(np.einsum("xij,xji->", blocks, povm).real)


def _repair_certificate(sigma: np.ndarray, blocks: np.ndarray) -> np.ndarray:
    """Smallest-effort PSD additions that make ``sigma ⪰ B_x`` for every ``x``."""
    s = _herm(sigma)
    for b in blocks:
        w, v = np.linalg.eigh(_herm(b - s))
        if w[-1] > 0:
            s = s + (v * np.clip(w, 0.0, None)) @ v.conj().T
    slack = min(np.linalg.eigvalsh(_herm(s - b))[0] for b in blocks)
    if slack < 0:
        s = s - slack * np.eye(s.shape[0])
    return s


def _reduced_certificate(blocks: np.ndarray) -> np.ndarray:
    # c·ρ_E with the least c making it feasible; ρ_E itself always is.
    rho = blocks.sum(axis=0)
    g, kernel = _pinv_sqrt(rho)
    c = max(float(np.linalg.eigvalsh(_herm(g @ b @ g))[-1]) for b in blocks)
    return _repair_certificate(min(c, 1.0) * rho, blocks)


def guessing_probability(
    state: CqState,
    certificates: Iterable[np.ndarray] = (),
    max_iter: int = 2000,
    target_gap: float = 1e-10,
    gap_tol: float = GAP_TOL,
) -> GuessingBounds:
    """Certified bounds on the probability of guessing the whole key.

    The lower bound is the success probability of an explicit POVM and the
    upper bound is ``Tr σ`` for an explicit ``σ`` with ``σ ⪰ p_x ρ_x`` for
    all ``x``.

    * Conditional states that commute are handled exactly in their joint
      eigenbasis.
    * Two-label ensembles use the Helstrom projector and its matching
      certificate, also exact.
    * Otherwise the pretty-good measurement seeds a fixed-point iteration
      ``E_x ← R^{-1/2} B_x E_x B_x R^{-1/2}`` (``B_x = p_x ρ_x``), and every
      iterate's stationarity operator ``Σ_x B_x E_x`` is repaired into a
      feasible certificate. The smallest feasible trace wins, including any
      caller-supplied ``certificates``.

    A final gap above ``gap_tol`` emits :class:`CertificateGap`; both values
    are still valid bounds.
    """
    if len(state) > MAX_GUESS_LABELS or state.dim_E > MAX_GUESS_DIM:
        raise DimensionCap(
            f"guessing probability capped at {MAX_GUESS_LABELS} labels and dimension {MAX_GUESS_DIM}"
        )
    keep = np.nonzero(state.probs > 0)[0]
    blocks = _stack(state)[keep]
    dim = state.dim_E
    n_lab = len(blocks)
    extra = [_repair_certificate(np.asarray(c, dtype=complex), blocks) for c in certificates]

    def finish(lower, upper, method, povm, cert):
        for c in extra:
            tr = float(np.trace(c).real)
            if tr < upper:
                upper, cert = tr, c
        upper = max(upper, lower)
        flagged = upper - lower > gap_tol
        if flagged:
            warnings.warn(f"guessing-probability gap {upper - lower:.2e}", CertificateGap, stacklevel=3)
        full = np.zeros((len(state), dim, dim), dtype=complex)
        full[keep] = povm
        return GuessingBounds(float(lower), float(upper), method, flagged, full, cert)

    basis = _diagonal_basis(blocks)
    if basis is not None:
        diag = _diagonals(blocks, basis)
        winner = np.argmax(diag, axis=0)
        value = float(diag.max(axis=0).sum())
        povm = np.zeros((n_lab, dim, dim), dtype=complex)
        for e, x in enumerate(winner):
            povm[x] += np.outer(basis[:, e], basis[:, e].conj())
        cert = (basis * diag.max(axis=0)) @ basis.conj().T
        return finish(value, value, "commuting-exact", povm, cert)

    if n_lab == 2:
        gamma = blocks[0] - blocks[1]
        w, v = np.linalg.eigh(_herm(gamma))
        proj = v[:, w > 0] @ v[:, w > 0].conj().T
        povm = np.stack([proj, np.eye(dim) - proj])
        cert = _repair_certificate(blocks[1] + (v * np.clip(w, 0.0, None)) @ v.conj().T, blocks)
        return finish(_povm_value(blocks, povm), float(np.trace(cert).real), "helstrom-exact", povm, cert)

    g, kernel = _pinv_sqrt(blocks.sum(axis=0))
    povm = g @ blocks @ g
    povm[0] += kernel
    lower, best_povm = _povm_value(blocks, povm), povm
    cert = _reduced_certificate(blocks)
    upper = float(np.trace(cert).real)
    for _ in range(max_iter):
        candidate = _repair_certificate((blocks @ povm).sum(axis=0), blocks)
        tr = float(np.trace(candidate).real)
        if tr < upper:
            upper, cert = tr, candidate
        if upper - lower <= target_gap:
            break
        r = (blocks @ povm @ blocks).sum(axis=0)
        g, kernel = _pinv_sqrt(r)
        povm = g @ blocks @ povm @ blocks @ g
        povm = _herm(povm)
        povm[0] += kernel
        value = _povm_value(blocks, povm)
        if value > lower:
            lower, best_povm = value, povm
    return finish(lower, upper, "iterative-certified", best_povm, cert)


def guessing_probability_exact(state: CqState, key_map: Callable[[str], str] | None = None) -> Fraction:
    """Exact guessing probability for diagonal conditional states.

    Every float entry is converted to a :class:`~fractions.Fraction` without
    rounding, so for dyadic inputs the result is exact. ``key_map`` sends each
    label to the value actually being guessed (for example a hash output);
    weights of labels with equal image are summed before maximising.
    """
    dim = state.dim_E
    columns: dict[str, list[Fraction]] = {}
    for label, p, rho in zip(state.labels, state.probs, state.states):
        m = rho.matrix
        if np.any(np.abs(m - np.diag(np.diag(m))) > 0):
            raise ValueError("exact guessing needs diagonal conditional states")
        target = key_map(label) if key_map is not None else label
        col = columns.setdefault(target, [Fraction(0)] * dim)
        pf = Fraction(float(p))
        for e in range(dim):
            col[e] += pf * Fraction(float(m[e, e].real))
    return sum((max(col[e] for col in columns.values()) for e in range(dim)), Fraction(0))


# ---------------------------------------------------------------------------
# guessing bound and Markov level


def markov_epsilon_f_log10(log10_epsilon_sec: float, exponent: float = DEFAULT_EXPONENT) -> float:
    """``log10(ε_sec ** exponent)`` for an ε_sec given by its base-10 logarithm."""
    if not log10_epsilon_sec <= 0.0 or math.isnan(log10_epsilon_sec):
        raise OutOfRange(f"epsilon_sec must lie in (0, 1], got 10^{log10_epsilon_sec}")
    if not 0.0 < exponent <= 1.0:
        raise OutOfRange(f"exponent {exponent} outside (0, 1]")
    return exponent * log10_epsilon_sec


def markov_epsilon_f(epsilon_sec: float, exponent: float = DEFAULT_EXPONENT) -> float:
    """Whole-key guessing level ``ε_sec ** exponent`` implied by an average trace-distance level."""
    if not 0.0 < epsilon_sec <= 1.0:
        raise OutOfRange(f"epsilon_sec must lie in (0, 1], got {epsilon_sec}")
    return 10.0 ** markov_epsilon_f_log10(math.log10(epsilon_sec), exponent)


@dataclass(frozen=True)
class SecurityAssessment:
    d: float
    d_mode: str
    epsilon_sec: float | None
    p_guess_lower: float
    p_guess_upper: float
    distance_bound: float
    epsilon_F: float | None
    key_bits: int
    slack: float
    guess_method: str
    d_converged: bool
    certificate_gap_flagged: bool
    exponent: float = DEFAULT_EXPONENT

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-9

    def to_dict(self) -> dict:
        return asdict(self)


def check_guessing_bound(
    state: CqState,
    epsilon_sec: float | None = None,
    exponent: float = DEFAULT_EXPONENT,
    mode: str = EXACT_MIN,
) -> SecurityAssessment:
    """Check ``P_guess ≤ 2^-n + d`` on ``state``.

    The minimiser ``σ*`` of the distance yields the certificate
    :func:`ideal_certificate`, which is handed to
    :func:`guessing_probability`; the certified upper bound can therefore
    never exceed ``2^-n + d`` beyond rounding. ``slack`` is
    ``distance_bound − p_guess_upper``.
    """
    dist = trace_distance_to_ideal(state, mode)
    cert = ideal_certificate(state, dist.sigma_star)
    bounds = guessing_probability(state, certificates=[cert])
    n = state.key_bits
    bound = 2.0 ** -n + dist.d
    eps_f = markov_epsilon_f(epsilon_sec, exponent) if epsilon_sec is not None else None
    return SecurityAssessment(
        d=dist.d,
        d_mode=_D_MODE_NAMES[mode],
        epsilon_sec=epsilon_sec,
        p_guess_lower=bounds.lower,
        p_guess_upper=bounds.upper,
        distance_bound=bound,
        epsilon_F=eps_f,
        key_bits=n,
        slack=bound - bounds.upper,
        guess_method=bounds.method,
        d_converged=dist.converged,
        certificate_gap_flagged=bounds.gap_flagged,
        exponent=exponent,
    )


# ---------------------------------------------------------------------------
# Koashi-style quantities


class EtaZ(NamedTuple):
    """Bit-error quantity under both readings of its normalisation.

    ``literal`` divides the diagonal mass by ``M``; ``conventional`` treats
    ``p`` as a distribution and uses ``1 − Σ_i p_ii``.
    """

    literal: float
    conventional: float


@dataclass(frozen=True)
class KoashiQuantities:
    eta_Z: float
    eta_X: float
    eta_key_bound: float
    M: int

    @classmethod
    def from_etas(cls, eta_Z: float, eta_X: float, M: int) -> "KoashiQuantities":
        return cls(eta_Z, eta_X, koashi_key_bound(eta_Z, eta_X), M)


def koashi_eta_z(p) -> EtaZ:
    """Failure probability of the Z protocol from the joint table ``p[i, j]``."""
    table = np.asarray(p, dtype=float)
    if table.ndim != 2 or table.shape[0] != table.shape[1]:
        raise DimensionMismatch(f"expected a square M x M table, got {table.shape}")
    if np.any(table < 0):
        raise NegativeProbability("joint table has negative entries")
    m = table.shape[0]
    diag = float(np.trace(table))
    return EtaZ(literal=1.0 - diag / m, conventional=1.0 - diag)


def koashi_eta_x(sigma_A, ideal) -> float:
    """``1 − ⟨0̄|σ_A|0̄⟩`` for a target pure state ``ideal`` (a ket)."""
    s = linalg.check_state(sigma_A, "sigma_A")
    v = linalg.ket(ideal)
    if v.size != s.shape[0]:
        raise DimensionMismatch(f"ket of length {v.size} vs state of dimension {s.shape[0]}")
    overlap = float(np.real(v.conj() @ s @ v))
    return float(min(1.0, max(0.0, 1.0 - overlap)))


def koashi_key_bound(eta_Z: float, eta_X: float) -> float:
    """``2 η_Z + 2 √η_X``."""
    for name, val in (("eta_Z", eta_Z), ("eta_X", eta_X)):
        if not 0.0 <= val <= 1.0:
            raise OutOfRange(f"{name}={val} outside [0, 1]")
    return 2.0 * eta_Z + 2.0 * math.sqrt(eta_X)


def split_ab_label(label: str) -> tuple[str, str]:
    half = len(label) // 2
    return label[:half], label[half:]


def joint_table(state_ab: CqState) -> np.ndarray:
    """``p[i, j]`` from a cq state whose labels are Alice's bits followed by Bob's."""
    if state_ab.key_bits % 2:
        raise DimensionMismatch("AB labels need an even number of bits")
    m = 1 << (state_ab.key_bits // 2)
    table = np.zeros((m, m))
    for label, p in zip(state_ab.labels, state_ab.probs):
        a, b = split_ab_label(label)
        table[label_to_int(a), label_to_int(b)] += p
    return table


class KeyDistance(NamedTuple):
    full: float
    half: float


def koashi_key_distance(state_ab: CqState) -> KeyDistance:
    """Distance from the ideal correlated key ``Σ_i (1/M)|ii⟩⟨ii| ⊗ ρ_E``.

    ``full`` is ``‖ρ_ABE − τ‖₁`` and ``half`` is half of it; both
    normalisations are reported because either may be intended.
    """
    if state_ab.key_bits % 2:
        raise DimensionMismatch("AB labels need an even number of bits")
    n = state_ab.key_bits // 2
    m = 1 << n
    rho_e = state_ab.marginal_E()
    total = 0.0
    diagonal_seen = set()
    for label, block in zip(state_ab.labels, state_ab.weighted_blocks()):
        a, b = split_ab_label(label)
        if a == b:
            diagonal_seen.add(a)
            total += linalg.trace_norm(block - rho_e / m)
        else:
            total += float(np.trace(block).real)
    total += (m - len(diagonal_seen)) / m
    return KeyDistance(total, 0.5 * total)


# ---------------------------------------------------------------------------
# Fuchs–van de Graaf


class FvdgResult(NamedTuple):
    lhs: float
    mid: float
    rhs: float
    holds: bool


def fvdg_check(rho, sigma, slack: float = 1e-9) -> FvdgResult:
    """``1 − √F ≤ ½‖ρ − σ‖₁ ≤ √(1 − F)`` with squared fidelity ``F``."""
    r = linalg.check_state(rho, "rho")
    s = linalg.check_state(sigma, "sigma")
    if r.shape != s.shape:
        raise DimensionMismatch(f"{r.shape} vs {s.shape}")
    f = linalg.fidelity(r, s)
    lhs = 1.0 - math.sqrt(f)
    mid = 0.5 * linalg.trace_norm(r - s)
    rhs = math.sqrt(max(0.0, 1.0 - f))
    return FvdgResult(lhs, mid, rhs, lhs <= mid + slack and mid <= rhs + slack)
