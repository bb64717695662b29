import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkdcrit import criteria, linalg, states
from qkdcrit.errors import NegativeProbability, OutOfRange
from qkdcrit.states import CqState

from oracles import bloch_grid_distance_copy, classical_guessing, eig2_hermitian, sdp_distance, sdp_guessing

KET0 = np.array([1, 0], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
HELSTROM_0_PLUS = 0.5 + math.sqrt(2) / 4


def copy_state() -> CqState:
    return CqState(("0", "1"), [0.5, 0.5], (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))


def zero_plus_state() -> CqState:
    return CqState(("0", "1"), [0.5, 0.5], (linalg.projector(KET0), linalg.projector(PLUS)))


# -- distance to ideal ------------------------------------------------------


def test_distance_zero_for_ideal_state_both_modes():
    sigma = linalg.random_density(3, np.random.default_rng(0))
    ideal = states.ideal_cq_state(2, sigma)
    for mode in (criteria.EXACT_MIN, criteria.REDUCED_SEED):
        assert criteria.trace_distance_to_ideal(ideal, mode).d == pytest.approx(0.0, abs=1e-12)


def test_distance_of_perfect_copy_matches_bloch_grid():
    d = criteria.trace_distance_to_ideal(copy_state()).d
    assert d == pytest.approx(0.5, abs=1e-12)
    assert bloch_grid_distance_copy() == pytest.approx(0.5, abs=1e-3)
    assert d <= bloch_grid_distance_copy() + 1e-12


def test_missing_labels_add_penalty():
    st_ = CqState(("00",), [1.0], (np.eye(1),))
    # one present label out of four: |1 - 1/4| / 2 + 3/8
    assert criteria.trace_distance_to_ideal(st_).d == pytest.approx(0.375 + 0.375)


@pytest.mark.parametrize("seed", range(12))
def test_distance_matches_sdp_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(1, 3))
    dim = int(rng.integers(2, 5))
    st_ = states.random_cq_state(n, dim, rng, n_labels=int(rng.integers(1, (1 << n) + 1)))
    res = criteria.trace_distance_to_ideal(st_)
    ref = sdp_distance(st_.weighted_blocks(), n)
    assert res.d >= ref - 1e-6
    assert res.d == pytest.approx(ref, abs=1e-5)
    upper = criteria.trace_distance_to_ideal(st_, criteria.REDUCED_SEED).d
    assert upper >= res.d - 1e-12


def test_commuting_distance_exact_against_sdp():
    rng = np.random.default_rng(7)
    diag = [np.diag(rng.dirichlet(np.ones(3))) for _ in range(4)]
    st_ = CqState(("00", "10", "01", "11"), rng.dirichlet(np.ones(4)), tuple(diag))
    res = criteria.trace_distance_to_ideal(st_)
    assert res.converged
    assert res.d == pytest.approx(sdp_distance(st_.weighted_blocks(), 2), abs=1e-7)


def test_ideal_certificate_is_dual_feasible():
    rng = np.random.default_rng(8)
    st_ = states.random_cq_state(2, 3, rng)
    res = criteria.trace_distance_to_ideal(st_)
    tau = criteria.ideal_certificate(st_, res.sigma_star)
    for b in st_.weighted_blocks():
        assert np.linalg.eigvalsh(tau - b).min() >= -1e-10
    assert np.trace(tau).real == pytest.approx(0.25 + res.d, abs=1e-9)


# -- Helstrom and guessing ----------------------------------------------------


def test_helstrom_examples():
    rho = linalg.random_density(2, np.random.default_rng(1))
    assert criteria.helstrom(0.5, rho, rho) == pytest.approx(0.5)
    assert criteria.helstrom(0.5, linalg.projector(KET0), linalg.projector([0, 1])) == pytest.approx(1.0)
    val = criteria.helstrom(0.5, linalg.projector(KET0), linalg.projector(PLUS))
    l1, l2 = eig2_hermitian(0.5 * linalg.projector(KET0) - 0.5 * linalg.projector(PLUS))
    assert val == pytest.approx(0.5 * (1 + abs(l1) + abs(l2)), abs=1e-14)
    assert val == pytest.approx(HELSTROM_0_PLUS, abs=1e-14)


def test_guessing_identical_states_is_max_prior():
    rho = linalg.random_density(3, np.random.default_rng(2))
    g = criteria.guessing_probability(CqState(("00", "10", "01"), [0.2, 0.5, 0.3], (rho,) * 3))
    assert g.lower == pytest.approx(0.5, abs=1e-9) and g.upper == pytest.approx(0.5, abs=1e-9)


def test_guessing_orthogonal_supports_is_one():
    g = criteria.guessing_probability(copy_state())
    assert g.lower == pytest.approx(1.0) and g.upper == pytest.approx(1.0)


def test_guessing_zero_plus_matches_helstrom():
    g = criteria.guessing_probability(zero_plus_state())
    assert g.lower == pytest.approx(HELSTROM_0_PLUS, abs=1e-12)
    assert g.upper == pytest.approx(HELSTROM_0_PLUS, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_guessing_bounds_bracket_sdp(seed):
    rng = np.random.default_rng(200 + seed)
    n = int(rng.integers(2, 4))
    dim = int(rng.integers(2, 7))
    st_ = states.random_cq_state(n, dim, rng, rank=int(rng.integers(1, dim + 1)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = criteria.guessing_probability(st_)
    ref = sdp_guessing(st_.weighted_blocks())
    assert g.lower <= ref + 1e-7
    assert g.upper >= ref - 1e-7
    assert g.upper - g.lower <= criteria.GAP_TOL


def test_guessing_certificate_and_povm_are_valid():
    rng = np.random.default_rng(9)
    st_ = states.random_cq_state(2, 4, rng)
    g = criteria.guessing_probability(st_)
    blocks = st_.weighted_blocks()
    for b in blocks:
        assert np.linalg.eigvalsh(g.certificate - b).min() >= -1e-10
    np.testing.assert_allclose(sum(g.povm), np.eye(4), atol=1e-9)
    assert all(np.linalg.eigvalsh(e).min() >= -1e-10 for e in g.povm)
    assert sum(np.trace(b @ e).real for b, e in zip(blocks, g.povm)) == pytest.approx(g.lower, abs=1e-12)


def test_guessing_commuting_against_classical_oracle():
    rng = np.random.default_rng(10)
    diag = [np.diag(rng.dirichlet(np.ones(4))) for _ in range(3)]
    probs = rng.dirichlet(np.ones(3))
    st_ = CqState(("00", "10", "01"), probs, tuple(diag))
    g = criteria.guessing_probability(st_)
    assert g.method == "commuting-exact"
    assert g.lower == pytest.approx(classical_guessing(probs, diag), abs=1e-14)
    exact = criteria.guessing_probability_exact(st_)
    assert float(exact) == pytest.approx(classical_guessing(probs, diag), abs=1e-14)


def test_guessing_exact_with_key_map_is_fraction():
    st_ = copy_state()
    val = criteria.guessing_probability_exact(st_, key_map=lambda label: "0")
    assert val == Fraction(1)
    assert criteria.guessing_probability_exact(st_) == Fraction(1)


# -- guessing bound and Markov ---------------------------------------------


def test_guessing_bound_ideal_state_is_tight():
    a = criteria.check_guessing_bound(states.ideal_cq_state(2, np.eye(2) / 2))
    assert a.p_guess_upper == pytest.approx(0.25) and a.d == pytest.approx(0.0, abs=1e-12)
    assert a.slack == pytest.approx(0.0, abs=1e-12) and a.holds


def test_guessing_bound_copy_state_is_tight():
    a = criteria.check_guessing_bound(copy_state())
    assert a.p_guess_lower == pytest.approx(1.0)
    assert a.d == pytest.approx(0.5) and a.distance_bound == pytest.approx(1.0)
    assert a.slack == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(1, 3),
    dim=st.integers(1, 6),
)
def test_guessing_bound_holds_on_random_states(seed, n, dim):
    rng = np.random.default_rng(seed)
    st_ = states.random_cq_state(n, dim, rng, n_labels=int(rng.integers(1, (1 << n) + 1)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = criteria.check_guessing_bound(st_)
    assert a.slack >= -1e-9
    assert a.p_guess_lower <= a.p_guess_upper + 1e-12


def test_markov_examples():
    assert criteria.markov_epsilon_f(1e-20) == pytest.approx(10 ** (-20 / 3), rel=1e-12)
    assert criteria.markov_epsilon_f(1e-20) == pytest.approx(2.154e-7, rel=1e-3)
    assert criteria.markov_epsilon_f(1.0) == 1.0
    assert criteria.markov_epsilon_f(1e-6) == pytest.approx(1e-2, rel=1e-12)
    assert criteria.markov_epsilon_f_log10(-5000.0) == pytest.approx(-5000 / 3)
    with pytest.raises(OutOfRange):
        criteria.markov_epsilon_f(2.0)
    with pytest.raises(OutOfRange):
        criteria.markov_epsilon_f(0.0)


# -- Koashi quantities ------------------------------------------------------


def test_eta_z_examples():
    m = 4
    ez = criteria.koashi_eta_z(np.eye(m) / m)
    assert ez.literal == pytest.approx(1 - 1 / m) and ez.conventional == pytest.approx(0.0, abs=1e-15)
    ez = criteria.koashi_eta_z(np.ones((m, m)) - np.eye(m))
    assert ez.literal == pytest.approx(1.0) and ez.conventional == pytest.approx(1.0)
    ez = criteria.koashi_eta_z(np.full((m, m), 1 / m**2))
    assert ez.conventional == pytest.approx(1 - 1 / m)
    with pytest.raises(NegativeProbability):
        criteria.koashi_eta_z(np.array([[1.1, -0.1], [0, 0]]))


def test_eta_x_examples():
    assert criteria.koashi_eta_x(linalg.projector(PLUS), PLUS) == pytest.approx(0.0, abs=1e-15)
    minus = np.array([1, -1]) / math.sqrt(2)
    assert criteria.koashi_eta_x(linalg.projector(minus), PLUS) == pytest.approx(1.0)
    assert criteria.koashi_eta_x(np.eye(2) / 2, PLUS) == pytest.approx(0.5)


def test_k1_bound_examples():
    assert criteria.koashi_key_bound(0, 0) == 0
    assert criteria.koashi_key_bound(0.1, 0.04) == pytest.approx(0.6)
    with pytest.raises(OutOfRange):
        criteria.koashi_key_bound(1.5, 0.0)


def test_key_distance_perfect_key_is_zero():
    st_ = CqState(("00", "11"), [0.5, 0.5], (np.eye(2) / 2, np.eye(2) / 2))
    kd = criteria.koashi_key_distance(st_)
    assert kd.full == pytest.approx(0.0, abs=1e-15) and kd.half == 0.5 * kd.full


def test_phase_error_family_eta_values_from_tables():
    for t in np.linspace(0, 1, 11):
        fam = states.phase_error_family(0.5 * t, 0.2 * t)
        ez = criteria.koashi_eta_z(criteria.joint_table(fam.state_ab))
        assert ez.conventional == pytest.approx(fam.eta_Z_conventional, abs=1e-14)
        assert ez.literal == pytest.approx(fam.eta_Z_literal, abs=1e-14)
        assert criteria.koashi_eta_x(fam.sigma_A, fam.ideal) == pytest.approx(fam.eta_X, abs=1e-14)


def test_phase_error_family_key_distance_at_zero_flips():
    # with q = 0 the only deviation is Eve's off-diagonal coherence
    e = 0.2
    kd = criteria.koashi_key_distance(states.phase_error_family(e, 0.0).state_ab)
    assert kd.full == pytest.approx(2 * math.sqrt(e * (1 - e)), abs=1e-12)


# -- Fuchs-van de Graaf -----------------------------------------------------


def test_fvdg_examples():
    rho = linalg.random_density(3, np.random.default_rng(3))
    r = criteria.fvdg_check(rho, rho)
    assert r.holds and max(abs(r.lhs), abs(r.mid), abs(r.rhs)) < 1e-6
    r = criteria.fvdg_check(linalg.projector(KET0), linalg.projector([0, 1]))
    assert r.holds and (r.lhs, r.mid, r.rhs) == pytest.approx((1, 1, 1))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 8))
def test_fvdg_property(seed, dim):
    rng = np.random.default_rng(seed)
    assert criteria.fvdg_check(linalg.random_density(dim, rng), linalg.random_pure(dim, rng)).holds
