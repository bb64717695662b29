import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkdcrit import keyrate, logdomain
from qkdcrit.errors import OutOfRange
from qkdcrit.keyrate import KeyRateParams

# frozen from a 50-digit mpmath evaluation (tests/oracles.finite_key_length_mp)
GOLDEN_LENGTH_VALUE = 1470.327091260735843


def test_binary_entropy():
    assert keyrate.binary_entropy(0.0) == 0.0 and keyrate.binary_entropy(1.0) == 0.0
    assert keyrate.binary_entropy(0.5) == 1.0
    with pytest.raises(OutOfRange):
        keyrate.binary_entropy(1.5)


def test_leftover_hash_examples():
    assert keyrate.leftover_hash_delta(100, 100, 0.0).delta == pytest.approx(0.5)
    res = keyrate.leftover_hash_delta(60, 100, 1e-9)
    assert res.delta == pytest.approx(0.5 * 2**-20 + 1e-9, rel=1e-12)
    assert res.delta == pytest.approx(4.78e-7, rel=1e-3)
    assert not res.vacuous
    far = keyrate.leftover_hash_delta(5000, 10, 0.0)
    assert far.vacuous and far.delta > 1
    eps, best = keyrate.best_leftover_hash_delta(60, lambda ep: 100 + math.log2(1 / ep), [1e-3, 1e-6, 1e-9])
    assert best.delta == min(keyrate.leftover_hash_delta(60, 100 + math.log2(1 / e), e).delta for e in [1e-3, 1e-6, 1e-9])


def test_finite_key_length_trivial_case():
    p = KeyRateParams(n=1000, q=1.0, Q_tol=0.0, epsilon=0.5, epsilon_cor=0.5, mu=lambda e: 0.0)
    assert keyrate.tomamichel_length(p).bits == 1000 - 2


def test_finite_key_length_golden():
    p = KeyRateParams(
        n=10_000, q=0.5, Q_tol=0.01, epsilon=1e-10, epsilon_cor=1e-15, leak_EC=2000, mu=lambda e: 0.01
    )
    res = keyrate.tomamichel_length(p)
    assert res.value == pytest.approx(GOLDEN_LENGTH_VALUE, abs=1e-9)
    assert res.bits == math.floor(GOLDEN_LENGTH_VALUE)


def test_finite_key_length_clamped_and_saturated():
    p = KeyRateParams(n=100, q=1.0, Q_tol=0.0, epsilon=0.5, epsilon_cor=0.5, leak_EC=1e9, mu=lambda e: 0.0)
    assert keyrate.tomamichel_length(p).bits == 0
    p = KeyRateParams(n=100, q=1.0, Q_tol=0.45, epsilon=0.5, epsilon_cor=0.5, mu=lambda e: 0.1)
    assert keyrate.tomamichel_length(p).entropy_saturated
    with pytest.raises(OutOfRange):
        KeyRateParams(n=100, q=1.0, Q_tol=0.5, epsilon=0.5, epsilon_cor=0.5)


def test_chernoff_mu_default():
    p = KeyRateParams(n=10_000, q=1.0, Q_tol=0.02, epsilon=1e-10, epsilon_cor=1e-15)
    assert p.mu_value() == pytest.approx(math.sqrt(math.log(2 / 1e-10) / (2 * 10_000)))


def test_uniformity_rate_examples():
    n = 64
    assert keyrate.uniformity_rate(2.0**-n, n).lam == pytest.approx(1.0)
    assert keyrate.uniformity_rate(2.0**-n, n).l_uniform == n
    assert keyrate.uniformity_rate(1.0, 10).lam == 0.0
    r = keyrate.uniformity_rate(n=10_000, log10_epsilon_F=-20 / 3)
    assert r.lam == pytest.approx((20 / 3) / math.log10(2) / 10_000, rel=1e-12)
    assert round(r.lam, 5) == 0.00221
    assert r.l_uniform == 22
    with pytest.raises(OutOfRange):
        keyrate.uniformity_rate(2.0, 10)


def test_koashi_length_examples():
    assert keyrate.koashi_length(100, 0, 0) == 100
    assert keyrate.koashi_length(100, 60, 60) == 0
    assert keyrate.koashi_length(10_000, 3000, 2000) == 5000


def test_final_rate_examples():
    assert keyrate.final_rate(22, 2000, 100, 10_000) == 0.0
    assert keyrate.final_rate(30, 0, 0, 100) == pytest.approx(0.3)
    assert keyrate.final_rate(100, 0, 0, 100) == 1.0


def test_reevaluate_headline_row():
    row = keyrate.reevaluate(10_000, -20.0, 2000, 100, "headline")
    assert row.p_suc_bound_log10 == pytest.approx(-20 / 3, abs=1e-12)
    assert row.ideal_log10 == pytest.approx(-3010.2999566398, abs=1e-9)
    assert row.l_uniform == 22 and row.R_F == 0.0
    assert row.display()["ideal"] == "5.0e-3011"
    notes = row.footnotes()
    assert any("rounded reference -3000" in n for n in notes)
    assert any("about 30 bits" in n for n in notes)


def test_reevaluation_table_examples():
    assert keyrate.reevaluation_table([]) == []
    n = 300
    (row,) = keyrate.reevaluation_table([(n, f"{2.0**-n!r}", 0, 0)])
    assert row.eps_F_log10 == pytest.approx(-n / 3 * logdomain.LOG10_2, abs=1e-9)
    assert row.lam == pytest.approx(1 / 3, abs=1e-12)
    deep = keyrate.reevaluation_table([(10_000, "1e-5000", 0, 0)])[0]
    assert deep.eps_sec_log10 == pytest.approx(-5000.0)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_format_log10_round_trips_to_one_digit(x):
    text = logdomain.format_log10(x)
    mant, exp = text.split("e")
    assert 1.0 <= float(mant) < 10.0
    assert math.log10(float(mant)) + int(exp) == pytest.approx(x, abs=0.05)


def test_log10_of_strings_below_float_range():
    assert logdomain.log10_of("1e-5000") == -5000.0
    assert logdomain.log10_of(0.001) == pytest.approx(-3)
    with pytest.raises(OutOfRange):
        logdomain.log10_of("-1")
    with pytest.raises(OutOfRange):
        logdomain.log10_of("abc")
