import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from twistsum import powersum
from twistsum.powersum import (
    CapExceeded,
    CertifiedSum,
    harmonic_mass,
    interval_sum,
    interval_sum_direct,
    interval_sum_em,
    phase,
    term,
)

from conftest import mp_block_sum

TS = [-2.0, -0.5, 0.7, 1.0, 3.0]


def mp_phase(n, t, dps=None):
    dps = dps or 60 + len(str(n))
    with mpmath.workdps(dps):
        return float(mpmath.fmod(-mpmath.mpf(t) * mpmath.log(n), 2 * mpmath.pi) % (2 * mpmath.pi))


def test_term_trivial():
    assert term(1, 3.7) == 1
    assert term(7, 0.0) == pytest.approx(1 / 7, rel=1e-15)


def test_term_2_1():
    z = term(2, 1.0)
    assert abs(z) == pytest.approx(0.5, rel=1e-15)
    assert math.atan2(z.imag, z.real) == pytest.approx(-math.log(2), abs=1e-15)
    with mpmath.workdps(30):
        assert abs(z - complex(mpmath.exp(-(1 + 1j) * mpmath.log(2)))) < 1e-15


def test_phase_examples():
    assert phase(1, 2.5) == 0.0
    assert phase(2, 1.0) == pytest.approx(2 * math.pi - math.log(2), abs=1e-15)
    assert phase(2, 1.0) == pytest.approx(5.590038126619641, abs=1e-15)


@given(st.integers(2, 10**30), st.floats(0.01, 50))
def test_phase_symmetry(n, t):
    s = phase(n, t) + phase(n, -t)
    assert min(abs(s), abs(s - 2 * math.pi)) < 1e-14


@pytest.mark.parametrize("digits", [5, 20, 60, 200, 2000])
@pytest.mark.parametrize("t", [0.3, 1.0, -7.25])
def test_phase_extended_precision(digits, t):
    n = 10 ** (digits - 1) + 12345
    ref = mp_phase(n, t)
    d = abs(phase(n, t) - ref)
    assert min(d, 2 * math.pi - d) <= 2.0**-40


@given(st.integers(1, 10**9), st.floats(-30, 30))
def test_phase_range_and_term_consistency(n, t):
    p = phase(n, t)
    assert 0.0 <= p < 2 * math.pi
    z = term(n, t)
    assert abs(z - complex(math.cos(p), math.sin(p)) / n) <= 1e-12


def test_direct_examples():
    s = interval_sum_direct(2, 1, 0.0)
    assert s.value == 0.5 and s.err <= 1e-15
    s = interval_sum_direct(2, 3, 0.0)
    assert s.value.real == pytest.approx(13 / 12, abs=1e-15)
    s = interval_sum_direct(100, 1000, 1.0)
    bound = math.fsum(1 / n for n in range(100, 1100))
    assert abs(s.value) <= bound


def test_direct_cap():
    with pytest.raises(CapExceeded):
        interval_sum_direct(2, 11, 1.0, cap=10)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10**15), st.integers(1, 300), st.floats(-20, 20))
def test_direct_err_contains_truth(a, length, t):
    s = interval_sum_direct(a, length, t)
    assert abs(s.value - mp_block_sum(a, length, t)) <= s.err


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 60), st.integers(1, 400), st.floats(-6, 6), st.sampled_from([0, 1, 2]))
def test_em_err_contains_truth_small_starts(a, length, t, order):
    # small a is where the remainder bound is tight enough to be tested
    s = interval_sum_em(a, length, t, order=order)
    assert abs(s.value - mp_block_sum(a, length, t)) <= s.err


def test_em_matches_direct_example():
    a, n, t = 10**4, 10**5, 1.0
    e = interval_sum_em(a, n, t)
    d = interval_sum_direct(a, n, t)
    diff = abs(e.value - d.value)
    assert diff <= max(e.err, d.err)
    assert diff <= 1e-12


@pytest.mark.parametrize("t", TS)
def test_em_single_term(t):
    a = 12345
    s = interval_sum_em(a, 1, t)
    assert abs(s.value - term(a, t)) <= s.err + 1e-18


def test_em_long_run_modulus():
    s = interval_sum_em(10**6, 10**6, 0.5)
    h = interval_sum_direct(10**6, 10**6, 0.0)
    assert abs(s.value) <= h.value.real + s.err + h.err
    assert abs(s.value) <= math.log(2) + 1e-6


def test_em_zero_t_is_harmonic():
    s = interval_sum_em(10**6, 10**6, 0.0)
    assert s.value.imag == 0.0
    assert s.value.real == pytest.approx(math.log(2), abs=1e-6)


def test_em_rejects_bad_order():
    with pytest.raises(ValueError):
        interval_sum_em(100, 10, 1.0, order=3)


def test_em_huge_start_against_mp_oracle():
    # mpmath's own Euler-Maclaurin summation (numerical derivatives) as the oracle
    a, length, t = 10**40 + 7, 3 * 10**39, 1.3
    s = interval_sum_em(a, length, t)
    with mpmath.workdps(60):
        ref = complex(mpmath.sumem(lambda n: mpmath.power(n, mpmath.mpc(-1, -t)), [a, a + length - 1]))
    assert abs(s.value - ref) <= s.err + 1e-16
    assert s.err < 1e-15


def test_harmonic_examples():
    assert harmonic_mass(2, 1).value == 0.5
    assert harmonic_mass(2, 3).value.real == pytest.approx(13 / 12, abs=1e-15)
    h = harmonic_mass(10**6, 10**6)
    assert abs(h.value.real - math.log(2)) < 1e-6
    ref = interval_sum_direct(10**6, 10**6, 0.0)
    assert abs(h.value - ref.value) <= h.err + ref.err


def test_harmonic_above_cap_uses_em():
    h = harmonic_mass(3, 10**6, cap=1000)
    with mpmath.workdps(30):
        ref = float(mpmath.harmonic(10**6 + 2) - mpmath.harmonic(2))
    assert abs(h.value.real - ref) <= h.err


class TestDispatch:
    def test_below_cap_is_direct(self):
        a, n, t = 5000, 1000, 1.0
        assert interval_sum(a, n, t, cap=1000) == interval_sum_direct(a, n, t)

    def test_above_cap_is_em(self):
        a, n, t = 50000, 1001, 1.0
        assert interval_sum(a, n, t, cap=1000) == interval_sum_em(a, n, t)

    def test_low_start_head_then_em(self):
        s = interval_sum(2, 100000, 0.7, cap=1000)
        ref = interval_sum_direct(2, 100000, 0.7)
        assert abs(s.value - ref.value) <= s.err + ref.err
        assert s.err < 1e-12

    def test_env_cap(self, monkeypatch):
        monkeypatch.setenv(powersum.CAP_ENV, "50")
        assert powersum.direct_cap() == 50
        with pytest.raises(CapExceeded):
            interval_sum_direct(2, 51, 1.0)
        s = interval_sum(20000, 51, 1.0)
        assert s == interval_sum_em(20000, 51, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10**9), st.integers(1, 10**5), st.sampled_from(TS))
def test_oracle_equivalence(a, length, t):
    e = interval_sum_em(a, length, t)
    d = interval_sum_direct(a, length, t)
    assert abs(e.value - d.value) <= e.err + d.err


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10**12), st.integers(1, 5 * 10**4), st.floats(-10, 10))
def test_triangle_and_conjugate(a, length, t):
    s = interval_sum(a, length, t)
    h = harmonic_mass(a, length)
    assert abs(s.value) <= h.value.real + s.err + h.err
    m = interval_sum(a, length, -t)
    assert abs(m.value - s.value.conjugate()) <= 2 * s.err


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10**12), st.integers(1, 3 * 10**4), st.integers(1, 3 * 10**4), st.floats(-10, 10))
def test_splitting(a, n1, n2, t):
    whole = interval_sum(a, n1 + n2, t, cap=10**4)
    parts = interval_sum(a, n1, t, cap=10**4) + interval_sum(a + n1, n2, t, cap=10**4)
    assert abs(whole.value - parts.value) <= whole.err + parts.err


def test_certified_sum_validation():
    with pytest.raises(ValueError):
        CertifiedSum(1j, -1.0)
    with pytest.raises(ValueError):
        CertifiedSum(1j, math.inf)
    s = CertifiedSum(1 + 0j, 0.1) + CertifiedSum(2j, 0.2)
    assert s.value == 1 + 2j and s.err >= 0.3


def test_rejects_bad_integers():
    with pytest.raises(ValueError):
        term(0, 1.0)
    with pytest.raises(TypeError):
        phase(2.0, 1.0)
    with pytest.raises(ValueError):
        harmonic_mass(1, 3)
