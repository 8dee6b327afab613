"""Certified sums of n^(-1-it) and 1/n over runs of consecutive integers.

Block starts in the construction grow far past 2**53, so every phase
-t*ln(n) is reduced modulo 2*pi in extended precision (mpmath) before it
touches a float.  Long runs are summed with Euler-Maclaurin, short ones
directly with compensated accumulation.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import mpmath
import numpy as np

from .summation import cascade_sum

BigStart = int

EPS = 2.0**-52
TWO_PI = 2.0 * math.pi

# Absolute bound on the error of a reduced phase returned by _reduced_phase.
# Working precision keeps >= 96 fractional bits, so this is very loose.
PHASE_ERR = 2.0**-60

DEFAULT_DIRECT_CAP = 10**7
CAP_ENV = "TWISTSUM_DIRECT_CAP"

# Below this start the Euler-Maclaurin remainder is too coarse; the
# dispatcher sums such heads directly.
EM_MIN_START = 2**14

_CHUNK = 1 << 20

# sup |periodic B_m(x)| / m!  <=  2 zeta(m) / (2 pi)^m  for m >= 2;  1/2 for m = 1.
_ZETA_UPPER = {3: 1.2020569031595943, 5: 1.0369277551433700}


class CapExceeded(ValueError):
    """Direct summation refused because the run is longer than the cap."""


@dataclass(frozen=True)
class CertifiedSum:
    value: complex
    err: float

    def __post_init__(self):
        if not (self.err >= 0.0 and math.isfinite(self.err)):
            raise ValueError(f"err must be finite and >= 0, got {self.err!r}")

    def __add__(self, other: "CertifiedSum") -> "CertifiedSum":
        v = self.value + other.value
        return CertifiedSum(v, _up(self.err + other.err + EPS * abs(v)))

    @property
    def real(self) -> float:
        return self.value.real

    def contains(self, x: complex, slack: float = 0.0) -> bool:
        return abs(x - self.value) <= self.err + slack


ZERO = CertifiedSum(0j, 0.0)


def _up(x: float) -> float:
    # one-ulp-ish outward rounding for accumulated bounds
    return x * (1.0 + 4 * EPS) + 1e-300 if x else 0.0


def direct_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    if raw is None:
        return DEFAULT_DIRECT_CAP
    cap = int(raw)
    if cap < 1:
        raise ValueError(f"{CAP_ENV} must be a positive integer, got {raw!r}")
    return cap


def _check_n(n: int, lo: int = 1) -> None:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise TypeError(f"expected an integer, got {type(n).__name__}")
    if n < lo:
        raise ValueError(f"integer argument must be >= {lo}, got {n}")


def _int_bits(x: float) -> int:
    return max(1, math.frexp(x)[1]) if x > 0 else 1


def _phase_prec(n: int, t: float) -> int:
    # ln n <= 0.7 * bit_length(n); keep 96 bits below the binary point
    mag = abs(t) * (0.7 * n.bit_length() + 1.0) + 1.0
    return _int_bits(mag) + 96


def _reduced_phase(n: int, t: float) -> mpmath.mpf:
    """(-t ln n) mod 2pi as an mpf in [0, 2pi), at the current workprec."""
    x = -mpmath.mpf(t) * mpmath.log(mpmath.mpf(n))
    two_pi = 2 * mpmath.pi
    r = x - two_pi * mpmath.floor(x / two_pi)
    if r < 0 or r >= two_pi:
        r = mpmath.mpf(0)
    return r


def phase(n: BigStart, t: float) -> float:
    """Angle of n^(-it), i.e. (-t ln n) mod 2pi, in [0, 2pi).

    Absolute error is below 2**-60 plus the final rounding to double, for
    any size of n.
    """
    _check_n(n)
    n = int(n)
    t = float(t)
    if n == 1 or t == 0.0:
        return 0.0
    with mpmath.workprec(_phase_prec(n, t)):
        r = float(_reduced_phase(n, t))
    return 0.0 if r >= TWO_PI else r


def _unit(n: int, t: float) -> complex:
    phi = phase(n, t)
    return complex(math.cos(phi), math.sin(phi))


def term(n: BigStart, t: float) -> complex:
    """n^(-1-it)."""
    _check_n(n)
    n = int(n)
    if n == 1:
        return 1 + 0j
    u = _unit(n, t)
    inv = 1.0 / n  # int/int true division: correctly rounded even for huge n
    return complex(inv * u.real, inv * u.imag)


def _direct_chunk(a: int, a_f: float, base: float, j: np.ndarray, t: float):
    """Terms (a+j)^(-1-it) for offsets j and a per-term error bound."""
    n_f = a_f + j
    inv = 1.0 / n_f
    if t == 0.0:
        return inv, np.zeros_like(inv), inv * (4 * EPS)
    off = t * np.log1p(j / a_f)
    ang = base - off
    re = inv * np.cos(ang)
    im = inv * np.sin(ang)
    dang = PHASE_ERR + 2.0**-51 + 16 * EPS * (np.abs(ang) + np.abs(off) + abs(t) + 2.0)
    return re, im, inv * (dang + 8 * EPS)


def interval_sum_direct(a: BigStart, length: int, t: float, cap: int | None = None) -> CertifiedSum:
    """Sum of n^(-1-it) for n in [a, a+length), term by term.

    Phases are offset from an extended-precision phase at ``a`` so the
    accuracy does not depend on the size of ``a``.
    """
    _check_n(a)
    _check_n(length)
    a, length, t = int(a), int(length), float(t)
    cap = direct_cap() if cap is None else cap
    if length > cap:
        raise CapExceeded(f"length {length} exceeds direct-sum cap {cap}; use interval_sum_em")
    a_f = float(a)
    base = phase(a, t) if t != 0.0 else 0.0
    parts_re, parts_im, err = [], [], 0.0
    for lo in range(0, length, _CHUNK):
        j = np.arange(lo, min(length, lo + _CHUNK), dtype=np.float64)
        re, im, e = _direct_chunk(a, a_f, base, j, t)
        sr, er = cascade_sum(re)
        si, ei = cascade_sum(im)
        parts_re.append(sr)
        parts_im.append(si)
        err += float(e.sum()) * (1 + 1e-9) + er + ei
    v = complex(math.fsum(parts_re), math.fsum(parts_im))
    return CertifiedSum(v, _up(err + EPS * (abs(v.real) + abs(v.imag))))


def _em_remainder(a: int, b: int, t: float, order: int) -> float:
    m = 2 * order + 1
    const = 0.5 if m == 1 else 2 * _ZETA_UPPER[m] / (2 * math.pi) ** m
    prod = 1.0
    for j in range(1, m + 1):
        prod *= math.hypot(j, t)
    with mpmath.workprec(80):
        span = mpmath.mpf(a) ** -m - mpmath.mpf(b) ** -m
        r = float(const * prod * span / m)
    return _up(r * (1 + 1e-12))


def interval_sum_em(a: BigStart, length: int, t: float, order: int = 1) -> CertifiedSum:
    """Euler-Maclaurin evaluation of sum n^(-1-it), n in [a, a+length).

    Everything is expressed relative to a^(-it), so the one extended
    precision phase reduction at ``a`` is the only place size matters.
    ``err`` carries the remainder bound sup|B~_m|/m! * int |f^(m)|, m = 2*order+1.
    """
    _check_n(a, 2)
    _check_n(length)
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    a, length, t = int(a), int(length), float(t)
    b = a + length
    prec = _phase_prec(b, t)
    with mpmath.workprec(prec):
        ma, mb = mpmath.mpf(a), mpmath.mpf(b)
        ratio = mpmath.mpf(length) / ma
        if t == 0.0:
            u = mpmath.mpc(1)
            w = mpmath.mpc(1)
            integral = mpmath.log1p(ratio)
        else:
            th = _reduced_phase(a, t)
            u = mpmath.expj(th)
            theta = mpmath.mpf(t) * mpmath.log1p(ratio)
            w = mpmath.expj(-theta)
            integral = -mpmath.expm1(-1j * theta) / (1j * t)
        # half-open run: sum_{a}^{b-1} = sum_{a}^{b} - f(b)
        inner = integral + (1 / ma - w / mb) / 2
        s = mpmath.mpc(1, t)
        coeff = -s  # f'(x) x^{it} = -(1+it) x^{-2}
        if order >= 1:
            inner += mpmath.mpf(1) / 12 * coeff * (w / mb**2 - 1 / ma**2)
        if order >= 2:
            coeff3 = -s * (s + 1) * (s + 2)
            inner += -mpmath.mpf(1) / 720 * coeff3 * (w / mb**4 - 1 / ma**4)
        val = u * inner
        v = complex(val)
        mag = float(abs(inner))
    err = _em_remainder(a, b, t, order) + mag * 2.0 * PHASE_ERR + 2 * EPS * abs(v)
    return CertifiedSum(v, _up(err))


def harmonic_mass(a: BigStart, length: int, cap: int | None = None) -> CertifiedSum:
    """Sum of 1/n for n in [a, a+length), real-valued CertifiedSum."""
    _check_n(a, 2)
    _check_n(length)
    s = interval_sum(a, length, 0.0, cap=cap)
    return CertifiedSum(complex(s.value.real, 0.0), s.err)


def interval_sum(a: BigStart, length: int, t: float, cap: int | None = None, order: int = 1) -> CertifiedSum:
    """Dispatch: direct up to the cap, Euler-Maclaurin beyond it.

    A long run that starts low has its head (below EM_MIN_START) summed
    directly so the remainder bound stays small.
    """
    _check_n(a)
    _check_n(length)
    a, length = int(a), int(length)
    cap = direct_cap() if cap is None else cap
    if length <= cap:
        return interval_sum_direct(a, length, t, cap=cap)
    if a >= EM_MIN_START:
        return interval_sum_em(a, length, t, order=order)
    h = EM_MIN_START - a
    if length <= h:
        return interval_sum_direct(a, length, t, cap=length)
    head = interval_sum_direct(a, h, t, cap=max(cap, h))
    return head + interval_sum_em(EM_MIN_START, length - h, t, order=order)
