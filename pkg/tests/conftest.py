import functools

import mpmath
import pytest

from twistsum.construct import TargetSpec, construct

DEMO_TS = (1.0, 0.7, 5.0, -2.0)


@functools.lru_cache(maxsize=None)
def built(t: float, lam: complex = -1 + 0j, epsilon: float = 1e-9, rho: float | None = None, N0: int = 2):
    return construct(TargetSpec(t=t, lam=lam, epsilon=epsilon, rho=rho, N0=N0))


@pytest.fixture(scope="session")
def demo_runs():
    return {t: built(t) for t in DEMO_TS}


def mp_block_sum(a: int, length: int, t: float, dps: int = 40) -> complex:
    """Independent high-precision oracle: term-by-term mpmath sum."""
    with mpmath.workdps(dps):
        s = mpmath.fsum(mpmath.power(n, mpmath.mpc(-1, -t)) for n in range(a, a + length))
        return complex(s)
