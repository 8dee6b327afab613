import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistsum.scanner import FiniteSet, g, g_with_err, lipschitz_bound, refine_min, scan
from twistsum.setrep import Block, BlockSet

from conftest import built

S235 = FiniteSet((2, 3, 5))


def mp_g(elements, t, dps=30):
    with mpmath.workdps(dps):
        return complex(1 + mpmath.fsum(mpmath.power(n, -1 - 1j * mpmath.mpf(t)) for n in elements))


def test_g_at_zero():
    assert g(S235, 0.0) == pytest.approx(61 / 30, abs=1e-15)
    assert g(FiniteSet(()), 3.0) == 1


@given(st.floats(-500, 500))
def test_g_matches_mpmath(t):
    v, err = g_with_err(S235, t)
    assert abs(v - mp_g((2, 3, 5), t)) <= err
    assert err < 1e-14 * (abs(t) + 10)


@given(st.floats(-500, 500))
def test_g_conjugate_and_triangle(t):
    assert g(S235, -t) == pytest.approx(g(S235, t).conjugate(), abs=1e-15)
    assert abs(g(S235, t)) <= 61 / 30 + 1e-15
    assert abs(g(S235, t)) >= 1 - (1 / 2 + 1 / 3 + 1 / 5) - 1e-15


def test_g_large_block_set_matches_oracle():
    bs = BlockSet(t=1.0, blocks=(Block(2, 3), Block(10_000, 5000), Block(10**12, 10**5)))
    v, err = g_with_err(bs, 2.5)
    with mpmath.workdps(40):
        t = mpmath.mpf(2.5)
        s = mpmath.fsum(mpmath.power(n, -1 - 1j * t) for n in (2, 3, 4))
        s += mpmath.fsum(mpmath.power(n, -1 - 1j * t) for n in range(10_000, 15_000))
        s += mpmath.sumem(lambda n: mpmath.power(n, -1 - 1j * t), [10**12, 10**12 + 10**5 - 1])
        ref = complex(1 + s)
    assert abs(v - ref) <= err + 1e-15


def test_lipschitz_values():
    assert lipschitz_bound(FiniteSet((2,))) == pytest.approx(math.log(2) / 2, rel=1e-14)
    assert lipschitz_bound(FiniteSet((2,))) >= math.log(2) / 2
    assert lipschitz_bound(S235) == pytest.approx(math.log(2) / 2 + math.log(3) / 3 + math.log(5) / 5, rel=1e-14)
    assert lipschitz_bound(FiniteSet(())) == 0.0


def test_lipschitz_big_block_upper_bound():
    b = Block(10**6, 10**5)
    with mpmath.workdps(30):
        exact = mpmath.fsum(mpmath.log(n) / n for n in range(b.start, b.end))
    L = lipschitz_bound(BlockSet(t=1.0, blocks=(b,)))
    assert exact <= L <= exact * (1 + 1e-4)


def test_lipschitz_dominates_finite_differences():
    ts = np.linspace(-50, 50, 20001)
    vals = np.array([g(S235, t) for t in ts])
    slopes = np.abs(np.diff(vals)) / np.diff(ts)
    assert slopes.max() <= lipschitz_bound(S235)


def test_scan_single_element():
    rep = scan(FiniteSet((2,)), 0.0, 20.0, 1e-2)
    assert rep.certified_zero_free and not rep.uncertified_cells
    assert rep.min_abs_g == pytest.approx(0.5, abs=1e-12)
    k = round(rep.argmin_t * math.log(2) / math.pi)
    assert k % 2 == 1
    assert rep.argmin_t == pytest.approx(k * math.pi / math.log(2), abs=1e-5)


def test_refine_single_element():
    res = refine_min(FiniteSet((2,)), 4.0, 5.0)
    assert res.bracketed
    assert res.t == pytest.approx(math.pi / math.log(2), abs=1e-5)
    assert res.value == pytest.approx(0.5, abs=1e-12)


def test_refine_never_worse_than_endpoints():
    for lo in np.linspace(0, 100, 11):
        res = refine_min(S235, lo, lo + 3)
        ends = min(abs(g(S235, lo)), abs(g(S235, lo + 3)))
        assert res.value <= ends * (1 + 1e-15)


def test_refine_tolerance_monotone():
    coarse = refine_min(S235, 120.0, 125.0, tol=1e-3)
    fine = refine_min(S235, 120.0, 125.0, tol=1e-10)
    assert fine.value <= coarse.value


def test_refine_flags_missing_bracket():
    # |g| for {2} is increasing on [0, 1]
    res = refine_min(FiniteSet((2,)), 0.05, 1.0)
    assert not res.bracketed


def test_scan_certification_is_sound():
    rep = scan(S235, 0.0, 200.0, 1e-2)
    assert rep.certified_zero_free
    fine = np.linspace(0.0, 200.0, 200_001)
    m = min(abs(g(S235, t)) for t in fine[::10])
    assert m > 0 and rep.min_abs_g <= m + 1e-12


def test_scan_mirror_symmetry():
    a = scan(S235, 0.0, 150.0, 1e-2)
    b = scan(S235, -150.0, 0.0, 1e-2)
    assert a.min_abs_g == b.min_abs_g
    assert a.argmin_t == -b.argmin_t
    assert a.certified_zero_free == b.certified_zero_free


def test_scan_min_matches_mpmath():
    rep = scan(S235, 0.0, 1000.0, 1e-3)
    assert rep.certified_zero_free
    with mpmath.workdps(30):
        f = lambda t: abs(mp_g((2, 3, 5), t, dps=30))
        tmin = mpmath.findroot(
            lambda t: mpmath.diff(lambda u: f(u) ** 2, t), rep.argmin_t
        )
        ref = f(tmin)
    assert rep.min_abs_g == pytest.approx(float(ref), abs=1e-12)
    assert rep.min_abs_g <= rep.grid_min_abs_g


def test_scan_detects_zero():
    # 1 + 1/2 z + ... with element 2 only never vanishes, but a truncated
    # constructed set approximates -1 closely enough to stay uncertified
    res = built(1.0)
    L = lipschitz_bound(res.set)
    rep = scan(res.set, 0.9, 1.1, 1e-3, h_min=4 * res.spec.epsilon / L)
    assert not rep.certified_zero_free
    assert any(lo <= 1.0 <= hi for lo, hi in rep.uncertified_cells)
    assert rep.min_abs_g <= abs(res.residual) + 1e-10


def test_block_set_g_bounded_by_residual():
    res = built(1.0)
    v, err = g_with_err(res.set, 1.0)
    assert abs(v) <= abs(res.residual) + res.err_budget + err


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.0), (0.0, 1.0, -1.0), (1.0, 1.0, 0.1), (2.0, 1.0, 0.1)])
def test_scan_rejects_bad_input(args):
    with pytest.raises(ValueError):
        scan(S235, *args)


def test_scan_budget_exhausted():
    res = built(1.0)
    rep = scan(res.set, 0.9, 1.1, 1e-2, h_min=1e-15, max_evaluations=50, refine=False)
    assert not rep.certified_zero_free and rep.budget_exhausted


def test_scan_report_json_and_grid():
    rep = scan(S235, 0.0, 1.0, 0.25, keep_grid=True)
    doc = rep.to_json()
    assert doc["certified_zero_free"] is True
    assert float(doc["interval"][1]) == 1.0
    assert rep.grid_t.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert rep.grid_g.shape == (5,)


class TestFiniteSet:
    def test_parse_forms(self):
        assert FiniteSet.parse("2,3,5") == S235
        assert FiniteSet.parse("[5, 3, 2]") == S235
        assert FiniteSet.parse(" ").elements == ()

    @pytest.mark.parametrize("text", ["1,2", "2,2", "x", "[2, \"a\"]"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            FiniteSet.parse(text)

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError):
            FiniteSet((3, 2))

    def test_blocks(self):
        assert S235.blocks == (Block(2, 1), Block(3, 1), Block(5, 1))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(2, 10**6), min_size=1, max_size=30, unique=True), st.floats(-100, 100))
def test_random_sets_match_mpmath(els, t):
    S = FiniteSet(tuple(sorted(els)))
    v, err = g_with_err(S, t)
    assert abs(v - mp_g(S.elements, t)) <= err
