"""Certified scanning of g(t) = 1 + sum_{n in S} n^(-1-it) for finite S.

A cell [u, v] is zero-free when both endpoint values exceed L*(v-u)/2 plus
the evaluation error, with L = sum (ln n)/n a bound on |g'|.  Cells that
fail are bisected down to a floor width and reported if still open.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .powersum import interval_sum
from .setrep import Block
from .summation import U, cascade_sum

EVAL_SAFETY = 10.0
DEFAULT_H_MIN = 1e-12
# blocks at most this long (and below 2**53) are expanded into explicit terms
EXPAND_LEN = 4096
_GRID_CHUNK = 1 << 16
_TILE = 1 << 18
PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class FiniteSet:
    elements: tuple[int, ...]

    def __post_init__(self):
        els = tuple(int(e) for e in self.elements)
        object.__setattr__(self, "elements", els)
        for a, b in zip(els, els[1:]):
            if b <= a:
                raise ValueError(f"elements must be sorted and distinct: {a} then {b}")
        if els and els[0] < 2:
            raise ValueError(f"elements must be >= 2, got {els[0]}")

    @classmethod
    def parse(cls, text: str) -> "FiniteSet":
        """Accepts '2,3,5' or a JSON list; the empty string is the empty set."""
        text = text.strip()
        if text.startswith("["):
            vals = json.loads(text)
        elif text:
            vals = [int(p) for p in text.split(",") if p.strip()]
        else:
            vals = []
        return cls(tuple(sorted(int(v) for v in vals)))

    @property
    def blocks(self) -> tuple[Block, ...]:
        return tuple(Block(n, 1) for n in self.elements)


class _Model:
    """Explicit small terms (vectorised over t) plus long blocks (per t)."""

    def __init__(self, S):
        blocks = S.blocks
        explicit, big = [], []
        for b in blocks:
            if b.len <= EXPAND_LEN and b.end < 2**53:
                explicit.extend(range(b.start, b.end))
            else:
                big.append(b)
        self.n = np.array(explicit, dtype=np.float64)
        self.logn = np.array([math.log(k) for k in explicit], dtype=np.float64)
        self.inv = 1.0 / self.n
        self.big = big

    def eval(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ts = np.asarray(ts, dtype=np.float64)
        k = self.logn.size
        rows = max(1, _TILE // (k + 1))
        vals, errs = [], []
        for i in range(0, ts.size, rows):
            tt = ts[i:i + rows, None]
            ang = -tt * self.logn
            one = np.ones((tt.shape[0], 1))
            vr, er = cascade_sum(np.concatenate([one, self.inv * np.cos(ang)], axis=1))
            vi, ei = cascade_sum(np.concatenate([0 * one, self.inv * np.sin(ang)], axis=1))
            # rounded ln, product and trig: a few ulps of the angle, then of 1/n
            pe = (self.inv * (8 * U * (np.abs(ang) + 2.0))).sum(axis=1) * (1 + 1e-9)
            vals.append(vr + 1j * vi)
            errs.append(pe + er + ei)
        val = np.concatenate(vals) if vals else np.ones(0, complex)
        err = np.concatenate(errs) if errs else np.zeros(0)
        if self.big:
            bv = np.zeros_like(val)
            be = np.zeros_like(ts)
            for i, t in enumerate(ts):
                for b in self.big:
                    s = interval_sum(b.start, b.len, float(t), cap=EXPAND_LEN, order=2)
                    bv[i] += s.value
                    be[i] += s.err
            val = val + bv
            err = err + be + 2 * U * np.abs(val) * (len(self.big) + 1)
        return val, EVAL_SAFETY * err


def _model(S) -> _Model:
    if isinstance(S, _Model):
        return S
    return _Model(S)


def g(S, t: float) -> complex:
    v, _ = _model(S).eval(np.array([float(t)]))
    return complex(v[0])


def g_with_err(S, t: float) -> tuple[complex, float]:
    v, e = _model(S).eval(np.array([float(t)]))
    return complex(v[0]), float(e[0])


def _block_lipschitz(b: Block) -> float:
    """Upper bound on sum (ln n)/n over a block."""
    a, last = b.start, b.last
    total = 0.0
    if a == 2:
        total += math.log(2) / 2
        a = 3
        if a > last:
            return total
    with mpmath.workprec(80):
        la, lb = mpmath.log(a), mpmath.log(last)
        # (ln x)/x decreases for x >= e: sum <= f(a) + integral_a^last f
        val = la / a + (lb * lb - la * la) / 2
        return total + float(val) * (1 + 1e-12)


def lipschitz_bound(S) -> float:
    """L >= sup_t |g'(t)|, since |g'| <= sum (ln n)/n."""
    vals = []
    for b in S.blocks:
        if b.len <= EXPAND_LEN and b.end < 2**53:
            vals.extend(math.log(k) / k for k in range(b.start, b.end))
        else:
            vals.append(_block_lipschitz(b))
    if not vals:
        return 0.0
    s = math.fsum(vals)
    return math.nextafter(s * (1 + 4 * U * len(vals)), math.inf)


@dataclass
class ScanReport:
    interval: tuple[float, float]
    grid_step: float
    lipschitz_L: float
    min_abs_g: float
    argmin_t: float
    certified_zero_free: bool
    uncertified_cells: list[tuple[float, float]] = field(default_factory=list)
    evaluations: int = 0
    h_min: float = DEFAULT_H_MIN
    max_eval_err: float = 0.0
    grid_min_abs_g: float = math.nan
    grid_argmin_t: float = math.nan
    budget_exhausted: bool = False
    grid_t: np.ndarray | None = field(default=None, repr=False)
    grid_g: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        assert self.min_abs_g >= 0
        assert not (self.certified_zero_free and self.uncertified_cells)

    def to_json(self) -> dict:
        return {
            "interval": [repr(self.interval[0]), repr(self.interval[1])],
            "grid_step": repr(self.grid_step),
            "lipschitz_L": repr(self.lipschitz_L),
            "min_abs_g": repr(self.min_abs_g),
            "argmin_t": repr(self.argmin_t),
            "grid_min_abs_g": repr(self.grid_min_abs_g),
            "grid_argmin_t": repr(self.grid_argmin_t),
            "certified_zero_free": self.certified_zero_free,
            "uncertified_cells": [[repr(a), repr(b)] for a, b in self.uncertified_cells],
            "evaluations": self.evaluations,
            "h_min": repr(self.h_min),
            "max_eval_err": repr(self.max_eval_err),
            "budget_exhausted": self.budget_exhausted,
        }


def _grid(t0: float, t1: float, n_cells: int) -> np.ndarray:
    # (t0 (N-j) + t1 j) / N is exactly mirror-symmetric under t -> -t
    j = np.arange(n_cells + 1, dtype=np.float64)
    return (t0 * (n_cells - j) + t1 * j) / n_cells


def _eval_grid(model: _Model, ts: np.ndarray, workers: int):
    chunks = [ts[i:i + _GRID_CHUNK] for i in range(0, ts.size, _GRID_CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(model.eval, chunks))
    else:
        parts = [model.eval(c) for c in chunks]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _cell_ok(L: float, lo: float, hi: float, alo: float, ahi: float, elo: float, ehi: float) -> bool:
    w = (hi - lo) * (1 + 4 * U)
    return min(alo - elo, ahi - ehi) > L * w / 2


def scan(
    S,
    t0: float,
    t1: float,
    h: float,
    h_min: float = DEFAULT_H_MIN,
    workers: int | None = None,
    refine: bool = True,
    max_evaluations: int = 10**7,
    keep_grid: bool = False,
) -> ScanReport:
    if not h > 0:
        raise ValueError(f"grid step h must be > 0, got {h}")
    if not t0 < t1:
        raise ValueError(f"need t0 < t1, got [{t0}, {t1}]")
    workers = workers or min(4, os.cpu_count() or 1)
    model = _model(S)
    L = lipschitz_bound(S)
    n_cells = max(1, math.ceil((t1 - t0) / h))
    ts = _grid(float(t0), float(t1), n_cells)
    vals, errs = _eval_grid(model, ts, workers)
    absg = np.abs(vals)
    evals = ts.size

    w = (ts[1:] - ts[:-1]) * (1 + 4 * U)
    ok = np.minimum(absg[:-1] - errs[:-1], absg[1:] - errs[1:]) > L * w / 2
    best_i = int(np.argmin(absg))
    best_v, best_t = float(absg[best_i]), float(ts[best_i])
    max_err = float(errs.max())

    uncertified: list[tuple[float, float]] = []
    exhausted = False
    for j in np.flatnonzero(~ok):
        stack = [(float(ts[j]), float(ts[j + 1]), float(absg[j]), float(absg[j + 1]), float(errs[j]), float(errs[j + 1]))]
        while stack:
            lo, hi, alo, ahi, elo, ehi = stack.pop()
            if _cell_ok(L, lo, hi, alo, ahi, elo, ehi):
                continue
            mid = (lo + hi) / 2
            if hi - lo <= h_min or not (lo < mid < hi) or evals >= max_evaluations:
                exhausted |= evals >= max_evaluations
                uncertified.append((lo, hi))
                continue
            gm, em = g_with_err(model, mid)
            am = abs(gm)
            evals += 1
            max_err = max(max_err, em)
            if am < best_v or (am == best_v and abs(mid) < abs(best_t)):
                best_v, best_t = am, mid
            stack.append((mid, hi, am, ahi, em, ehi))
            stack.append((lo, mid, alo, am, elo, em))
    uncertified.sort()

    grid_v, grid_t = float(absg[best_i]), float(ts[best_i])
    if refine and ts.size >= 3:
        inner = absg[1:-1]
        is_min = (inner <= absg[:-2]) & (inner <= absg[2:])
        cand = np.flatnonzero(is_min) + 1
        cand = cand[np.argsort(absg[cand], kind="stable")][:5]
        for i in cand:
            res = refine_min(model, float(ts[i - 1]), float(ts[i + 1]), tol=1e-10)
            evals += res.evaluations
            if res.value < best_v:
                best_v, best_t = res.value, res.t

    return ScanReport(
        interval=(float(t0), float(t1)),
        grid_step=float((t1 - t0) / n_cells),
        lipschitz_L=L,
        min_abs_g=best_v,
        argmin_t=best_t,
        certified_zero_free=not uncertified,
        uncertified_cells=uncertified,
        evaluations=evals,
        h_min=h_min,
        max_eval_err=max_err,
        grid_min_abs_g=grid_v,
        grid_argmin_t=grid_t,
        budget_exhausted=exhausted,
        grid_t=ts if keep_grid else None,
        grid_g=vals if keep_grid else None,
    )


@dataclass
class RefineResult:
    t: float
    value: float
    bracketed: bool
    evaluations: int


def refine_min(S, t_lo: float, t_hi: float, tol: float = 1e-10, max_iter: int = 200) -> RefineResult:
    """Golden-section search for a local minimum of |g|^2 on [t_lo, t_hi].

    The best point ever evaluated is returned, so a smaller ``tol`` can
    only lower the reported value.  If the bracket does not contain an
    interior minimum the result is flagged and the better endpoint wins.
    """
    model = _model(S)

    def f(t):
        v = g(model, t)
        return v.real * v.real + v.imag * v.imag

    a, b = float(t_lo), float(t_hi)
    fa, fb = f(a), f(b)
    x1, x2 = b - PHI * (b - a), a + PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    n = 4
    seen = [(fa, a), (fb, b), (f1, x1), (f2, x2)]
    bracketed = min(f1, f2) <= min(fa, fb)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - PHI * (b - a)
            f1 = f(x1)
            seen.append((f1, x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + PHI * (b - a)
            f2 = f(x2)
            seen.append((f2, x2))
        n += 1
    fbest, tbest = min(seen)
    return RefineResult(t=tbest, value=math.sqrt(fbest), bracketed=bracketed, evaluations=n)
