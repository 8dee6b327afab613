"""Greedy block construction driving sum_{n in S} n^(-1-it) to a target.

Each step clamps the residual to a correction c of norm <= rho, places a
block [x, x + floor(x|c|)) whose start has x^(-it) parallel to c, and
subtracts the block's certified sum from the residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from . import powersum
from .powersum import EPS, CertifiedSum, harmonic_mass, interval_sum
from .setrep import Block, BlockSet, append_block, check_blocks, OverlapError

# audited inequalities get additive slack of this many certified err bounds
SLACK_FACTOR = 10.0
# absolute allowance on any computed phase
ANGLE_ERR = 2.0**-40
# cap on candidate windings tried when placing a block start
MAX_WINDINGS = 10**6


class ConstructionError(RuntimeError):
    """An audited inequality failed; this is a bug or a misconfiguration."""

    def __init__(self, message: str, **context):
        self.context = context
        super().__init__(message)


def clamp_radius(t: float) -> float:
    return 1.0 / (2.0 + 2.0 * math.hypot(1.0, t))


def clamp(lam: complex, rho: float) -> complex:
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    m = abs(lam)
    if m <= rho:
        return complex(lam)
    return lam * (rho / m)


@dataclass(frozen=True)
class TargetSpec:
    t: float
    lam: complex
    epsilon: float = 1e-9
    N0: int = 2
    rho: float | None = None
    max_blocks: int = 200
    detour: bool = False

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "lam", complex(self.lam))
        if not math.isfinite(self.t) or self.t == 0.0:
            raise ValueError("t must be a nonzero finite real (the construction needs t != 0)")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if isinstance(self.N0, bool) or not isinstance(self.N0, int) or self.N0 < 2:
            raise ValueError(f"N0 must be an integer >= 2, got {self.N0!r}")
        if not (math.isfinite(self.lam.real) and math.isfinite(self.lam.imag)):
            raise ValueError(f"lambda must be finite, got {self.lam}")
        r = clamp_radius(self.t)
        if self.rho is None:
            object.__setattr__(self, "rho", r)
        if not (0 < self.rho <= r):
            raise ValueError(f"rho must satisfy 0 < rho <= r = {r!r}, got {self.rho!r}")
        if self.max_blocks < 1:
            raise ValueError(f"max_blocks must be >= 1, got {self.max_blocks}")

    @classmethod
    def with_budget(cls, t: float, lam: complex, delta: float, **kw) -> "TargetSpec":
        """Pick rho so the harmonic mass stays below |lam| + delta."""
        if delta <= 0:
            raise ValueError(f"delta must be > 0, got {delta}")
        r = clamp_radius(t)
        rho = min(r, 2 * r * delta / (abs(complex(lam)) + delta))
        return cls(t=t, lam=lam, rho=rho, **kw)

    @property
    def r(self) -> float:
        return clamp_radius(self.t)

    def to_json(self) -> dict:
        return {
            "t": repr(self.t),
            "lambda_re": repr(self.lam.real),
            "lambda_im": repr(self.lam.imag),
            "epsilon": repr(self.epsilon),
            "N0": str(self.N0),
            "rho": repr(self.rho),
            "max_blocks": self.max_blocks,
            "detour": self.detour,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TargetSpec":
        return cls(
            t=float(d["t"]),
            lam=complex(float(d["lambda_re"]), float(d["lambda_im"])),
            epsilon=float(d["epsilon"]),
            N0=int(d["N0"]),
            rho=float(d["rho"]),
            max_blocks=int(d["max_blocks"]),
            detour=bool(d.get("detour", False)),
        )


@dataclass(frozen=True)
class LemmaBlock:
    c: complex
    block: Block | None
    sum: CertifiedSum
    mass: CertifiedSum
    phase_error: float = 0.0
    angular_slack: float = 0.0
    margin_mass: float = 0.0
    margin_approx: float = 0.0


def _wrap(x):
    """Map an angle to (-pi, pi]."""
    two_pi = 2 * mpmath.pi
    y = x - two_pi * mpmath.floor(x / two_pi)
    return y - two_pi if y > mpmath.pi else y


def _place_start(floor: int, arg_c: float, t: float) -> tuple[int, float]:
    """Smallest-winding integer x >= floor with x^(-it) nearly parallel to e^(i arg_c).

    Returns x and the signed phase error phase(x) - arg_c in (-pi, pi].
    """
    at = abs(t)
    # |t| ln x == phi (mod 2pi)
    phi_f = -arg_c if t > 0 else arg_c
    prec = powersum._phase_prec(floor, t) + 64
    with mpmath.workprec(prec):
        two_pi = 2 * mpmath.pi
        phi = mpmath.mpf(phi_f) % two_pi
        j = int(mpmath.ceil((at * mpmath.log(floor) - phi) / two_pi))
        j = max(j, 0)
    for _ in range(MAX_WINDINGS):
        with mpmath.workprec(prec):
            log_x = (two_pi * j + phi) / at
        bits = int(log_x / math.log(2)) + 1
        with mpmath.workprec(max(prec, bits + 64)):
            two_pi = 2 * mpmath.pi
            phi = mpmath.mpf(phi_f) % two_pi
            x_star = mpmath.exp((two_pi * j + phi) / at)
            lo = int(mpmath.floor(x_star))
            cands = [x for x in (lo, lo + 1) if x >= floor]
            if cands:
                best, best_err = None, None
                for x in cands:
                    with mpmath.workprec(powersum._phase_prec(x, t) + 32):
                        err = _wrap(powersum._reduced_phase(x, t) - mpmath.mpf(arg_c))
                        if best_err is None or abs(err) < abs(best_err):
                            best, best_err = x, err
                return best, float(best_err)
        j += 1
        prec = max(prec, bits + 64)
    raise ConstructionError("no admissible block start found", floor=floor, t=t, arg=arg_c)


def lemma_block(N: int, c: complex, t: float) -> LemmaBlock:
    """One correction block whose twisted sum approximates ``c``.

    The floor is raised to max(N, ceil |c|^-2, ceil |c|^-1); the start x
    is the first integer past it with x^(-it) parallel to c up to integer
    rounding, and the block has floor(x|c|) elements.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    t = float(t)
    if t == 0.0:
        raise ValueError("t must be nonzero")
    c = complex(c)
    if c == 0:
        return LemmaBlock(c=0j, block=None, sum=powersum.ZERO, mass=powersum.ZERO)
    absc = abs(c)
    qc = Fraction(absc)
    floor = max(int(N), math.ceil(1 / qc**2), math.ceil(1 / qc))
    arg_c = math.atan2(c.imag, c.real)
    x, dphi = _place_start(floor, arg_c, t)
    tol = abs(t) / (x - 1) + ANGLE_ERR
    if abs(dphi) > tol:
        raise ConstructionError("block start phase outside tolerance", x=x, phase_error=dphi, tol=tol)
    s = math.floor(x * qc)
    block = Block(x, s)
    ssum = interval_sum(x, s, t)
    mass = harmonic_mass(x, s)
    angular = absc * (abs(dphi) + ANGLE_ERR)
    bound = (1.0 + math.hypot(1.0, t)) * absc * absc
    margin_mass = absc + SLACK_FACTOR * mass.err - mass.value.real
    margin_approx = bound + angular + SLACK_FACTOR * ssum.err - abs(c - ssum.value)
    lb = LemmaBlock(c, block, ssum, mass, dphi, angular, margin_mass, margin_approx)
    if margin_mass < 0 or margin_approx < 0:
        raise ConstructionError("block violates its approximation bounds", lemma=lb)
    return lb


@dataclass(frozen=True)
class ConstructionState:
    k: int
    lambda_k: complex
    N_k: int
    c_history: tuple[float, ...] = ()
    err_budget: float = 0.0


@dataclass
class StepRecord:
    k: int
    lambda_before: complex
    lambda_after: complex
    lemma: LemmaBlock
    slack: float

    def to_json(self) -> dict:
        lb = self.lemma
        b = lb.block
        return {
            "k": self.k,
            "c_re": repr(lb.c.real),
            "c_im": repr(lb.c.imag),
            "start": str(b.start) if b else None,
            "len": str(b.len) if b else None,
            "sum_re": repr(lb.sum.value.real),
            "sum_im": repr(lb.sum.value.imag),
            "sum_err": repr(lb.sum.err),
            "mass": repr(lb.mass.value.real),
            "mass_err": repr(lb.mass.err),
            "phase_error": repr(lb.phase_error),
            "lemma_margin_1": repr(lb.margin_mass),
            "lemma_margin_2": repr(lb.margin_approx),
            "residual_before": repr(abs(self.lambda_before)),
            "residual_after": repr(abs(self.lambda_after)),
        }


def _advance(state: ConstructionState, lb: LemmaBlock) -> ConstructionState:
    lam = state.lambda_k - lb.sum.value
    err = state.err_budget + lb.sum.err + EPS * (abs(lam) + abs(state.lambda_k))
    nk = lb.block.end if lb.block else state.N_k
    return ConstructionState(state.k + 1, lam, nk, state.c_history + (abs(lb.c),), err)


def step(state: ConstructionState, spec: TargetSpec) -> tuple[ConstructionState, StepRecord]:
    lam = state.lambda_k
    c = clamp(lam, spec.rho)
    lb = lemma_block(state.N_k, c, spec.t) if c != 0 else lemma_block(2, 0j, spec.t)
    new = _advance(state, lb)
    slack = lb.angular_slack + SLACK_FACTOR * lb.sum.err + 8 * EPS * abs(lam)
    rec = StepRecord(state.k, lam, new.lambda_k, lb, slack)
    if abs(new.lambda_k) > abs(lam) - abs(c) / 2 + slack:
        raise ConstructionError(
            "residual failed to decrease by |c|/2",
            k=state.k, before=abs(lam), after=abs(new.lambda_k), c=abs(c), slack=slack,
        )
    return new, rec


@dataclass
class ConstructionResult:
    spec: TargetSpec
    set: BlockSet
    residual: complex
    converged: bool
    steps: list[StepRecord] = field(default_factory=list)
    err_budget: float = 0.0
    detour_used: bool = False

    @property
    def sum_abs_c(self) -> float:
        return math.fsum(abs(s.lemma.c) for s in self.steps)

    @property
    def certified_bound(self) -> float:
        """|lambda - sum over emitted blocks| is at most this."""
        return abs(self.residual) + self.err_budget

    def steps_above(self, level: float) -> int:
        return sum(1 for s in self.steps if abs(s.lambda_before) > level)

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "converged": self.converged,
            "detour": self.detour_used,
            "blocks": [s.to_json() for s in self.steps if s.lemma.block is not None],
            "totals": {
                "n_blocks": len(self.set.blocks),
                "residual_re": repr(self.residual.real),
                "residual_im": repr(self.residual.imag),
                "residual_abs": repr(abs(self.residual)),
                "err_budget": repr(self.err_budget),
                "certified_bound": repr(self.certified_bound),
                "sum_abs_c": repr(self.sum_abs_c),
                "total_mass": repr(self.set.total_mass.value.real),
                "total_mass_err": repr(self.set.total_mass.err),
                "steps_above_rho": self.steps_above(self.spec.rho),
            },
        }


def construct(spec: TargetSpec) -> ConstructionResult:
    state = ConstructionState(k=1, lambda_k=spec.lam, N_k=spec.N0)
    bs = BlockSet(t=spec.t)
    steps: list[StepRecord] = []
    detour = False
    if spec.detour and spec.lam == 0:
        # nonempty output for a zero target: overshoot by rho, then correct
        lb = lemma_block(state.N_k, complex(spec.rho), spec.t)
        bs = append_block(bs, lb.block, lb.sum, lb.mass)
        new = _advance(state, lb)
        steps.append(StepRecord(state.k, state.lambda_k, new.lambda_k, lb, 0.0))
        state, detour = new, True
    while abs(state.lambda_k) > spec.epsilon and len(steps) < spec.max_blocks:
        state, rec = step(state, spec)
        steps.append(rec)
        if rec.lemma.block is not None:
            bs = append_block(bs, rec.lemma.block, rec.lemma.sum, rec.lemma.mass)
    return ConstructionResult(
        spec=spec,
        set=bs,
        residual=state.lambda_k,
        converged=abs(state.lambda_k) <= spec.epsilon,
        steps=steps,
        err_budget=state.err_budget,
        detour_used=detour,
    )


@dataclass
class VerifyReport:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)
    distance: float = math.nan
    err: float = math.nan

    @property
    def ok(self) -> bool:
        return all(p for _, p, _ in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append((name, bool(passed), detail))

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "distance": repr(self.distance),
            "err": repr(self.err),
            "checks": [{"name": n, "passed": p, "detail": d} for n, p, d in self.checks],
        }


def verify(bs: BlockSet, spec: TargetSpec, replay: bool = True) -> VerifyReport:
    """Re-audit a block set from scratch against ``spec``.

    Sums are recomputed per block.  A replay of the deterministic
    construction catches edits too small to move any double-precision
    sum (a start shifted by one at 10^100).
    """
    rep = VerifyReport()
    rep.add("t matches spec", bs.t == spec.t, f"set t={bs.t!r}, spec t={spec.t!r}")
    try:
        check_blocks(bs.blocks)
        rep.add("blocks disjoint and increasing", True)
    except OverlapError as e:
        rep.add("blocks disjoint and increasing", False, str(e))
    low = bs.blocks[0].start if bs.blocks else None
    rep.add("floor respected", low is None or low >= spec.N0, f"first element {low}, N0 {spec.N0}")

    tot, mass = powersum.ZERO, powersum.ZERO
    for b in bs.blocks:
        tot = tot + interval_sum(b.start, b.len, bs.t)
        mass = mass + harmonic_mass(b.start, b.len)
    sum_slack = SLACK_FACTOR * (tot.err + bs.total_sum.err)
    rep.add(
        "stored total_sum matches recomputation",
        abs(tot.value - bs.total_sum.value) <= sum_slack,
        f"|diff|={abs(tot.value - bs.total_sum.value):.3e} slack={sum_slack:.3e}",
    )
    mass_slack = SLACK_FACTOR * (mass.err + bs.total_mass.err)
    rep.add(
        "stored total_mass matches recomputation",
        abs(mass.value.real - bs.total_mass.value.real) <= mass_slack,
        f"|diff|={abs(mass.value.real - bs.total_mass.value.real):.3e} slack={mass_slack:.3e}",
    )
    rep.distance = abs(spec.lam - tot.value)
    rep.err = tot.err + EPS * abs(spec.lam)
    rep.add(
        "target reached",
        rep.distance <= spec.epsilon + rep.err,
        f"|lambda - sum|={rep.distance:.3e} <= eps {spec.epsilon:.1e} + err {rep.err:.3e}",
    )
    if replay:
        try:
            canon = construct(spec).set.blocks
            same = canon == bs.blocks
            where = next((i for i, (p, q) in enumerate(zip(canon, bs.blocks)) if p != q), None)
            if where is None and not same:
                where = min(len(canon), len(bs.blocks))
            rep.add("blocks match deterministic replay", same, "" if same else f"first mismatch at block {where}")
        except (ConstructionError, ValueError) as e:
            rep.add("blocks match deterministic replay", False, f"replay failed: {e}")
    return rep
