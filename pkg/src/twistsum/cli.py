"""Command line: construct, verify, scan, demo967.

Exit codes: 0 success, 1 usage, 2 invariant/verification failure,
3 non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import setrep
from .construct import ConstructionError, TargetSpec, clamp_radius, construct, verify
from .scanner import FiniteSet, g_with_err, scan

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_NONCONV = 0, 1, 2, 3
HUGE_DIGITS = 10**4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_complex(text: str) -> complex:
    """'re,im' (or a bare real) -> complex."""
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _spec_from_args(args) -> TargetSpec:
    if args.t == 0:
        raise UsageError("--t: t must be nonzero (the construction requires t != 0)")
    if args.epsilon <= 0:
        raise UsageError(f"--epsilon: must be > 0, got {args.epsilon}")
    if args.n0 < 2:
        raise UsageError(f"--n0: must be >= 2, got {args.n0}")
    if args.max_blocks < 1:
        raise UsageError(f"--max-blocks: must be >= 1, got {args.max_blocks}")
    kw = dict(epsilon=args.epsilon, N0=args.n0, max_blocks=args.max_blocks, detour=getattr(args, "detour", False))
    try:
        if args.delta is not None:
            if args.rho is not None:
                raise UsageError("--rho and --delta are mutually exclusive")
            return TargetSpec.with_budget(args.t, args.lam, args.delta, **kw)
        return TargetSpec(t=args.t, lam=args.lam, rho=args.rho, **kw)
    except ValueError as e:
        field = "--rho" if "rho" in str(e) else "--delta" if "delta" in str(e) else "--lambda"
        raise UsageError(f"{field}: {e}") from None


def predicted_start_digits(spec: TargetSpec) -> float:
    """Rough upper estimate of the decimal digits of the last block start."""
    lam = abs(spec.lam)
    if lam == 0 and not spec.detour:
        return 0.0
    k = math.ceil(2 * max(lam, spec.rho) / spec.rho) + math.ceil(math.log2(max(spec.rho / spec.epsilon, 1.0))) + 2
    floor = max(math.log10(spec.N0), 2 * math.log10(max(1 / spec.epsilon, 1.0)))
    return floor + k * (2 * math.pi / abs(spec.t)) / math.log(10)


def _check_growth(spec: TargetSpec, allow: bool) -> None:
    d = predicted_start_digits(spec)
    if d > HUGE_DIGITS:
        msg = (
            f"block starts may reach ~10^{d:.0f} (more than {HUGE_DIGITS} digits) "
            f"because consecutive admissible starts differ by a factor e^(2pi/|t|)"
        )
        if not allow:
            raise UsageError(msg + "; pass --allow-huge to run anyway")
        print(f"warning: {msg}", file=sys.stderr)


def _headline(res) -> str:
    return (
        f"|lambda - sum_S n^(-1-it)| <= |residual| + err = "
        f"{abs(res.residual):.6e} + {res.err_budget:.6e} = {res.certified_bound:.6e}"
    )


def _add_spec_args(p, t_required: bool = True):
    p.add_argument("--t", type=float, required=t_required, default=None, help="imaginary part t != 0")
    p.add_argument("--lambda", dest="lam", type=parse_complex, default=-1 + 0j, help="target 're,im'")
    p.add_argument("--epsilon", type=float, default=1e-9)
    p.add_argument("--n0", type=int, default=2, help="all elements >= N0")
    p.add_argument("--rho", type=float, default=None, help="clamp radius (default r)")
    p.add_argument("--delta", type=float, default=None, help="harmonic budget |lambda| + delta")
    p.add_argument("--max-blocks", type=int, default=200)


def cmd_construct(args) -> int:
    spec = _spec_from_args(args)
    _check_growth(spec, args.allow_huge)
    try:
        res = construct(spec)
    except ConstructionError as e:
        print(f"invariant violation: {e} {e.context}", file=sys.stderr)
        return EXIT_FAIL
    out = Path(args.out)
    report = Path(args.report) if args.report else out.with_suffix(".report.json")
    _write(out, setrep.save(res.set))
    _write(report, _dump(res.to_json()))
    print(f"blocks: {len(res.set.blocks)}  harmonic mass: {res.set.total_mass.value.real:.12f}")
    print(_headline(res))
    print(f"wrote {out} and {report}")
    if not res.converged:
        print(f"NOT CONVERGED: |residual| {abs(res.residual):.3e} > epsilon {spec.epsilon:.1e} "
              f"after {spec.max_blocks} blocks", file=sys.stderr)
        return EXIT_NONCONV
    return EXIT_OK


def _print_checks(rep) -> None:
    for name, ok, detail in rep.checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))


def cmd_verify(args) -> int:
    try:
        bs = setrep.load(Path(args.set).read_text())
    except (OSError, setrep.SetError) as e:
        print(f"[FAIL] load: {e}")
        return EXIT_FAIL
    if args.report:
        try:
            spec = TargetSpec.from_json(json.loads(Path(args.report).read_text())["spec"])
        except (OSError, KeyError, ValueError, TypeError) as e:
            print(f"[FAIL] report: {e}")
            return EXIT_FAIL
    else:
        if args.t is None:
            args.t = bs.t
        spec = _spec_from_args(args)
    rep = verify(bs, spec, replay=not args.no_replay)
    _print_checks(rep)
    print(f"|lambda - sum| = {rep.distance:.6e} <= epsilon + err = {spec.epsilon:.1e} + {rep.err:.6e}")
    return EXIT_OK if rep.ok else EXIT_FAIL


def _load_scan_set(args):
    if args.set_file:
        return setrep.load(Path(args.set_file).read_text())
    return FiniteSet.parse(args.set)


def cmd_scan(args) -> int:
    if not args.h > 0:
        raise UsageError(f"--h: must be > 0, got {args.h}")
    if not args.t0 < args.t1:
        raise UsageError(f"--t0/--t1: need t0 < t1, got [{args.t0}, {args.t1}]")
    try:
        S = _load_scan_set(args)
    except (OSError, ValueError) as e:
        raise UsageError(f"--set: {e}") from None
    rep = scan(S, args.t0, args.t1, args.h, h_min=args.h_min, workers=args.workers,
               keep_grid=bool(args.csv), max_evaluations=args.max_evaluations)
    if args.csv:
        p = Path(args.csv)
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re_g", "im_g", "abs_g"])
            for t, v in zip(rep.grid_t, rep.grid_g):
                w.writerow([repr(float(t)), repr(v.real), repr(v.imag), repr(abs(v))])
    if args.json:
        _write(Path(args.json), _dump(rep.to_json()))
    print(f"L = {rep.lipschitz_L:.6f}  evaluations = {rep.evaluations}")
    print(f"min |g| = {rep.min_abs_g:.12e} at t = {rep.argmin_t!r}")
    print(f"certified zero-free on [{args.t0}, {args.t1}]: {rep.certified_zero_free}")
    for lo, hi in rep.uncertified_cells[:20]:
        print(f"  suspect cell [{lo!r}, {hi!r}]")
    if len(rep.uncertified_cells) > 20:
        print(f"  ... {len(rep.uncertified_cells) - 20} more in the JSON report")
    if args.require_certified and not rep.certified_zero_free:
        return EXIT_FAIL
    return EXIT_OK


def cmd_demo967(args) -> int:
    if args.t == 0:
        raise UsageError("--t: t must be nonzero (the construction requires t != 0)")
    spec = TargetSpec(t=args.t, lam=-1.0, epsilon=args.epsilon)
    _check_growth(spec, args.allow_huge)
    res = construct(spec)
    print(f"t = {spec.t!r}, lambda = -1, r = {clamp_radius(spec.t)!r}, rho = {spec.rho!r}, N0 = {spec.N0}")
    print(f"blocks: {len(res.set.blocks)}, elements: {res.set.count}, harmonic mass: "
          f"{res.set.total_mass.value.real:.12f} (<= 2|lambda| = 2)")
    if not res.converged:
        print("NOT CONVERGED", file=sys.stderr)
        return EXIT_NONCONV
    rep = verify(res.set, spec)
    _print_checks(rep)
    gv, gerr = g_with_err(res.set, spec.t)
    err = gerr + res.err_budget
    print(f"|1 + sum_S n^(-1-it)| at t = {spec.t!r}: {abs(gv):.6e}")
    print(f"certified: |1 + sum| <= epsilon + err = {spec.epsilon:.1e} + {err:.6e}")
    ok = rep.ok and abs(gv) <= spec.epsilon + err
    if args.out:
        _write(Path(args.out), setrep.save(res.set))
        print(f"wrote {args.out}")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twistsum", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    c = sub.add_parser("construct", help="build S with sum n^(-1-it) ~ lambda")
    _add_spec_args(c)
    c.add_argument("--detour", action="store_true", help="nonempty output for lambda = 0")
    c.add_argument("--out", default="blockset.json")
    c.add_argument("--report", default=None)
    c.add_argument("--allow-huge", action="store_true")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", help="re-audit a saved block set")
    v.add_argument("set")
    v.add_argument("--report", default=None, help="take the target spec from a construct report")
    _add_spec_args(v, t_required=False)
    v.add_argument("--no-replay", action="store_true")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("scan", help="certified zero scan of 1 + sum n^(-1-it)")
    s.add_argument("--set", default="2,3,5", help="'2,3,5' or a JSON list")
    s.add_argument("--set-file", default=None, help="block set JSON (e.g. construct output)")
    s.add_argument("--t0", type=float, default=0.0)
    s.add_argument("--t1", type=float, default=1000.0)
    s.add_argument("--h", type=float, default=1e-3)
    s.add_argument("--h-min", type=float, default=1e-12)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--max-evaluations", type=int, default=10**7)
    s.add_argument("--csv", default=None)
    s.add_argument("--json", default=None)
    s.add_argument("--require-certified", action="store_true", help="exit 2 unless zero-free")
    s.set_defaults(func=cmd_scan)

    d = sub.add_parser("demo967", help="lambda = -1: a zero of 1 + sum over an infinite-type S")
    d.add_argument("--t", type=float, default=1.0)
    d.add_argument("--epsilon", type=float, default=1e-9)
    d.add_argument("--out", default=None)
    d.add_argument("--allow-huge", action="store_true")
    d.set_defaults(func=cmd_demo967)
    return p


def _glue_values(argv: list[str]) -> list[str]:
    # argparse takes "-1,0" for an option flag; bind it to its option explicitly
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


_VALUE_FLAGS = {"--lambda", "--t", "--t0", "--t1", "--rho", "--delta", "--epsilon"}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_values(argv))
    try:
        return args.func(args)
    except UsageError as e:
        print(f"twistsum {args.cmd}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
