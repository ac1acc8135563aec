"""Command-line entry point: ``zml <subcommand> ...``.

Exit status is 0 on success, 1 when a request is well formed but cannot be
satisfied (message on stderr), 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass

import mpmath

from . import __version__, constants, moments, series, zeros
from .errors import DomainError, RangeExceeded
from .zeta_eval import EvalConfig, zeta_derivs

MIN_DIGITS, MAX_DIGITS = 10, 1000
COMPUTE_T_MAX = 1e5


@dataclass(frozen=True)
class GlobalConfig:
    digits: int = 50
    threads: int = 0
    out_format: str = "csv"

    def __post_init__(self):
        if not MIN_DIGITS <= self.digits <= MAX_DIGITS:
            raise ValueError(f"digits must be in [{MIN_DIGITS}, {MAX_DIGITS}]")
        if self.threads < 0:
            raise ValueError("threads must be >= 0")


def _digits(text: str) -> int:
    try:
        d = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not MIN_DIGITS <= d <= MAX_DIGITS:
        raise argparse.ArgumentTypeError(f"must be in [{MIN_DIGITS}, {MAX_DIGITS}]")
    return d


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive(text: str) -> int:
    v = _nonneg(text)
    if v == 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _real(text: str) -> str:
    try:
        mpmath.mpf(text)
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}")
    return text


def _source(text: str) -> str:
    if text == "compute" or (text.startswith("file:") and len(text) > 5):
        return text
    raise argparse.ArgumentTypeError("expected 'compute' or 'file:PATH'")


def default_digits() -> int:
    env = os.environ.get("ZML_DIGITS")
    if env is None:
        return 50
    try:
        return _digits(env)
    except argparse.ArgumentTypeError as exc:
        raise SystemExit(f"zml: ZML_DIGITS: {exc}")


def build_parser() -> argparse.ArgumentParser:
    digits = argparse.ArgumentParser(add_help=False)
    digits.add_argument("--digits", type=_digits, default=None,
                        help="decimal digits (default: $ZML_DIGITS or 50)")

    p = argparse.ArgumentParser(prog="zml", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=_nonneg, default=0, help="fan-out width, 0 = auto")
    p.add_argument("--format", dest="out_format", choices=("csv", "text"), default="csv")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constants", parents=[digits], help="table of gamma_j, C_j, A_j")
    c.add_argument("--max-index", type=_nonneg, default=4)

    r = sub.add_parser("residue", help="residue at s=1 as a polynomial in C_j and L")
    r.add_argument("--n", type=_nonneg, required=True)
    r.add_argument("--check", action="store_true", help="compare with the closed form")

    e = sub.add_parser("eval", parents=[digits], help="zeta and derivatives at sigma + i t")
    e.add_argument("--sigma", type=_real, required=True)
    e.add_argument("--t", type=_real, required=True)
    e.add_argument("--n", type=_nonneg, default=0)

    z = sub.add_parser("zeros", help="compute or load zero ordinates")
    src = z.add_mutually_exclusive_group(required=True)
    src.add_argument("--compute", action="store_true")
    src.add_argument("--load", metavar="PATH")
    z.add_argument("--t-max", type=float, required=True)
    z.add_argument("--out", metavar="PATH")
    z.add_argument("--riemann-siegel", action="store_true", help="Riemann-Siegel kernel where accurate enough")

    m = sub.add_parser("compare", parents=[digits], help="empirical vs asymptotic vs prime sum")
    m.add_argument("--n", type=_nonneg, required=True)
    m.add_argument("--t-max", type=_real, required=True)
    m.add_argument("--source", type=_source, default="compute")
    m.add_argument("--csv", metavar="OUT")
    m.add_argument("--grid", type=_positive)
    m.add_argument("--riemann-siegel", action="store_true", help="Riemann-Siegel kernel where accurate enough")
    return p


def _digits_of(args, gcfg: GlobalConfig) -> int:
    return args.digits if getattr(args, "digits", None) is not None else gcfg.digits


def cmd_constants(args, gcfg, out):
    d = _digits_of(args, gcfg)
    cs = constants.coefficient_set(args.max_index, d)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["j", "gamma_j", "C_j", "A_j"])
    for j in range(args.max_index + 1):
        w.writerow([j, mpmath.nstr(constants.stieltjes(j, d), d),
                    mpmath.nstr(cs.C[j], d), mpmath.nstr(cs.A[j], d)])
    return 0


def cmd_residue(args, gcfg, out):
    if args.n > 12:
        raise RangeExceeded("residue is supported for n <= 12")
    res = series.residue_at_1(args.n)
    out.write(str(res) + "\n")
    if args.check:
        same = res == series.theorem_coeffs(args.n)
        out.write("MATCH\n" if same else "MISMATCH\n")
        return 0 if same else 1
    return 0


def cmd_eval(args, gcfg, out):
    d = _digits_of(args, gcfg)
    cfg = EvalConfig.for_digits(d, max(args.n, 0))
    with mpmath.workdps(d + 10):
        s = mpmath.mpc(mpmath.mpf(args.sigma), mpmath.mpf(args.t))
        dv = zeta_derivs(s, args.n, cfg)
        out.write(f"s = {mpmath.nstr(s.real, d)} + {mpmath.nstr(s.imag, d)}i\n")
        for j, v in enumerate(dv.values):
            out.write(f"zeta^({j}) = {mpmath.nstr(v.real, d)} + {mpmath.nstr(v.imag, d)}i\n")
        out.write(f"error_bound = {mpmath.nstr(dv.error_bound, 5)}\n")
    return 0


def _zero_list(source: str, t_max: float, riemann_siegel: bool = False) -> zeros.ZeroList:
    if source == "compute":
        if t_max > COMPUTE_T_MAX:
            raise RangeExceeded(f"computed zeros are capped at t_max {COMPUTE_T_MAX:g}")
        return zeros.find_zeros(t_max, riemann_siegel=riemann_siegel)
    return zeros.load_zeros(source[len("file:"):], t_max)


def cmd_zeros(args, gcfg, out):
    zl = _zero_list("compute" if args.compute else "file:" + args.load, args.t_max, args.riemann_siegel)
    if args.out:
        zeros.write_zeros(zl, args.out)
        ok = zeros.count_check(zl)
        out.write(f"{len(zl)} ordinates up to {args.t_max:g}; count check {'passed' if ok else 'FAILED'}\n")
    else:
        decimals = max(6, -int(mpmath.floor(mpmath.log10(zl.precision))) + 1) if zl.precision > 0 else 15
        for g in zl.gammas:
            out.write(zeros.format_ordinate(g, decimals) + "\n")
    return 0


def cmd_compare(args, gcfg, out):
    d = _digits_of(args, gcfg)
    t_max = mpmath.mpf(args.t_max)
    zl = _zero_list(args.source, float(t_max), args.riemann_siegel)
    cfg = moments.config_for_digits(d, args.riemann_siegel)
    if args.grid:
        reports = moments.compare_grid(args.n, t_max, zl, args.grid, cfg, d)
    else:
        reports = [moments.compare(args.n, t_max, zl, cfg, d)]
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            moments.reports_csv(reports, fh)
    elif gcfg.out_format == "text":
        for r in reports:
            for key, value in r.row().items():
                out.write(f"{key:>16} {value}\n")
            out.write("\n")
    else:
        moments.reports_csv(reports, out)
    for r in reports:
        if r.t_adjusted:
            logging.getLogger("zml").warning("T moved off an ordinate to %s", mpmath.nstr(r.T, 15))
    return 0


COMMANDS = {
    "constants": cmd_constants,
    "residue": cmd_residue,
    "eval": cmd_eval,
    "zeros": cmd_zeros,
    "compare": cmd_compare,
}


def run(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    gcfg = GlobalConfig(default_digits(), args.threads, args.out_format)
    try:
        return COMMANDS[args.command](args, gcfg, out)
    except DomainError as exc:
        print(f"zml: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"zml: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
