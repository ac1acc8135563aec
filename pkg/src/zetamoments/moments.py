"""The discrete moment sum_{0<gamma<=T} zeta^(n)(rho) and its two predictions.

* the empirical sum over actual ordinates;
* the asymptotic main terms, Y = T/2pi, L = log Y,

      (-1)^(n+1)/(n+1) Y L^(n+1)
      + sum_k (-1)^(n+1) binom(n,k) (-1)^k k! (-1 + sum_{j<=k} (-1)^j C_j) Y L^(n-k)
      + n! A_n Y,

  evaluated both from this closed form and from the symbolic residue;
* the prime-power sum (-1)^(n+1) sum_{mr<=Y} Lambda(r) log^n r.

Empirical sums are accumulated exactly (as dyadic rationals) in ascending
order of gamma, so partial sums add up to the whole without rounding drift.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import mpc, mpf

from . import constants
from .errors import InsufficientZeros, PrecisionUnreachable, RangeExceeded
from .series import residue_at_1
from .zeros import ZeroList, align_T, count_check, to_fraction
from .zeta_eval import EvalConfig, zeta_derivs, zeta_derivs_fast

LAMBDA_Y_MAX = 10**8
CSV_FIELDS = (
    "T", "n", "zero_count", "re_empirical", "im_empirical", "asymptotic", "lambda_sum",
    "diff_re", "diff_im", "rh_envelope", "lambda_envelope",
)
REPORT_DIGITS = 20


def config_for_digits(digits: int, riemann_siegel: bool = False) -> EvalConfig:
    """Compiled double-precision route up to 15 digits, multiprecision above.

    ``riemann_siegel`` lets the compiled route use the Riemann-Siegel kernel;
    it is ignored above 15 digits.
    """
    if digits <= 15:
        return EvalConfig.fast(10.0 ** (-digits), riemann_siegel=riemann_siegel)
    return EvalConfig.for_digits(digits)


# ---------------------------------------------------------------------------
# exact accumulation


class ExactSum:
    """Order-independent complex accumulator (exact rational real/imag parts)."""

    def __init__(self):
        self.re = Fraction(0)
        self.im = Fraction(0)

    def add(self, z):
        self.re += to_fraction(z.real)
        self.im += to_fraction(z.imag)

    def value(self, prec: int = 113) -> mpc:
        with mpmath.workprec(prec):
            return mpc(mpf(self.re.numerator) / self.re.denominator,
                       mpf(self.im.numerator) / self.im.denominator)


# ---------------------------------------------------------------------------
# empirical side


@dataclass(frozen=True)
class Terms:
    """zeta^(n)(1/2 + i gamma) per ordinate, in ascending gamma."""

    values: list
    errors: list
    sensitivity: list  # |zeta^(n+1)|, for the ordinate-error contribution


def zero_terms(n: int, zeros: ZeroList, cfg: EvalConfig, count: int | None = None) -> Terms:
    count = len(zeros) if count is None else count
    if count == 0:
        return Terms([], [], [])
    per_term = cfg.target_abs_error / count
    if cfg.is_fast:
        hi, lo = zeros.hi_lo()
        tol = max(float(per_term), 1e-15)
        vals, err, _ = zeta_derivs_fast(hi[:count], n + 1, 0.5, tol, t_lo=lo[:count],
                                        riemann_siegel=cfg.riemann_siegel)
        return Terms([complex(v) for v in vals[:, n]], [float(e) for e in err[:, n]],
                     [abs(complex(v)) for v in vals[:, n + 1]])
    # the per-term target is count times tighter, and |zeta^(n)| grows like log^n t
    extra = count.bit_length() + 8 * (n + 1)
    inner = EvalConfig(cfg.precision_bits + extra, per_term, n + 1)
    vals, errs, sens = [], [], []
    half = mpf(1) / 2
    with mpmath.workprec(cfg.precision_bits + 16):
        for g in zeros.gammas[:count]:
            dv = zeta_derivs(mpc(half, g), n + 1, inner)
            vals.append(dv.values[n])
            errs.append(dv.error_bound)
            sens.append(abs(dv.values[n + 1]))
    return Terms(vals, errs, sens)


def _prefix(zeros: ZeroList, T) -> tuple[mpf, bool, int]:
    if mpf(T) > zeros.t_max:
        raise InsufficientZeros(
            f"ordinates cover t <= {mpmath.nstr(zeros.t_max, 10)}, need T = {mpmath.nstr(mpf(T), 10)}"
        )
    T2, adjusted = align_T(T, zeros)
    if not count_check(zeros.restrict(T2)):
        raise InsufficientZeros(f"zero count up to T = {mpmath.nstr(T2, 10)} fails the Riemann-von Mangoldt check")
    return T2, adjusted, zeros.count_upto(T2)


def empirical_sum(n: int, T, zeros: ZeroList, cfg: EvalConfig | None = None) -> mpc:
    """sum over ordinates gamma <= T of zeta^(n)(1/2 + i gamma)."""
    return empirical_detail(n, T, zeros, cfg)[0]


def empirical_detail(n: int, T, zeros: ZeroList, cfg: EvalConfig | None = None):
    """(sum, error bound, zero count, T used, T adjusted?)."""
    cfg = cfg or EvalConfig()
    T2, adjusted, count = _prefix(zeros, T)
    terms = zero_terms(n, zeros, cfg, count)
    acc = ExactSum()
    for v in terms.values:
        acc.add(v)
    bound = mpmath.fsum(terms.errors) + zeros.precision * mpmath.fsum(terms.sensitivity)
    return acc.value(max(cfg.precision_bits, 113)), bound, count, T2, adjusted


# ---------------------------------------------------------------------------
# asymptotic side


def _closed_form(n: int, Y, L, C, A_n):
    total = (-1) ** (n + 1) * Y * L ** (n + 1) / (n + 1)
    inner = mpf(-1)
    for k in range(n + 1):
        inner += (-1) ** k * C[k]
        coeff = (-1) ** (n + 1) * math.comb(n, k) * (-1) ** k * math.factorial(k)
        total += coeff * inner * Y * L ** (n - k)
    return total + math.factorial(n) * A_n * Y


def asymptotic_sum(n: int, T, digits: int = constants.DEFAULT_DIGITS) -> mpf:
    """Main terms of the mean value at height T, by two routes that must agree."""
    if not 0 <= n <= 12:
        raise ValueError("n must be in [0, 12]")
    with mpmath.workdps(digits + 10):
        T = mpf(T)
        if T <= 2 * mpmath.pi * mpmath.e:
            raise ValueError("T must exceed 2 pi e")
        cs = constants.coefficient_set(n, digits)
        Y = T / (2 * mpmath.pi)
        L = mpmath.log(Y)
        direct = _closed_form(n, Y, L, cs.C, cs.A[n])
        via_residue = Y * residue_at_1(n).evaluate(list(cs.C), L, one=mpf(1))
        scale = max(mpf(1), abs(direct))
        if abs(direct - via_residue) > mpf(10) ** (3 - digits) * scale:
            raise PrecisionUnreachable(
                f"closed form and residue disagree by {mpmath.nstr(abs(direct - via_residue), 3)}"
            )
        return +direct


def rh_envelope(n: int, T) -> mpf:
    T = mpf(T)
    return mpmath.sqrt(T) * mpmath.log(T) ** (n + mpf(5) / 2)


def lambda_envelope(n: int, T) -> mpf:
    T = mpf(T)
    return mpmath.sqrt(T) * mpmath.log(T) ** (n + 2)


# ---------------------------------------------------------------------------
# prime-power side


def primes_upto(m: int) -> np.ndarray:
    if m < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(m + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(m) + 1):
        if sieve[p]:
            sieve[p * p:: p] = False
    return np.nonzero(sieve)[0]


def _iroot(m: int, k: int) -> int:
    """floor(m^(1/k))."""
    r = int(round(m ** (1.0 / k)))
    while r ** k > m:
        r -= 1
    while (r + 1) ** k <= m:
        r += 1
    return r


def lambda_log_sum(n: int, Y, digits: int = 15) -> mpf:
    """(-1)^(n+1) sum_{p^k <= Y} (log p)^(n+1) k^n floor(Y / p^k).

    This is (-1)^(n+1) sum_{mr<=Y} Lambda(r) log^n r grouped by r = p^k.
    Up to 15 digits the terms are doubles summed with exact rounding
    (math.fsum); above that, everything runs in mpmath at ``digits``.
    """
    if not 0 <= n <= 12:
        raise ValueError("n must be in [0, 12]")
    Y = mpf(Y)
    if Y > LAMBDA_Y_MAX:
        raise RangeExceeded(f"Y = {mpmath.nstr(Y, 6)} exceeds {LAMBDA_Y_MAX:.0e}")
    m = int(mpmath.floor(Y))
    sign = (-1) ** (n + 1)
    ps = primes_upto(m)
    if digits <= 15:
        logp = np.log(ps.astype(np.float64)) ** (n + 1)
        parts = []
        k = 1
        while True:
            # primes with p^k <= m form a prefix of ps
            cnt = int(np.searchsorted(ps, _iroot(m, k), side="right"))
            if cnt == 0:
                break
            pk = ps[:cnt] ** k
            parts.append(logp[:cnt] * float(k) ** n * (m // pk).astype(np.float64))
            k += 1
        total = math.fsum(np.concatenate(parts)) if parts else 0.0
        return sign * mpf(total)
    with mpmath.workdps(digits + 10):
        acc = []
        for p in ps.tolist():
            lp = mpmath.log(p)
            pk, k = p, 1
            while pk <= m:
                acc.append(lp ** (n + 1) * k ** n * (m // pk))
                pk *= p
                k += 1
        return sign * mpmath.fsum(acc)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class MomentReport:
    n: int
    T: mpf
    zero_count: int
    empirical: mpc
    asymptotic: mpf
    lambda_sum: mpf
    diff_re: mpf
    diff_im: mpf
    rh_envelope: mpf
    lambda_envelope: mpf
    t_adjusted: bool
    empirical_error: mpf = mpf(0)

    @property
    def rh_ratio(self) -> mpf:
        return self.diff_re / self.rh_envelope

    @property
    def lambda_gap(self) -> mpf:
        return abs(self.empirical.real - self.lambda_sum)

    def row(self) -> dict:
        f = lambda x: mpmath.nstr(x, REPORT_DIGITS)  # noqa: E731
        return {
            "T": f(self.T),
            "n": str(self.n),
            "zero_count": str(self.zero_count),
            "re_empirical": f(self.empirical.real),
            "im_empirical": f(self.empirical.imag),
            "asymptotic": f(self.asymptotic),
            "lambda_sum": f(self.lambda_sum),
            "diff_re": f(self.diff_re),
            "diff_im": f(self.diff_im),
            "rh_envelope": f(self.rh_envelope),
            "lambda_envelope": f(self.lambda_envelope),
        }


def _report(n, T, count, emp, err, adjusted, digits) -> MomentReport:
    with mpmath.workdps(max(digits, 25)):
        Tm = mpf(T)
        asym = asymptotic_sum(n, Tm, digits) if Tm > 2 * mpmath.pi * mpmath.e else mpf(0)
        lam = lambda_log_sum(n, Tm / (2 * mpmath.pi), min(digits, 15)) if Tm >= 2 * mpmath.pi else mpf(0)
        return MomentReport(
            n=n, T=Tm, zero_count=count, empirical=emp, asymptotic=asym, lambda_sum=lam,
            diff_re=abs(emp.real - asym), diff_im=abs(emp.imag),
            rh_envelope=rh_envelope(n, Tm), lambda_envelope=lambda_envelope(n, Tm),
            t_adjusted=adjusted, empirical_error=mpf(err),
        )


def compare(n: int, T, zeros: ZeroList, cfg: EvalConfig | None = None,
            digits: int = constants.DEFAULT_DIGITS) -> MomentReport:
    cfg = cfg or EvalConfig()
    emp, err, count, T2, adjusted = empirical_detail(n, T, zeros, cfg)
    return _report(n, T2, count, emp, err, adjusted, digits)


def compare_grid(n: int, T, zeros: ZeroList, K: int, cfg: EvalConfig | None = None,
                 digits: int = constants.DEFAULT_DIGITS) -> list[MomentReport]:
    """K reports at heights equally spaced in zero index, the last at T.

    Every height but the last sits midway between consecutive ordinates.
    One pass over the zeros serves all rows (exact prefix sums).
    """
    cfg = cfg or EvalConfig()
    T_last, adj_last, total = _prefix(zeros, T)
    terms = zero_terms(n, zeros, cfg, total)
    cuts = sorted({max(1, round(total * k / K)) for k in range(1, K)} - {total}) if total else []
    reports = []
    acc = ExactSum()
    err = mpf(0)
    done = 0
    targets = [(c, False) for c in cuts] + [(total, True)]
    prec = max(cfg.precision_bits, 113)
    for c, last in targets:
        for i in range(done, c):
            acc.add(terms.values[i])
            err += terms.errors[i] + zeros.precision * terms.sensitivity[i]
        done = c
        if last:
            Tk, adj = T_last, adj_last
        else:
            Tk, adj = (zeros.gammas[c - 1] + zeros.gammas[c]) / 2, False
        reports.append(_report(n, Tk, c, acc.value(prec), err, adj, digits))
    return reports


def reports_csv(reports, stream=None) -> str:
    buf = stream if stream is not None else io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue() if stream is None else ""


def report_dict(r: MomentReport) -> dict:
    return asdict(r)
