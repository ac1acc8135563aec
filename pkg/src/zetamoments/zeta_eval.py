"""Evaluation of zeta(s) and its derivatives by differentiated Euler-Maclaurin.

Two routes share one planner (:func:`zetamoments._kernel.em_plan`):

* :func:`zeta_derivs` works at any precision >= 64 bits.  The length-N sum
  runs on gmpy2 numbers; inputs and outputs are mpmath ``mpf``/``mpc``.
* :func:`zeta_derivs_fast` is the compiled double-precision kernel used for
  bulk work (zero scanning, reduced-digit moment sums).  An ``EvalConfig``
  with ``precision_bits == 53`` selects it wherever a config is accepted.

Every value comes with an explicit error majorant: the Euler-Maclaurin
remainder bound (Backlund, differentiated through Cauchy's estimate) plus a
rounding model.

On the critical line the compiled route can instead use the Riemann-Siegel
formula (``riemann_siegel=True``): about sqrt(t/2pi) terms instead of t/2pi.
Its remainder is Gabcke's bound for the value, carried over to derivatives
by an estimate rather than a proof; see :func:`rs_estimate`.
"""
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
import mpmath
import numpy as np
from mpmath import mpc, mpf

from . import _kernel
from .errors import NearPole, NearZeroDenominator, PrecisionUnreachable, RangeExceeded

log = logging.getLogger(__name__)

T_LIMIT = 1e6
SIGMA_LIMIT = 50
MAX_DERIVATIVE = 8
FAST_BITS = 53


@dataclass(frozen=True)
class EvalConfig:
    """Precision and accuracy target for an evaluation.

    ``precision_bits`` is the working precision of the result; 53 selects the
    compiled double-precision kernel (bulk paths only).
    """

    precision_bits: int = 128
    target_abs_error: float = 1e-30
    max_derivative: int = MAX_DERIVATIVE
    riemann_siegel: bool = False

    def __post_init__(self):
        if self.precision_bits < FAST_BITS:
            raise ValueError("precision_bits must be >= 53")
        if not self.target_abs_error > 0:
            raise ValueError("target_abs_error must be positive")
        if not 0 <= self.max_derivative <= MAX_DERIVATIVE:
            raise ValueError(f"max_derivative must be in [0, {MAX_DERIVATIVE}]")
        if self.riemann_siegel and self.precision_bits != FAST_BITS:
            raise ValueError("riemann_siegel needs the compiled route (precision_bits == 53)")

    @classmethod
    def for_digits(cls, digits: int, max_derivative: int = MAX_DERIVATIVE) -> "EvalConfig":
        bits = max(64, int(math.ceil(digits * math.log2(10))) + 8)
        return cls(bits, mpf(10) ** (-digits), max_derivative)

    @classmethod
    def fast(cls, target_abs_error: float = 1e-10, max_derivative: int = MAX_DERIVATIVE,
             riemann_siegel: bool = False):
        return cls(FAST_BITS, target_abs_error, max_derivative, riemann_siegel)

    @property
    def is_fast(self) -> bool:
        return self.precision_bits == FAST_BITS

    @property
    def log_target(self) -> float:
        return float(mpmath.log(self.target_abs_error))


@dataclass(frozen=True)
class DerivVector:
    point: mpc
    values: tuple
    error_bound: mpf
    terms: int = 0
    corrections: int = 0

    @property
    def n(self) -> int:
        return len(self.values) - 1


# ---------------------------------------------------------------------------
# tables

_table_lock = threading.Lock()
_log_tables: dict[int, list] = {}
_fast_tables: dict[str, np.ndarray] = {}


def _log_table(n: int, prec: int) -> list:
    """[log k for k < n] as gmpy2 mpfr at ``prec`` bits (shared, grow-only)."""
    with _table_lock:
        tab = _log_tables.get(prec)
        if tab is None:
            tab = [gmpy2.mpfr(0, prec)]
            _log_tables[prec] = tab
        if len(tab) < n:
            ctx = gmpy2.context(gmpy2.get_context(), precision=prec)
            with ctx:
                tab.extend(gmpy2.log(k) for k in range(len(tab), n))
        return tab


@lru_cache(maxsize=None)
def _bernoulli_ratio(m: int) -> gmpy2.mpq:
    """B_{2m} / (2m)! exactly."""
    p, q = mpmath.bernfrac(2 * m)
    return gmpy2.mpq(int(p), int(q) * math.factorial(2 * m))


def _fast_tables_for(n: int, m: int):
    """Double-double log k for k <= n and float B_{2j}/(2j)! for j <= m."""
    with _table_lock:
        hi = _fast_tables.get("hi")
        if hi is None or hi.shape[0] <= n:
            size = max(n + 1, 2 * (hi.shape[0] if hi is not None else 0), 1024)
            ks = np.arange(size, dtype=np.float64)
            with np.errstate(divide="ignore"):
                hi = np.log(ks)
            hi[0] = 0.0
            lo = np.zeros(size)
            ctx = gmpy2.context(gmpy2.get_context(), precision=128)
            with ctx:
                for k in range(2, size):
                    lo[k] = float(gmpy2.log(k) - gmpy2.mpfr(hi[k]))
            _fast_tables["hi"], _fast_tables["lo"] = hi, lo
        bern = _fast_tables.get("bern")
        if bern is None or bern.shape[0] <= m:
            size = max(m + 1, 160)
            bern = np.zeros(size)
            for j in range(1, size):
                bern[j] = float(_bernoulli_ratio(j))
            _fast_tables["bern"] = bern
        return _fast_tables["hi"], _fast_tables["lo"], _fast_tables["bern"]


# ---------------------------------------------------------------------------
# conversions between mpmath and gmpy2


def _to_gmp(x: mpf) -> gmpy2.mpfr:
    sign, man, exp, _ = mpf(x)._mpf_
    if not man:
        if exp:
            raise ValueError("non-finite input")
        return gmpy2.mpfr(0)
    v = gmpy2.mul_2exp(gmpy2.mpfr(man, max(53, man.bit_length())), exp)
    return -v if sign else v


def _to_mp(x) -> mpf:
    if isinstance(x, gmpy2.mpc):
        return mpc(_to_mp(x.real), _to_mp(x.imag))
    if not x:
        return mpf(0)
    m, e = x.as_mantissa_exp()
    return mpf((int(m), int(e)))


def _split_mpf(x) -> tuple[float, float]:
    """x as hi + lo doubles."""
    x = mpf(x)
    hi = float(x)
    return hi, float(x - hi)


# ---------------------------------------------------------------------------
# the arbitrary-precision route


def _check_point(s: mpc, n: int, prec: int):
    if n < 0 or n > MAX_DERIVATIVE:
        raise ValueError(f"derivative order must be in [0, {MAX_DERIVATIVE}]")
    if abs(s.imag) > T_LIMIT:
        raise RangeExceeded(f"|Im s| = {float(abs(s.imag)):.6g} exceeds {T_LIMIT:g}")
    if abs(s.real) > SIGMA_LIMIT:
        raise RangeExceeded(f"|Re s| = {float(abs(s.real)):.6g} exceeds {SIGMA_LIMIT}")
    if abs(s - 1) < mpf(2) ** (-(prec // 2)):
        raise NearPole(f"|s - 1| below 2^-{prec // 2}")


def _series_mul(a, b, n):
    return [sum((a[j] * b[i - j] for j in range(i + 1)), start=gmpy2.mpc(0)) for i in range(n + 1)]


def zeta_derivs(s, n: int, cfg: EvalConfig | None = None) -> DerivVector:
    """[zeta(s), zeta'(s), ..., zeta^(n)(s)] with an error majorant.

    Euler-Maclaurin with cutoff N and M Bernoulli corrections, all
    derivatives in one pass: the finite sum accumulates (log k)^j k^-s for
    every j, and the closed-form tail terms are expanded as power series in
    a shift of s.
    """
    cfg = cfg or EvalConfig()
    if cfg.is_fast:
        raise ValueError("zeta_derivs needs precision_bits >= 64; use zeta_derivs_fast")
    if n > cfg.max_derivative:
        raise ValueError(f"n={n} exceeds cfg.max_derivative={cfg.max_derivative}")
    with mpmath.workprec(cfg.precision_bits + 32):
        s = mpc(s)
        _check_point(s, n, cfg.precision_bits)
        sigma, t = float(s.real), float(s.imag)
        N, M, log_tail = _kernel.em_plan(sigma, t, n, cfg.log_target - math.log(4), 0, 20000)
        if N < 0:
            raise PrecisionUnreachable(
                f"no Euler-Maclaurin plan reaches {mpmath.nstr(cfg.target_abs_error, 3)} at s={mpmath.nstr(s, 8)}"
            )
        phase_bits = max(1, int(abs(t) * math.log(N) + 1).bit_length())
        wp = cfg.precision_bits + 20 + N.bit_length() + phase_bits + 2 * n
        vals, absum = _em_gmp(s, n, N, M, wp)

        rounding = mpf(absum) * (N + M + 10) * mpf(2) ** (8 - wp + phase_bits)
        bound = mpf(math.exp(log_tail)) if log_tail > -700 else mpmath.exp(log_tail)
        bound += rounding
        if bound > cfg.target_abs_error:
            raise PrecisionUnreachable(
                f"error bound {mpmath.nstr(bound, 3)} exceeds target at {cfg.precision_bits} bits"
            )
        out = DerivVector(s, tuple(vals), bound, N, M)
    if abs(s.imag) >= 2:
        _convexity_monitor(out)
    return out


def _em_gmp(s: mpc, n: int, N: int, M: int, wp: int):
    logs = _log_table(N + 1, wp)
    ctx = gmpy2.context(gmpy2.get_context(), precision=wp)
    with ctx:
        sig = _to_gmp(s.real)
        t = _to_gmp(s.imag)
        half = sig == gmpy2.mpfr("0.5")
        re = [gmpy2.mpfr(0)] * (n + 1)
        im = [gmpy2.mpfr(0)] * (n + 1)
        re[0] = gmpy2.mpfr(1)
        rec_sqrt, exp, sin_cos = gmpy2.rec_sqrt, gmpy2.exp, gmpy2.sin_cos
        if n == 0:
            for k in range(2, N):
                lk = logs[k]
                mag = rec_sqrt(k) if half else exp(-sig * lk)
                sn, cs = sin_cos(t * lk)
                re[0] += mag * cs
                im[0] -= mag * sn
        else:
            r0 = re[0]
            i0 = gmpy2.mpfr(0)
            for k in range(2, N):
                lk = logs[k]
                mag = rec_sqrt(k) if half else exp(-sig * lk)
                sn, cs = sin_cos(t * lk)
                a = mag * cs
                b = -mag * sn
                r0 += a
                i0 += b
                for j in range(1, n + 1):
                    a *= lk
                    b *= lk
                    re[j] += a
                    im[j] += b
            re[0], im[0] = r0, i0
        lN = float(logs[N - 1]) if N > 1 else 0.0
        absum = float(N ** max(0.0, 1 - float(sig))) * (1 + lN) ** n * (1 + lN)

        sc = gmpy2.mpc(sig, t)
        logN = logs[N]
        Ns = gmpy2.exp(-sc * logN)
        E = []
        pw = gmpy2.mpfr(1)
        for j in range(n + 1):
            E.append(Ns * pw / math.factorial(j))
            pw *= -logN
        total = [
            gmpy2.mpc(re[j], im[j]) * ((-1) ** j) / math.factorial(j) for j in range(n + 1)
        ]
        inv = 1 / (sc - 1)
        G = []
        g = inv
        for j in range(n + 1):
            G.append(g)
            g *= -inv
        tail = _series_mul(E, G, n)
        for j in range(n + 1):
            total[j] += N * tail[j] + E[j] / 2
        P = [sc] + ([gmpy2.mpc(1)] if n >= 1 else []) + [gmpy2.mpc(0)] * max(0, n - 1)
        Npow = gmpy2.mpfr(1) / N
        NN = gmpy2.mpfr(N) * N
        for m in range(1, M + 1):
            if m > 1:
                for shift in (2 * m - 3, 2 * m - 2):
                    lin = [sc + shift] + ([gmpy2.mpc(1)] if n >= 1 else []) + [gmpy2.mpc(0)] * max(0, n - 1)
                    P = _series_mul(P, lin, n)
                Npow /= NN
            c = gmpy2.mpfr(_bernoulli_ratio(m)) * Npow
            PE = _series_mul(P, E, n)
            for j in range(n + 1):
                total[j] += c * PE[j]
        vals = [_to_mp(total[j] * math.factorial(j)) for j in range(n + 1)]
    return vals, absum


def zeta(s, cfg: EvalConfig | None = None) -> mpc:
    return zeta_derivs(s, 0, cfg).values[0]


def log_deriv(s, cfg: EvalConfig | None = None) -> tuple[mpc, mpf]:
    """zeta'(s)/zeta(s) and a propagated error bound."""
    cfg = cfg or EvalConfig()
    dv = zeta_derivs(s, 1, cfg)
    z, dz = dv.values
    e = dv.error_bound
    if abs(z) <= 10 * e:
        raise NearZeroDenominator(
            f"|zeta(s)| = {mpmath.nstr(abs(z), 3)} within 10x its error bound {mpmath.nstr(e, 3)}"
        )
    with mpmath.workprec(cfg.precision_bits + 32):
        q = dz / z
        bound = (e + abs(q) * e) / (abs(z) - e)
    return q, bound


def chi(s) -> mpc:
    """chi(s) = 2^s pi^(s-1) sin(pi s/2) Gamma(1-s)."""
    s = mpc(s)
    return mpmath.power(2, s) * mpmath.power(mpmath.pi, s - 1) * mpmath.sin(mpmath.pi * s / 2) * mpmath.gamma(1 - s)


def functional_equation_residual(s, cfg: EvalConfig | None = None) -> tuple[mpf, mpf]:
    """(|zeta(1-s) - chi(1-s) zeta(s)|, combined error bound)."""
    cfg = cfg or EvalConfig()
    with mpmath.workprec(cfg.precision_bits + 32):
        s = mpc(s)
        a = zeta_derivs(1 - s, 0, cfg)
        b = zeta_derivs(s, 0, cfg)
        c = chi(1 - s)
        resid = abs(a.values[0] - c * b.values[0])
        rounding = (abs(a.values[0]) + abs(c * b.values[0])) * mpf(2) ** (8 - cfg.precision_bits)
        bound = a.error_bound + abs(c) * b.error_bound + rounding
    return resid, bound


def functional_equation_check(s, cfg: EvalConfig | None = None) -> mpf:
    return functional_equation_residual(s, cfg)[0]


def cauchy_derivs(s, n: int, cfg: EvalConfig | None = None, radius=None, max_nodes: int = 4096):
    """Derivatives from k!/(2 pi i) * contour integral of zeta(z)/(z-s)^(k+1).

    Independent check on :func:`zeta_derivs`: only zeta values (no
    term-by-term differentiation) enter.  Trapezoid rule on a circle of
    radius min(1/4, |s-1|/2); nodes double until every derivative settles.
    """
    cfg = cfg or EvalConfig()
    with mpmath.workprec(cfg.precision_bits + 32):
        s = mpc(s)
        r = mpf(radius) if radius is not None else min(mpf(1) / 4, abs(s - 1) / 2)
        # evaluate zeta a little tighter than the target to absorb r^-k k!
        amp = max(mpf(1), max(math.factorial(k) / r ** k for k in range(n + 1)))
        inner = EvalConfig(cfg.precision_bits + int(mpmath.log(amp, 2)) + 16, cfg.target_abs_error / amp / 4, 0)
        cache: dict[int, mpc] = {}

        def node(q: int, K: int) -> mpc:
            # nodes of a K-point rule are a subset of the 2K-point rule
            key = q * (max_nodes // K)
            if key not in cache:
                cache[key] = zeta_derivs(s + r * mpmath.expjpi(2 * key / mpf(max_nodes)), 0, inner).values[0]
            return cache[key]

        prev = None
        K = 16
        while K <= max_nodes:
            est = []
            for k in range(n + 1):
                acc = mpc(0)
                for q in range(K):
                    acc += node(q, K) * mpmath.expjpi(-2 * k * q / mpf(K))
                est.append(acc * math.factorial(k) / (K * r ** k))
            if prev is not None and max(abs(a - b) for a, b in zip(est, prev)) < cfg.target_abs_error:
                return est
            prev = est
            K *= 2
    raise PrecisionUnreachable("Cauchy quadrature did not settle")


def convexity_envelope(sigma: float, t: float, n: int) -> float:
    """Shape of the convexity bound for zeta^(n)(sigma+it), constant 1."""
    t = abs(t)
    lg = math.log(t) ** (n + 1)
    if sigma <= 0:
        return t ** (0.5 - sigma) * lg
    if sigma <= 1:
        return t ** (0.5 * (1 - sigma)) * lg
    return lg


def _convexity_monitor(dv: DerivVector, factor: float = 100.0) -> None:
    sigma, t = float(dv.point.real), float(dv.point.imag)
    for k, v in enumerate(dv.values):
        env = convexity_envelope(sigma, t, k)
        if abs(v) > factor * env:
            log.warning(
                "|zeta^(%d)(%g+%gi)| = %.3g exceeds %gx convexity envelope %.3g",
                k, sigma, t, float(abs(v)), factor, env,
            )


# ---------------------------------------------------------------------------
# the compiled double-precision route


def _phi_taylor(degree: int, dps: int = 30) -> list:
    """Taylor coefficients at p = 1/2 of cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p).

    The function is entire; the trapezoid rule on |p - 1/2| = 0.7 gives the
    coefficients with aliasing far below double precision.
    """
    Q, rho = 256, mpf("0.7")
    with mpmath.workdps(dps):
        half = mpf(1) / 2
        vals = []
        for q in range(Q):
            p = half + rho * mpmath.expjpi(mpf(2 * q) / Q)
            vals.append(mpmath.cos(2 * mpmath.pi * (p * p - p - mpf(1) / 16)) / mpmath.cos(2 * mpmath.pi * p))
        out = []
        for m in range(degree + 1):
            acc = mpmath.fsum(vals[q] * mpmath.expjpi(mpf(-2 * m * q) / Q) for q in range(Q))
            out.append((acc / Q).real / rho ** m)
        return out


@lru_cache(maxsize=1)
def rs_coefficients(degree: int = 64) -> np.ndarray:
    """C_0..C_4 of the Riemann-Siegel remainder as polynomials in p - 1/2.

    Row j holds the coefficients of C_j, built from derivatives of Phi = C_0:
    C_1 = -Phi^(3)/(96 pi^2), C_2 = Phi^(2)/(64 pi^2) + Phi^(6)/(18432 pi^4), ...
    """
    c = _phi_taylor(degree + 13)
    with mpmath.workdps(30):
        pi = mpmath.pi

        def d(k):
            out = list(c)
            for _ in range(k):
                out = [out[i] * i for i in range(1, len(out))]
            return out + [mpf(0)] * k

        terms = [
            [(1, 0)],
            [(-1 / (96 * pi ** 2), 3)],
            [(1 / (64 * pi ** 2), 2), (1 / (18432 * pi ** 4), 6)],
            [(-1 / (64 * pi ** 2), 1), (-1 / (3840 * pi ** 4), 5), (-1 / (5308416 * pi ** 6), 9)],
            [(1 / (128 * pi ** 2), 0), (19 / (24576 * pi ** 4), 4), (11 / (5898240 * pi ** 6), 8),
             (1 / (2038431744 * pi ** 8), 12)],
        ]
        rows = np.zeros((5, degree + 1))
        for j, combo in enumerate(terms):
            acc = [mpf(0)] * (degree + 1)
            for w, k in combo:
                dk = d(k)
                acc = [x + w * y for x, y in zip(acc, dk[: degree + 1])]
            rows[j] = [float(x) for x in acc]
    return rows


def rs_estimate(t, n: int) -> np.ndarray:
    """Error estimate of the Riemann-Siegel route for zeta^(n)(1/2 + it).

    Gabcke's bound 0.017 a^(-11/2), a = sqrt(t/2pi), for the value after the
    C_4 correction (t >= 200); each derivative multiplies by theta'(t) + 1,
    since the remainder oscillates like exp(-i theta).  Times 4 for margin.
    """
    t = np.asarray(t, dtype=np.float64)
    a = np.sqrt(t / (2 * math.pi))
    return 4 * _kernel.RS_D4 * a ** -5.5 * (0.5 * np.log(t / (2 * math.pi)) + 1) ** n


def zeta_derivs_fast(t, n: int, sigma: float = 0.5, tol: float = 1e-12, t_lo=None,
                     riemann_siegel: bool = False):
    """Vectorised zeta^(j)(sigma + i t), j <= n, in double precision.

    ``t`` may be an array of doubles, or the high parts of double-double
    ordinates with ``t_lo`` the low parts.  Returns ``(values, err, N)`` with
    ``values`` and ``err`` of shape (len(t), n+1).  With ``riemann_siegel``
    and sigma = 1/2, points with t >= 200 whose estimate meets ``tol`` go
    through the Riemann-Siegel kernel (``N`` is then floor(sqrt(t/2pi))).
    """
    t_hi = np.ascontiguousarray(np.atleast_1d(np.asarray(t, dtype=np.float64)))
    t_lo = np.zeros_like(t_hi) if t_lo is None else np.ascontiguousarray(np.atleast_1d(np.asarray(t_lo, dtype=np.float64)))
    if t_hi.size and np.max(np.abs(t_hi)) > T_LIMIT:
        raise RangeExceeded(f"|t| exceeds {T_LIMIT:g}")
    if not 0 <= n <= MAX_DERIVATIVE:
        raise ValueError(f"derivative order must be in [0, {MAX_DERIVATIVE}]")
    out = np.zeros((t_hi.size, n + 1), dtype=np.complex128)
    err = np.zeros((t_hi.size, n + 1))
    used = np.zeros(t_hi.size, dtype=np.int64)
    rs = np.zeros(t_hi.size, dtype=bool)
    if riemann_siegel and sigma == 0.5 and t_hi.size:
        ok = t_hi >= _kernel.RS_T_MIN
        rs[ok] = rs_estimate(t_hi[ok], n) <= tol
    if np.any(rs):
        idx = np.nonzero(rs)[0]
        hi, lo, _ = _fast_tables_for(int(np.max(t_hi[idx]) / (2 * math.pi)) + 2, 0)
        o = np.zeros((idx.size, n + 1), dtype=np.complex128)
        e = np.zeros((idx.size, n + 1))
        _kernel.rs_batch(t_hi[idx], t_lo[idx], n, hi, lo, rs_coefficients(), o, e)
        out[idx], err[idx] = o, e
        used[idx] = np.floor(np.sqrt(t_hi[idx] / (2 * math.pi))).astype(np.int64)
    if not np.all(rs):
        idx = np.nonzero(~rs)[0]
        need_n = int(2.5 * float(np.max(np.abs(t_hi[idx]))) / (2 * math.pi)) + 200
        hi, lo, bern = _fast_tables_for(need_n, 150)
        o = np.zeros((idx.size, n + 1), dtype=np.complex128)
        e = np.zeros((idx.size, n + 1))
        u = np.zeros(idx.size, dtype=np.int64)
        _kernel.em_batch(t_hi[idx], t_lo[idx], float(sigma), n, math.log(tol), hi, lo, bern, o, e, u)
        out[idx], err[idx], used[idx] = o, e, u
    if np.any(used < 0):
        bad = t_hi[used < 0][0]
        raise PrecisionUnreachable(f"fast kernel cannot reach tol={tol:g} at t={bad:.6g}")
    return out, err, used


def derivs_on_line(gammas, n: int, cfg: EvalConfig):
    """zeta^(n)(1/2 + i gamma) for each ordinate, as (values, error bounds).

    Picks the compiled kernel for ``cfg.is_fast`` and the arbitrary
    precision route otherwise.  Values come back as mpmath ``mpc``.
    """
    if cfg.is_fast:
        pairs = [_split_mpf(g) for g in gammas]
        hi = np.array([p[0] for p in pairs])
        lo = np.array([p[1] for p in pairs])
        vals, err, _ = zeta_derivs_fast(hi, n, 0.5, float(cfg.target_abs_error), t_lo=lo,
                                        riemann_siegel=cfg.riemann_siegel)
        return [mpc(complex(v)) for v in vals[:, n]], [mpf(float(e)) for e in err[:, n]]
    half = mpf(1) / 2
    out_v, out_e = [], []
    for g in gammas:
        dv = zeta_derivs(mpc(half, g), n, cfg)
        out_v.append(dv.values[n])
        out_e.append(dv.error_bound)
    return out_v, out_e
