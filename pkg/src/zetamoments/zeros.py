"""Ordinates of nontrivial zeros on the critical line.

Zeros come either from a text file (one ordinate per line) or from a scan of
Hardy's function Z(t) = exp(i theta(t)) zeta(1/2 + it).  The scan samples Z
at Gram points and thirds of Gram intervals, checks every Gram block against
Rosser's rule (a block of k Gram intervals holds k zeros), subdivides blocks
that come up short, and polishes each bracketed sign change by Newton's
method on zeta itself.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
from mpmath import mpf

from .errors import MissedZero, NonMonotonic, ParseError, RangeExceeded
from .zeta_eval import T_LIMIT, EvalConfig, zeta_derivs, zeta_derivs_fast

log = logging.getLogger(__name__)

DEFAULT_PRECISION = 1e-12
DOCUMENTED_T_MAX = 1e5
FIRST_GRAM = 9.666908056130192  # g_{-1}; no zero lies below it
_LINE = re.compile(r"\+?(\d+)(?:\.(\d*))?")
_HEADER = re.compile(r"#\s*precision\s+([0-9.eE+-]+)")


@dataclass(frozen=True)
class ZeroOrdinate:
    index: int
    gamma: mpf


@dataclass(frozen=True)
class ZeroList:
    source: str
    gammas: tuple
    t_max: mpf
    precision: float
    _split: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.source not in ("file", "computed"):
            raise ValueError("source must be 'file' or 'computed'")

    def __len__(self):
        return len(self.gammas)

    @property
    def ordinates(self) -> list[ZeroOrdinate]:
        return [ZeroOrdinate(i + 1, g) for i, g in enumerate(self.gammas)]

    def hi_lo(self) -> tuple[np.ndarray, np.ndarray]:
        """Ordinates as double-double (hi, lo) arrays, cached."""
        if not self._split:
            hi = np.array([float(g) for g in self.gammas])
            with mpmath.workprec(160):
                lo = np.array([float(g - mpf(h)) for g, h in zip(self.gammas, hi)])
            self._split.extend((hi, lo))
        return self._split[0], self._split[1]

    def count_upto(self, t) -> int:
        hi, _ = self.hi_lo()
        k = int(np.searchsorted(hi, float(t), side="right"))
        # settle the doubles' ties exactly
        while k > 0 and self.gammas[k - 1] > t:
            k -= 1
        while k < len(self.gammas) and self.gammas[k] <= t:
            k += 1
        return k

    def restrict(self, t_max) -> "ZeroList":
        k = self.count_upto(t_max)
        return ZeroList(self.source, self.gammas[:k], mpf(t_max), self.precision)


# ---------------------------------------------------------------------------
# theta and Z


@np.errstate(all="ignore")
def theta_np(t):
    """Riemann-Siegel theta for t >= 9 in double precision (asymptotic series)."""
    t = np.asarray(t, dtype=np.float64)
    ti = 1.0 / t
    t2 = ti * ti
    corr = ti * (1 / 48 + t2 * (7 / 5760 + t2 * (31 / 80640 + t2 * (127 / 430080 + t2 * 511 / 1216512))))
    return 0.5 * t * np.log(t / (2 * np.pi)) - 0.5 * t - np.pi / 8 + corr


def theta(t, tol=None) -> mpf:
    """theta(t) = arg Gamma(1/4 + it/2) - (t/2) log pi, for t > 0.

    Uses the asymptotic series t/2 log(t/2pi) - t/2 - pi/8 + sum_k
    (1 - 2^(1-2k)) |B_2k| / (4k(2k-1) t^(2k-1)), stopping at the first term
    below ``tol``.  Where the series stalls before reaching ``tol`` (small
    t), falls back to the log-gamma definition.
    """
    t = mpf(t)
    tol = mpf(2) ** (-mpmath.mp.prec - 4) * max(1, t) if tol is None else mpf(tol)
    acc = t / 2 * mpmath.log(t / (2 * mpmath.pi)) - t / 2 - mpmath.pi / 8
    prev = mpmath.inf
    tp = t
    t2 = t * t
    k = 1
    while True:
        b = abs(mpmath.bernoulli(2 * k))
        term = (1 - mpf(2) ** (1 - 2 * k)) * b / (4 * k * (2 * k - 1) * tp)
        if term < tol:
            return acc + term
        if term > prev:
            break
        acc += term
        prev = term
        tp *= t2
        k += 1
    return mpmath.loggamma(mpf(1) / 4 + 1j * t / 2).imag - t / 2 * mpmath.log(mpmath.pi)


def hardy_z(t, cfg: EvalConfig | None = None) -> mpf:
    cfg = cfg or EvalConfig()
    with mpmath.workprec(cfg.precision_bits + 16):
        t = mpf(t)
        z = zeta_derivs(mpmath.mpc(0.5, t), 0, cfg).values[0]
        return (mpmath.expj(theta(t)) * z).real


def hardy_z_fast(t, tol: float = 1e-12, riemann_siegel: bool = False):
    """Z(t) on an array in double precision, with error bounds."""
    t = np.asarray(t, dtype=np.float64)
    vals, err, _ = zeta_derivs_fast(t, 0, 0.5, tol, riemann_siegel=riemann_siegel)
    z = (np.exp(1j * theta_np(t)) * vals[:, 0]).real
    # theta is accurate to a few ulps of its magnitude
    err = err[:, 0] + np.abs(vals[:, 0]) * 8 * np.finfo(float).eps * np.abs(theta_np(t))
    return z, err


def gram_points(n_lo: int, n_hi: int) -> np.ndarray:
    """g_n for n_lo <= n <= n_hi (n >= -1), where theta(g_n) = n pi."""
    n = np.arange(n_lo, n_hi + 1, dtype=np.float64)
    target = n * np.pi
    x = (n + 0.125) / np.e
    # t = 2 pi e exp(W(x)) solves the two leading terms; W by Newton from log1p
    w = np.log1p(x)
    for _ in range(40):
        ew = np.exp(w)
        w -= (w * ew - x) / (ew * (w + 1))
    t = 2 * np.pi * np.e * np.exp(w)
    for _ in range(6):
        t -= (theta_np(t) - target) / (0.5 * np.log(t / (2 * np.pi)))
    return t


# ---------------------------------------------------------------------------
# Riemann-von Mangoldt


def rvm_count(t) -> float:
    """(t/2pi) log(t/(2 pi e)) + 7/8."""
    t = float(t)
    if t <= 0:
        return 0.875
    return t / (2 * math.pi) * math.log(t / (2 * math.pi * math.e)) + 0.875


def count_check(zl: ZeroList, checkpoints: int = 10) -> bool:
    """Counts at t_max and ``checkpoints`` interior heights within 0.8 log t_max."""
    t_max = float(zl.t_max)
    band = 0.8 * math.log(t_max) if t_max > 1 else 0.0
    heights = [t_max * (i + 1) / (checkpoints + 1) for i in range(checkpoints)] + [t_max]
    for t in heights:
        if abs(zl.count_upto(t) - rvm_count(t)) > band:
            return False
    return True


# ---------------------------------------------------------------------------
# zero finding


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _newton_fast(a, b, za, zb, precision, tol, riemann_siegel=False):
    """Polish bracketed zeros; returns double-double (hi, lo) and a per-zero error.

    Newton on zeta(1/2 + it) in t, safeguarded: Z at each iterate shrinks the
    bracket, and a step that would leave it is replaced by bisection.
    """
    a, b, za, zb = a.copy(), b.copy(), za.copy(), zb.copy()
    hi = a - za * (b - a) / (zb - za)
    lo = np.zeros_like(hi)
    err_t = np.full(hi.shape, np.inf)
    active = np.ones(hi.shape, dtype=bool)
    for _ in range(40):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        h, l = hi[idx], lo[idx]
        vals, err, _ = zeta_derivs_fast(h, 1, 0.5, tol, t_lo=l, riemann_siegel=riemann_siegel)
        z = (np.exp(1j * theta_np(h)) * vals[:, 0]).real
        left = np.signbit(z) == np.signbit(za[idx])
        a[idx] = np.where(left, h, a[idx])
        za[idx] = np.where(left, z, za[idx])
        b[idx] = np.where(left, b[idx], h)
        zb[idx] = np.where(left, zb[idx], z)
        delta = (vals[:, 0] / (1j * vals[:, 1])).real
        s, e = _two_sum(h, -delta)
        e = e + l
        nh, nl = _two_sum(s, e)
        wild = ~((nh >= a[idx]) & (nh <= b[idx]) & np.isfinite(nh))
        mid = 0.5 * (a[idx] + b[idx])
        nh = np.where(wild, mid, nh)
        nl = np.where(wild, 0.0, nl)
        hi[idx], lo[idx] = nh, nl
        noise = err[:, 0] / np.abs(vals[:, 1])
        err_t[idx] = np.where(wild, np.inf, np.abs(delta) + noise)
        done = ~wild & (np.abs(delta) <= np.maximum(precision / 16, 2 * noise))
        active[idx[done]] = False
    if np.any(active):
        raise MissedZero(f"refinement did not settle near t={hi[active][0]:.6f}")
    return hi, lo, err_t


def _count_changes(z):
    return int(np.count_nonzero(np.signbit(z[1:]) != np.signbit(z[:-1])))


def find_zeros(t_max, cfg: EvalConfig | None = None, precision: float = DEFAULT_PRECISION,
               tol: float = 1e-12, riemann_siegel: bool = False) -> ZeroList:
    """All zeros 0 < gamma <= t_max on the critical line.

    The Z scan and Newton steps run on the compiled kernel (``tol`` bounds its
    truncation error).  If ``precision`` is finer than double-double Newton can
    deliver, each ordinate is polished further with ``cfg``.  With
    ``riemann_siegel`` the kernel switches to the Riemann-Siegel formula
    wherever its error estimate meets the tolerance in force.
    """
    rs = riemann_siegel
    t_max = mpf(t_max)
    tm = float(t_max)
    if tm > T_LIMIT:
        raise RangeExceeded(f"t_max {tm:g} exceeds {T_LIMIT:g}")
    if tm > DOCUMENTED_T_MAX:
        log.warning("t_max %.6g is beyond the documented range %.0e", tm, DOCUMENTED_T_MAX)
    if tm < FIRST_GRAM:
        return ZeroList("computed", (), t_max, precision)

    # Gram points up to the first good one past t_max
    n_hi = int(rvm_count(tm) + 3 * math.log(tm) + 10)
    while True:
        g = gram_points(-1, n_hi)
        zg, _ = hardy_z_fast(g, tol, rs)
        good = (zg * np.where(np.arange(-1, n_hi + 1) % 2 == 0, 1.0, -1.0)) > 0
        beyond = np.nonzero(good & (g > tm))[0]
        if beyond.size:
            last = beyond[0]
            break
        n_hi = int(n_hi * 1.2) + 20
    g, good = g[: last + 1], good[: last + 1]
    good[0] = True  # Z < 0 on (0, g_{-1}], as required of a good point

    # three samples per Gram interval
    sub = 3
    frac = np.arange(sub) / sub
    grid = (g[:-1, None] + np.diff(g)[:, None] * frac[None, :]).ravel()
    grid = np.append(grid, g[-1])
    zgrid, _ = hardy_z_fast(grid, tol, rs)

    good_idx = np.nonzero(good)[0]
    brackets_a, brackets_b, za_list, zb_list = [], [], [], []
    for a_i, b_i in zip(good_idx[:-1], good_idx[1:]):
        want = b_i - a_i
        ts = grid[a_i * sub: b_i * sub + 1]
        zs = zgrid[a_i * sub: b_i * sub + 1]
        depth = 0
        while _count_changes(zs) < want:
            depth += 1
            if depth > 6:
                raise MissedZero(
                    f"Gram block [{ts[0]:.6f}, {ts[-1]:.6f}] shows {_count_changes(zs)} of {want} zeros"
                )
            fine = np.linspace(0, 1, 5)[1:-1]
            mids = (ts[:-1, None] + np.diff(ts)[:, None] * fine[None, :]).ravel()
            zm, _ = hardy_z_fast(mids, tol, rs)
            ts = np.concatenate([ts, mids])
            zs = np.concatenate([zs, zm])
            order = np.argsort(ts)
            ts, zs = ts[order], zs[order]
        if _count_changes(zs) > want:
            log.warning("Gram block at %.6f holds more sign changes than Rosser's rule allows", ts[0])
        ch = np.nonzero(np.signbit(zs[1:]) != np.signbit(zs[:-1]))[0]
        brackets_a.append(ts[ch])
        brackets_b.append(ts[ch + 1])
        za_list.append(zs[ch])
        zb_list.append(zs[ch + 1])

    if not brackets_a:
        return ZeroList("computed", (), t_max, precision)
    a = np.concatenate(brackets_a)
    b = np.concatenate(brackets_b)
    keep = a <= tm  # zeros in (a, b] with a > t_max are certainly beyond t_max
    a, b = a[keep], b[keep]
    za, zb = np.concatenate(za_list)[keep], np.concatenate(zb_list)[keep]
    hi, lo, err_t = _newton_fast(a, b, za, zb, precision, min(tol, precision * 1e-2), rs)

    with mpmath.workprec(160):
        gammas = [mpf(h) + mpf(l) for h, l in zip(hi, lo)]
    rough = np.nonzero(err_t > precision)[0]
    if rough.size:
        better, worst = _polish([gammas[i] for i in rough], cfg, precision)
        for i, g_new, e in zip(rough, better, worst):
            gammas[i] = g_new
            err_t[i] = e
    achieved = float(np.max(err_t)) if err_t.size else 0.0
    gammas = [x for x in gammas if x <= t_max]
    for i in range(1, len(gammas)):
        if gammas[i] - gammas[i - 1] <= 2 * achieved:
            raise MissedZero(f"ordinates {i} and {i + 1} coincide within precision")
    return ZeroList("computed", tuple(gammas), t_max, max(achieved, 0.0))


def _polish(gammas, cfg: EvalConfig | None, precision: float):
    digits = int(-math.log10(precision)) + 8
    cfg = cfg if cfg is not None and not cfg.is_fast else EvalConfig.for_digits(max(digits, 20), 1)
    out = []
    errs = []
    with mpmath.workprec(cfg.precision_bits + 16):
        for g in gammas:
            for _ in range(8):
                dv = zeta_derivs(mpmath.mpc(0.5, g), 1, cfg)
                z, dz = dv.values
                step = (z / (1j * dz)).real
                g -= step
                bound = abs(step) + dv.error_bound / abs(dz)
                if abs(step) < precision / 16:
                    break
            out.append(g)
            errs.append(float(bound))
    return out, errs


def residual_ok(gamma, precision: float, cfg: EvalConfig | None = None, factor: float = 1e3) -> bool:
    """|zeta(1/2 + i gamma)| <= factor * (error bound + |zeta'| * precision)."""
    cfg = cfg or EvalConfig.for_digits(30, 1)
    dv = zeta_derivs(mpmath.mpc(0.5, gamma), 1, cfg)
    z, dz = dv.values
    return abs(z) <= factor * (dv.error_bound + abs(dz) * precision)


# ---------------------------------------------------------------------------
# files


def load_zeros(path, t_max) -> ZeroList:
    """Parse ordinates <= t_max from a one-per-line text file.

    Lines starting with '#' and blank lines are skipped; LF and CRLF both
    work.  Reading stops at the first ordinate above t_max.  The precision is
    half a unit in the last printed place, or the ``# precision`` header that
    ``write_zeros`` emits if that is larger.
    """
    t_max = mpf(t_max)
    gammas = []
    finest = None
    prev = None
    stated = 0.0
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.rstrip("\r\n")
            stripped = text.strip()
            if not stripped or stripped.startswith("#"):
                h = _HEADER.fullmatch(stripped)
                if h is not None:
                    stated = max(stated, float(h.group(1)))
                continue
            m = _LINE.fullmatch(stripped)
            if m is None:
                raise ParseError(lineno, text)
            frac = m.group(2) or ""
            with mpmath.workdps(max(30, len(stripped) + 5)):
                value = mpf(stripped.lstrip("+"))
            if value <= 0:
                raise ParseError(lineno, text, "ordinate must be positive")
            if prev is not None and value <= prev:
                raise NonMonotonic(lineno, stripped)
            prev = value
            if value > t_max:
                break
            gammas.append(value)
            if finest is None or len(frac) < finest:
                finest = len(frac)
    precision = max(0.5 * 10.0 ** (-finest), stated) if finest is not None else 0.0
    return ZeroList("file", tuple(gammas), t_max, precision)


def to_fraction(x) -> Fraction:
    """Exact value of a float or mpf as a dyadic rational."""
    if isinstance(x, (int, float)):
        return Fraction(x)
    if not isinstance(x, mpf):
        x = mpf(x)  # ints and decimal strings; an existing mpf keeps its bits
    sign, m, e, _ = x._mpf_
    m, e = (-int(m) if sign else int(m)), int(e)
    return Fraction(m << e) if e >= 0 else Fraction(m, 1 << -e)


def format_ordinate(gamma, decimals: int) -> str:
    q = to_fraction(gamma)
    scaled = round(q * 10 ** decimals)
    whole, part = divmod(scaled, 10 ** decimals)
    return f"{whole}.{part:0{decimals}d}" if decimals else str(whole)


def write_zeros(zl: ZeroList, path, decimals: int | None = None) -> None:
    if decimals is None:
        decimals = max(6, math.ceil(-math.log10(zl.precision)) + 2) if zl.precision > 0 else 15
    lines = [format_ordinate(g, decimals) for g in zl.gammas]
    if zl.precision > 0:
        # the printed digits alone would understate the error; say it
        lines.insert(0, f"# precision {zl.precision + 0.5 * 10.0 ** -decimals:.3e}")
    Path(path).write_bytes(("".join(line + "\n" for line in lines)).encode("utf-8"))


def align_T(T, zl: ZeroList, min_gap: float = 1e-6):
    """Move T off an ordinate: (T', adjusted).

    If T lies within ``min_gap`` of an ordinate, T' is the midpoint to the
    neighbouring ordinate on the side that keeps the inclusion of that
    ordinate unchanged.
    """
    T = mpf(T)
    k = zl.count_upto(T)  # gammas[:k] <= T
    near = [i for i in (k - 1, k) if 0 <= i < len(zl) and abs(zl.gammas[i] - T) < min_gap]
    if not near:
        return T, False
    i = near[0]
    if i == k - 1:  # gamma_i <= T stays included
        upper = zl.gammas[i + 1] if i + 1 < len(zl) else zl.gammas[i] + 1
        return (zl.gammas[i] + upper) / 2, True
    lower = zl.gammas[i - 1] if i > 0 else mpf(0)
    return (lower + zl.gammas[i]) / 2, True
