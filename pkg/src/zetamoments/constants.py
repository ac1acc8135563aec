"""Stieltjes constants and the Laurent coefficients of zeta and zeta'/zeta at s=1.

    zeta(s)      = 1/(s-1) + sum_j C_j (s-1)^j,   C_j = (-1)^j gamma_j / j!
    zeta'/zeta(s) = -1/(s-1) + sum_j A_j (s-1)^j

A_0 = C_0 and A_n = (n+1) C_n - sum_{j<n} A_j C_{n-1-j}.

Each gamma_j is computed twice, by unrelated methods, and returned only if
the two agree:

* ``limit``: the defining limit sum_{k<=K} (log k)^j/k - (log K)^(j+1)/(j+1)
  with the Euler-Maclaurin tail from K to infinity added in closed form;
* ``contour``: Cauchy coefficients of the entire function zeta(s) - 1/(s-1)
  on the unit circle around s=1, by the trapezoid rule.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import mpmath
from mpmath import mpf

from .errors import PrecisionUnreachable, UnsupportedIndex
from .zeta_eval import EvalConfig, zeta_derivs

MAX_INDEX = 32
MIN_DIGITS, MAX_DIGITS = 10, 1000
DEFAULT_DIGITS = 50


def _check(j: int, digits: int):
    if j < 0:
        raise ValueError("index must be non-negative")
    if j > MAX_INDEX:
        raise UnsupportedIndex(f"index {j} above the supported maximum {MAX_INDEX}")
    if not MIN_DIGITS <= digits <= MAX_DIGITS:
        raise ValueError(f"digits must be in [{MIN_DIGITS}, {MAX_DIGITS}]")


def working_digits(j: int, digits: int) -> int:
    return digits + 10 + math.ceil(math.log2(j + 1))


# ---------------------------------------------------------------------------
# method 1: limit definition with Euler-Maclaurin tail


def _derivative_polys(j: int, count: int) -> list[list[int]]:
    """Integer coefficient lists of P_r, r < count, where
    d^r/dx^r (log x)^j / x = P_r(log x) / x^(r+1)."""
    p = [0] * j + [1]
    out = [p]
    for r in range(count - 1):
        dp = [(i + 1) * p[i + 1] for i in range(len(p) - 1)] + [0]
        p = [dp[i] - (r + 1) * p[i] for i in range(len(p))]
        out.append(p)
    return out


def _poly_eval(p, u):
    acc = mpf(0)
    for c in reversed(p):
        acc = acc * u + c
    return acc


def stieltjes_limit(j: int, dps: int) -> mpf:
    K = max(20, int(0.45 * dps) + 2 * j)
    # the head and (log K)^(j+1)/(j+1) cancel to the size of gamma_j
    guard = int((j + 1) * math.log10(math.log(K))) + 5
    with mpmath.workdps(dps + guard):
        tol = mpf(10) ** (-dps)
        logs = [mpf(0)] + [mpmath.log(k) for k in range(1, K + 1)]
        head = mpmath.fsum(logs[k] ** j / k for k in range(1, K))
        lK = logs[K]
        acc = head + lK ** j / (2 * K) - lK ** (j + 1) / (j + 1)
        M = int(math.pi * K) + 2
        polys = _derivative_polys(j, 2 * M)
        for m in range(1, M):
            b = mpmath.bernoulli(2 * m) / mpmath.factorial(2 * m)
            term = b * _poly_eval(polys[2 * m - 1], lK) / mpf(K) ** (2 * m)
            acc -= term
            if abs(term) < tol * mpf(10) ** -3:
                return +acc
    raise PrecisionUnreachable(f"limit method did not converge for j={j} at {dps} digits")


# ---------------------------------------------------------------------------
# method 2: Cauchy coefficients on |s-1| = 1

_node_lock = threading.Lock()
_nodes: dict[int, list] = {}  # dps -> values of zeta(s)-1/(s-1) at 1+e^(2 pi i q/Q), Q = len


def _contour_nodes(dps: int, Q: int) -> list:
    """g(1 + e^(2 pi i q/Q)) for q < Q, extending a cached finer/coarser set."""
    with _node_lock:
        have = _nodes.get(dps)
        if have is not None and len(have) >= Q and len(have) % Q == 0:
            step = len(have) // Q
            return have[::step]
        cfg = EvalConfig(int(dps * 3.33) + 32, mpf(10) ** (-dps - 5), 0)
        with mpmath.workdps(dps + 10):
            vals = [None] * Q
            if have is not None and Q % len(have) == 0:
                step = Q // len(have)
                for q, v in enumerate(have):
                    vals[q * step] = v
            for q in range(Q // 2 + 1):
                if vals[q] is not None:
                    continue
                z = mpmath.expjpi(mpf(2 * q) / Q)
                s = 1 + z
                v = zeta_derivs(s, 0, cfg).values[0] - 1 / z
                vals[q] = v
                if 0 < q < Q - q:
                    vals[Q - q] = mpmath.conj(v)  # g(conj s) = conj g(s)
        _nodes[dps] = vals
        return vals


def _contour_coeff(vals, j: int) -> mpf:
    Q = len(vals)
    acc = mpmath.fsum(vals[q] * mpmath.expjpi(mpf(-2 * j * q) / Q) for q in range(Q))
    return (acc / Q).real


def stieltjes_contour(j: int, dps: int) -> mpf:
    # gamma_j = (-1)^j j! C_j: the j! amplification (< 10^36 for j <= 32) needs
    # guard digits; rounding up lets every j at one precision share the nodes
    wd = -(-(dps + 40) // 10) * 10
    with mpmath.workdps(wd + 5):
        tol = mpf(10) ** (-dps)
        Q = 64
        prev = None
        while Q <= 8192:
            vals = _contour_nodes(wd, Q)
            est = (-1) ** j * mpmath.factorial(j) * _contour_coeff(vals, j)
            if prev is not None and abs(est - prev) < tol * mpf(10) ** -3:
                return +est
            prev = est
            Q *= 2
    raise PrecisionUnreachable(f"contour method did not converge for j={j} at {dps} digits")


# ---------------------------------------------------------------------------
# public API

_memo_lock = threading.Lock()
_memo: dict[tuple[int, int], mpf] = {}


def stieltjes(j: int, digits: int = DEFAULT_DIGITS) -> mpf:
    """gamma_j with absolute error <= 10^-digits, both methods agreeing."""
    _check(j, digits)
    key = (j, digits)
    with _memo_lock:
        hit = _memo.get(key)
    if hit is not None:
        return hit
    wd = working_digits(j, digits)
    a = stieltjes_limit(j, wd)
    b = stieltjes_contour(j, wd)
    with mpmath.workdps(wd):
        if abs(a - b) > mpf(10) ** (-digits):
            raise PrecisionUnreachable(
                f"gamma_{j}: methods differ by {mpmath.nstr(abs(a - b), 3)} at {digits} digits"
            )
        val = +a
    with _memo_lock:
        _memo.setdefault(key, val)
    return val


def c_coeff(j: int, digits: int = DEFAULT_DIGITS) -> mpf:
    g = stieltjes(j, digits)
    with mpmath.workdps(working_digits(j, digits)):
        return (-1) ** j * g / mpmath.factorial(j)


def a_coeff(n: int, digits: int = DEFAULT_DIGITS) -> mpf:
    return coefficient_set(n, digits).A[n]


@dataclass(frozen=True)
class StieltjesTable:
    max_index: int
    precision_bits: int
    values: tuple

    def __post_init__(self):
        if len(self.values) != self.max_index + 1:
            raise ValueError("values must hold gamma_0..gamma_J")


@dataclass(frozen=True)
class CoefficientSet:
    C: tuple
    A: tuple
    precision_bits: int


def stieltjes_table(J: int, digits: int = DEFAULT_DIGITS) -> StieltjesTable:
    vals = tuple(stieltjes(j, digits) for j in range(J + 1))
    bits = int(working_digits(J, digits) * 3.3219280948873626)
    return StieltjesTable(J, bits, vals)


def coefficient_set(J: int, digits: int = DEFAULT_DIGITS) -> CoefficientSet:
    """C_0..C_J and A_0..A_J, the A's from the recursion at guarded precision."""
    _check(J, digits)
    wd = working_digits(J, digits)
    C = [c_coeff(j, digits) for j in range(J + 1)]
    A = []
    with mpmath.workdps(wd):
        for n in range(J + 1):
            if n == 0:
                A.append(+C[0])
            else:
                A.append((n + 1) * C[n] - mpmath.fsum(A[j] * C[n - 1 - j] for j in range(n)))
    return CoefficientSet(tuple(C), tuple(A), int(wd * 3.3219280948873626))
