"""Exact truncated Laurent series around s = 1 and the residue computation.

Coefficients live in ``ConstPoly``: polynomials with rational coefficients in
the opaque symbols C_0, C_1, ... (Laurent coefficients of zeta at s = 1) and
L = log Y.  Nothing here touches floating point.

The residue of (zeta'/zeta)^(n)(s) * zeta(s) * Y^s / s at s = 1 is computed two
ways: by brute multiplication of the four truncated expansions
(:func:`residue_at_1`) and from the closed form (:func:`theorem_coeffs`).
The two must agree as polynomial identities.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

from .errors import TruncationInsufficient

# Variable ids: C_j is j, L sorts after every C_j.
L_VAR = 1 << 30

Monomial = tuple  # tuple[tuple[int, int], ...], sorted by variable id


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _var_name(v: int) -> str:
    return "L" if v == L_VAR else f"C{v}"


class ConstPoly:
    """Multivariate polynomial over Q in C_0..C_J and L.

    Stored as ``{monomial: Fraction}`` with zero coefficients dropped, so two
    polynomials are equal iff their term dicts are equal.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[tuple(sorted(m))] = c

    # constructors
    @classmethod
    def const(cls, q) -> "ConstPoly":
        return cls({(): Fraction(q)})

    @classmethod
    def C(cls, j: int) -> "ConstPoly":
        if j < 0:
            raise ValueError("C index must be >= 0")
        return cls({((j, 1),): Fraction(1)})

    @classmethod
    def L(cls, power: int = 1) -> "ConstPoly":
        if power == 0:
            return cls.const(1)
        return cls({((L_VAR, power),): Fraction(1)})

    @staticmethod
    def _coerce(x) -> "ConstPoly":
        if isinstance(x, ConstPoly):
            return x
        if isinstance(x, (int, Fraction)):
            return ConstPoly.const(x)
        return NotImplemented

    # ring operations
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        res = ConstPoly()
        res.terms = out
        return res

    __radd__ = __add__

    def __neg__(self):
        res = ConstPoly()
        res.terms = {m: -c for m, c in self.terms.items()}
        return res

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return ConstPoly()
            res = ConstPoly()
            res.terms = {m: c * other for m, c in self.terms.items()}
            return res
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                v = out.get(m, 0) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        res = ConstPoly()
        res.terms = out
        return res

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = ConstPoly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # inspection
    def variables(self) -> set[int]:
        return {v for m in self.terms for v, _ in m}

    def degree_in_L(self) -> int:
        return max((dict(m).get(L_VAR, 0) for m in self.terms), default=-1)

    def coeff_of_L(self, k: int) -> "ConstPoly":
        """Coefficient of L^k, as a polynomial in the C's only."""
        out = {}
        for m, c in self.terms.items():
            d = dict(m)
            if d.get(L_VAR, 0) == k:
                d.pop(L_VAR, None)
                out[tuple(sorted(d.items()))] = c
        return ConstPoly(out)

    def constant_term(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def evaluate(self, C: Sequence, L=None, one=None):
        """Numeric value with C[j] substituted for C_j and ``L`` for L.

        ``one`` fixes the numeric type of the result (e.g. ``mpmath.mpf(1)``);
        the rational coefficients are converted via ``one * num / den``.
        """
        if one is None:
            one = C[0] * 0 + 1 if len(C) else 1
        total = one * 0
        for m, c in self.terms.items():
            term = one * c.numerator / c.denominator
            for v, e in m:
                if v == L_VAR:
                    if L is None:
                        raise ValueError("polynomial involves L but no value given")
                    term = term * L ** e
                else:
                    term = term * C[v] ** e
            total = total + term
        return total

    def _sort_key(self, m: Monomial):
        deg = sum(e for _, e in m)
        return (deg, [(v, -e) for v, e in m])

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=self._sort_key):
            c = self.terms[m]
            factors = [
                _var_name(v) + (f"^{e}" if e > 1 else "") for v, e in m
            ]
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            parts.append(("-" if c < 0 else "+", body))
        sign, body = parts[0]
        out = ("-" if sign == "-" else "") + body
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"ConstPoly({self})"


C = ConstPoly.C


class TruncatedLaurent:
    """Laurent series in (s-1), known exactly for orders min_order..max_order.

    ``y_factor`` marks a series carrying an overall factor Y that is not part
    of the coefficients.
    """

    def __init__(
        self,
        coeffs: Mapping[int, ConstPoly],
        min_order: int,
        max_order: int,
        y_factor: bool = False,
    ):
        if max_order < min_order:
            raise ValueError("max_order < min_order")
        self.min_order = min_order
        self.max_order = max_order
        self.y_factor = y_factor
        self.coeffs: dict[int, ConstPoly] = {}
        for k, c in coeffs.items():
            if not min_order <= k <= max_order:
                raise ValueError(f"order {k} outside [{min_order}, {max_order}]")
            c = ConstPoly._coerce(c)
            if c:
                self.coeffs[k] = c

    def coeff(self, k: int) -> ConstPoly:
        if k > self.max_order:
            raise TruncationInsufficient(
                f"order {k} requested but series only known to order {self.max_order}"
            )
        return self.coeffs.get(k, ConstPoly())

    def __mul__(self, other: "TruncatedLaurent") -> "TruncatedLaurent":
        if self.y_factor and other.y_factor:
            raise ValueError("product would carry Y^2")
        lo = self.min_order + other.min_order
        hi = min(self.max_order + other.min_order, self.min_order + other.max_order)
        out: dict[int, ConstPoly] = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                if i + j > hi:
                    continue
                out[i + j] = out.get(i + j, ConstPoly()) + a * b
        return TruncatedLaurent(out, lo, hi, self.y_factor or other.y_factor)

    def __eq__(self, other):
        if not isinstance(other, TruncatedLaurent):
            return NotImplemented
        return (
            self.min_order == other.min_order
            and self.max_order == other.max_order
            and self.y_factor == other.y_factor
            and self.coeffs == other.coeffs
        )

    def truncate(self, max_order: int) -> "TruncatedLaurent":
        if max_order > self.max_order:
            raise TruncationInsufficient("cannot extend a truncated series")
        return TruncatedLaurent(
            {k: c for k, c in self.coeffs.items() if k <= max_order},
            self.min_order,
            max_order,
            self.y_factor,
        )

    def __str__(self):
        terms = []
        for k in sorted(self.coeffs):
            terms.append(f"({self.coeffs[k]})*(s-1)^{k}")
        body = " + ".join(terms) if terms else "0"
        if self.y_factor:
            body = f"Y*[{body}]"
        return f"{body} + O((s-1)^{self.max_order + 1})"

    __repr__ = __str__


@lru_cache(maxsize=None)
def _expand_A(n: int) -> ConstPoly:
    if n == 0:
        return C(0)
    acc = C(n) * (n + 1)
    for j in range(n):
        acc = acc - _expand_A(j) * C(n - 1 - j)
    return acc


def expand_A(n: int) -> ConstPoly:
    """A_n (Laurent coefficient of zeta'/zeta at s=1) as a polynomial in C's.

    A_0 = C_0 and A_n = (n+1) C_n - sum_{j<n} A_j C_{n-1-j}.  Supported range
    n <= 16; larger n works but the term count grows like the partition
    numbers.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return _expand_A(n)


def laurent_logderiv_deriv(n: int, m: int) -> TruncatedLaurent:
    """n-th derivative of zeta'/zeta around s=1, exact through order m."""
    if n < 0 or m < 0:
        raise ValueError("n and m must be >= 0")
    coeffs = {-(n + 1): ConstPoly.const((-1) ** (n + 1) * factorial(n))}
    for j in range(n, n + m + 1):
        coeffs[j - n] = _expand_A(j) * (factorial(j) // factorial(j - n))
    return TruncatedLaurent(coeffs, -(n + 1), m)


def laurent_zeta(m: int) -> TruncatedLaurent:
    coeffs = {-1: ConstPoly.const(1)}
    for k in range(m + 1):
        coeffs[k] = C(k)
    return TruncatedLaurent(coeffs, -1, m)


def laurent_Ys(m: int) -> TruncatedLaurent:
    """Y^s / Y = exp((s-1) L); the factor Y is recorded in ``y_factor``."""
    coeffs = {k: ConstPoly.L(k) * Fraction(1, factorial(k)) for k in range(m + 1)}
    return TruncatedLaurent(coeffs, 0, m, y_factor=True)


def laurent_inv_s(m: int) -> TruncatedLaurent:
    return TruncatedLaurent({k: ConstPoly.const((-1) ** k) for k in range(m + 1)}, 0, m)


@dataclass(frozen=True)
class ResidueExpansion:
    """Residue as sum_k coeff_of_L_pow[k] * Y * L^k (the Y is implicit)."""

    n: int
    coeff_of_L_pow: tuple

    def __post_init__(self):
        if len(self.coeff_of_L_pow) != self.n + 2:
            raise ValueError("need n+2 coefficients (powers L^0..L^(n+1))")

    def as_poly(self) -> ConstPoly:
        out = ConstPoly()
        for k, c in enumerate(self.coeff_of_L_pow):
            out = out + c * ConstPoly.L(k)
        return out

    def evaluate(self, C_values: Sequence, L, one=None):
        """Numeric residue divided by Y, i.e. sum_k coeff_k(C) L^k."""
        return self.as_poly().evaluate(C_values, L, one=one)

    def max_c_index(self) -> int:
        return max(
            (v for c in self.coeff_of_L_pow for v in c.variables() if v != L_VAR),
            default=-1,
        )

    def lines(self) -> list[str]:
        return [
            f"L^{k}: {self.coeff_of_L_pow[k]}"
            for k in range(self.n + 1, -1, -1)
        ]

    def __str__(self):
        return "\n".join(self.lines())


def _product_residue(n: int, m: int) -> ConstPoly:
    rest = laurent_zeta(m) * laurent_Ys(m) * laurent_inv_s(m)
    full = laurent_logderiv_deriv(n, m) * rest
    if full.max_order < -1:
        raise TruncationInsufficient(
            f"truncation m={m} leaves the product known only to order {full.max_order}"
        )
    return full.coeff(-1)


def _split_by_L(n: int, poly: ConstPoly) -> ResidueExpansion:
    if poly.degree_in_L() > n + 1:
        raise TruncationInsufficient("residue has L-degree above n+1")
    return ResidueExpansion(n, tuple(poly.coeff_of_L(k) for k in range(n + 2)))


@lru_cache(maxsize=None)
def residue_at_1(n: int, m: int | None = None, verify: bool = True) -> ResidueExpansion:
    """Residue at s=1 of (zeta'/zeta)^(n)(s) zeta(s) Y^s/s by series multiplication.

    All four expansions are truncated at order ``m`` (default n+2, the
    smallest order that pins the (s-1)^-1 coefficient).  With ``verify`` the
    product is recomputed at m+1 and must not change.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if m is None:
        m = n + 2
    res = _product_residue(n, m)
    if verify and _product_residue(n, m + 1) != res:
        raise TruncationInsufficient(f"residue for n={n} changed between m={m} and m={m + 1}")
    return _split_by_L(n, res)


@lru_cache(maxsize=None)
def theorem_coeffs(n: int) -> ResidueExpansion:
    """Closed-form coefficients of the mean-value expansion.

    Leading (-1)^(n+1)/(n+1) L^(n+1); for k = 0..n the L^(n-k) coefficient is
    (-1)^(n+1) binom(n,k) (-1)^k k! (-1 + sum_{j<=k} (-1)^j C_j); and n! A_n is
    added to the constant term.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    coeffs = [ConstPoly() for _ in range(n + 2)]
    coeffs[n + 1] = ConstPoly.const(Fraction((-1) ** (n + 1), n + 1))
    for k in range(n + 1):
        inner = ConstPoly.const(-1)
        for j in range(k + 1):
            inner = inner + C(j) * (-1) ** j
        scale = (-1) ** (n + 1) * comb(n, k) * (-1) ** k * factorial(k)
        coeffs[n - k] = coeffs[n - k] + inner * scale
    coeffs[0] = coeffs[0] + _expand_A(n) * factorial(n)
    return ResidueExpansion(n, tuple(coeffs))


def leading_coefficient(n: int) -> Fraction:
    return Fraction((-1) ** (n + 1), n + 1)


def pole_pairing_L_top(n: int, m: int | None = None) -> ConstPoly:
    """L^(n+1) content of (regular part of zeta) x (pole of the log-derivative).

    This pairing must contribute nothing to the top power of L; only the
    zeta pole does.  Exposed for tests.
    """
    if m is None:
        m = n + 2
    zeta_regular = TruncatedLaurent({k: C(k) for k in range(m + 1)}, 0, m)
    pole = TruncatedLaurent(
        {-(n + 1): ConstPoly.const((-1) ** (n + 1) * factorial(n))}, -(n + 1), m
    )
    full = pole * zeta_regular * laurent_Ys(m) * laurent_inv_s(m)
    return full.coeff(-1).coeff_of_L(n + 1)


def parse_poly(text: str) -> ConstPoly:
    """Parse the output format of ``str(ConstPoly)`` back into a polynomial."""
    text = text.replace(" ", "")
    if text in ("", "0"):
        return ConstPoly()
    out = ConstPoly()
    for chunk in _split_signed(text):
        sign = -1 if chunk[0] == "-" else 1
        body = chunk.lstrip("+-")
        term = ConstPoly.const(sign)
        for factor in body.split("*"):
            if "^" in factor:
                base, e = factor.split("^")
                e = int(e)
            else:
                base, e = factor, 1
            if base == "L":
                term = term * ConstPoly.L(e)
            elif base.startswith("C"):
                term = term * C(int(base[1:])) ** e
            else:
                term = term * Fraction(base) ** e
        out = out + term
    return out


def _split_signed(text: str) -> Iterable[str]:
    start = 0
    for i in range(1, len(text)):
        if text[i] in "+-" and text[i - 1] not in "^":
            yield text[start:i]
            start = i
    yield text[start:]
