"""Truncated Puiseux series in t with rational exponents and complex coefficients.

A series is a finite sorted list of terms plus a precision marker ``prec``:
the series is known modulo terms of exponent >= prec.  ``prec=None`` means
the series is exact.  Exponents are stored as integer numerators over a
shared denominator, which keeps the inner loops on machine integers.

Coefficients that cancel to below ``EPS_COEFF`` times the magnitude of the
contributions that produced them are dropped as numerical zeros.

    >>> x = PSeries.monomial(1, 1) + 1
    >>> y = x.inverse(relprec=4)
    >>> (x * y).is_one()
    True
"""
from __future__ import annotations

import cmath
import math
import re
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    DomainError,
    NoConvergence,
    NotInValuationRing,
    PrecisionExhausted,
    ResourceError,
    SingularSeed,
)
from .gamma import Gamma

EPS_COEFF = 1e-9
MAX_DEN = 10 ** 6

_default_relprec = Fraction(24)


def default_relprec() -> Fraction:
    return _default_relprec


def set_default_relprec(p) -> None:
    global _default_relprec
    p = Fraction(p)
    if p <= 0:
        raise DomainError("precision must be positive")
    _default_relprec = p


class precision:
    """Context manager temporarily changing the default relative precision."""

    def __init__(self, p):
        self.p = Fraction(p)

    def __enter__(self):
        self.old = _default_relprec
        set_default_relprec(self.p)
        return self

    def __exit__(self, *exc):
        set_default_relprec(self.old)
        return False


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _check_den(d: int) -> None:
    if d > MAX_DEN:
        raise ResourceError(f"exponent denominator {d} exceeds {MAX_DEN}")


class PSeries:
    __slots__ = ("den", "items", "prec")

    def __init__(self, den: int, items: tuple, prec: Fraction | None):
        # internal constructor; items sorted, exponents num/den < prec
        self.den = den
        self.items = items
        self.prec = prec

    # -- construction -------------------------------------------------
    @classmethod
    def from_terms(cls, terms: Iterable, prec=None) -> "PSeries":
        acc: dict[Fraction, complex] = {}
        for e, c in terms:
            e = Fraction(e)
            acc[e] = acc.get(e, 0) + complex(c)
        prec = None if prec is None else Fraction(prec)
        pairs = [(e, c) for e, c in acc.items() if c != 0 and (prec is None or e < prec)]
        return cls._from_fraction_pairs(pairs, prec)

    @classmethod
    def _from_fraction_pairs(cls, pairs, prec):
        den = 1
        for e, _ in pairs:
            den = _lcm(den, e.denominator)
        _check_den(den)
        items = tuple(sorted(((int(e * den), c) for e, c in pairs), key=lambda p: p[0]))
        return cls(den, items, prec)._normalized()

    @classmethod
    def const(cls, c) -> "PSeries":
        c = complex(c)
        return cls(1, ((0, c),) if c != 0 else (), None)

    @classmethod
    def monomial(cls, c, e) -> "PSeries":
        return cls.from_terms([(e, c)])

    @classmethod
    def zero(cls, prec=None) -> "PSeries":
        return cls(1, (), None if prec is None else Fraction(prec))

    @classmethod
    def coerce(cls, x) -> "PSeries":
        if isinstance(x, PSeries):
            return x
        if isinstance(x, (int, float, complex, Fraction)):
            return cls.const(complex(x))
        if isinstance(x, str):
            return parse_series(x)
        raise TypeError(f"cannot convert {type(x).__name__} to PSeries")

    def _normalized(self) -> "PSeries":
        if not self.items:
            return PSeries(1, (), self.prec)
        g = self.den
        for n, _ in self.items:
            g = math.gcd(g, n)
            if g == 1:
                return self
        return PSeries(self.den // g, tuple((n // g, c) for n, c in self.items), self.prec)

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> list[tuple[Fraction, complex]]:
        return [(Fraction(n, self.den), c) for n, c in self.items]

    @property
    def is_exact(self) -> bool:
        return self.prec is None

    @property
    def is_exact_zero(self) -> bool:
        return not self.items and self.prec is None

    @property
    def is_zero_to_prec(self) -> bool:
        return not self.items

    @property
    def lead_exp(self) -> Fraction:
        if not self.items:
            raise PrecisionExhausted("series has no certified leading term")
        return Fraction(self.items[0][0], self.den)

    @property
    def lead_coeff(self) -> complex:
        if not self.items:
            raise PrecisionExhausted("series has no certified leading term")
        return self.items[0][1]

    def coeff(self, e) -> complex:
        e = Fraction(e)
        if self.prec is not None and e >= self.prec:
            raise PrecisionExhausted(f"coefficient at {e} is beyond precision {self.prec}")
        if (e * self.den).denominator != 1:
            return 0j
        n = int(e * self.den)
        for m, c in self.items:
            if m == n:
                return c
        return 0j

    def max_abs(self) -> float:
        return max((abs(c) for _, c in self.items), default=0.0)

    def truncate(self, prec) -> "PSeries":
        if prec is None:
            return self
        prec = Fraction(prec)
        if self.prec is not None and self.prec <= prec:
            return self
        lim = math.ceil(prec * self.den)
        return PSeries(self.den, tuple(p for p in self.items if p[0] < lim), prec)._normalized()

    def drop_at(self, e, tol: float) -> "PSeries":
        """Remove the term at exponent e if its modulus is at most ``tol``."""
        n = Fraction(e) * self.den
        if n.denominator != 1:
            return self
        items = tuple(p for p in self.items if not (p[0] == n and abs(p[1]) <= tol))
        if len(items) == len(self.items):
            return self
        return PSeries(self.den, items, self.prec)._normalized()

    def is_one(self, tol: float = EPS_COEFF) -> bool:
        if not self.items or self.items[0][0] != 0:
            return False
        if abs(self.items[0][1] - 1) > tol:
            return False
        return all(abs(c) <= tol for _, c in self.items[1:])

    # -- arithmetic ---------------------------------------------------
    def __neg__(self) -> "PSeries":
        return PSeries(self.den, tuple((n, -c) for n, c in self.items), self.prec)

    def __add__(self, other) -> "PSeries":
        try:
            other = PSeries.coerce(other)
        except TypeError:
            return NotImplemented
        return _add(self, other)

    __radd__ = __add__

    def __sub__(self, other) -> "PSeries":
        try:
            other = PSeries.coerce(other)
        except TypeError:
            return NotImplemented
        return _add(self, other, -1)

    def __rsub__(self, other) -> "PSeries":
        return PSeries.coerce(other) - self

    def __mul__(self, other) -> "PSeries":
        if isinstance(other, (int, float, complex)) and not isinstance(other, bool):
            return self.scale(other)
        try:
            other = PSeries.coerce(other)
        except TypeError:
            return NotImplemented
        return _mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "PSeries":
        if isinstance(other, (int, float, complex)):
            if other == 0:
                raise ZeroDivisionError("division by zero constant")
            return self.scale(1 / complex(other))
        other = PSeries.coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other) -> "PSeries":
        return PSeries.coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "PSeries":
        if not isinstance(k, int):
            raise TypeError("use power() for rational exponents")
        if k < 0:
            return self.inverse() ** (-k)
        result = PSeries.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def scale(self, c) -> "PSeries":
        c = complex(c)
        if c == 0:
            return PSeries.zero()
        return PSeries(self.den, tuple((n, a * c) for n, a in self.items), self.prec)

    def shift(self, e) -> "PSeries":
        """Multiply by t**e."""
        e = Fraction(e)
        den = _lcm(self.den, e.denominator)
        _check_den(den)
        f = den // self.den
        off = int(e * den)
        prec = None if self.prec is None else self.prec + e
        return PSeries(den, tuple((n * f + off, c) for n, c in self.items), prec)._normalized()

    def inverse(self, relprec=None) -> "PSeries":
        if not self.items:
            raise PrecisionExhausted("cannot invert a series that is zero to precision")
        return self.power(Fraction(-1), 0, relprec)

    def power(self, alpha, branch: int = 0, relprec=None) -> "PSeries":
        """Rational power via the leading-term split x = c t^e (1 + u).

        The factor (1 + u)**alpha is expanded with the J.C.P. Miller
        recurrence after rescaling u to integer exponents.
        """
        alpha = Fraction(alpha)
        if not self.items:
            if self.prec is None:
                if alpha > 0:
                    return PSeries.zero()
                raise DomainError("zero to a non-positive power")
            raise PrecisionExhausted("power of a series that is zero to precision")
        if alpha.denominator == 1 and alpha >= 0 and self.prec is None:
            return self ** int(alpha)
        relprec = Fraction(default_relprec() if relprec is None else relprec)
        e0 = self.lead_exp
        c0 = self.lead_coeff
        lead_c = abs(c0) ** float(alpha) * cmath.exp(1j * float(alpha) * (cmath.phase(c0) + 2 * math.pi * branch))
        lead_e = e0 * alpha
        _check_den(lead_e.denominator)
        rel = relprec if self.prec is None else min(relprec, self.prec - e0)
        # u = x / (c0 t^e0) - 1, exponents measured from e0
        base = self.items[0][0]
        u = [(n - base, c / c0) for n, c in self.items[1:]]
        if not u:
            if self.prec is None:
                return PSeries.monomial(lead_c, lead_e)
            return PSeries.monomial(lead_c, lead_e).truncate(lead_e + rel)
        g = 0
        for n, _ in u:
            g = math.gcd(g, n)
        step = Fraction(g, self.den)
        a = {n // g: c for n, c in u}
        nmax = math.ceil(rel / step) - 1
        w = [1 + 0j]
        ks = sorted(a)
        ap1 = float(alpha + 1)
        for n in range(1, nmax + 1):
            s = 0j
            mag = 0.0
            for k in ks:
                if k > n:
                    break
                v = (ap1 * k - n) * a[k] * w[n - k]
                s += v
                mag += abs(v)
            s /= n
            if abs(s) <= EPS_COEFF * mag / n:
                s = 0j
            w.append(s)
        den = _lcm(lead_e.denominator, step.denominator)
        _check_den(den)
        n0 = int(lead_e * den)
        dn = int(step * den)
        items = tuple((n0 + dn * i, lead_c * c) for i, c in enumerate(w) if c != 0)
        return PSeries(den, items, lead_e + rel)._normalized()

    # -- valuation data -----------------------------------------------
    def val(self) -> Gamma:
        return ps_val(self)

    def rv(self) -> "RVClass":
        return ps_rv(self)

    def res(self) -> complex:
        return ps_res(self)

    # -- comparison and display ---------------------------------------
    def approx_eq(self, other, tol: float = 1e-7) -> bool:
        """Coefficientwise equality up to the common precision."""
        other = PSeries.coerce(other)
        d = self - other
        if not d.items:
            return True
        scale = max(self.max_abs(), other.max_abs(), 1e-300)
        return all(abs(c) <= tol * scale for _, c in d.items)

    def __eq__(self, other):
        if not isinstance(other, PSeries):
            return NotImplemented
        return self.den == other.den and self.items == other.items and self.prec == other.prec

    def __hash__(self):
        return hash((self.den, self.items, self.prec))

    def __repr__(self):
        return f"PSeries({format_series(self)})"

    def __str__(self):
        return format_series(self)

    def to_json(self) -> dict:
        terms = []
        for e, c in self.terms:
            terms.append([e.numerator, e.denominator, c.real, c.imag])
        if self.prec is None:
            prec = "inf"
        else:
            prec = {"num": self.prec.numerator, "den": self.prec.denominator}
        return {"terms": terms, "prec": prec}

    @classmethod
    def from_json(cls, obj) -> "PSeries":
        if isinstance(obj, (int, float)):
            return cls.const(obj)
        if isinstance(obj, str):
            return parse_series(obj)
        if not isinstance(obj, dict) or "terms" not in obj:
            raise ValueError(f"not a series: {obj!r}")
        terms = []
        for row in obj["terms"]:
            num, den, re_, im = row
            if int(den) <= 0:
                raise ValueError("exponent denominator must be positive")
            terms.append((Fraction(int(num), int(den)), complex(float(re_), float(im))))
        p = obj.get("prec", "inf")
        if p == "inf" or p is None:
            prec = None
        elif isinstance(p, dict):
            if p.get("kind") == "inf":
                prec = None
            else:
                prec = Fraction(int(p["num"]), int(p.get("den", 1)))
        else:
            prec = Fraction(p)
        return cls.from_terms(terms, prec)


def _align(x: PSeries, y: PSeries):
    den = x.den if x.den == y.den else _lcm(x.den, y.den)
    _check_den(den)
    fx, fy = den // x.den, den // y.den
    xi = x.items if fx == 1 else tuple((n * fx, c) for n, c in x.items)
    yi = y.items if fy == 1 else tuple((n * fy, c) for n, c in y.items)
    return den, xi, yi


def _minprec(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _add(x: PSeries, y: PSeries, sign: int = 1) -> PSeries:
    prec = _minprec(x.prec, y.prec)
    den, xi, yi = _align(x, y)
    lim = None if prec is None else math.ceil(prec * den)
    # merge of two sorted term lists; a sum survives unless it cancels
    out = []
    i = j = 0
    nx, ny = len(xi), len(yi)
    while i < nx or j < ny:
        if j == ny or (i < nx and xi[i][0] < yi[j][0]):
            n, c = xi[i]
            i += 1
        elif i == nx or yi[j][0] < xi[i][0]:
            n, c = yi[j]
            c = c if sign == 1 else -c
            j += 1
        else:
            n, a = xi[i]
            b = yi[j][1] if sign == 1 else -yi[j][1]
            i += 1
            j += 1
            c = a + b
            if abs(c) <= EPS_COEFF * max(abs(a), abs(b)):
                continue
        if lim is not None and n >= lim:
            break
        out.append((n, c))
    return PSeries(den, tuple(out), prec)._normalized()


def _mul(x: PSeries, y: PSeries) -> PSeries:
    if x.is_exact_zero or y.is_exact_zero:
        return PSeries.zero()
    # precision of the product
    lx = Fraction(x.items[0][0], x.den) if x.items else None
    ly = Fraction(y.items[0][0], y.den) if y.items else None
    cands = []
    if x.prec is not None:
        cands.append(x.prec + (ly if ly is not None else y.prec))
    if y.prec is not None:
        cands.append(y.prec + (lx if lx is not None else x.prec))
    prec = min(cands) if cands else None
    if not x.items or not y.items:
        return PSeries.zero(prec)
    den, xi, yi = _align(x, y)
    lim = None if prec is None else math.ceil(prec * den)
    acc: dict[int, complex] = {}
    mag: dict[int, float] = {}
    for n, a in xi:
        for m, b in yi:
            k = n + m
            if lim is not None and k >= lim:
                break
            p = a * b
            if k in acc:
                acc[k] += p
                mag[k] += abs(p)
            else:
                acc[k] = p
                mag[k] = abs(p)
    items = tuple((k, c) for k, c in sorted(acc.items()) if abs(c) > EPS_COEFF * mag[k])
    return PSeries(den, items, prec)._normalized()


T = PSeries.monomial(1, 1)


def t_pow(e, c=1) -> PSeries:
    return PSeries.monomial(c, e)


# -- valuation maps -----------------------------------------------------

class RVClass:
    """Leading term class of a scalar or a vector.

    ``slice`` holds, for each coordinate, the coefficient at the exponent
    realizing the valuation.
    """

    __slots__ = ("value", "slice")

    def __init__(self, value: Gamma, slice_: Sequence[complex]):
        self.value = value
        self.slice = tuple(complex(c) for c in slice_)

    @property
    def is_zero(self) -> bool:
        return self.value.is_zero

    def __eq__(self, other):
        if not isinstance(other, RVClass):
            return NotImplemented
        if self.value != other.value or len(self.slice) != len(other.slice):
            return False
        scale = max([abs(c) for c in self.slice + other.slice] + [1e-300])
        return all(abs(a - b) <= EPS_COEFF * scale for a, b in zip(self.slice, other.slice))

    def __hash__(self):
        return hash((self.value, len(self.slice)))

    def __mul__(self, other: "RVClass") -> "RVClass":
        if len(other.slice) != 1:
            raise DomainError("right factor must be scalar")
        return RVClass(self.value * other.value, [c * other.slice[0] for c in self.slice])

    def to_series(self) -> PSeries:
        if self.value.is_zero:
            return PSeries.zero()
        if len(self.slice) != 1:
            raise DomainError("not a scalar class")
        return PSeries.monomial(self.slice[0], self.value.exp)

    def __repr__(self):
        sl = ", ".join(_fmt_c(c) for c in self.slice)
        return f"rv({self.value}; {sl})"


def _coords(x) -> list[PSeries]:
    if isinstance(x, PSeries):
        return [x]
    if hasattr(x, "coords"):
        return list(x.coords)
    return [PSeries.coerce(c) for c in x]


def ps_val(x) -> Gamma:
    """Valuation of a series, or the maximum over coordinates of a vector."""
    return _lead_data(_coords(x))[0]


def _lead_data(cs: list[PSeries]):
    lead = None
    for c in cs:
        if c.items:
            e = c.lead_exp
            if lead is None or e < lead:
                lead = e
    for c in cs:
        if not c.items and c.prec is not None and (lead is None or c.prec <= lead):
            raise PrecisionExhausted("value not certifiable at working precision")
    if lead is None:
        return Gamma.zero(), None
    return Gamma.of(lead), lead


def ps_rv(x) -> RVClass:
    cs = _coords(x)
    value, lead = _lead_data(cs)
    if lead is None:
        return RVClass(value, [0j] * len(cs))
    sl = []
    for c in cs:
        if c.items and c.lead_exp == lead:
            sl.append(c.lead_coeff)
        else:
            sl.append(0j)
    return RVClass(value, sl)


def ps_res(x: PSeries) -> complex:
    if x.items:
        if x.lead_exp < 0:
            raise NotInValuationRing(f"v({x}) > 1")
        return x.coeff(0) if x.lead_exp == 0 else 0j
    if x.prec is not None and x.prec <= 0:
        raise PrecisionExhausted("residue not certifiable at working precision")
    return 0j


def field_arithmetic(op: str, x: PSeries, y: PSeries | None = None, relprec=None) -> PSeries:
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "neg":
        return -x
    if op == "inv":
        return x.inverse(relprec)
    raise DomainError(f"unknown operation {op!r}")


# -- polynomials and roots ----------------------------------------------

def poly_eval(coeffs: Sequence[PSeries], z: PSeries) -> PSeries:
    """Evaluate sum coeffs[k] z^k by Horner's rule."""
    acc = PSeries.zero()
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def poly_deriv(coeffs: Sequence[PSeries]) -> list[PSeries]:
    return [coeffs[k] * k for k in range(1, len(coeffs))]


def newton_solve(coeffs: Sequence, seed, relprec=None, max_extra: int = 8) -> PSeries:
    """Root of a polynomial by the contraction z -> z - F(z)/F'(z).

    The seed is an RVClass (or a series).  Every increment must be strictly
    smaller than the previous one, and the first increment strictly smaller
    than the seed itself; otherwise the iteration is not contracting.
    """
    coeffs = [PSeries.coerce(c) for c in coeffs]
    relprec = Fraction(default_relprec() if relprec is None else relprec)
    z = seed.to_series() if isinstance(seed, RVClass) else PSeries.coerce(seed)
    if z.is_exact_zero:
        raise SingularSeed("seed must be nonzero")
    dcoeffs = poly_deriv(coeffs)
    z_lead = z.lead_exp
    target = z_lead + relprec
    den = z.den
    for c in coeffs:
        den = _lcm(den, c.den)
    budget = max(2, int(relprec * den))
    max_iter = math.ceil(math.log2(budget)) + max_extra
    prev = z_lead
    for it in range(max_iter):
        fz = poly_eval(coeffs, z)
        if fz.is_zero_to_prec:
            return z
        dfz = poly_eval(dcoeffs, z)
        if dfz.is_zero_to_prec:
            if it == 0:
                raise SingularSeed("derivative vanishes at the seed")
            raise NoConvergence("derivative vanished during iteration")
        inc = fz * dfz.inverse(relprec + max(0, fz.lead_exp - dfz.lead_exp))
        if inc.is_zero_to_prec:
            return z
        e = inc.lead_exp
        if e <= prev:
            raise NoConvergence(f"increment of value <{e}> does not shrink")
        prev = e
        z = (z - inc).truncate(target)
        if e >= target:
            return z
    raise NoConvergence("iteration budget exhausted")


def nth_root(x: PSeries, k: int, branch: int = 0, relprec=None) -> PSeries:
    """Branch ``branch`` of the k-th root of x."""
    if k < 1:
        raise DomainError("root index must be positive")
    x = PSeries.coerce(x)
    if x.is_exact_zero:
        raise DomainError("root of zero")
    return x.power(Fraction(1, k), branch, relprec)


# -- text format -----------------------------------------------------------

def _fmt_num(v: float) -> str:
    s = f"{v:.10g}"
    return "0" if s in ("-0", "0") else s


def _fmt_c(c: complex) -> str:
    if abs(c.imag) <= 1e-12 * max(1.0, abs(c.real)):
        return _fmt_num(c.real)
    if abs(c.real) <= 1e-12 * max(1.0, abs(c.imag)):
        return _fmt_num(c.imag) + "j"
    return f"({_fmt_num(c.real)}{'+' if c.imag >= 0 else '-'}{_fmt_num(abs(c.imag))}j)"


def _fmt_exp(e: Fraction) -> str:
    return str(e) if e.denominator == 1 and e >= 0 else f"({e})"


def format_series(x: PSeries) -> str:
    parts = []
    for e, c in x.terms:
        cs = _fmt_c(c)
        if e == 0:
            parts.append(cs)
        else:
            mono = "t" if e == 1 else f"t^{_fmt_exp(e)}"
            if cs == "1":
                parts.append(mono)
            elif cs == "-1":
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
    if x.prec is not None:
        parts.append(f"O(t^{_fmt_exp(x.prec)})")
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


_TERM = re.compile(
    r"""^\s*(?P<coef>[0-9.eE]+|\([^()]*\)|[0-9.]*j)?\s*\*?\s*
        (?P<t>t(\s*\^\s*(?P<exp>-?[0-9]+(/[0-9]+)?|\(\s*-?[0-9]+(\s*/\s*[0-9]+)?\s*\)))?)?\s*$""",
    re.X,
)


def parse_series(text: str) -> PSeries:
    """Parse expressions like ``2*t^(3/2) - t + (1+2j) + O(t^5)``."""
    s = text.strip()
    if not s:
        raise ValueError("empty series expression")
    tokens = []
    depth = 0
    cur = ""
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and cur.strip() and not cur.rstrip().endswith(("^", "e", "E")):
            tokens.append(cur)
            cur = ch
        else:
            cur += ch
    tokens.append(cur)
    terms = []
    prec = None
    for tok in tokens:
        tok = tok.strip()
        sign = 1
        while tok.startswith(("+", "-")):
            if tok[0] == "-":
                sign = -sign
            tok = tok[1:].strip()
        m_o = re.fullmatch(r"O\(\s*t\s*\^\s*\(?\s*(-?[0-9]+(/[0-9]+)?)\s*\)?\s*\)", tok)
        if m_o:
            prec = Fraction(m_o.group(1))
            continue
        m = _TERM.match(tok)
        if not m or not (m.group("coef") or m.group("t")):
            raise ValueError(f"cannot parse series term {tok!r}")
        coef = m.group("coef")
        c = complex(coef.replace(" ", "")) if coef else 1
        if m.group("t"):
            exp = m.group("exp")
            e = Fraction(exp.strip("() ").replace(" ", "")) if exp else Fraction(1)
        else:
            e = Fraction(0)
        terms.append((e, sign * c))
    return PSeries.from_terms(terms, prec)
