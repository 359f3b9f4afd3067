"""Multiplicative value group with a bottom element Zero and a top element Inf.

Finite values are written ``<e>`` and stand for theta**e with 0 < theta < 1,
so a larger exponent means a smaller value.
"""
from __future__ import annotations

from fractions import Fraction
from functools import total_ordering
from typing import Union

from .errors import DomainError, UndefinedProduct

Rational = Union[int, Fraction]

ZERO_KIND = "zero"
FINITE_KIND = "finite"
INF_KIND = "inf"


@total_ordering
class Gamma:
    __slots__ = ("kind", "exp")

    def __init__(self, kind: str, exp: Fraction | None = None):
        if kind == FINITE_KIND:
            exp = Fraction(exp)
        else:
            exp = None
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "exp", exp)

    def __setattr__(self, name, value):
        raise AttributeError("Gamma is immutable")

    @classmethod
    def of(cls, e: Rational) -> "Gamma":
        return cls(FINITE_KIND, Fraction(e))

    @classmethod
    def zero(cls) -> "Gamma":
        return _ZERO

    @classmethod
    def inf(cls) -> "Gamma":
        return _INF

    @property
    def is_zero(self) -> bool:
        return self.kind == ZERO_KIND

    @property
    def is_inf(self) -> bool:
        return self.kind == INF_KIND

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE_KIND

    def _key(self):
        if self.kind == ZERO_KIND:
            return (0, 0)
        if self.kind == INF_KIND:
            return (2, 0)
        return (1, -self.exp)

    def __eq__(self, other):
        if not isinstance(other, Gamma):
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other):
        if not isinstance(other, Gamma):
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self):
        return hash(self._key())

    def __mul__(self, other: "Gamma") -> "Gamma":
        if {self.kind, other.kind} == {ZERO_KIND, INF_KIND}:
            raise UndefinedProduct("Zero * Inf is undefined")
        if self.is_zero or other.is_zero:
            return _ZERO
        if self.is_inf or other.is_inf:
            return _INF
        return Gamma.of(self.exp + other.exp)

    def inverse(self) -> "Gamma":
        if not self.is_finite:
            raise DomainError("only finite values are invertible")
        return Gamma.of(-self.exp)

    def __truediv__(self, other: "Gamma") -> "Gamma":
        """Quotient with the convention finite / Inf = Zero."""
        if other.is_inf:
            if self.is_inf:
                raise UndefinedProduct("Inf / Inf is undefined")
            return _ZERO
        if other.is_zero:
            raise UndefinedProduct("division by Zero")
        return self * other.inverse()

    def __pow__(self, r: Rational) -> "Gamma":
        r = Fraction(r)
        if self.is_finite:
            return Gamma.of(self.exp * r)
        if r <= 0:
            raise DomainError(f"{self} ** {r} is undefined")
        return self

    def __repr__(self):
        if self.is_zero:
            return "Zero"
        if self.is_inf:
            return "Inf"
        return f"<{self.exp}>"

    __str__ = __repr__

    def to_json(self) -> dict:
        if self.is_zero:
            return {"kind": ZERO_KIND}
        if self.is_inf:
            return {"kind": INF_KIND}
        return {"kind": FINITE_KIND, "num": self.exp.numerator, "den": self.exp.denominator}

    @classmethod
    def from_json(cls, obj) -> "Gamma":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValueError(f"not a value-group element: {obj!r}")
        kind = obj["kind"]
        if kind == ZERO_KIND:
            return _ZERO
        if kind == INF_KIND:
            return _INF
        if kind == FINITE_KIND:
            den = int(obj.get("den", 1))
            if den <= 0:
                raise ValueError("den must be positive")
            return cls.of(Fraction(int(obj["num"]), den))
        raise ValueError(f"unknown kind {kind!r}")


_ZERO = Gamma(ZERO_KIND)
_INF = Gamma(INF_KIND)
ONE = Gamma.of(0)


def gamma_compare(a: Gamma, b: Gamma) -> int:
    """Return -1, 0 or 1 as a is less than, equal to or greater than b."""
    return (a > b) - (a < b)


def gamma_mul(a: Gamma, b: Gamma) -> Gamma:
    return a * b


def gamma_pow(a: Gamma, r: Rational) -> Gamma:
    return a ** r


def gmax(*values: Gamma) -> Gamma:
    return max(values)


def gmin(*values: Gamma) -> Gamma:
    return min(values)
