from fractions import Fraction

import pytest
from hypothesis import given

from strategies import finite_gammas, gammas
from valstrat.errors import DomainError, UndefinedProduct
from valstrat.gamma import Gamma, gmax, gmin


def test_order_of_special_elements():
    assert Gamma.zero() < Gamma.of(100) < Gamma.of(0) < Gamma.of(-100) < Gamma.inf()


def test_larger_exponent_is_smaller():
    assert Gamma.of(Fraction(3, 2)) < Gamma.of(1)


def test_products():
    assert Gamma.of(1) * Gamma.of(Fraction(1, 2)) == Gamma.of(Fraction(3, 2))
    assert Gamma.zero() * Gamma.of(-5) == Gamma.zero()
    assert Gamma.inf() * Gamma.of(5) == Gamma.inf()
    with pytest.raises(UndefinedProduct):
        Gamma.zero() * Gamma.inf()


def test_division_conventions():
    assert Gamma.of(2) / Gamma.inf() == Gamma.zero()
    with pytest.raises(UndefinedProduct):
        Gamma.inf() / Gamma.inf()
    with pytest.raises(UndefinedProduct):
        Gamma.of(1) / Gamma.zero()


def test_powers():
    assert Gamma.of(2) ** Fraction(3, 2) == Gamma.of(3)
    assert Gamma.inf() ** 2 == Gamma.inf()
    with pytest.raises(DomainError):
        Gamma.zero() ** -1


@given(gammas)
def test_json_round_trip(g):
    assert Gamma.from_json(g.to_json()) == g


@given(finite_gammas, finite_gammas, finite_gammas)
def test_multiplication_is_monotone(a, b, c):
    if a <= b:
        assert a * c <= b * c


@given(gammas, gammas)
def test_max_min(a, b):
    assert gmax(a, b) >= gmin(a, b)
    assert {gmax(a, b), gmin(a, b)} == {a, b}


@pytest.mark.parametrize("bad", [{"kind": "finite", "num": 1, "den": 0}, {"kind": "huge"}, [1, 2]])
def test_bad_json(bad):
    with pytest.raises(ValueError):
        Gamma.from_json(bad)
