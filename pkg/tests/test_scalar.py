from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from invlift.errors import InputError
from invlift.scalar import (
    Scalar,
    format_exact,
    parse_scalar,
    scalar_from_json,
    scalar_to_json,
)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=40)


def test_exact_gaussian_arithmetic():
    a = Scalar(Fraction(1, 2), 1)
    b = Scalar(3, Fraction(-1, 3))
    assert a + b == Scalar(Fraction(7, 2), Fraction(2, 3))
    assert a * b == Scalar(Fraction(3, 2) + Fraction(1, 3), 3 - Fraction(1, 6))
    assert (a * b) / b == a
    assert (a * b).is_exact


def test_exact_values_are_reduced():
    c = Scalar(Fraction(4, 6))
    assert format_exact(c) == "2/3"


def test_ball_contains_exact_value():
    x = Scalar(Fraction(1, 3)).to_ball(64)
    assert not x.is_exact
    assert x.contains(Scalar(Fraction(1, 3)))
    assert x.rad >= 0


@given(rationals, rationals, rationals, rationals)
def test_ball_arithmetic_encloses_exact_result(a, b, c, d):
    exact = (Scalar(a, b) * Scalar(c) + Scalar(d)) * Scalar(a, -b)
    ball = (Scalar(a, b).to_ball(53) * Scalar(c).to_ball(53) + Scalar(d).to_ball(53)) * \
        Scalar(a, -b).to_ball(53)
    assert ball.contains(exact)


@given(rationals, rationals)
def test_literal_round_trip(a, b):
    c = Scalar(a, b)
    assert parse_scalar(format_exact(c)) == c
    assert scalar_from_json(scalar_to_json(c)) == c


def test_ball_json_round_trip():
    c = (Scalar(1) / Scalar(3)).to_ball(80) + Scalar(0, 1).to_ball(80)
    back = scalar_from_json(scalar_to_json(c))
    assert back.re == c.re and back.im == c.im and back.rad == c.rad and back.prec == c.prec


@pytest.mark.parametrize("text,expected", [
    ("3/4", Scalar(Fraction(3, 4))),
    ("1/2+2/3 i", Scalar(Fraction(1, 2), Fraction(2, 3))),
    ("-i", Scalar(0, -1)),
    ("5 i", Scalar(0, 5)),
])
def test_parse_literals(text, expected):
    assert parse_scalar(text) == expected


def test_parse_rejects_empty():
    with pytest.raises(InputError):
        parse_scalar("  ")
