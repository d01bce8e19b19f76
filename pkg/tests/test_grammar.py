"""Canonical serialization: printing determinism and bit-exact round-trips."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from slowvary.algebra import Ring
from slowvary.exact import ExactScalar
from slowvary.grammar import ParseError, parse_expr, print_expr


def ring():
    return Ring([("small", 1), ("xi", 1), "c0", "c1", "c2", "Pe", "c2x", "d2x", "d4x"],
                tt=["c2x", "d2x", "d4x"])


def test_print_basic_forms():
    r = ring()
    assert print_expr(r.zero()) == "0"
    assert print_expr(r.one()) == "1"
    assert print_expr(-r.one()) == "-1"
    assert print_expr(r.var("c0") * Fraction(-1, 2)) == "-1/2*c0"
    assert print_expr(r.var("c0") ** 2 * r.var("Pe")) == "c0^2*Pe"
    assert print_expr(r.scalar(ExactScalar(0, -4))) == "-4i"
    assert print_expr(r.scalar(ExactScalar(1, 2)) * r.var("c0")) == "(1+2i)*c0"


def test_print_atoms_nested():
    r = ring()
    e = 5 * r.var("d4x").conv(-1) + 5 * r.var("d4x").conv(-1).conv(-1)
    assert print_expr(e) == "5*Z[d4x;-1] + 5*Z[Z[d4x;-1];-1]"


def test_parse_round_trip_strings():
    r = ring()
    for s in [
        "0",
        "1",
        "-1/2*c0",
        "c0^2*Pe",
        "1 + 2/105*Pe^2",
        "-4i",
        "(1+2i)*c0",
        "5*Z[d4x;-1] + 5*Z[Z[d4x;-1];-1]",
        "c0*Z[c2x;-1]^2",
        "3/4i*c1",
    ]:
        assert print_expr(parse_expr(r, s)) == s


def test_parse_print_inverse_on_parse():
    r = ring()
    e = parse_expr(r, "c2 - c0*c1*2 + 1/2*c0^3 - 3*Z[d2x;-1] + 9*c0*Z[Z[c2x;-1];-1]")
    assert parse_expr(r, print_expr(e)) == e


def test_parse_errors_with_position():
    r = ring()
    with pytest.raises(ParseError) as err:
        parse_expr(r, "c0^")
    assert "offset" in str(err.value)
    with pytest.raises(ParseError):
        parse_expr(r, "nosuchvar + 1")
    with pytest.raises(ParseError):
        parse_expr(r, "Z[c0;-1]")  # core must be a coupling symbol
    with pytest.raises(ParseError):
        parse_expr(r, "1 +")


def test_parse_whitespace_insignificant():
    r = ring()
    assert parse_expr(r, " 1+2/105 * Pe ^2 ") == parse_expr(r, "1 + 2/105*Pe^2")


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_round_trip_random(data):
    r = ring()
    e = r.zero()
    for _ in range(data.draw(st.integers(0, 4))):
        re_part = Fraction(data.draw(st.integers(-8, 8)), data.draw(st.integers(1, 6)))
        im_part = Fraction(data.draw(st.integers(-3, 3)), 1)
        term = r.scalar(ExactScalar(re_part, im_part))
        for name in ["small", "xi", "c0", "Pe"]:
            term = term * r.var(name, data.draw(st.integers(0, 2)))
        for _k in range(data.draw(st.integers(0, 2))):
            w = data.draw(st.sampled_from(["c2x", "d2x"]))
            depth = data.draw(st.integers(1, 2))
            atom = r.var(w)
            for _d in range(depth):
                atom = atom.conv(data.draw(st.sampled_from([-1, -2])))
            term = term * atom
        e = e + term
    assert parse_expr(r, print_expr(e)) == e
