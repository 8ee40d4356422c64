from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracjacobi.scalars import (
    PoleAtPoint,
    PolyFn,
    differentiate,
    evaluate,
    substitute,
)

VARS = ("x", "y")


def x():
    return PolyFn.coordinate("x", VARS)


def y():
    return PolyFn.coordinate("y", VARS)


def const(q):
    return PolyFn.constant(Fraction(q), VARS)


small_fractions = st.fractions(
    min_value=-4, max_value=4, max_denominator=5
)


def poly_from(coeffs):
    """Build sum(c_ij x^i y^j) from a dict of small exponent pairs."""
    out = PolyFn.zero(VARS)
    for (i, j), c in coeffs.items():
        out = out + const(c) * x() ** i * y() ** j
    return out


coeff_dicts = st.dictionaries(
    st.tuples(st.integers(0, 2), st.integers(0, 2)),
    small_fractions,
    max_size=4,
)


def test_constants_and_coordinates():
    assert const(0).is_zero()
    assert const(3).is_constant()
    assert const(3).constant_value() == 3
    assert not x().is_constant()
    assert x().is_polynomial()
    assert evaluate(x(), {"x": Fraction(7), "y": Fraction(0)}) == 7


def test_equality_of_equivalent_quotients():
    f = (x() * x() - y() * y()) / (x() - y())
    assert f == x() + y()
    assert f.is_polynomial()


def test_canonical_form_is_hash_stable():
    f = (x() + y()) / (const(2) * x())
    g = (const(3) * (x() + y())) / (const(6) * x())
    assert f == g
    assert hash(f) == hash(g)


@given(coeff_dicts, coeff_dicts, coeff_dicts)
@settings(max_examples=40, deadline=None)
def test_ring_axioms(a, b, c):
    f, g, h = poly_from(a), poly_from(b), poly_from(c)
    assert f + g == g + f
    assert f * g == g * f
    assert (f + g) + h == f + (g + h)
    assert f * (g + h) == f * g + f * h
    assert f - f == PolyFn.zero(VARS)


@given(coeff_dicts, coeff_dicts)
@settings(max_examples=40, deadline=None)
def test_derivative_is_a_derivation(a, b):
    f, g = poly_from(a), poly_from(b)
    lhs = differentiate(f * g, "x")
    rhs = differentiate(f, "x") * g + f * differentiate(g, "x")
    assert lhs == rhs


def test_quotient_rule():
    f = (x() + y()) / (x() - y())
    g = differentiate(f, "x")
    assert g * (x() - y()) ** 2 == const(-2) * y()


def test_partials_commute_on_quotients():
    f = (x() * y() + const(1)) / (x() + const(2))
    assert differentiate(differentiate(f, "x"), "y") == differentiate(
        differentiate(f, "y"), "x"
    )


def test_evaluate_pole():
    f = const(1) / (x() - y())
    with pytest.raises(PoleAtPoint):
        evaluate(f, {"x": Fraction(1), "y": Fraction(1)})
    assert evaluate(f, {"x": Fraction(2), "y": Fraction(1)}) == 1


def test_substitute_composes_with_evaluate():
    f = x() * x() + y()
    images = {"x": x() + y(), "y": x() * y()}
    g = substitute(f, images)
    point = {"x": Fraction(2), "y": Fraction(3)}
    direct = evaluate(
        f,
        {
            "x": evaluate(images["x"], point),
            "y": evaluate(images["y"], point),
        },
    )
    assert evaluate(g, point) == direct


def test_division_by_zero_rejected():
    with pytest.raises(ZeroDivisionError):
        x() / PolyFn.zero(VARS)
