from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracjacobi.linalg import (
    Matrix,
    Subspace,
    char_poly,
    solve_particular,
    symmetric_signature,
)

small = st.fractions(min_value=-3, max_value=3, max_denominator=3)


def square(n):
    return st.lists(
        st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n
    ).map(lambda rows: Matrix([[Fraction(e) for e in r] for r in rows]))


def test_rref_idempotent_and_rank():
    m = Matrix(
        [
            [Fraction(1), Fraction(2), Fraction(3)],
            [Fraction(2), Fraction(4), Fraction(6)],
            [Fraction(0), Fraction(1), Fraction(1)],
        ]
    )
    reduced, pivots = m.rref()
    assert m.rank() == len(pivots) == 2
    again, pivots2 = reduced.rref()
    assert again.entries == reduced.entries and pivots2 == pivots


def test_kernel_vectors_annihilate():
    m = Matrix([[Fraction(1), Fraction(2), Fraction(3)]])
    ker = m.kernel()
    assert ker.dim == 2
    for v in ker.vectors():
        assert all(c == 0 for c in m.apply(list(v)))


@given(square(3), square(3))
@settings(max_examples=25, deadline=None)
def test_det_multiplicative(a, b):
    assert (a @ b).det() == a.det() * b.det()


@given(square(3))
@settings(max_examples=25, deadline=None)
def test_inverse_round_trip(m):
    if m.det() == 0:
        return
    assert m @ m.inverse() == Matrix.identity(3)


def test_solve_particular():
    m = Matrix([[Fraction(1), Fraction(1)], [Fraction(2), Fraction(2)]])
    assert solve_particular(m, [Fraction(3), Fraction(6)]) is not None
    assert solve_particular(m, [Fraction(3), Fraction(5)]) is None


def test_char_poly_known_matrix():
    m = Matrix([[Fraction(2), Fraction(1)], [Fraction(1), Fraction(2)]])
    # (t-1)(t-3) = t^2 - 4t + 3
    assert char_poly(m) == [Fraction(1), Fraction(-4), Fraction(3)]


def test_symmetric_signature_cases():
    diag = Matrix(
        [
            [Fraction(2), Fraction(0), Fraction(0)],
            [Fraction(0), Fraction(-5), Fraction(0)],
            [Fraction(0), Fraction(0), Fraction(0)],
        ]
    )
    assert symmetric_signature(diag) == (1, 1, 1)
    split = Matrix([[Fraction(0), Fraction(1)], [Fraction(1), Fraction(0)]])
    assert symmetric_signature(split) == (1, 1, 0)


def span(rows, width):
    return Subspace.from_rows(
        [[Fraction(e) for e in r] for r in rows], width
    )


def test_subspace_canonical_membership():
    s = span([[1, 1, 0], [0, 0, 1]], 3)
    assert s.contains((Fraction(2), Fraction(2), Fraction(-7)))
    assert not s.contains((Fraction(1), Fraction(0), Fraction(0)))
    coords = s.coordinates_of((Fraction(2), Fraction(2), Fraction(-7)))
    rebuilt = [
        sum(c * v[i] for c, v in zip(coords, s.vectors()))
        for i in range(3)
    ]
    assert rebuilt == [Fraction(2), Fraction(2), Fraction(-7)]


subspace_rows = st.lists(
    st.lists(small, min_size=4, max_size=4), min_size=1, max_size=3
)


@given(subspace_rows, subspace_rows)
@settings(max_examples=30, deadline=None)
def test_lattice_inclusion_exclusion(ra, rb):
    a = span(ra, 4)
    b = span(rb, 4)
    total = a.sum(b)
    meet = a.intersect(b)
    assert total.dim + meet.dim == a.dim + b.dim
    assert a.contains_subspace(meet) and b.contains_subspace(meet)
    assert total.contains_subspace(a) and total.contains_subspace(b)


@given(subspace_rows)
@settings(max_examples=30, deadline=None)
def test_annihilator_involution(rows):
    s = span(rows, 4)
    ann = s.annihilator()
    assert ann.dim == 4 - s.dim
    assert ann.annihilator() == s
    for v in s.vectors():
        for w in ann.vectors():
            assert sum(a * b for a, b in zip(v, w)) == 0


def test_image_preimage_adjunction():
    m = Matrix(
        [
            [Fraction(1), Fraction(0), Fraction(1)],
            [Fraction(0), Fraction(1), Fraction(1)],
        ]
    )
    s = span([[1, 0, 0], [0, 1, 0]], 3)
    img = s.image(m)
    assert img == Subspace.full_space(2)
    pre = img.preimage(m)
    assert pre.contains_subspace(s)
    # preimage of the zero space is the kernel
    assert Subspace.zero_space(2).preimage(m) == m.kernel()


def test_polynomial_entries_round_trip():
    from diracjacobi.scalars import PolyFn

    ch = ("x",)
    xf = PolyFn.coordinate("x", ch)
    one = PolyFn.one(ch)
    zero = PolyFn.zero(ch)
    m = Matrix([[one, xf], [zero, one]], cols=2, zero=zero)
    inv = m.inverse()
    assert m @ inv == Matrix.identity(2, zero=zero)
    assert m.evaluate({"x": Fraction(5)}).entries == (
        (Fraction(1), Fraction(5)),
        (Fraction(0), Fraction(1)),
    )
