"""Deterministic sample generation: chart points away from poles, random
Lagrangian fibers, random polynomial data for property suites.

Everything is driven by an explicit random.Random instance (or a seed), so
reports and test runs are reproducible byte for byte.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .errors import PoleAtPoint
from .fiber import (
    LagrangianSubspace,
    derivation_space,
    gauge,
    cogauge,
)
from .linalg import Matrix
from .scalars import PolyFn, evaluate


def as_rng(seed_or_rng):
    if isinstance(seed_or_rng, random.Random):
        return seed_or_rng
    return random.Random(seed_or_rng)


def random_fraction(rng, span=6, denominators=(1, 1, 1, 2, 3)):
    """A small exact rational; denominators mostly 1 to keep outputs readable."""
    num = rng.randint(-span, span)
    den = rng.choice(denominators)
    return Fraction(num, den)


def sample_points(chart, count, seed=0, nonzero=(), span=6, max_tries=400):
    """Deterministic chart points at which every listed PolyFn is defined and
    nonzero. Raises if the constraints keep failing, which signals a
    degenerate constraint rather than bad luck."""
    rng = as_rng(seed)
    points = []
    tries = 0
    while len(points) < count:
        tries += 1
        if tries > max_tries:
            raise PoleAtPoint(
                f"could not find {count} admissible points in {max_tries} draws"
            )
        point = {name: random_fraction(rng, span) for name in chart.coordinates}
        ok = True
        for fn in nonzero:
            try:
                val = evaluate(fn, point)
            except PoleAtPoint:
                ok = False
                break
            if val == 0:
                ok = False
                break
        if ok:
            points.append(point)
    return points


def structure_denominators(fns):
    """The denominator PolyFns of a family of coefficients, for pole avoidance."""
    out = []
    for fn in fns:
        if not fn.is_polynomial():
            out.append(PolyFn(fn.variables, fn.den))
    return out


def random_skew_matrix(dim, rng, span=4):
    rows = [[Fraction(0)] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            v = random_fraction(rng, span)
            rows[i][j] = v
            rows[j][i] = -v
    return Matrix(rows, cols=dim, zero=Fraction(0))


def random_invertible_matrix(dim, rng, span=3, max_tries=50):
    for _ in range(max_tries):
        rows = [
            [random_fraction(rng, span) for _ in range(dim)] for _ in range(dim)
        ]
        m = Matrix(rows, cols=dim, zero=Fraction(0))
        if m.rank() == dim:
            return m
    raise RuntimeError("failed to draw an invertible matrix")


def _pairing_block_map(model, a_block, b_block):
    """The ambient map diag(A, B) as a single matrix."""
    d = model.d_dim
    zero = Fraction(0)
    z = Matrix.zero_matrix(d, d, zero=zero)
    return a_block.augment(z).stack(z.augment(b_block))


def _swap_matrix(model, index):
    """Exchange derivation slot and jet slot at one index; this preserves the
    symmetric pairing of the omni fiber."""
    n2 = model.ambient_dim
    d = model.d_dim
    rows = [[Fraction(0)] * n2 for _ in range(n2)]
    for k in range(n2):
        rows[k][k] = Fraction(1)
    rows[index][index] = Fraction(0)
    rows[d + index][d + index] = Fraction(0)
    rows[index][d + index] = Fraction(1)
    rows[d + index][index] = Fraction(1)
    return Matrix(rows, cols=n2, zero=Fraction(0))


def random_lagrangian(model, seed_or_rng, moves=6):
    """A random Lagrangian fiber, produced by pushing the derivation space
    through a random word in pairing-preserving moves: shears by skew forms,
    shears by skew biderivations, block rescalings diag(A, inverse-transpose),
    and slot swaps. Swaps make graphs over every coordinate subset reachable,
    so degenerate projections do occur in the sample."""
    rng = as_rng(seed_or_rng)
    lagr = LagrangianSubspace(model, derivation_space(model))
    d = model.d_dim
    for _ in range(moves):
        kind = rng.randrange(4)
        if kind == 0:
            lagr = gauge(lagr, random_skew_matrix(d, rng))
        elif kind == 1:
            lagr = cogauge(lagr, random_skew_matrix(d, rng))
        elif kind == 2:
            a = random_invertible_matrix(d, rng)
            b = a.inverse().transpose()
            big = _pairing_block_map(model, a, b)
            lagr = LagrangianSubspace(model, lagr.space.image(big))
        else:
            sw = _swap_matrix(model, rng.randrange(d))
            lagr = LagrangianSubspace(model, lagr.space.image(sw))
    return lagr


def random_polyfn(chart, rng, degree=2, terms=3, span=4, nonzero=False):
    while True:
        out = PolyFn.zero(chart.coordinates)
        for _ in range(terms):
            mono = PolyFn.constant(random_fraction(rng, span), chart.coordinates)
            for _ in range(rng.randint(0, degree)):
                mono = mono * PolyFn.coordinate(
                    rng.choice(chart.coordinates), chart.coordinates
                )
            out = out + mono
        if not (nonzero and out.is_zero()):
            return out


def random_one_form(chart, rng, mode, degree=2, terms=2):
    from .calculus import FormField

    d = chart.frame_dim(mode)
    comps = {}
    for i in range(d):
        comps[(i,)] = random_polyfn(chart, rng, degree, terms)
    return FormField(chart, mode, 1, comps)


def random_closed_two_form(chart, rng, mode, degree=2, terms=2):
    """Closed by construction: the differential of a random 1-form."""
    from .calculus import der_differential

    return der_differential(random_one_form(chart, rng, mode, degree, terms))


def random_nonclosed_two_form(chart, rng, mode, degree=2, terms=2, max_tries=40):
    """A 2-form whose differential is nonzero, found by perturbing closed
    ones with random coefficient bumps."""
    from .calculus import FormField, der_differential
    from itertools import combinations

    d = chart.frame_dim(mode)
    for _ in range(max_tries):
        comps = {}
        for idx in combinations(range(d), 2):
            comps[idx] = random_polyfn(chart, rng, degree, terms)
        form = FormField(chart, mode, 2, comps)
        if not der_differential(form).is_zero():
            return form
    raise RuntimeError(
        "no non-closed 2-form found; the chart is too small for one"
    )
