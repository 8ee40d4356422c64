"""Chart-level symbolic calculus for a trivialized line bundle.

Over a polynomial chart with coordinates (x_1 .. x_n), a derivation of the
trivialized line bundle is a first-order operator X + f acting on a section
(a function) as X(lambda) + f*lambda; the frame (d_1 .. d_n, unit) of these
operators commutes, with the unit acting as the identity. Jets are the dual
objects, and the first jet of a section is (d lambda, lambda).

Forms take values on that frame, and the differential follows the standard
Lie-algebroid formula with the tautological action E(lambda); since the frame
commutes there are no bracket terms in d, while the Lie derivative along a
general derivation does see the brackets [Delta, E_m]. The Cartan identities
relating d, contraction, and Lie derivative are not built in; they are
verified symbolically in the test suite, which is the point of keeping the
three operators independent.

The same code serves dirac mode, where the unit direction is absent and the
complex reduces to the de Rham complex of the chart.

Everything is exact: coefficients are PolyFn and all identities are checked
as canonical-form equalities.

Test-set lemma used by the jacobiator routine: a first-order operator X + f
is recovered from its values on the constant section 1 (giving f) and on the
coordinates (giving X one component at a time); hence a bracket built from
such operators vanishes identically as soon as it vanishes for arguments
ranging over {1, x_1, .., x_n}.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .errors import ChartMismatch, DimensionMismatch, NotLagrangian
from .fiber import JACOBI, FiberModel
from .linalg import Matrix
from .scalars import PolyFn, differentiate


@dataclass(frozen=True)
class Chart:
    """An ordered tuple of distinct coordinate names."""

    coordinates: tuple

    def __post_init__(self):
        coords = tuple(self.coordinates)
        object.__setattr__(self, "coordinates", coords)
        if len(set(coords)) != len(coords) or not coords:
            raise ValueError("chart needs distinct, nonempty coordinate names")

    @property
    def dim(self):
        return len(self.coordinates)

    def fiber_model(self, mode=JACOBI):
        return FiberModel(self.dim, mode)

    def frame_dim(self, mode=JACOBI):
        return self.dim + 1 if mode == JACOBI else self.dim

    def zero_fn(self):
        return PolyFn.zero(self.coordinates)

    def one_fn(self):
        return PolyFn.one(self.coordinates)

    def coordinate_fn(self, name):
        return PolyFn.coordinate(name, self.coordinates)

    def constant_fn(self, value):
        return PolyFn.constant(value, self.coordinates)


def _check_same(a, b):
    if a.chart != b.chart or a.mode != b.mode:
        raise ChartMismatch("operands live over different charts or modes")


@dataclass(frozen=True)
class Derivation:
    """A derivation in frame components: n vector components plus, in jacobi
    mode, the multiplication component (the coefficient of the unit)."""

    chart: Chart
    mode: str
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.chart.frame_dim(self.mode):
            raise DimensionMismatch("derivation component count mismatch")

    def act_on(self, fn):
        n = self.chart.dim
        out = PolyFn.zero(self.chart.coordinates)
        for i, name in enumerate(self.chart.coordinates):
            out = out + self.components[i] * differentiate(fn, name)
        if self.mode == JACOBI:
            out = out + self.components[n] * fn
        return out

    def symbol(self):
        return self.components[: self.chart.dim]

    def __add__(self, other):
        _check_same(self, other)
        return Derivation(
            self.chart,
            self.mode,
            tuple(a + b for a, b in zip(self.components, other.components)),
        )

    def scale(self, c):
        return Derivation(self.chart, self.mode, tuple(e * c for e in self.components))


def unit_derivation(chart, mode=JACOBI):
    if mode != JACOBI:
        raise ValueError("the identity derivation only exists in jacobi mode")
    zero, one = chart.zero_fn(), chart.one_fn()
    return Derivation(chart, mode, (zero,) * chart.dim + (one,))


def frame_derivation(chart, index, mode=JACOBI):
    zero, one = chart.zero_fn(), chart.one_fn()
    comps = [zero] * chart.frame_dim(mode)
    comps[index] = one
    return Derivation(chart, mode, tuple(comps))


@dataclass(frozen=True)
class Jet1:
    """A jet in dual frame components: n covector components plus, in jacobi
    mode, the value component."""

    chart: Chart
    mode: str
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.chart.frame_dim(self.mode):
            raise DimensionMismatch("jet component count mismatch")

    def pair(self, derivation):
        _check_same(self, derivation)
        out = PolyFn.zero(self.chart.coordinates)
        for a, b in zip(self.components, derivation.components):
            out = out + a * b
        return out

    def __add__(self, other):
        _check_same(self, other)
        return Jet1(
            self.chart,
            self.mode,
            tuple(a + b for a, b in zip(self.components, other.components)),
        )

    def scale(self, c):
        return Jet1(self.chart, self.mode, tuple(e * c for e in self.components))


def jet_prolongation(chart, fn, mode=JACOBI):
    """The first jet of a section: its differential plus the section itself."""
    comps = [differentiate(fn, name) for name in chart.coordinates]
    if mode == JACOBI:
        comps.append(fn)
    return Jet1(chart, mode, tuple(comps))


def commutator(first, second):
    """Bracket of derivations: vector bracket plus crossed action on the
    multiplication components."""
    _check_same(first, second)
    chart, mode = first.chart, first.mode
    n = chart.dim
    x1, x2 = first.components, second.components
    bracket = []
    for k, name_k in enumerate(chart.coordinates):
        term = PolyFn.zero(chart.coordinates)
        for i, name_i in enumerate(chart.coordinates):
            term = term + x1[i] * differentiate(x2[k], name_i)
            term = term - x2[i] * differentiate(x1[k], name_i)
        bracket.append(term)
    if mode == JACOBI:
        f_part = PolyFn.zero(chart.coordinates)
        for i, name_i in enumerate(chart.coordinates):
            f_part = f_part + x1[i] * differentiate(x2[n], name_i)
            f_part = f_part - x2[i] * differentiate(x1[n], name_i)
        bracket.append(f_part)
    return Derivation(chart, mode, tuple(bracket))


MAX_FORM_DEGREE = 3


@dataclass(frozen=True)
class FormField:
    """An alternating form field on the derivation frame.

    components maps strictly increasing index tuples (length = degree) to
    PolyFn coefficients; zero coefficients are dropped, so equality of values
    is dict equality. Degree 0 stores a single entry at the empty tuple.
    """

    chart: Chart
    mode: str
    degree: int
    components: dict

    def __post_init__(self):
        if not 0 <= self.degree <= MAX_FORM_DEGREE:
            raise DimensionMismatch(
                f"form degree {self.degree} outside supported range"
            )
        d = self.chart.frame_dim(self.mode)
        clean = {}
        for idx, fn in self.components.items():
            idx = tuple(idx)
            if len(idx) != self.degree or list(idx) != sorted(set(idx)):
                raise DimensionMismatch(f"bad form index {idx}")
            if any(not 0 <= i < d for i in idx):
                raise DimensionMismatch(f"form index {idx} outside the frame")
            if not fn.is_zero():
                clean[idx] = fn
        object.__setattr__(self, "components", clean)

    def component(self, idx):
        """Signed coefficient for an arbitrary index tuple (0 on repeats)."""
        idx = tuple(idx)
        if len(set(idx)) != len(idx):
            return PolyFn.zero(self.chart.coordinates)
        order = sorted(range(len(idx)), key=lambda i: idx[i])
        sign = _permutation_sign(order)
        key = tuple(sorted(idx))
        fn = self.components.get(key)
        if fn is None:
            return PolyFn.zero(self.chart.coordinates)
        return fn if sign > 0 else -fn

    def is_zero(self):
        return not self.components

    def __add__(self, other):
        _check_same(self, other)
        if self.degree != other.degree:
            raise DimensionMismatch("form degrees differ")
        merged = dict(self.components)
        for idx, fn in other.components.items():
            merged[idx] = merged.get(idx, PolyFn.zero(self.chart.coordinates)) + fn
        return FormField(self.chart, self.mode, self.degree, merged)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return FormField(
            self.chart,
            self.mode,
            self.degree,
            {idx: fn * c for idx, fn in self.components.items()},
        )

    def first_nonzero(self):
        """A (index tuple, coefficient) witness, or None for the zero form."""
        if not self.components:
            return None
        idx = min(self.components)
        return idx, self.components[idx]


def _permutation_sign(order):
    sign = 1
    seen = [False] * len(order)
    for start in range(len(order)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def form_zero(chart, degree, mode=JACOBI):
    return FormField(chart, mode, degree, {})


def form_from_function(chart, fn, mode=JACOBI):
    return FormField(chart, mode, 0, {(): fn})


def form_from_matrix(chart, matrix, mode=JACOBI):
    """Skew PolyFn matrix on the frame -> degree 2 form field."""
    d = chart.frame_dim(mode)
    if matrix.rows != d or matrix.cols != d:
        raise DimensionMismatch("matrix size does not match the frame")
    comps = {}
    for i in range(d):
        for j in range(i + 1, d):
            comps[(i, j)] = matrix.entries[i][j]
    return FormField(chart, mode, 2, comps)


def form_to_matrix(form):
    """Degree 2 form field -> skew PolyFn matrix on the frame."""
    if form.degree != 2:
        raise DimensionMismatch("only degree 2 forms convert to matrices")
    d = form.chart.frame_dim(form.mode)
    zero = form.chart.zero_fn()
    rows = [[zero] * d for _ in range(d)]
    for (i, j), fn in form.components.items():
        rows[i][j] = fn
        rows[j][i] = -fn
    return Matrix(rows, cols=d, zero=zero)


def _frame_action(chart, mode, index, fn):
    """Tautological action of the frame element with this index on a section."""
    if mode == JACOBI and index == chart.dim:
        return fn
    return differentiate(fn, chart.coordinates[index])


def der_differential(form):
    """The degree-raising differential on frame forms.

    Since the frame commutes, only the action terms appear:
    (d w)(E_{i0..ik}) = sum_j (-1)^j E_{ij}( w(.. without ij ..) ).
    """
    chart, mode = form.chart, form.mode
    if form.degree >= MAX_FORM_DEGREE:
        raise DimensionMismatch("differential would exceed the degree cap")
    d = chart.frame_dim(mode)
    comps = {}
    for idx in combinations(range(d), form.degree + 1):
        total = PolyFn.zero(chart.coordinates)
        for j, i_j in enumerate(idx):
            rest = idx[:j] + idx[j + 1 :]
            term = _frame_action(chart, mode, i_j, form.component(rest))
            total = total + term if j % 2 == 0 else total - term
        comps[idx] = total
    return FormField(chart, mode, form.degree + 1, comps)


def contraction(derivation, form):
    """Insert a derivation into the first slot of a form."""
    _check_same(derivation, form)
    if form.degree == 0:
        raise DimensionMismatch("cannot contract a degree 0 form")
    chart, mode = form.chart, form.mode
    d = chart.frame_dim(mode)
    comps = {}
    for idx in combinations(range(d), form.degree - 1):
        total = PolyFn.zero(chart.coordinates)
        for m in range(d):
            coeff = derivation.components[m]
            if coeff.is_zero():
                continue
            total = total + coeff * form.component((m,) + idx)
        comps[idx] = total
    return FormField(chart, mode, form.degree - 1, comps)


def lie_derivative(derivation, form):
    """Lie derivative along a derivation, by the direct algebroid formula:
    act on coefficients, subtract the bracket insertions."""
    _check_same(derivation, form)
    chart, mode = form.chart, form.mode
    n = chart.dim
    d = chart.frame_dim(mode)
    brackets = []
    for m in range(d):
        if mode == JACOBI and m == n:
            brackets.append(None)  # [Delta, unit] = 0
            continue
        name = chart.coordinates[m]
        brackets.append(
            tuple(-differentiate(c, name) for c in derivation.components)
        )
    comps = {}
    for idx in combinations(range(d), form.degree):
        total = derivation.act_on(form.component(idx))
        for j, i_j in enumerate(idx):
            bracket = brackets[i_j]
            if bracket is None:
                continue
            for m in range(d):
                coeff = bracket[m]
                if coeff.is_zero():
                    continue
                slot = idx[:j] + (m,) + idx[j + 1 :]
                total = total - coeff * form.component(slot)
        comps[idx] = total
    return FormField(chart, mode, form.degree, comps)


# ---------------------------------------------------------------------------
# sections of the omni fiber over the chart, and their bracket
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SectionPair:
    """A derivation together with a jet: one section of the omni fiber."""

    derivation: Derivation
    jet: Jet1

    def __post_init__(self):
        _check_same(self.derivation, self.jet)

    @property
    def chart(self):
        return self.derivation.chart

    @property
    def mode(self):
        return self.derivation.mode

    def as_vector(self):
        return tuple(self.derivation.components) + tuple(self.jet.components)


def section_pairing(u, v):
    """<<(D1,p1),(D2,p2)>> = p1(D2) + p2(D1)."""
    return u.jet.pair(v.derivation) + v.jet.pair(u.derivation)


def _jet_as_form(jet):
    comps = {}
    for i, fn in enumerate(jet.components):
        comps[(i,)] = fn
    return FormField(jet.chart, jet.mode, 1, comps)


def _form_as_jet(form):
    chart, mode = form.chart, form.mode
    d = chart.frame_dim(mode)
    return Jet1(chart, mode, tuple(form.component((i,)) for i in range(d)))


def dorfman(u, v):
    """The Dorfman-style bracket on sections of the omni fiber.

    Derivation part: the commutator. Jet part: Lie derivative of the second
    jet along the first derivation, minus the contraction of the second
    derivation into the differential of the first jet. The formula is
    validated in tests against the pairing-compatibility axiom and the
    derived-bracket relations rather than taken on faith.
    """
    _check_same(u.derivation, v.derivation)
    der = commutator(u.derivation, v.derivation)
    jet_form = lie_derivative(u.derivation, _jet_as_form(v.jet)) - contraction(
        v.derivation, der_differential(_jet_as_form(u.jet))
    )
    return SectionPair(der, _form_as_jet(jet_form))


def courant_tensor(sections, triple):
    """<<X, [[Y, Z]]>> for an isotropic family of sections.

    The family must be pairwise isotropic, otherwise the expression is not
    tensorial and the request is rejected.
    """
    for i, a in enumerate(sections):
        for b in sections[i:]:
            if not section_pairing(a, b).is_zero():
                raise NotLagrangian("courant tensor needs an isotropic family")
    x, y, z = (sections[k] for k in triple)
    return section_pairing(x, dorfman(y, z))


def jacobiator(chart, bider, lam, mu, nu):
    """Cyclic Jacobi defect of the bracket {a, b} = J(j1 a, j1 b).

    bider is a skew PolyFn matrix on the dual frame. By the test-set lemma in
    the module docstring, identical vanishing follows from vanishing for
    arguments in {1, x_1, .., x_n}.
    """
    if not bider.is_skew():
        raise DimensionMismatch("biderivation matrix must be skew")

    def bracket(a, b):
        ja = jet_prolongation(chart, a)
        jb = jet_prolongation(chart, b)
        out = PolyFn.zero(chart.coordinates)
        for k, ca in enumerate(ja.components):
            if ca.is_zero():
                continue
            for i, cb in enumerate(jb.components):
                if cb.is_zero():
                    continue
                out = out + ca * bider.entries[k][i] * cb
        return out

    return (
        bracket(lam, bracket(mu, nu))
        + bracket(mu, bracket(nu, lam))
        + bracket(nu, bracket(lam, mu))
    )


def jacobiator_test_set(chart):
    """The sections {1, x_1, .., x_n} that determine first-order operators."""
    return [chart.one_fn()] + [chart.coordinate_fn(name) for name in chart.coordinates]


def contact_to_atiyah(chart, theta):
    """From an L-valued 1-form on the base (n components) to the closed
    2-form it generates: differentiate its frame lift (theta, 0)."""
    if len(theta) != chart.dim:
        raise DimensionMismatch("contact form needs one component per coordinate")
    comps = {(i,): fn for i, fn in enumerate(theta)}
    lift = FormField(chart, JACOBI, 1, comps)
    return der_differential(lift)


def atiyah_to_contact(chart, form):
    """Back from a closed 2-form: contract with the unit; errors if not closed."""
    if form.degree != 2:
        raise DimensionMismatch("expected a 2-form")
    if not der_differential(form).is_zero():
        raise NotLagrangian("form is not closed, no contact form corresponds to it")
    unit = chart.dim
    return tuple(form.component((unit, i)) for i in range(chart.dim))
