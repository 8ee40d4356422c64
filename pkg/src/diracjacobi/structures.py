"""Whole-chart structures on the omni fiber bundle and their transforms.

A structure is a field of Lagrangian fibers over a polynomial chart, held in
one of four representations: the graph of a 2-form on the derivation frame,
the graph of a skew biderivation on jets, connection-plus-2-form data (a flat
line-bundle connection with potentials gamma_i and a tangent 2-form), or an
explicit frame of omni-fiber sections. Each representation carries its own
involutivity criterion; the test suite cross-checks them against each other
through the frame conversion.

Morphisms between charts are polynomial base maps together with a nowhere
vanishing factor recording how the trivializations are matched. Their action
on derivations is the Jacobian bordered by a logarithmic-derivative row, and
all transforms (pullback, pushforward, fiberwise sum) are computed both
pointwise over the rationals and symbolically over the rational-function
field; constant-rank hypotheses are certified by sampling only, never
asserted as proofs, and every family report records its sample points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .calculus import (
    Chart,
    FormField,
    SectionPair,
    Derivation,
    Jet1,
    courant_tensor,
    der_differential,
    form_from_matrix,
    form_to_matrix,
    jacobiator,
    jacobiator_test_set,
)
from .errors import (
    ChartMismatch,
    DimensionMismatch,
    InvariantViolation,
    ModelMismatch,
    NonCleanIntersection,
    NonConstantRank,
    NotComposableInChart,
    PoleAtPoint,
)
from .fiber import (
    DIRAC,
    JACOBI,
    FiberModel,
    LagrangianSubspace,
    backward,
    forward,
    gauge_matrix,
    star_sum,
)
from .linalg import Matrix, Subspace, solve_particular
from .scalars import PolyFn, differentiate, evaluate, substitute
from . import sampling


# ---------------------------------------------------------------------------
# structure representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphForm:
    form: FormField

    def __post_init__(self):
        if self.form.degree != 2:
            raise DimensionMismatch("graph representation needs a 2-form")


@dataclass(frozen=True)
class GraphBider:
    matrix: Matrix  # skew, frame-sized, PolyFn entries

    def __post_init__(self):
        if not self.matrix.is_skew():
            raise DimensionMismatch("biderivation matrix must be skew")


@dataclass(frozen=True)
class Lcps:
    """Flat-connection data: potentials gamma_i of the lift of each
    coordinate direction, plus a tangent 2-form with values in the bundle."""

    gamma: tuple
    omega: Matrix  # skew, base-sized, PolyFn entries

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(self.gamma))
        if not self.omega.is_skew():
            raise DimensionMismatch("tangent 2-form must be skew")
        if self.omega.rows != len(self.gamma):
            raise DimensionMismatch("connection and 2-form sizes differ")


@dataclass(frozen=True)
class FrameRepr:
    """Rows spanning the fiber at generic points, as vectors of PolyFns."""

    rows: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "rows", tuple(tuple(row) for row in self.rows)
        )


@dataclass(frozen=True)
class StructureSpec:
    chart: Chart
    mode: str
    repr: object

    def __post_init__(self):
        d = self.chart.frame_dim(self.mode)
        r = self.repr
        if isinstance(r, GraphForm):
            if r.form.chart != self.chart or r.form.mode != self.mode:
                raise ChartMismatch("form lives over a different chart")
        elif isinstance(r, GraphBider):
            if r.matrix.rows != d:
                raise DimensionMismatch("biderivation matrix size mismatch")
        elif isinstance(r, Lcps):
            if self.mode != JACOBI:
                raise ModelMismatch("connection data needs the unit direction")
            if len(r.gamma) != self.chart.dim:
                raise DimensionMismatch("one potential per coordinate required")
        elif isinstance(r, FrameRepr):
            if len(r.rows) != d or any(len(row) != 2 * d for row in r.rows):
                raise DimensionMismatch("frame must be d rows of length 2d")
        else:
            raise ModelMismatch(f"unknown representation {type(r).__name__}")

    @property
    def fiber_model(self):
        return FiberModel(self.chart.dim, self.mode)

    # -- symbolic access ----------------------------------------------------

    def frame_rows(self):
        """The fiber as symbolic rows over the rational-function field."""
        chart, mode = self.chart, self.mode
        d = chart.frame_dim(mode)
        zero, one = chart.zero_fn(), chart.one_fn()
        r = self.repr
        if isinstance(r, FrameRepr):
            return r.rows
        if isinstance(r, GraphForm):
            w = form_to_matrix(r.form)
            return tuple(
                tuple(one if j == i else zero for j in range(d))
                + tuple(w.entries[i])
                for i in range(d)
            )
        if isinstance(r, GraphBider):
            return tuple(
                tuple(r.matrix.entries[k])
                + tuple(one if j == k else zero for j in range(d))
                for k in range(d)
            )
        # connection data: lifted coordinate directions with the 2-form as
        # jet part, plus the annihilator line of the lifted distribution
        n = chart.dim
        rows = []
        for i in range(n):
            dpart = [one if j == i else zero for j in range(n)] + [r.gamma[i]]
            jpart = [r.omega.entries[i][j] for j in range(n)] + [zero]
            rows.append(tuple(dpart + jpart))
        last = tuple([zero] * n + [zero] + [-g for g in r.gamma] + [one])
        rows.append(last)
        return tuple(rows)

    def symbolic_fiber(self):
        """The generic fiber as a Lagrangian subspace over PolyFn entries."""
        zero = self.chart.zero_fn()
        space = Subspace.from_rows(
            [list(row) for row in self.frame_rows()],
            2 * self.chart.frame_dim(self.mode),
            zero=zero,
        )
        return LagrangianSubspace(self.fiber_model, space)

    def as_frame_spec(self):
        return StructureSpec(self.chart, self.mode, FrameRepr(self.frame_rows()))

    def sections(self):
        """The frame rows as derivation-jet section pairs."""
        d = self.chart.frame_dim(self.mode)
        out = []
        for row in self.frame_rows():
            der = Derivation(self.chart, self.mode, tuple(row[:d]))
            jet = Jet1(self.chart, self.mode, tuple(row[d:]))
            out.append(SectionPair(der, jet))
        return out

    # -- pointwise access ---------------------------------------------------

    def fiber_at(self, point):
        d = self.chart.frame_dim(self.mode)
        rows = []
        for row in self.frame_rows():
            rows.append([evaluate(fn, point) for fn in row])
        space = Subspace.from_rows(rows, 2 * d, zero=Fraction(0))
        if space.dim != d:
            raise NonConstantRank(
                f"fiber rank {space.dim} below generic {d} at {point}"
            )
        return LagrangianSubspace(self.fiber_model, space)


def graph_form_spec(chart, form):
    return StructureSpec(chart, form.mode, GraphForm(form))


def graph_bider_spec(chart, matrix, mode=JACOBI):
    return StructureSpec(chart, mode, GraphBider(matrix))


def lcps_spec(chart, gamma, omega):
    return StructureSpec(chart, JACOBI, Lcps(tuple(gamma), omega))


def zero_structure(chart, mode=JACOBI):
    """Graph of the zero form: the derivation space at every point."""
    return graph_form_spec(chart, FormField(chart, mode, 2, {}))


def validate_structure(spec, points=None, seed=0):
    """Sampled check that the spec is pointwise Lagrangian; raises otherwise."""
    if points is None:
        nonzero = sampling.structure_denominators(
            [fn for row in spec.frame_rows() for fn in row]
        )
        points = sampling.sample_points(spec.chart, 5, seed=seed, nonzero=nonzero)
    for p in points:
        spec.fiber_at(p)
    return tuple(points)


# ---------------------------------------------------------------------------
# involutivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InvolutivityReport:
    holds: bool
    criterion: str
    witness: str | None


def check_involutive(spec):
    r = spec.repr
    chart = spec.chart
    if isinstance(r, GraphForm):
        diff = der_differential(r.form)
        if diff.is_zero():
            return InvolutivityReport(True, "closedness of the 2-form", None)
        idx, fn = diff.first_nonzero()
        return InvolutivityReport(
            False, "closedness of the 2-form", f"d at frame slots {idx}: {fn}"
        )
    if isinstance(r, GraphBider):
        tests = jacobiator_test_set(chart)
        if spec.mode == DIRAC:
            tests = [chart.coordinate_fn(name) for name in chart.coordinates]
        for a, b, c in combinations(tests, 3):
            val = jacobiator(chart, r.matrix, a, b, c)
            if not val.is_zero():
                return InvolutivityReport(
                    False,
                    "bracket jacobiator on the coordinate test set",
                    f"arguments ({a}, {b}, {c}): {val}",
                )
        return InvolutivityReport(
            True, "bracket jacobiator on the coordinate test set", None
        )
    if isinstance(r, Lcps):
        n = chart.dim
        names = chart.coordinates
        for i in range(n):
            for j in range(i + 1, n):
                curv = differentiate(r.gamma[j], names[i]) - differentiate(
                    r.gamma[i], names[j]
                )
                if not curv.is_zero():
                    return InvolutivityReport(
                        False,
                        "connection flatness and twisted closedness",
                        f"curvature on directions ({i},{j}): {curv}",
                    )

        def nabla(i, fn):
            return differentiate(fn, names[i]) + r.gamma[i] * fn

        for i, j, k in combinations(range(n), 3):
            val = (
                nabla(i, r.omega.entries[j][k])
                - nabla(j, r.omega.entries[i][k])
                + nabla(k, r.omega.entries[i][j])
            )
            if not val.is_zero():
                return InvolutivityReport(
                    False,
                    "connection flatness and twisted closedness",
                    f"twisted differential on ({i},{j},{k}): {val}",
                )
        return InvolutivityReport(
            True, "connection flatness and twisted closedness", None
        )
    # frame representation: the invariant tensor on all frame triples
    sections = spec.sections()
    for idx in combinations(range(len(sections)), 3):
        val = courant_tensor(sections, idx)
        if not val.is_zero():
            return InvolutivityReport(
                False,
                "invariant tensor on frame triples",
                f"frame triple {idx}: {val}",
            )
    return InvolutivityReport(True, "invariant tensor on frame triples", None)


# ---------------------------------------------------------------------------
# morphisms of trivialized line bundles over polynomial maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LBMorphismSpec:
    source: Chart
    target: Chart
    components: tuple  # PolyFn on source, one per target coordinate
    factor: PolyFn
    mode: str = JACOBI

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != self.target.dim:
            raise DimensionMismatch("one component per target coordinate")
        for fn in self.components:
            if fn.variables != self.source.coordinates:
                raise ChartMismatch("component not over the source chart")
        if self.factor.variables != self.source.coordinates:
            raise ChartMismatch("factor not over the source chart")
        if self.factor.is_zero():
            raise InvariantViolation("factor must be nowhere zero")
        if self.mode == DIRAC and not (
            self.factor.is_constant() and self.factor.constant_value() == 1
        ):
            raise ModelMismatch("factors are trivial without the line bundle")

    def jacobian(self):
        rows = [
            [differentiate(fn, name) for name in self.source.coordinates]
            for fn in self.components
        ]
        return Matrix(rows, cols=self.source.dim, zero=self.source.zero_fn())

    def d_matrix(self):
        """Action on derivations: Jacobian bordered by the logarithmic
        derivative of the factor and a unit-preserving corner."""
        jac = self.jacobian()
        if self.mode == DIRAC:
            return jac
        zero, one = self.source.zero_fn(), self.source.one_fn()
        top = Matrix(
            [list(row) + [zero] for row in jac.entries],
            cols=self.source.dim + 1,
            zero=zero,
        )
        last = [
            -differentiate(self.factor, name) / self.factor
            for name in self.source.coordinates
        ] + [one]
        return top.stack(Matrix([last], cols=self.source.dim + 1, zero=zero))

    def factor_at(self, point):
        val = evaluate(self.factor, point)
        if val == 0:
            raise PoleAtPoint(f"factor vanishes at {point}")
        return val

    def d_matrix_at(self, point):
        self.factor_at(point)
        return self.d_matrix().evaluate(point)

    def base_image(self, point):
        vals = [evaluate(fn, point) for fn in self.components]
        return dict(zip(self.target.coordinates, vals))

    def is_submersion_at(self, point):
        return self.jacobian().evaluate(point).rank() == self.target.dim

    def is_identity(self):
        if self.source != self.target:
            return False
        if not (self.factor.is_constant() and self.factor.constant_value() == 1):
            return False
        return all(
            fn == self.source.coordinate_fn(name)
            for fn, name in zip(self.components, self.target.coordinates)
        )

    def pull_scalar(self, fn):
        """Plain composition with the base map."""
        images = dict(zip(self.target.coordinates, self.components))
        return substitute(fn, images)

    def pull_section(self, fn):
        """Sections of the bundle pull back with the inverse factor."""
        return self.pull_scalar(fn) / self.factor

    def validate_defining_relation(self):
        """The action on derivations is the one determined by pullback of
        sections, checked on the section test set {1, coordinates}."""
        dmat = self.d_matrix()
        d_src = self.source.frame_dim(self.mode)
        tests = [self.target.one_fn()] + [
            self.target.coordinate_fn(name) for name in self.target.coordinates
        ]
        for i in range(d_src):
            delta = Derivation(
                self.source,
                self.mode,
                tuple(
                    self.source.one_fn() if j == i else self.source.zero_fn()
                    for j in range(d_src)
                ),
            )
            image_comps = [dmat.entries[k][i] for k in range(dmat.rows)]
            for s in tests:
                lhs = self.source.zero_fn()
                d_tgt = self.target.frame_dim(self.mode)
                for k in range(d_tgt):
                    if self.mode == JACOBI and k == self.target.dim:
                        acted = s
                    else:
                        acted = differentiate(s, self.target.coordinates[k])
                    lhs = lhs + image_comps[k] * self.pull_scalar(acted)
                rhs = delta.act_on(self.pull_section(s)) * self.factor
                if lhs != rhs:
                    raise InvariantViolation(
                        f"derivation action mismatch on test section {s}"
                    )
        return True


def identity_morphism(chart, mode=JACOBI):
    return LBMorphismSpec(
        chart,
        chart,
        tuple(chart.coordinate_fn(name) for name in chart.coordinates),
        chart.one_fn(),
        mode,
    )


def coordinate_projection(source, target, factor=None, mode=JACOBI):
    """Projection onto a subset of coordinates, matched by name."""
    for name in target.coordinates:
        if name not in source.coordinates:
            raise NotComposableInChart(
                f"target coordinate {name} is not a source coordinate"
            )
    comps = tuple(source.coordinate_fn(name) for name in target.coordinates)
    if factor is None:
        factor = source.one_fn()
    return LBMorphismSpec(source, target, comps, factor, mode)


def compose_morphisms(outer, inner):
    """outer after inner; factors multiply with the inner-composed outer factor."""
    if outer.source != inner.target or outer.mode != inner.mode:
        raise ChartMismatch("morphisms do not chain")
    images = dict(zip(outer.source.coordinates, inner.components))
    comps = tuple(substitute(fn, images) for fn in outer.components)
    factor = substitute(outer.factor, images) * inner.factor
    return LBMorphismSpec(inner.source, outer.target, comps, factor, outer.mode)


def is_coordinate_projection(morphism):
    """Whether every component is a distinct source coordinate and the rest
    of the source coordinates are free fiber directions."""
    names = []
    for fn in morphism.components:
        if not fn.is_polynomial():
            return None
        poly = fn.num
        keys = [k for k in poly]
        if len(keys) != 1:
            return None
        key = keys[0]
        if sum(key) != 1 or poly[key] != 1:
            return None
        names.append(morphism.source.coordinates[key.index(1)])
    if len(set(names)) != len(names):
        return None
    return tuple(names)


# ---------------------------------------------------------------------------
# pullbacks of forms along morphisms
# ---------------------------------------------------------------------------

def pullback_form(morphism, form):
    """Pull a frame 2-form (or 1-form) back along a morphism, with the
    factor weight that makes it a bundle-valued pullback."""
    if form.chart != morphism.target or form.mode != morphism.mode:
        raise ChartMismatch("form does not live over the morphism target")
    dmat = morphism.d_matrix()
    d_src = morphism.source.frame_dim(morphism.mode)
    d_tgt = morphism.target.frame_dim(morphism.mode)
    inv = morphism.source.one_fn() / morphism.factor
    if form.degree == 1:
        comps = {}
        for i in range(d_src):
            acc = morphism.source.zero_fn()
            for k in range(d_tgt):
                coeff = dmat.entries[k][i]
                if coeff.is_zero():
                    continue
                acc = acc + coeff * morphism.pull_scalar(form.component((k,)))
            comps[(i,)] = acc * inv
        return FormField(morphism.source, morphism.mode, 1, comps)
    if form.degree != 2:
        raise DimensionMismatch("only 1- and 2-forms pull back here")
    pulled = [
        [morphism.pull_scalar(form_to_matrix(form).entries[k][l]) for l in range(d_tgt)]
        for k in range(d_tgt)
    ]
    w = Matrix(pulled, cols=d_tgt, zero=morphism.source.zero_fn())
    out = dmat.transpose() @ w @ dmat
    out = out.scale(inv)
    return form_from_matrix(morphism.source, out, morphism.mode)


def pullback_tangent_form(morphism, omega):
    """Pull a tangent 2-form with bundle values back along the base map."""
    jac = morphism.jacobian()
    n_t = morphism.target.dim
    pulled = [
        [morphism.pull_scalar(omega.entries[k][l]) for l in range(n_t)]
        for k in range(n_t)
    ]
    w = Matrix(pulled, cols=n_t, zero=morphism.source.zero_fn())
    inv = morphism.source.one_fn() / morphism.factor
    return (jac.transpose() @ w @ jac).scale(inv)


# ---------------------------------------------------------------------------
# family transforms with sampled constant-rank certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyReport:
    ok: bool
    ranks: tuple
    samples: tuple
    spec: object
    note: str


def _default_points(morphism_or_spec, points, seed, extra_nonzero=()):
    if points is not None:
        return list(points)
    if isinstance(morphism_or_spec, LBMorphismSpec):
        chart = morphism_or_spec.source
        fns = list(morphism_or_spec.components) + [morphism_or_spec.factor]
        nonzero = [morphism_or_spec.factor]
    else:
        chart = morphism_or_spec.chart
        fns = [fn for row in morphism_or_spec.frame_rows() for fn in row]
        nonzero = []
    nonzero = nonzero + sampling.structure_denominators(fns) + list(extra_nonzero)
    return sampling.sample_points(chart, 5, seed=seed, nonzero=nonzero)


def _embedded_image_annihilator(model_target, dmat_point):
    """(image of the derivation map)-annihilator, embedded in the jet slot."""
    col_space = dmat_point.transpose()  # rows span the image
    img = Subspace.from_rows(
        [list(r) for r in col_space.entries], model_target.d_dim, zero=Fraction(0)
    )
    ann = img.annihilator()
    d = model_target.d_dim
    rows = [[Fraction(0)] * d + list(v) for v in ann.vectors()]
    return Subspace.from_rows(rows, 2 * d, zero=Fraction(0))


def backward_family(target_spec, morphism, points=None, seed=0):
    """Pull a structure back along a morphism, certifying smoothness by
    sampling the rank of (image annihilator) meet target fiber."""
    if target_spec.chart != morphism.target or target_spec.mode != morphism.mode:
        raise ChartMismatch("structure does not live over the morphism target")
    if morphism.is_identity():
        pts = tuple(_default_points(morphism, points, seed))
        return FamilyReport(True, (0,) * len(pts), pts, target_spec, "identity")
    pts = _default_points(morphism, points, seed)
    model_t = target_spec.fiber_model
    ranks = []
    transversal = True
    for p in pts:
        q = morphism.base_image(p)
        dmat_p = morphism.d_matrix_at(p)
        fiber_q = target_spec.fiber_at(q)
        obstruction = _embedded_image_annihilator(model_t, dmat_p)
        ranks.append(obstruction.intersect(fiber_q.space).dim)
        tangent_img = Subspace.from_rows(
            [list(r) for r in morphism.jacobian().evaluate(p).transpose().entries],
            morphism.target.dim,
            zero=Fraction(0),
        )
        leaf_dirs = Subspace.from_rows(
            [list(v[: morphism.target.dim]) for v in fiber_q.pr_d().vectors()],
            morphism.target.dim,
            zero=Fraction(0),
        )
        if tangent_img.sum(leaf_dirs).dim < morphism.target.dim:
            transversal = False
    if len(set(ranks)) > 1:
        lo = pts[ranks.index(min(ranks))]
        hi = pts[ranks.index(max(ranks))]
        raise NonCleanIntersection(
            "pullback obstruction rank jumps between samples",
            witnesses=(lo, hi),
        )
    generic_target = _substituted_fiber(target_spec, morphism)
    pulled = backward(
        generic_target,
        morphism.d_matrix(),
        morphism.factor,
        source_model=FiberModel(morphism.source.dim, morphism.mode),
    )
    spec = StructureSpec(
        morphism.source, morphism.mode, FrameRepr(tuple(pulled.vectors()))
    )
    for p in pts:
        got = spec.fiber_at(p)
        expect = backward(
            target_spec.fiber_at(morphism.base_image(p)),
            morphism.d_matrix_at(p),
            morphism.factor_at(p),
            source_model=spec.fiber_model,
        )
        if got.space != expect.space:
            raise InvariantViolation(
                f"symbolic pullback disagrees with pointwise pullback at {p}"
            )
    note = f"sampled at {len(pts)} points"
    if transversal:
        note += "; transversal"
    return FamilyReport(True, tuple(ranks), tuple(pts), spec, note)


def _substituted_fiber(target_spec, morphism):
    """The target's generic fiber with coefficients composed along the base
    map, i.e. expressed over the source chart."""
    images = dict(zip(morphism.target.coordinates, morphism.components))
    rows = []
    for row in target_spec.frame_rows():
        rows.append([substitute(fn, images) for fn in row])
    d = target_spec.chart.frame_dim(target_spec.mode)
    space = Subspace.from_rows(rows, 2 * d, zero=morphism.source.zero_fn())
    return LagrangianSubspace(target_spec.fiber_model, space)


def forward_family(source_spec, morphism, points=None, seed=0):
    """Push a structure forward along a coordinate projection, certifying
    smoothness by sampling the rank of fiber meet derivation-map kernel."""
    if source_spec.chart != morphism.source or source_spec.mode != morphism.mode:
        raise ChartMismatch("structure does not live over the morphism source")
    if morphism.is_identity():
        pts = tuple(_default_points(morphism, points, seed))
        return FamilyReport(True, (0,) * len(pts), pts, source_spec, "identity")
    proj_names = is_coordinate_projection(morphism)
    if proj_names is None:
        raise NotComposableInChart(
            "pushforward families are realized along coordinate projections only"
        )
    pts = _default_points(morphism, points, seed)
    ranks = []
    for p in pts:
        dmat_p = morphism.d_matrix_at(p)
        kern = dmat_p.kernel()
        d = source_spec.fiber_model.d_dim
        rows = [list(v) + [Fraction(0)] * d for v in kern.vectors()]
        embedded = Subspace.from_rows(rows, 2 * d, zero=Fraction(0))
        ranks.append(embedded.intersect(source_spec.fiber_at(p).space).dim)
    if len(set(ranks)) > 1:
        lo = pts[ranks.index(min(ranks))]
        hi = pts[ranks.index(max(ranks))]
        raise NonCleanIntersection(
            "pushforward kernel rank jumps between samples",
            witnesses=(lo, hi),
        )
    pushed = forward(
        source_spec.symbolic_fiber(),
        morphism.d_matrix(),
        morphism.factor,
        target_model=FiberModel(morphism.target.dim, morphism.mode),
    )
    dropped = [
        name for name in morphism.source.coordinates if name not in proj_names
    ]
    images = {}
    for name in morphism.source.coordinates:
        if name in proj_names:
            tgt_name = morphism.target.coordinates[proj_names.index(name)]
            images[name] = PolyFn.coordinate(tgt_name, morphism.target.coordinates)
    rows = []
    for v in pushed.vectors():
        row = []
        for fn in v:
            for name in dropped:
                if not differentiate(fn, name).is_zero():
                    raise InvariantViolation(
                        f"pushforward varies along the fiber coordinate {name}"
                    )
            row.append(substitute(_drop_variables(fn, proj_names), images))
        rows.append(tuple(row))
    spec = StructureSpec(morphism.target, morphism.mode, FrameRepr(tuple(rows)))
    for p in pts:
        got = spec.fiber_at(morphism.base_image(p))
        expect = forward(
            source_spec.fiber_at(p),
            morphism.d_matrix_at(p),
            morphism.factor_at(p),
            target_model=spec.fiber_model,
        )
        if got.space != expect.space:
            raise InvariantViolation(
                f"symbolic pushforward disagrees with pointwise pushforward at {p}"
            )
    return FamilyReport(
        True, tuple(ranks), tuple(pts), spec, f"sampled at {len(pts)} points"
    )


def _drop_variables(fn, keep_names):
    """Restrict a PolyFn to a sub-tuple of its variables; coefficients must
    not involve the removed ones (checked by the caller)."""
    keep_idx = [i for i, name in enumerate(fn.variables) if name in keep_names]
    names = tuple(fn.variables[i] for i in keep_idx)

    def shrink(poly):
        out = {}
        for key, c in poly.items():
            out[tuple(key[i] for i in keep_idx)] = c
        return out

    return PolyFn(names, shrink(fn.num), shrink(fn.den))


def star_family(first, second, points=None, seed=0):
    """Fiberwise sum of two structures over one chart, certified by sampling
    the rank of the summed derivation projections."""
    if first.chart != second.chart or first.mode != second.mode:
        raise ChartMismatch("summands live over different charts")
    if points is None:
        fns = [fn for s in (first, second) for row in s.frame_rows() for fn in row]
        points = sampling.sample_points(
            first.chart, 5, seed=seed, nonzero=sampling.structure_denominators(fns)
        )
    ranks = []
    for p in points:
        f1, f2 = first.fiber_at(p), second.fiber_at(p)
        ranks.append(f1.pr_d().sum(f2.pr_d()).dim)
    if len(set(ranks)) > 1:
        lo = points[ranks.index(min(ranks))]
        hi = points[ranks.index(max(ranks))]
        raise NonConstantRank(
            f"derivation projection rank jumps between {lo} and {hi}"
        )
    summed = star_sum(first.symbolic_fiber(), second.symbolic_fiber())
    spec = StructureSpec(
        first.chart, first.mode, FrameRepr(tuple(summed.vectors()))
    )
    inv = check_involutive(spec)
    note = f"sampled at {len(points)} points; involutive: {inv.holds}"
    return FamilyReport(True, tuple(ranks), tuple(points), spec, note)


def gauge_family(spec, form):
    """Shear a whole structure by a frame 2-form; graphs stay graphs."""
    if form.chart != spec.chart or form.mode != spec.mode:
        raise ChartMismatch("gauge form lives over a different chart")
    if isinstance(spec.repr, GraphForm):
        return graph_form_spec(spec.chart, spec.repr.form + form)
    d = spec.chart.frame_dim(spec.mode)
    g = gauge_matrix(spec.fiber_model, form_to_matrix(form))
    rows = []
    for row in spec.frame_rows():
        rows.append(tuple(g.apply(list(row))))
    return StructureSpec(spec.chart, spec.mode, FrameRepr(tuple(rows)))


# ---------------------------------------------------------------------------
# pointwise leaf-type classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointClassification:
    kind: str  # "precontact" | "lcps" | "presymplectic"
    point: tuple
    leaf_directions: Subspace  # derivation projection of the fiber
    gram: Matrix  # leaf form on the basis of leaf_directions
    gamma: tuple | None  # lcps only: unit components on the tangent basis
    tangent_basis: tuple | None  # lcps only: tangent projections of the basis

    def leaf_form_value(self, u, v):
        """Evaluate the leaf form on two derivation vectors in the leaf
        directions, expanding through the stored basis."""
        cu = self.leaf_directions.coordinates_of(u)
        cv = self.leaf_directions.coordinates_of(v)
        if cu is None or cv is None:
            raise InvariantViolation("vector outside the leaf directions")
        acc = Fraction(0)
        for i, a in enumerate(cu):
            for j, b in enumerate(cv):
                acc += a * b * self.gram.entries[i][j]
        return acc


def _lift_jet_part(fiber, dvec):
    """Some jet part psi with (dvec, psi) in the fiber; None if dvec is not
    in the derivation projection."""
    d = fiber.model.d_dim
    basis = fiber.vectors()
    mat = Matrix(
        [[row[i] for row in basis] for i in range(d)],
        cols=len(basis),
        zero=fiber.space.zero,
    )
    coeffs = solve_particular(mat, list(dvec))
    if coeffs is None:
        return None
    out = [fiber.space.zero] * d
    for c, row in zip(coeffs, basis):
        for k in range(d):
            out[k] = out[k] + c * row[d + k]
    return tuple(out)


def classify_point(spec, point):
    """Leaf type at a point, with the leaf form (and connection data for the
    degenerate type) extracted from the fiber."""
    fiber = spec.fiber_at(point)
    pd = fiber.pr_d()
    basis = pd.vectors()
    lifts = []
    for b in basis:
        psi = _lift_jet_part(fiber, b)
        if psi is None:
            raise InvariantViolation("fiber is not transitive on its projection")
        lifts.append(psi)
    gram_rows = [
        [sum((a * b for a, b in zip(psi, other)), Fraction(0)) for other in basis]
        for psi in lifts
    ]
    gram = Matrix(gram_rows, cols=len(basis), zero=Fraction(0)) if basis else Matrix(
        [], cols=0, zero=Fraction(0)
    )
    if spec.mode == DIRAC:
        return PointClassification(
            "presymplectic", tuple(sorted(point.items())), pd, gram, None, None
        )
    if fiber.contains_unit():
        return PointClassification(
            "precontact", tuple(sorted(point.items())), pd, gram, None, None
        )
    n = spec.chart.dim
    tangent = tuple(tuple(b[:n]) for b in basis)
    gamma = tuple(b[n] for b in basis)
    return PointClassification(
        "lcps", tuple(sorted(point.items())), pd, gram, gamma, tangent
    )
