"""Weak dual pairs: verification, composition, transverse pullback, the
linear self-dual model, normal-form witnesses, and leaf correspondence.

A pair instance is a closed 2-form on an apex chart together with two
structure-carrying legs and a morphism onto each leg. Three verification
routines evaluate, at sample points, (1) the defining conditions: kernel
orthogonality, the kernel-rank count, and pushforward of the graph onto each
leg; (2) the pullback characterization: the two leg pullbacks agree up to the
shear by the apex form, plus the rank count; (3) the product characterization:
the pair map pushes the graph onto the product structure, together with three
mutually equivalent auxiliary conditions. The routines are deliberately
independent computations; their verdict agreement on every instance, passing
or failing, is part of the test contract.

All checks are exact linear algebra over the rationals at points, or over the
rational-function field along supplied parametrizations; constant-rank and
submersivity hypotheses are certified by sampling only.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calculus import Chart, FormField, der_differential, form_to_matrix
from .errors import (
    ChartMismatch,
    DimensionMismatch,
    InvariantViolation,
    ModelMismatch,
    NotComposableInChart,
    NotLagrangian,
    SubmersivityFailed,
    TransversalityFailed,
)
from .fiber import (
    JACOBI,
    FiberModel,
    LagrangianSubspace,
    backward,
    forward,
    gauge,
    gauge_subspace,
    graph_of_form,
    opposite,
    product_fiber,
    product_projections,
)
from .linalg import Matrix, Subspace
from .scalars import PolyFn
from .structures import (
    GraphForm,
    LBMorphismSpec,
    StructureSpec,
    backward_family,
    classify_point,
    compose_morphisms,
    coordinate_projection,
    is_coordinate_projection,
    pullback_form,
    pullback_tangent_form,
)
from . import sampling


# ---------------------------------------------------------------------------
# instances and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualPairInstance:
    apex: Chart
    mode: str
    varpi: FormField
    leg0: StructureSpec
    leg1: StructureSpec
    s_map: LBMorphismSpec
    t_map: LBMorphismSpec

    def __post_init__(self):
        if self.varpi.chart != self.apex or self.varpi.mode != self.mode:
            raise ChartMismatch("apex form lives over a different chart")
        if self.varpi.degree != 2:
            raise DimensionMismatch("apex form must have degree 2")
        if not der_differential(self.varpi).is_zero():
            raise NotLagrangian("apex 2-form must be closed")
        for leg, m in ((self.leg0, self.s_map), (self.leg1, self.t_map)):
            if m.source != self.apex or m.target != leg.chart:
                raise ChartMismatch("leg morphism endpoints do not line up")
            if leg.mode != self.mode or m.mode != self.mode:
                raise ModelMismatch("mixed modes inside one pair instance")

    @property
    def apex_model(self):
        return FiberModel(self.apex.dim, self.mode)

    def expected_kernel_rank(self):
        n, n0, n1 = self.apex.dim, self.leg0.chart.dim, self.leg1.chart.dim
        return n - n0 - n1 - (1 if self.mode == JACOBI else 0)

    def sample_points(self, count=5, seed=0):
        fns = [self.s_map.factor, self.t_map.factor]
        fns += sampling.structure_denominators(
            [f for f in self.s_map.components]
            + [f for f in self.t_map.components]
            + [fn for row in self.leg0.frame_rows() for fn in row]
            + [fn for row in self.leg1.frame_rows() for fn in row]
            + [fn for row in form_to_matrix(self.varpi).entries for fn in row]
        )
        return sampling.sample_points(self.apex, count, seed=seed, nonzero=fns)


@dataclass(frozen=True)
class ConditionResult:
    name: str
    holds: bool
    witness: str | None = None


@dataclass(frozen=True)
class PointReport:
    point: tuple
    results: tuple
    overall: bool

    def result(self, name):
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


@dataclass(frozen=True)
class VerificationReport:
    kind: str
    reports: tuple
    overall: bool
    notes: tuple = ()

    def verdicts(self):
        return tuple(r.overall for r in self.reports)


def _point_key(point):
    return tuple(sorted((k, str(v)) for k, v in point.items()))


def _vector_key(vector):
    return "(" + ", ".join(str(c) for c in vector) + ")"


# ---------------------------------------------------------------------------
# pointwise fiber data and the three condition sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberSidePair:
    """Everything needed to verify one pair fiberwise: the apex model and
    form, the two derivation maps with their factors, and the leg fibers."""

    model: FiberModel
    w: Matrix
    ds: Matrix
    dt: Matrix
    a_s: Fraction
    a_t: Fraction
    l0: LagrangianSubspace
    l1: LagrangianSubspace
    expected_rank: int


def fiber_data_at(inst, point):
    w = form_to_matrix(inst.varpi).evaluate(point)
    return FiberSidePair(
        model=inst.apex_model,
        w=w,
        ds=inst.s_map.d_matrix_at(point),
        dt=inst.t_map.d_matrix_at(point),
        a_s=inst.s_map.factor_at(point),
        a_t=inst.t_map.factor_at(point),
        l0=inst.leg0.fiber_at(inst.s_map.base_image(point)),
        l1=inst.leg1.fiber_at(inst.t_map.base_image(point)),
        expected_rank=inst.expected_kernel_rank(),
    )


def _pair_value(w, u, v):
    acc = Fraction(0)
    for i, a in enumerate(u):
        if a == 0:
            continue
        for j, b in enumerate(v):
            acc += a * w.entries[i][j] * b
    return acc


def _triple_kernel(data):
    return (
        data.ds.kernel()
        .intersect(data.w.kernel())
        .intersect(data.dt.kernel())
    )


def check_kernel_orthogonality(data):
    for u in data.ds.kernel().vectors():
        for v in data.dt.kernel().vectors():
            val = _pair_value(data.w, u, v)
            if val != 0:
                return ConditionResult(
                    "kernel-orthogonality",
                    False,
                    "apex form value "
                    f"{val} on kernel vectors {_vector_key(u)} and {_vector_key(v)}",
                )
    return ConditionResult("kernel-orthogonality", True)


def check_kernel_rank(data):
    got = _triple_kernel(data).dim
    if got != data.expected_rank:
        return ConditionResult(
            "kernel-rank",
            False,
            f"triple kernel has rank {got}, expected {data.expected_rank}",
        )
    return ConditionResult("kernel-rank", True)


def check_leg_pushforwards(data):
    graph = graph_of_form(data.model, data.w)
    pushed0 = forward(graph, data.ds, data.a_s, target_model=data.l0.model)
    if pushed0.space != data.l0.space:
        return ConditionResult(
            "leg-pushforward",
            False,
            "first leg fiber differs from the pushed graph",
        )
    pushed1 = forward(graph, data.dt, data.a_t, target_model=data.l1.model)
    if pushed1.space != opposite(data.l1).space:
        return ConditionResult(
            "leg-pushforward",
            False,
            "second leg fiber differs from the (sign-flipped) pushed graph",
        )
    return ConditionResult("leg-pushforward", True)


def _embedded_in_omni(space, d):
    zero = space.zero
    rows = [list(v) + [zero] * d for v in space.vectors()]
    return Subspace.from_rows(rows, 2 * d, zero=zero)


def check_remark_identities(data):
    """Consistency identities tying the triple kernel and the form: inside
    the omni fiber, the triple kernel is the meet of either embedded kernel
    with the shear of the other, and the flat map sends the kernel
    intersection onto the annihilator of the sum."""
    d = data.model.d_dim
    ker_s, ker_t = data.ds.kernel(), data.dt.kernel()
    triple = _embedded_in_omni(_triple_kernel(data), d)
    mixed1 = _embedded_in_omni(ker_s, d).intersect(
        gauge_subspace(data.model, ker_t, data.w)
    )
    mixed2 = gauge_subspace(data.model, ker_s, data.w).intersect(
        _embedded_in_omni(ker_t, d)
    )
    if triple != mixed1 or triple != mixed2:
        return ConditionResult(
            "kernel-consistency",
            False,
            "triple kernel differs from a mixed sheared intersection",
        )
    both = ker_s.intersect(ker_t)
    image_rows = [data.w.transpose().apply(v) for v in both.vectors()]
    flat_image = Subspace.from_rows(
        image_rows, data.model.d_dim, zero=Fraction(0)
    )
    if flat_image != ker_s.sum(ker_t).annihilator():
        return ConditionResult(
            "kernel-consistency",
            False,
            "flat image of the kernel intersection misses the sum annihilator",
        )
    return ConditionResult("kernel-consistency", True)


def _backward_leg(data, side):
    if side == 0:
        return backward(data.l0, data.ds, data.a_s, source_model=data.model)
    return backward(data.l1, data.dt, data.a_t, source_model=data.model)


def check_pullback_shear(data):
    """First characterizing condition: the first-leg pullback equals the
    shear of the second-leg pullback by the apex form."""
    left = _backward_leg(data, 0)
    right = gauge(_backward_leg(data, 1), data.w)
    if left.space != right.space:
        return ConditionResult(
            "pullback-shear",
            False,
            "leg pullbacks are not related by the apex-form shear",
        )
    return ConditionResult("pullback-shear", True)


def check_pullback_decompositions(data):
    """Descriptions of the two pullbacks through the kernels: each pullback
    is its own embedded leg kernel plus the shear of the other kernel."""
    d = data.model.d_dim
    ker_s, ker_t = data.ds.kernel(), data.dt.kernel()
    left = _backward_leg(data, 0)
    expect = _embedded_in_omni(ker_s, d).sum(
        gauge_subspace(data.model, ker_t, data.w)
    )
    if left.space != expect:
        return ConditionResult(
            "pullback-decomposition",
            False,
            "first pullback differs from kernel plus sheared kernel",
        )
    right_opp = opposite(_backward_leg(data, 1))
    expect_opp = _embedded_in_omni(ker_t, d).sum(
        gauge_subspace(data.model, ker_s, data.w)
    )
    if right_opp.space != expect_opp:
        return ConditionResult(
            "pullback-decomposition",
            False,
            "second pullback differs from kernel plus sheared kernel",
        )
    return ConditionResult("pullback-decomposition", True)


def _product_embedding(model0, model1, zero=Fraction(0)):
    prod_model, dp1, dp2 = product_projections(model0, model1, zero)
    stacked = dp1.stack(dp2)
    return prod_model, dp1, dp2, stacked.inverse()


def pushforward_to_product(data):
    """The graph of the apex form pushed along the pair map into the product
    fiber: derivations embed through both legs, jets assemble from leg jets
    subject to the flat-map matching constraint weighted by the factors."""
    zero = Fraction(0)
    prod_model, dp1, dp2, embed = _product_embedding(data.l0.model, data.l1.model)
    d_m = data.model.d_dim
    d0, d1 = data.l0.model.d_dim, data.l1.model.d_dim
    # variables: apex derivation delta, leg jets beta0, beta1
    cols = d_m + d0 + d1
    rows = []
    w_flat = data.w.transpose()  # row i = flat of the i-th basis derivation
    for i in range(d_m):
        row = [zero] * cols
        for j in range(d_m):
            row[j] = w_flat.entries[i][j]
        for j in range(d0):
            row[d_m + j] = -data.ds.entries[j][i] / data.a_s
        for j in range(d1):
            row[d_m + d0 + j] = -data.dt.entries[j][i] / data.a_t
        rows.append(row)
    solutions = Matrix(rows, cols=cols, zero=zero).kernel()
    out_rows = []
    for v in solutions.vectors():
        delta = list(v[:d_m])
        beta0 = list(v[d_m : d_m + d0])
        beta1 = list(v[d_m + d0 :])
        leg_push = list(data.ds.apply(delta)) + list(data.dt.apply(delta))
        d_part = list(embed.apply(leg_push))
        j_part = [
            a + b
            for a, b in zip(dp1.transpose().apply(beta0), dp2.transpose().apply(beta1))
        ]
        out_rows.append(d_part + j_part)
    space = Subspace.from_rows(out_rows, 2 * prod_model.d_dim, zero=zero)
    return prod_model, space


def check_product_pushforward(data):
    prod_model, pushed = pushforward_to_product(data)
    target = product_fiber(data.l0, opposite(data.l1))
    if pushed != target.space:
        return ConditionResult(
            "product-pushforward",
            False,
            "pair map does not push the graph onto the product structure",
        )
    return ConditionResult("product-pushforward", True)


# ---------------------------------------------------------------------------
# the three chart-level verifiers
# ---------------------------------------------------------------------------

def check_leg_submersivity(inst, point):
    """Both base maps must have full-row-rank differential at the point."""
    for label, morphism in (("first", inst.s_map), ("second", inst.t_map)):
        if not morphism.is_submersion_at(point):
            return ConditionResult(
                "leg-submersivity",
                False,
                f"{label} leg map drops rank at {_point_key(point)}",
            )
    return ConditionResult("leg-submersivity", True)


def _jacobi_leg_notes(inst, points, datas, all_passed):
    """Consequences of jacobi legs: on a verified weak pair the apex form
    kernel collapses to the triple kernel; with the dual-pair count the form
    is nondegenerate. Both are theorem content, so a breach on a verified
    instance is an internal error, not a verdict."""
    if not (all_passed and points):
        return ()
    if not all(
        jacobi_leg_condition(d.l0) and jacobi_leg_condition(d.l1)
        for d in datas
    ):
        return ()
    da = datas[0].model.d_dim
    for p, d in zip(points, datas):
        if d.w.kernel() != _triple_kernel(d):
            raise InvariantViolation(
                f"jacobi legs but apex form kernel exceeds the triple "
                f"kernel at {_point_key(p)}"
            )
    notes = ["jacobi legs: apex form kernel equals the triple kernel"]
    if inst.expected_kernel_rank() == 0:
        if any(d.w.rank() != da for d in datas):
            raise InvariantViolation(
                "dual-pair count with jacobi legs but a degenerate apex form"
            )
        notes.append("full contact dual pair: apex form nondegenerate")
    return tuple(notes)


def verify_weak_dual_pair(inst, points=None, seed=0):
    points = list(points) if points is not None else inst.sample_points(seed=seed)
    reports = []
    datas = []
    for p in points:
        data = fiber_data_at(inst, p)
        datas.append(data)
        results = (
            check_leg_submersivity(inst, p),
            check_kernel_orthogonality(data),
            check_kernel_rank(data),
            check_leg_pushforwards(data),
            check_remark_identities(data),
        )
        overall = all(r.holds for r in results[:4])
        reports.append(PointReport(_point_key(p), results, overall))
    all_passed = all(r.overall for r in reports)
    notes = _jacobi_leg_notes(inst, points, datas, all_passed)
    return VerificationReport(
        "defining-conditions",
        tuple(reports),
        all_passed,
        notes,
    )


def verify_characterization_I(inst, points=None, seed=0):
    points = list(points) if points is not None else inst.sample_points(seed=seed)
    reports = []
    for p in points:
        data = fiber_data_at(inst, p)
        results = (
            check_leg_submersivity(inst, p),
            check_pullback_shear(data),
            check_kernel_rank(data),
            check_pullback_decompositions(data),
        )
        overall = all(r.holds for r in results[:3])
        reports.append(PointReport(_point_key(p), results, overall))
    return VerificationReport(
        "pullback-characterization",
        tuple(reports),
        all(r.overall for r in reports),
    )


def verify_characterization_II(inst, points=None, seed=0):
    points = list(points) if points is not None else inst.sample_points(seed=seed)
    reports = []
    notes = []
    for p in points:
        data = fiber_data_at(inst, p)
        submersive = check_leg_submersivity(inst, p)
        cond1 = check_product_pushforward(data)
        aux_a = check_kernel_orthogonality(data)
        aux_b = check_kernel_rank(data)
        aux_c = check_pullback_shear(data)
        results = (submersive, cond1, aux_a, aux_b, aux_c)
        if cond1.holds and submersive.holds:
            if not (aux_a.holds == aux_b.holds == aux_c.holds):
                raise InvariantViolation(
                    "auxiliary conditions disagree although the product "
                    f"pushforward holds at {p}"
                )
            overall = aux_a.holds
        else:
            notes.append(f"precondition unmet at {_point_key(p)}")
            overall = False
        reports.append(PointReport(_point_key(p), results, overall))
    return VerificationReport(
        "product-characterization",
        tuple(reports),
        all(r.overall for r in reports),
        tuple(notes),
    )


# ---------------------------------------------------------------------------
# building instances: products, composition, transverse pullback
# ---------------------------------------------------------------------------

def product_pair(leg0, leg1, extra_name="t"):
    """The standard pair between two graph structures: the apex is the
    product chart (with one extra scale coordinate when the unit direction is
    present), carrying the difference of the pulled-back leg forms."""
    if not isinstance(leg0.repr, GraphForm) or not isinstance(leg1.repr, GraphForm):
        raise NotComposableInChart("product pairs need graph legs")
    if leg0.mode != leg1.mode:
        raise ModelMismatch("mixed modes")
    mode = leg0.mode
    names0, names1 = leg0.chart.coordinates, leg1.chart.coordinates
    if set(names0) & set(names1):
        raise NotComposableInChart("leg charts share coordinate names")
    if mode == JACOBI:
        if extra_name in names0 or extra_name in names1:
            raise NotComposableInChart("extra coordinate name collides")
        apex = Chart(names0 + names1 + (extra_name,))
        factor1 = apex.coordinate_fn(extra_name)
    else:
        apex = Chart(names0 + names1)
        factor1 = apex.one_fn()
    p1 = coordinate_projection(apex, leg0.chart, mode=mode)
    p2 = coordinate_projection(apex, leg1.chart, factor=factor1, mode=mode)
    varpi = pullback_form(p1, leg0.repr.form) - pullback_form(p2, leg1.repr.form)
    return DualPairInstance(apex, mode, varpi, leg0, leg1, p1, p2)


def compose(p01, p12):
    """Chain two pairs over a shared middle leg, realized as the coordinate
    fiber product. The apex form is the sum of the two pulled-back forms."""
    if p01.mode != p12.mode:
        raise ModelMismatch("mixed modes")
    if p01.leg1 != p12.leg0:
        raise NotComposableInChart("middle legs differ")
    mid_names_t = is_coordinate_projection(p01.t_map)
    mid_names_s = is_coordinate_projection(p12.s_map)
    if mid_names_t is None or mid_names_s is None:
        raise NotComposableInChart(
            "middle maps must be coordinate projections to realize the fiber product"
        )
    left_names = p01.apex.coordinates
    right_names = p12.apex.coordinates
    shared = set(left_names) & set(right_names)
    middle = p01.leg1.chart.coordinates
    # the middle block must be the only name overlap, matched one to one
    if set(mid_names_t) != set(middle) or set(mid_names_s) != set(middle):
        raise NotComposableInChart(
            "middle projections must target the middle chart coordinates by name"
        )
    if shared - set(middle):
        raise NotComposableInChart("apex charts share non-middle coordinate names")
    new_names = left_names + tuple(n for n in right_names if n not in middle)
    apex = Chart(new_names)
    mode = p01.mode
    proj1 = coordinate_projection(apex, p01.apex, mode=mode)
    # the second projection carries the trivialization mismatch of the two
    # routes to the middle leg
    images_left = {n: apex.coordinate_fn(n) for n in left_names}
    a_t01 = _rename(p01.t_map.factor, apex)
    a_s12 = _rename(p12.s_map.factor, apex)
    proj2 = LBMorphismSpec(
        apex,
        p12.apex,
        tuple(apex.coordinate_fn(n) for n in right_names),
        a_t01 / a_s12,
        mode,
    )
    varpi = pullback_form(proj1, p01.varpi) + pullback_form(proj2, p12.varpi)
    s_map = compose_morphisms(p01.s_map, proj1)
    t_map = compose_morphisms(p12.t_map, proj2)
    return DualPairInstance(apex, mode, varpi, p01.leg0, p12.leg1, s_map, t_map)


def _rename(fn, chart):
    """View a PolyFn over a chart with more coordinates, matching by name."""
    images = {}
    for name in fn.variables:
        if name not in chart.coordinates:
            raise NotComposableInChart(f"coordinate {name} missing from chart")
        images[name] = chart.coordinate_fn(name)
    from .scalars import substitute

    return substitute(fn, images)


def transverse_pullback(inst, phi0, phi1, points=None, seed=0, samples=5):
    """Pull a verified pair back along transversal maps into the legs.

    The apex legs must be coordinate projections onto disjoint blocks so the
    pullback chart stays polynomial. Transversality of each map to its leg
    structure and submersivity of the new legs are certified by sampling."""
    if phi0.target != inst.leg0.chart or phi1.target != inst.leg1.chart:
        raise ChartMismatch("transversals do not land in the legs")
    if phi0.mode != inst.mode or phi1.mode != inst.mode:
        raise ModelMismatch("mixed modes")
    if phi0.is_identity() and phi1.is_identity():
        return inst
    s_names = is_coordinate_projection(inst.s_map)
    t_names = is_coordinate_projection(inst.t_map)
    if s_names is None or t_names is None or set(s_names) & set(t_names):
        raise NotComposableInChart(
            "apex legs must be coordinate projections onto disjoint blocks"
        )
    # transversality sampling: image of the tangent map plus the leaf
    # directions of the leg structure must fill the leg tangent space
    for phi, leg in ((phi0, inst.leg0), (phi1, inst.leg1)):
        pts = sampling.sample_points(
            phi.source, samples, seed=seed, nonzero=[phi.factor]
        )
        for q in pts:
            jac = phi.jacobian().evaluate(q)
            img = Subspace.from_rows(
                [list(r) for r in jac.transpose().entries],
                leg.chart.dim,
                zero=Fraction(0),
            )
            fiber = leg.fiber_at(phi.base_image(q))
            tangent_leaf = Subspace.from_rows(
                [list(v[: leg.chart.dim]) for v in fiber.pr_d().vectors()],
                leg.chart.dim,
                zero=Fraction(0),
            )
            if img.sum(tangent_leaf).dim < leg.chart.dim:
                raise TransversalityFailed(
                    "tangent image plus leaf directions do not fill the leg",
                    witness_point=q,
                )
    src0, src1 = phi0.source, phi1.source
    rest = tuple(
        n for n in inst.apex.coordinates if n not in s_names and n not in t_names
    )
    all_names = src0.coordinates + rest + src1.coordinates
    if len(set(all_names)) != len(all_names):
        raise NotComposableInChart("pullback charts share coordinate names")
    sigma = Chart(all_names)
    # the map onto the original apex: leg blocks through the transversals,
    # fiber block passed through
    comp_by_name = {}
    for names, phi in ((s_names, phi0), (t_names, phi1)):
        for name, fn in zip(names, phi.components):
            comp_by_name[name] = _rename(fn, sigma)
    for name in rest:
        comp_by_name[name] = sigma.coordinate_fn(name)
    p2 = LBMorphismSpec(
        sigma,
        inst.apex,
        tuple(comp_by_name[n] for n in inst.apex.coordinates),
        sigma.one_fn(),
        inst.mode,
    )
    varpi_sigma = pullback_form(p2, inst.varpi)
    a_s_sigma = _rename(compose_morphisms(inst.s_map, p2).factor, sigma) / _rename(
        phi0.factor, sigma
    )
    a_t_sigma = _rename(compose_morphisms(inst.t_map, p2).factor, sigma) / _rename(
        phi1.factor, sigma
    )
    s_sigma = coordinate_projection(sigma, src0, factor=a_s_sigma, mode=inst.mode)
    t_sigma = coordinate_projection(sigma, src1, factor=a_t_sigma, mode=inst.mode)
    new_leg0 = backward_family(inst.leg0, phi0, seed=seed).spec
    new_leg1 = backward_family(inst.leg1, phi1, seed=seed).spec
    out = DualPairInstance(
        sigma, inst.mode, varpi_sigma, new_leg0, new_leg1, s_sigma, t_sigma
    )
    pts = out.sample_points(samples, seed=seed) if points is None else points
    for p in pts:
        for m, label in ((s_sigma, "first"), (t_sigma, "second")):
            if not m.is_submersion_at(p):
                raise SubmersivityFailed(
                    f"{label} pullback leg fails to submerge",
                    witness_point=p,
                )
    return out


def _integrate_unit_interval(fn, source, target, slot):
    """Integrate a polynomial over [0, 1] in the coordinate at the given
    slot, landing on the chart without that coordinate."""
    if not fn.is_polynomial():
        raise InvariantViolation("flow pullback left a non-polynomial entry")
    scale = next(iter(fn.den.values()))
    out = {}
    for expo, coeff in fn.num.items():
        k = expo[slot]
        reduced = expo[:slot] + expo[slot + 1 :]
        out[reduced] = out.get(reduced, Fraction(0)) + coeff / scale / (k + 1)
    return PolyFn(target.coordinates, {e: c for e, c in out.items() if c})


def flat_self_dual_pair(spec, coeff_prefix="c"):
    """Squeeze a structure between itself and its opposite.

    The apex chart fibers the structure's coefficient space over its own
    chart; one leg map forgets the coefficients, the other shifts along the
    anchor of the coefficient combination; the apex form is the differential
    of the flow-averaged tautological jet pairing. The averaging flow is
    polynomial exactly when every frame row has a constant derivation part
    with no unit component, so that scope is enforced here; graph
    representations qualify in plain mode, degenerate connection
    representations with vanishing potentials in unit mode."""
    rows = spec.frame_rows()
    model = spec.fiber_model
    d = model.d_dim
    n = spec.chart.dim
    for row in rows:
        for i in range(d):
            if not row[i].is_constant():
                raise NotComposableInChart(
                    "frame derivation parts must be constant for the flow"
                )
        if spec.mode == JACOBI and not row[model.unit_index].is_zero():
            raise NotComposableInChart(
                "frame derivation parts must avoid the unit direction"
            )
    k_count = len(rows)
    names = tuple(f"{coeff_prefix}{k + 1}" for k in range(k_count))
    if set(names) & set(spec.chart.coordinates):
        raise NotComposableInChart("coefficient names collide with the chart")
    apex = Chart(spec.chart.coordinates + names)
    anchors = [
        [row[i].constant_value() for i in range(n)] for row in rows
    ]
    # the tautological pairing: jet parts of the coefficient combination
    # paired against the leg frame through the projection leg
    jets = []
    for j in range(d):
        acc = apex.zero_fn()
        for k in range(k_count):
            acc = acc - apex.coordinate_fn(names[k]) * _rename(
                rows[k][d + j], apex
            )
        jets.append(acc)
    lam_components = {}
    for i in range(n):
        if not jets[i].is_zero():
            lam_components[(i,)] = jets[i]
    if spec.mode == JACOBI and not jets[model.unit_index].is_zero():
        lam_components[(apex.frame_dim(JACOBI) - 1,)] = jets[model.unit_index]
    lam = FormField(apex, spec.mode, 1, lam_components)
    # average the pullbacks along the anchor shift over unit time
    tau = "tau_flow"
    if tau in apex.coordinates:
        raise NotComposableInChart("flow parameter name collides")
    ext = Chart(apex.coordinates + (tau,))
    shift = []
    for i, nm in enumerate(spec.chart.coordinates):
        acc = ext.coordinate_fn(nm)
        for k in range(k_count):
            if anchors[k][i]:
                acc = acc + (
                    ext.coordinate_fn(tau)
                    * ext.coordinate_fn(names[k])
                    * ext.constant_fn(anchors[k][i])
                )
        shift.append(acc)
    for nm in names:
        shift.append(ext.coordinate_fn(nm))
    flow = LBMorphismSpec(ext, apex, tuple(shift), ext.one_fn(), spec.mode)
    pulled = pullback_form(flow, lam)
    slot = len(apex.coordinates)
    averaged = {}
    ext_frame = ext.frame_dim(spec.mode)
    apex_frame = apex.frame_dim(spec.mode)
    for j in range(apex_frame):
        src = j
        if spec.mode == JACOBI and j == apex_frame - 1:
            src = ext_frame - 1
        fn = pulled.component((src,))
        if fn.is_zero():
            continue
        integrated = _integrate_unit_interval(fn, ext, apex, slot)
        if not integrated.is_zero():
            averaged[(j,)] = integrated
    varpi = der_differential(FormField(apex, spec.mode, 1, averaged))
    s_map = coordinate_projection(apex, spec.chart, mode=spec.mode)
    t_comps = []
    for i, nm in enumerate(spec.chart.coordinates):
        acc = apex.coordinate_fn(nm)
        for k in range(k_count):
            if anchors[k][i]:
                acc = acc + apex.coordinate_fn(names[k]) * apex.constant_fn(
                    anchors[k][i]
                )
        t_comps.append(acc)
    t_map = LBMorphismSpec(
        apex, spec.chart, tuple(t_comps), apex.one_fn(), spec.mode
    )
    return DualPairInstance(apex, spec.mode, varpi, spec, spec, s_map, t_map)


# ---------------------------------------------------------------------------
# the linear self-dual model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelfDualLinearModel:
    fiber: LagrangianSubspace
    apex_model: FiberModel
    w: Matrix
    ds: Matrix
    dt: Matrix
    full_contact: bool


def self_dual_linear_model(lagr):
    """The linear pair a single Lagrangian fiber is squeezed between.

    The apex fiber is the direct sum of the ambient derivation space and the
    Lagrangian; one leg map forgets the Lagrangian summand, the other adds
    its derivation part; the 2-form pairs jet parts against derivations with
    a symmetrizing half-weight. Returns the model plus a verification report
    of the three fiberwise conditions."""
    model = lagr.model
    n = model.base_dim
    d = model.d_dim
    basis = lagr.vectors()
    apex_model = FiberModel(2 * n + (1 if model.mode == JACOBI else 0), model.mode)
    da = apex_model.d_dim  # = 2d for both modes
    if da != 2 * d:
        raise ModelMismatch("apex model dimensions out of step")

    def apex_element(vec):
        """Split an apex derivation vector into (delta, e) with e in the
        Lagrangian: coordinates are tangent block, Lagrangian coefficients,
        then the unit slot."""
        if model.mode == JACOBI:
            tangent, coeffs, unit = vec[:n], vec[n : n + d], vec[-1]
            delta = list(tangent) + [unit]
        else:
            tangent, coeffs = vec[:n], vec[n : n + d]
            delta = list(tangent)
        e = [Fraction(0)] * (2 * d)
        for c, b in zip(coeffs, basis):
            for k in range(2 * d):
                e[k] += c * b[k]
        return delta, e

    ds_rows = []
    dt_rows = []
    for r in range(d):
        ds_rows.append([Fraction(0)] * da)
        dt_rows.append([Fraction(0)] * da)
    w_rows = [[Fraction(0)] * da for _ in range(da)]

    std = []
    for i in range(da):
        v = [Fraction(0)] * da
        v[i] = Fraction(1)
        std.append(v)
    elements = [apex_element(v) for v in std]
    for i, (delta, e) in enumerate(elements):
        for r in range(d):
            ds_rows[r][i] = delta[r]
            dt_rows[r][i] = delta[r] + e[r]

    def half_pair(e_other, delta, e):
        acc = Fraction(0)
        for k in range(d):
            acc += e_other[d + k] * (delta[k] + Fraction(1, 2) * e[k])
        return acc

    for i in range(da):
        for j in range(da):
            d1, e1 = elements[i]
            d2, e2 = elements[j]
            w_rows[i][j] = half_pair(e2, d1, e1) - half_pair(e1, d2, e2)
    w = Matrix(w_rows, cols=da, zero=Fraction(0))
    ds = Matrix(ds_rows, cols=da, zero=Fraction(0))
    dt = Matrix(dt_rows, cols=da, zero=Fraction(0))
    full_contact = w.rank() == da
    data = FiberSidePair(
        model=apex_model,
        w=w,
        ds=ds,
        dt=dt,
        a_s=Fraction(1),
        a_t=Fraction(1),
        l0=lagr,
        l1=lagr,
        expected_rank=0,
    )
    results = (
        check_kernel_rank(data),
        check_pullback_shear(data),
        check_kernel_orthogonality(data),
        check_leg_pushforwards(data),
        check_product_pushforward(data),
    )
    report = VerificationReport(
        "self-dual-linear-model",
        (PointReport((), results, all(r.holds for r in results)),),
        all(r.holds for r in results),
    )
    return SelfDualLinearModel(lagr, apex_model, w, ds, dt, full_contact), report


def jacobi_leg_condition(lagr):
    """Whether the fiber meets the derivation space only at zero; this is
    the condition equivalent to nondegeneracy of the model form."""
    from .fiber import derivation_space

    space = derivation_space(lagr.model, lagr.space.zero)
    return lagr.space.intersect(space).dim == 0


# ---------------------------------------------------------------------------
# normal-form witness checking
# ---------------------------------------------------------------------------

def normal_form_check(spec, transversal, candidate, b_form, points=None, seed=0):
    """Verify a supplied normal-form witness: the pullback of the structure
    through the candidate map, sheared by the supplied closed 2-form, must
    match the model built from the transversal pullback extended trivially
    over the candidate's source chart."""
    if not der_differential(b_form).is_zero():
        raise NotLagrangian("shear form must be closed")
    if candidate.target != spec.chart or transversal.target != spec.chart:
        raise ChartMismatch("maps do not land in the structure chart")
    if b_form.chart != candidate.source:
        raise ChartMismatch("shear form must live over the candidate source")
    q = coordinate_projection(candidate.source, transversal.source, mode=spec.mode)
    model_side = backward_family(
        backward_family(spec, transversal, seed=seed).spec, q, seed=seed
    ).spec
    pulled = backward_family(spec, candidate, seed=seed).spec
    if points is None:
        fns = [candidate.factor, transversal.factor]
        fns += sampling.structure_denominators(
            [fn for row in pulled.frame_rows() for fn in row]
            + [fn for row in model_side.frame_rows() for fn in row]
        )
        points = sampling.sample_points(
            candidate.source, 5, seed=seed, nonzero=fns
        )
    b_matrix = form_to_matrix(b_form)
    reports = []
    for p in points:
        lhs = model_side.fiber_at(p)
        rhs = gauge(pulled.fiber_at(p), b_matrix.evaluate(p))
        ok = lhs.space == rhs.space
        reports.append(
            PointReport(
                _point_key(p),
                (
                    ConditionResult(
                        "normal-form-match",
                        ok,
                        None if ok else "sheared pullback differs from the model",
                    ),
                ),
                ok,
            )
        )
    return VerificationReport(
        "normal-form-witness",
        tuple(reports),
        all(r.overall for r in reports),
    )


# ---------------------------------------------------------------------------
# leaf correspondence
# ---------------------------------------------------------------------------

def _kernel_sum(data):
    return data.ds.kernel().sum(data.dt.kernel())


def leaf_point_report(inst, data, point):
    """Type matching and the leaf-form relation at one apex point."""
    results = []
    kernel_sum = _kernel_sum(data)
    unit_in_sum = False
    if inst.mode == JACOBI:
        unit = [Fraction(0)] * data.model.d_dim
        unit[data.model.unit_index] = Fraction(1)
        unit_in_sum = kernel_sum.contains(tuple(unit))
    class0 = classify_point(inst.leg0, inst.s_map.base_image(point))
    class1 = classify_point(inst.leg1, inst.t_map.base_image(point))
    if inst.mode == JACOBI:
        types_match = class0.kind == class1.kind
        apex_consistent = unit_in_sum == (class0.kind == "precontact")
        results.append(
            ConditionResult(
                "leaf-type-match",
                types_match,
                None
                if types_match
                else f"leg types differ: {class0.kind} vs {class1.kind}",
            )
        )
        results.append(
            ConditionResult(
                "apex-kernel-type",
                apex_consistent,
                None
                if apex_consistent
                else "unit membership in the kernel sum contradicts the leg type",
            )
        )
    else:
        results.append(ConditionResult("leaf-type-match", True))
    # the unified pointwise form relation on the kernel-sum directions
    ok = True
    witness = None
    for u in kernel_sum.vectors():
        for v in kernel_sum.vectors():
            lhs = _pair_value(data.w, u, v)
            du0, dv0 = data.ds.apply(list(u)), data.ds.apply(list(v))
            du1, dv1 = data.dt.apply(list(u)), data.dt.apply(list(v))
            rhs = (
                class0.leaf_form_value(du0, dv0) / data.a_s
                - class1.leaf_form_value(du1, dv1) / data.a_t
            )
            if lhs != rhs:
                ok = False
                witness = (
                    "form relation fails on "
                    f"{_vector_key(u)}, {_vector_key(v)}: {lhs} vs {rhs}"
                )
                break
        if not ok:
            break
    results.append(ConditionResult("leaf-form-relation", ok, witness))
    return results, class0, class1, kernel_sum


def minimal_transversal_check(inst, data, kernel_sum):
    """At a point with graph-type legs, exhibit a complement of the leaf
    directions inside the kernel of the unit row of the apex form, and check
    the transverse fibers through both legs are related by the restricted
    shear."""
    n = inst.apex.dim
    zero = Fraction(0)
    sigma_rows = [list(v[:n]) for v in kernel_sum.vectors()]
    leaf_tangent = Subspace.from_rows(sigma_rows, n, zero=zero)
    results = []
    inside_theta = None
    if inst.mode == JACOBI:
        theta = [data.w.entries[data.model.unit_index][i] for i in range(n)]
        if any(t != 0 for t in theta):
            ker_theta = Matrix([theta], cols=n, zero=zero).kernel()
        else:
            ker_theta = Subspace.full_space(n, zero=zero)
        cover = ker_theta.sum(leaf_tangent).dim == n
        inside = ker_theta
        results.append(
            ConditionResult(
                "transversal-inside-unit-kernel",
                cover,
                None
                if cover
                else "unit-row kernel plus leaf directions fail to span",
            )
        )
        inside_theta = inside if cover else None
    # choose complement vectors for the transversal: extend the leaf tangent
    # with vectors from the preferred pool, then the standard basis
    pool = list(inside_theta.vectors()) if inside_theta is not None else []
    for i in range(n):
        v = [zero] * n
        v[i] = Fraction(1)
        pool.append(tuple(v))
    chosen = []
    current = leaf_tangent
    for v in pool:
        if current.dim == n:
            break
        if not current.contains(v):
            chosen.append(v)
            current = current.sum(Subspace.from_rows([list(v)], n, zero=zero))
    # lift the transversal tangents to derivations (zero unit part) and add
    # the unit direction to get the derivation space of the slice
    d = data.model.d_dim
    lift_rows = []
    for v in chosen:
        lift_rows.append(list(v) + ([zero] if inst.mode == JACOBI else []))
    if inst.mode == JACOBI:
        unit = [zero] * d
        unit[data.model.unit_index] = Fraction(1)
        lift_rows.append(unit)
    k = len(lift_rows)
    incl = Matrix(
        [[lift_rows[c][r] for c in range(k)] for r in range(d)],
        cols=k,
        zero=zero,
    )
    slice_model = FiberModel(
        (k - 1) if inst.mode == JACOBI else k, inst.mode
    )
    ds_v = data.ds @ incl
    dt_v = data.dt @ incl
    b_res = incl.transpose() @ data.w @ incl
    left = backward(data.l0, ds_v, data.a_s, source_model=slice_model)
    right = backward(data.l1, dt_v, data.a_t, source_model=slice_model)
    related = gauge(right, b_res).space == left.space
    results.append(
        ConditionResult(
            "transverse-fibers-shear-related",
            related,
            None if related else "restricted shear does not relate the slices",
        )
    )
    return results


def leaf_correspondence_report(inst, points=None, seed=0, symbolic=None):
    """Pointwise leaf-type matching and the leaf-form relation, with the
    transversal comparison at every sample; optionally a symbolic check of
    the form relation along a supplied leaf parametrization."""
    points = list(points) if points is not None else inst.sample_points(seed=seed)
    reports = []
    for p in points:
        data = fiber_data_at(inst, p)
        results, class0, class1, ks = leaf_point_report(inst, data, p)
        results = list(results)
        results.extend(minimal_transversal_check(inst, data, ks))
        overall = all(r.holds for r in results)
        reports.append(PointReport(_point_key(p), tuple(results), overall))
    notes = []
    if symbolic is not None:
        notes.append(check_symbolic_leaf_relation(inst, symbolic))
    return VerificationReport(
        "leaf-correspondence",
        tuple(reports),
        all(r.overall for r in reports),
        tuple(notes),
    )


def check_symbolic_leaf_relation(inst, parametrization):
    """Symbolic form relation along a polynomial leaf parametrization.

    Graph legs: the pulled-back apex form must equal the difference of the
    leg forms pulled along the composed maps, as an exact identity over the
    parameter chart. Connection-type legs: the twisted differential of the
    pulled-back unit contraction must match the difference of the pulled-back
    tangent forms."""
    from .structures import Lcps

    c = parametrization
    if c.target != inst.apex or c.mode != inst.mode:
        raise ChartMismatch("parametrization does not land in the apex")
    s_c = compose_morphisms(inst.s_map, c)
    t_c = compose_morphisms(inst.t_map, c)
    if isinstance(inst.leg0.repr, GraphForm) and isinstance(
        inst.leg1.repr, GraphForm
    ):
        lhs = pullback_form(c, inst.varpi)
        rhs = pullback_form(s_c, inst.leg0.repr.form) - pullback_form(
            t_c, inst.leg1.repr.form
        )
        if lhs == rhs:
            return "symbolic graph-leg form relation holds"
        raise InvariantViolation("symbolic graph-leg form relation fails")
    if isinstance(inst.leg0.repr, Lcps) and isinstance(inst.leg1.repr, Lcps):
        return _symbolic_lcps_relation(inst, c, s_c, t_c)
    raise NotComposableInChart(
        "symbolic check supports graph or connection legs only"
    )


def _symbolic_lcps_relation(inst, c, s_c, t_c):
    """d-twisted relation for connection-type legs along the parametrization.

    The unit contraction of the pulled-back apex form is a tangent 1-form on
    the parameter chart; its twisted differential, with potentials read off
    the kernel-sum lifts of the composed leg maps, must equal the difference
    of the pulled-back leg 2-forms."""
    from .scalars import differentiate

    params = c.source
    k = params.dim
    w_par = form_to_matrix(pullback_form(c, inst.varpi))
    theta = [w_par.entries[k][r] for r in range(k)]
    # potentials: unit components of kernel-sum lifts of coordinate directions
    ksum = s_c.d_matrix().kernel().sum(t_c.d_matrix().kernel())
    gamma = []
    for r in range(k):
        direction = [params.zero_fn()] * k
        direction[r] = params.one_fn()
        lift = _solve_in_subspace(ksum, direction, k)
        if lift is None:
            raise InvariantViolation(
                "parameter direction does not lift to the kernel sum"
            )
        gamma.append(lift[k])

    def nabla(r, fn):
        return differentiate(fn, params.coordinates[r]) + gamma[r] * fn

    w0 = pullback_tangent_form(s_c, inst.leg0.repr.omega)
    w1 = pullback_tangent_form(t_c, inst.leg1.repr.omega)
    for r in range(k):
        for s in range(r + 1, k):
            lhs = nabla(r, theta[s]) - nabla(s, theta[r])
            if lhs != w0.entries[r][s] - w1.entries[r][s]:
                raise InvariantViolation(
                    "symbolic connection-leg relation fails at "
                    f"slots ({r},{s})"
                )
    return "symbolic connection-leg relation holds"


def _solve_in_subspace(space, tangent_dir, n_tangent):
    """A vector of the subspace whose first block matches the given tangent
    direction; None when no such vector exists."""
    basis = space.vectors()
    if not basis:
        return None
    zero = space.zero
    mat = Matrix(
        [[basis[c][r] for c in range(len(basis))] for r in range(n_tangent)],
        cols=len(basis),
        zero=zero,
    )
    from .linalg import solve_particular

    coeffs = solve_particular(mat, list(tangent_dir))
    if coeffs is None:
        return None
    out = [zero] * space.ambient_dim
    for cf, b in zip(coeffs, basis):
        for i in range(space.ambient_dim):
            out[i] = out[i] + cf * b[i]
    return out
