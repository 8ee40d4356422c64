"""Regenerate the shipped document corpus under documents/.

Each document is built from in-memory objects and serialized canonically, so
rerunning this script must be a no-op unless the library changed. Verified
instances carry expect.overall = true, the designed failures carry false; the
test suite and the CLI examples in the README rely on both.
"""

from __future__ import annotations

import os
import sys
from fractions import Fraction

from diracjacobi import io
from diracjacobi.calculus import Chart, FormField, contact_to_atiyah, der_differential
from diracjacobi.fiber import DIRAC, JACOBI
from diracjacobi.linalg import Matrix
from diracjacobi.pairs import (
    DualPairInstance,
    compose,
    flat_self_dual_pair,
    product_pair,
    transverse_pullback,
    verify_weak_dual_pair,
)
from diracjacobi.structures import (
    LBMorphismSpec,
    coordinate_projection,
    graph_bider_spec,
    graph_form_spec,
    identity_morphism,
    lcps_spec,
    zero_structure,
)

OUT_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "documents")


def write(name, doc):
    path = os.path.join(OUT_DIR, name)
    with open(path, "wb") as fh:
        fh.write(io.serialize(doc))
    verdicts = []
    for key, inst in doc.instances.items():
        points = doc.sample_points_for(key)
        verdicts.append(f"{key}={verify_weak_dual_pair(inst, points).overall}")
    print(f"{name}: {', '.join(verdicts) if verdicts else 'no instances'}")


def precontact_legs():
    ch0 = Chart(("x1", "x2"))
    ch1 = Chart(("y1", "y2"))
    w0 = der_differential(
        FormField(ch0, JACOBI, 1, {(0,): ch0.coordinate_fn("x2")})
    )
    w1 = der_differential(
        FormField(ch1, JACOBI, 1, {(1,): ch1.coordinate_fn("y1")})
    )
    return graph_form_spec(ch0, w0), graph_form_spec(ch1, w1)


def contact_leg(suffix):
    ch = Chart((f"q{suffix}", f"u{suffix}", f"p{suffix}"))
    theta = (
        ch.zero_fn() - ch.coordinate_fn(f"p{suffix}"),
        ch.one_fn(),
        ch.zero_fn(),
    )
    return graph_form_spec(ch, contact_to_atiyah(ch, theta))


def dirac_graph_legs():
    ch0 = Chart(("x1", "x2"))
    ch1 = Chart(("y1", "y2"))
    w0 = FormField(ch0, DIRAC, 2, {(0, 1): ch0.one_fn()})
    y1 = ch1.coordinate_fn("y1")
    w1 = FormField(ch1, DIRAC, 2, {(0, 1): ch1.one_fn() + y1 * y1})
    return graph_form_spec(ch0, w0), graph_form_spec(ch1, w1)


def product_precontact():
    s0, s1 = precontact_legs()
    inst = product_pair(s0, s1)
    line = Chart(("a",))
    slice_map = LBMorphismSpec(
        line,
        s0.chart,
        (line.coordinate_fn("a"), line.zero_fn()),
        line.one_fn(),
        JACOBI,
    )
    return io.document_from_objects(
        JACOBI,
        charts={
            "apex": inst.apex,
            "m0": s0.chart,
            "m1": s1.chart,
            "line": line,
        },
        structures={"leg0": s0, "leg1": s1},
        morphisms={
            "s": inst.s_map,
            "t": inst.t_map,
            "slice": slice_map,
            "ident1": identity_morphism(s1.chart, JACOBI),
        },
        instances={"product": inst},
        expectations={"product": {"overall": True}},
        samples={"count": 4, "seed": 2},
        operations={
            "transverse": {
                "instance": "product",
                "phi0": "slice",
                "phi1": "ident1",
            }
        },
    )


def product_contact():
    s0, s1 = contact_leg(0), contact_leg(1)
    inst = product_pair(s0, s1)
    return io.document_from_objects(
        JACOBI,
        charts={"apex": inst.apex, "m0": s0.chart, "m1": s1.chart},
        structures={"leg0": s0, "leg1": s1},
        morphisms={"s": inst.s_map, "t": inst.t_map},
        instances={"contact-product": inst},
        expectations={"contact-product": {"overall": True}},
        samples={"count": 3, "seed": 5},
    )


def product_dirac():
    s0, s1 = dirac_graph_legs()
    inst = product_pair(s0, s1)
    return io.document_from_objects(
        DIRAC,
        charts={"apex": inst.apex, "m0": s0.chart, "m1": s1.chart},
        structures={"leg0": s0, "leg1": s1},
        morphisms={
            "s": inst.s_map,
            "t": inst.t_map,
            "apex-identity": identity_morphism(inst.apex, DIRAC),
        },
        instances={"product": inst},
        leaf_maps={"product": "apex-identity"},
        expectations={"product": {"overall": True}},
        samples={"count": 4, "seed": 3},
    )


def selfdual_lcps():
    ch = Chart(("x1", "x2"))
    zero = ch.zero_fn()
    w12 = ch.one_fn() + ch.coordinate_fn("x1")
    omega = Matrix([[zero, w12], [zero - w12, zero]], cols=2, zero=zero)
    leg = lcps_spec(ch, (zero, zero), omega)
    inst = flat_self_dual_pair(leg)
    return io.document_from_objects(
        JACOBI,
        charts={"apex": inst.apex, "m": ch},
        structures={"leg": leg},
        morphisms={
            "s": inst.s_map,
            "t": inst.t_map,
            "apex-identity": identity_morphism(inst.apex, JACOBI),
        },
        instances={"selfdual": inst},
        leaf_maps={"selfdual": "apex-identity"},
        expectations={"selfdual": {"overall": True}},
        samples={"count": 4, "seed": 1},
    )


def selfdual_zero_lcps():
    ch = Chart(("x1", "x2"))
    zero = ch.zero_fn()
    leg = lcps_spec(ch, (zero, zero), Matrix.zero_matrix(2, 2, zero=zero))
    inst = flat_self_dual_pair(leg)
    return io.document_from_objects(
        JACOBI,
        charts={"apex": inst.apex, "m": ch},
        structures={"leg": leg},
        morphisms={
            "s": inst.s_map,
            "t": inst.t_map,
            "apex-identity": identity_morphism(inst.apex, JACOBI),
        },
        instances={"selfdual": inst},
        leaf_maps={"selfdual": "apex-identity"},
        expectations={"selfdual": {"overall": True}},
        samples={"count": 4, "seed": 4},
    )


def selfdual_dirac():
    _, s1 = dirac_graph_legs()
    inst = flat_self_dual_pair(s1)
    return io.document_from_objects(
        DIRAC,
        charts={"apex": inst.apex, "m": s1.chart},
        structures={"leg": s1},
        morphisms={
            "s": inst.s_map,
            "t": inst.t_map,
            "apex-identity": identity_morphism(inst.apex, DIRAC),
        },
        instances={"selfdual": inst},
        leaf_maps={"selfdual": "apex-identity"},
        expectations={"selfdual": {"overall": True}},
        samples={"count": 4, "seed": 6},
    )


def compose_input():
    s0, s1 = dirac_graph_legs()
    left = product_pair(s0, s1)
    right = flat_self_dual_pair(s1)
    return io.document_from_objects(
        DIRAC,
        charts={
            "apex-left": left.apex,
            "apex-right": right.apex,
            "m0": s0.chart,
            "m1": s1.chart,
        },
        structures={"s0": s0, "s1": s1},
        morphisms={
            "left-s": left.s_map,
            "left-t": left.t_map,
            "right-s": right.s_map,
            "right-t": right.t_map,
        },
        instances={"left": left, "right": right},
        expectations={"left": {"overall": True}, "right": {"overall": True}},
        samples={"count": 3, "seed": 7},
        operations={"compose": {"first": "left", "second": "right"}},
    )


def composed_mirror():
    s0, s1 = precontact_legs()
    ch2 = Chart(("z1", "z2"))
    w2 = der_differential(
        FormField(ch2, JACOBI, 1, {(0,): ch2.coordinate_fn("z2")})
    )
    s0z = graph_form_spec(ch2, w2)
    out = compose(product_pair(s0, s1, extra_name="t"), product_pair(s1, s0z, extra_name="v"))
    return io.document_from_objects(
        JACOBI,
        charts={"apex": out.apex, "m0": s0.chart, "m2": ch2},
        structures={"leg0": out.leg0, "leg1": out.leg1},
        morphisms={"s": out.s_map, "t": out.t_map},
        instances={"composed": out},
        expectations={"composed": {"overall": True}},
        samples={"count": 3, "seed": 4},
    )


def pullback_slice():
    s0, s1 = precontact_legs()
    inst = product_pair(s0, s1)
    line = Chart(("a",))
    phi0 = LBMorphismSpec(
        line,
        s0.chart,
        (line.coordinate_fn("a"), line.zero_fn()),
        line.one_fn(),
        JACOBI,
    )
    out = transverse_pullback(inst, phi0, identity_morphism(s1.chart, JACOBI), seed=3)
    return io.document_from_objects(
        JACOBI,
        charts={"apex": out.apex, "m0": out.leg0.chart, "m1": out.leg1.chart},
        structures={"leg0": out.leg0, "leg1": out.leg1},
        morphisms={"s": out.s_map, "t": out.t_map},
        instances={"pulled-back": out},
        expectations={"pulled-back": {"overall": True}},
        samples={"count": 4, "seed": 9},
    )


def normal_form():
    m = Chart(("a", "b"))
    eta = FormField(m, JACOBI, 1, {(0,): m.coordinate_fn("b")})
    spec = graph_form_spec(m, der_differential(eta))
    line = Chart(("u",))
    transversal = LBMorphismSpec(
        line, m, (line.coordinate_fn("u"), line.zero_fn()), line.one_fn(), JACOBI
    )
    nu = Chart(("u", "w"))
    candidate = LBMorphismSpec(
        nu, m, (nu.coordinate_fn("u"), nu.coordinate_fn("w")), nu.one_fn(), JACOBI
    )
    b_form = FormField(
        nu, JACOBI, 2, {(0, 1): nu.one_fn(), (0, 2): nu.coordinate_fn("w")}
    )
    return io.document_from_objects(
        JACOBI,
        charts={"m": m, "line": line, "nu": nu},
        structures={"graph": spec},
        morphisms={"transversal": transversal, "candidate": candidate},
        samples={
            "points": [
                {"u": "1", "w": "2"},
                {"u": "-1/2", "w": "3"},
            ]
        },
        operations={
            "normal_form": {
                "structure": "graph",
                "transversal": "transversal",
                "candidate": "candidate",
                "b_form": b_form,
            }
        },
    )


def failure_broken_orthogonality():
    s0, s1 = precontact_legs()
    template = product_pair(s0, s1)
    apex = template.apex
    slot = apex.coordinates.index("y1")
    bump = der_differential(
        FormField(apex, JACOBI, 1, {(slot,): apex.coordinate_fn("x1")})
    )
    inst = DualPairInstance(
        apex,
        JACOBI,
        template.varpi + bump,
        template.leg0,
        template.leg1,
        template.s_map,
        template.t_map,
    )
    return io.document_from_objects(
        JACOBI,
        charts={"apex": apex, "m0": s0.chart, "m1": s1.chart},
        structures={"leg0": s0, "leg1": s1},
        morphisms={"s": inst.s_map, "t": inst.t_map},
        instances={"broken": inst},
        expectations={"broken": {"overall": False}},
        samples={"count": 3, "seed": 2},
    )


def failure_zero_form():
    s0, s1 = precontact_legs()
    template = product_pair(s0, s1)
    apex = template.apex
    inst = DualPairInstance(
        apex,
        JACOBI,
        FormField(apex, JACOBI, 2, {}),
        template.leg0,
        template.leg1,
        template.s_map,
        template.t_map,
    )
    return io.document_from_objects(
        JACOBI,
        charts={"apex": apex, "m0": s0.chart, "m1": s1.chart},
        structures={"leg0": s0, "leg1": s1},
        morphisms={"s": inst.s_map, "t": inst.t_map},
        instances={"zero-form": inst},
        expectations={"zero-form": {"overall": False}},
        samples={"count": 3, "seed": 2},
    )


def failure_undersized_apex():
    ch0 = Chart(("x1", "x2"))
    ch1 = Chart(("y1", "y2"))
    apex = Chart(("x1", "x2", "y1", "y2"))
    leg0 = zero_structure(ch0, JACOBI)
    leg1 = zero_structure(ch1, JACOBI)
    inst = DualPairInstance(
        apex,
        JACOBI,
        FormField(apex, JACOBI, 2, {}),
        leg0,
        leg1,
        coordinate_projection(apex, ch0, mode=JACOBI),
        coordinate_projection(apex, ch1, mode=JACOBI),
    )
    return io.document_from_objects(
        JACOBI,
        charts={"apex": apex, "m0": ch0, "m1": ch1},
        structures={"leg0": leg0, "leg1": leg1},
        morphisms={"s": inst.s_map, "t": inst.t_map},
        instances={"undersized": inst},
        expectations={"undersized": {"overall": False}},
        samples={"count": 3, "seed": 1},
    )


BUILDERS = {
    "product-precontact.json": product_precontact,
    "product-contact.json": product_contact,
    "product-dirac.json": product_dirac,
    "selfdual-lcps.json": selfdual_lcps,
    "selfdual-zero-lcps.json": selfdual_zero_lcps,
    "selfdual-dirac.json": selfdual_dirac,
    "compose-input.json": compose_input,
    "composed-mirror.json": composed_mirror,
    "pullback-slice.json": pullback_slice,
    "normal-form.json": normal_form,
    "failure-broken-orthogonality.json": failure_broken_orthogonality,
    "failure-zero-form.json": failure_zero_form,
    "failure-undersized-apex.json": failure_undersized_apex,
}


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    picked = sys.argv[1:] or sorted(BUILDERS)
    for name in picked:
        write(name, BUILDERS[name]())


if __name__ == "__main__":
    main()
