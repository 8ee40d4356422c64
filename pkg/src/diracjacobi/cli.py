"""Command line front end.

Loads instance documents, checks structures for involutivity, runs the three
dual-pair verifications on shared sample points, composes and pulls back
pairs, squeezes random fibers through their linear self-dual model, and
replays the frozen worked examples.

Exit codes: 0 when every requested check passes, 1 when a verdict fails or
the math refuses the input (non-closed forms, rank jumps, failed
transversality), 2 when the document itself is malformed.
"""

from __future__ import annotations

import functools
import json

import click

from fractions import Fraction

from . import io, oracles
from .errors import DiracJacobiError, SchemaError
from .fiber import DIRAC, JACOBI, FiberModel
from .pairs import (
    compose,
    leaf_correspondence_report,
    normal_form_check,
    self_dual_linear_model,
    transverse_pullback,
    verify_characterization_I,
    verify_characterization_II,
    verify_weak_dual_pair,
)
from .sampling import as_rng, random_lagrangian
from .structures import check_involutive

STRICT_MINIMUM = 5


def _guarded(fn):
    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SchemaError as exc:
            click.echo(f"document error: {exc}", err=True)
            raise SystemExit(2)
        except DiracJacobiError as exc:
            click.echo(f"rejected: {exc}", err=True)
            raise SystemExit(1)

    return inner


def _load_document(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}")
    return io.load(data)


def _emit(payload, report):
    if report == "json":
        click.echo(io.dumps_canonical(payload), nl=False)
    else:
        click.echo(io.render_text(payload), nl=False)


def _pick(table, key, section):
    if key not in table:
        raise SchemaError(f"unknown key {key!r}", f"/{section}")
    return table[key]


def _verify_instance(inst, points):
    reps = (
        verify_weak_dual_pair(inst, points),
        verify_characterization_I(inst, points),
        verify_characterization_II(inst, points),
    )
    payload = {rep.kind: io.verification_report_to_json(rep) for rep in reps}
    return all(rep.overall for rep in reps), payload


input_option = click.option(
    "--input",
    "path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="instance document to load",
)
report_option = click.option(
    "--report",
    type=click.Choice(["text", "json"]),
    default="text",
    show_default=True,
    help="output format; json is canonical and byte-stable",
)
samples_option = click.option(
    "--samples", type=int, default=None, help="override the sample count"
)
seed_option = click.option(
    "--seed", type=int, default=None, help="override the sampling seed"
)


@click.group()
def main():
    """Exact checks for omni-fiber structures and weak dual pairs."""


@main.command("check-structure")
@input_option
@click.option("--key", default=None, help="check one structure instead of all")
@report_option
@_guarded
def check_structure(path, key, report):
    """Run the involutivity criterion on structures in a document."""
    doc = _load_document(path)
    if key is not None:
        _pick(doc.structures, key, "structures")
        keys = [key]
    else:
        keys = sorted(doc.structures)
    results = {}
    ok = True
    for k in keys:
        rep = check_involutive(doc.structures[k])
        results[k] = {
            "holds": rep.holds,
            "criterion": rep.criterion,
            "witness": rep.witness,
        }
        ok = ok and rep.holds
    _emit({"command": "check-structure", "overall": ok, "results": results}, report)
    raise SystemExit(0 if ok else 1)


@main.command("verify-pair")
@input_option
@click.option("--key", default=None, help="verify one instance instead of all")
@samples_option
@seed_option
@click.option(
    "--strict",
    is_flag=True,
    help=f"fail any instance sampled at fewer than {STRICT_MINIMUM} points",
)
@report_option
@_guarded
def verify_pair(path, key, samples, seed, strict, report):
    """Run all three dual-pair verifications on shared sample points."""
    doc = _load_document(path)
    if key is not None:
        _pick(doc.instances, key, "instances")
        keys = [key]
    else:
        keys = sorted(doc.instances)
    results = {}
    ok = True
    for k in keys:
        points = doc.sample_points_for(k, count=samples, seed=seed)
        verified, payload = _verify_instance(doc.instances[k], points)
        notes = []
        if strict and len(points) < STRICT_MINIMUM:
            verified = False
            notes.append(
                f"strict mode: only {len(points)} sample points, "
                f"need {STRICT_MINIMUM}"
            )
        entry = {"verified": verified, "reports": payload}
        if notes:
            entry["notes"] = notes
        if k in doc.expectations:
            entry["expected"] = doc.expectations[k]
        results[k] = entry
        ok = ok and verified
    _emit({"command": "verify-pair", "overall": ok, "results": results}, report)
    raise SystemExit(0 if ok else 1)


def _instance_document(mode, inst, key):
    charts = {"apex": inst.apex}
    for label, spec in (("leg0", inst.leg0), ("leg1", inst.leg1)):
        if not any(c is spec.chart or c == spec.chart for c in charts.values()):
            charts[f"{label}-chart"] = spec.chart
    return io.document_from_objects(
        mode,
        charts=charts,
        structures={"leg0": inst.leg0, "leg1": inst.leg1},
        morphisms={"s": inst.s_map, "t": inst.t_map},
        instances={key: inst},
    )


@main.command("compose")
@input_option
@click.option("--first", required=True, help="pair whose second leg is shared")
@click.option("--second", required=True, help="pair whose first leg is shared")
@click.option(
    "--output",
    "out_path",
    default=None,
    type=click.Path(dir_okay=False, writable=True),
    help="write the composed instance as a document",
)
@samples_option
@seed_option
@report_option
@_guarded
def compose_cmd(path, first, second, out_path, samples, seed, report):
    """Compose two instances over their shared middle leg and verify."""
    doc = _load_document(path)
    p01 = _pick(doc.instances, first, "instances")
    p12 = _pick(doc.instances, second, "instances")
    out = compose(p01, p12)
    points = out.sample_points(samples or 5, seed=seed or 0)
    verified, payload = _verify_instance(out, points)
    if out_path is not None:
        newdoc = _instance_document(doc.mode, out, "composed")
        with open(out_path, "wb") as fh:
            fh.write(io.serialize(newdoc))
    _emit(
        {
            "command": "compose",
            "apex": list(out.apex.coordinates),
            "overall": verified,
            "reports": payload,
        },
        report,
    )
    raise SystemExit(0 if verified else 1)


@main.command("pullback")
@input_option
@click.option("--key", required=True, help="instance to pull back")
@click.option("--phi0", required=True, help="morphism into the first leg base")
@click.option("--phi1", required=True, help="morphism into the second leg base")
@click.option(
    "--output",
    "out_path",
    default=None,
    type=click.Path(dir_okay=False, writable=True),
    help="write the pulled-back instance as a document",
)
@samples_option
@seed_option
@report_option
@_guarded
def pullback(path, key, phi0, phi1, out_path, samples, seed, report):
    """Pull an instance back along transversal maps into its leg bases."""
    doc = _load_document(path)
    inst = _pick(doc.instances, key, "instances")
    m0 = _pick(doc.morphisms, phi0, "morphisms")
    m1 = _pick(doc.morphisms, phi1, "morphisms")
    out = transverse_pullback(inst, m0, m1, seed=seed or 0)
    points = out.sample_points(samples or 5, seed=seed or 0)
    verified, payload = _verify_instance(out, points)
    if out_path is not None:
        newdoc = _instance_document(doc.mode, out, "pulled-back")
        with open(out_path, "wb") as fh:
            fh.write(io.serialize(newdoc))
    _emit(
        {
            "command": "pullback",
            "apex": list(out.apex.coordinates),
            "overall": verified,
            "reports": payload,
        },
        report,
    )
    raise SystemExit(0 if verified else 1)


@main.command("selfdual")
@click.option("--dim", type=int, default=2, show_default=True)
@click.option("--count", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--mode",
    type=click.Choice([JACOBI, DIRAC]),
    default=JACOBI,
    show_default=True,
)
@report_option
@_guarded
def selfdual(dim, count, seed, mode, report):
    """Verify the linear self-dual model of random fiber subspaces."""
    model = FiberModel(dim, mode)
    rng = as_rng(seed)
    verified = 0
    full_contact = 0
    for _ in range(count):
        lagr = random_lagrangian(model, rng)
        sd, rep = self_dual_linear_model(lagr)
        if rep.overall:
            verified += 1
        if sd.full_contact:
            full_contact += 1
    ok = verified == count
    _emit(
        {
            "command": "selfdual",
            "mode": mode,
            "dim": dim,
            "count": count,
            "verified": verified,
            "full_contact": full_contact,
            "overall": ok,
        },
        report,
    )
    raise SystemExit(0 if ok else 1)


@main.command("leafcorr")
@input_option
@click.option("--key", default=None, help="one instance instead of all")
@click.option(
    "--symbolic",
    default=None,
    help="morphism key for the symbolic relation check; defaults to the "
    "instance's declared leaf parametrization, if any",
)
@samples_option
@seed_option
@report_option
@_guarded
def leafcorr(path, key, symbolic, samples, seed, report):
    """Match leaf types and leaf forms across the two legs of each pair."""
    doc = _load_document(path)
    if key is not None:
        _pick(doc.instances, key, "instances")
        keys = [key]
    else:
        keys = sorted(doc.instances)
    results = {}
    ok = True
    for k in keys:
        points = doc.sample_points_for(k, count=samples, seed=seed)
        if symbolic is not None:
            sym = _pick(doc.morphisms, symbolic, "morphisms")
        elif k in doc.leaf_maps:
            sym = doc.morphisms[doc.leaf_maps[k]]
        else:
            sym = None
        rep = leaf_correspondence_report(
            doc.instances[k], points, symbolic=sym
        )
        results[k] = io.verification_report_to_json(rep)
        ok = ok and rep.overall
    _emit({"command": "leafcorr", "overall": ok, "results": results}, report)
    raise SystemExit(0 if ok else 1)


def _explicit_points(doc, chart):
    """Document sample points parsed against a chart, or None if unset."""
    if "points" not in doc.samples:
        return None
    out = []
    for i, pt in enumerate(doc.samples["points"]):
        try:
            parsed = {name: Fraction(str(v)) for name, v in sorted(pt.items())}
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(str(exc), f"/samples/points/{i}")
        if tuple(sorted(parsed)) != tuple(sorted(chart.coordinates)):
            raise SchemaError(
                "point names must match the chart", f"/samples/points/{i}"
            )
        out.append(parsed)
    return out


@main.command("normal-form")
@input_option
@seed_option
@report_option
@_guarded
def normal_form_cmd(path, seed, report):
    """Check the recorded transversal normal-form witness of a document."""
    doc = _load_document(path)
    if "normal_form" not in doc.operations:
        raise SchemaError("document has no normal_form operation", "/operations")
    op = doc.operations["normal_form"]
    spec = doc.structures[op["structure"]]
    transversal = doc.morphisms[op["transversal"]]
    candidate = doc.morphisms[op["candidate"]]
    points = _explicit_points(doc, candidate.source)
    rep = normal_form_check(
        spec, transversal, candidate, op["b_form"], points, seed=seed or 0
    )
    _emit(
        {
            "command": "normal-form",
            "overall": rep.overall,
            "report": io.verification_report_to_json(rep),
        },
        report,
    )
    raise SystemExit(0 if rep.overall else 1)


@main.command("oracle")
@click.option("--list", "list_only", is_flag=True, help="list oracle names")
@click.option("--name", default=None, help="replay a single oracle")
@report_option
@_guarded
def oracle_cmd(list_only, name, report):
    """Replay the frozen worked examples and compare with expectations."""
    if list_only:
        for n in sorted(oracles.ORACLES):
            click.echo(n)
        raise SystemExit(0)
    expected = oracles.expected_results()
    if name is not None:
        if name not in oracles.ORACLES:
            raise SchemaError(f"unknown oracle {name!r}")
        observed = {name: oracles.run_one_safely(name)}
        expected = {name: expected.get(name)}
        diffs = {
            n: {"expected": expected[n], "observed": observed[n]}
            for n in observed
            if observed[n] != expected[n]
        }
        ok = not diffs
        checked = 1
    else:
        ok, diffs = oracles.compare_to_expected(expected)
        checked = len(oracles.ORACLES)
    payload = {"command": "oracle", "checked": checked, "overall": ok}
    if diffs:
        payload["mismatches"] = diffs
    _emit(payload, report)
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
