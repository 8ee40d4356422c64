"""JSON interchange and deterministic reports.

Documents are a keyed object graph (format_version 1):

    {
      "format_version": 1,
      "mode": "jacobi" | "dirac",
      "charts":     {key: ["x1", "x2", ...]},
      "structures": {key: {"kind": ..., "chart": key, ...}},
      "morphisms":  {key: {"source": key, "target": key,
                           "components": [expr, ...], "factor": expr}},
      "instances":  {key: {"apex": key, "varpi": form, "leg0": key,
                           "leg1": key, "s": key, "t": key,
                           "leaf_parametrization": key?, "expect": {...}?}},
      "samples":    {"seed": int, "count": int} | {"points": [{name: "p/q"}]},
      "operations": {"compose": {...}, "transverse": {...},
                     "normal_form": {...}}
    }

Rational functions travel as recursive expression trees built from
single-operator objects: {"const": "p/q"}, {"var": name}, {"add": [...]},
{"mul": [...]}, {"neg": t}, {"pow": [t, n]}, {"div": [t, t]}. Forms list
their strictly increasing frame-index components, matrices their rows, both
in the fixed frame order (coordinate directions first, unit last).

Serialization is canonical: components sorted, monomials in exponent order,
keys sorted, so loading a shipped document and re-serializing reproduces it
byte for byte. Reports are plain dicts rendered through the same canonical
dump, which makes them byte-identical across runs for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .calculus import Chart, FormField
from .errors import (
    DiracJacobiError,
    InvariantViolation,
    SchemaError,
    UnresolvedReference,
)
from .fiber import DIRAC, JACOBI
from .linalg import Matrix
from .pairs import DualPairInstance
from .structures import (
    FrameRepr,
    GraphBider,
    GraphForm,
    LBMorphismSpec,
    Lcps,
    StructureSpec,
)

FORMAT_VERSION = 1
MODES = (JACOBI, DIRAC)


# ---------------------------------------------------------------------------
# expression trees
# ---------------------------------------------------------------------------

def _fraction_from_text(text, path):
    if not isinstance(text, str) and not isinstance(text, int):
        raise SchemaError("rational literal must be a string or integer", path)
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"bad rational literal {text!r}: {exc}", path)


def expr_to_fn(tree, chart, path="/expr"):
    """Parse a recursive expression tree into a rational function."""
    if not isinstance(tree, dict) or len(tree) != 1:
        raise SchemaError("expression node needs exactly one operator", path)
    ((op, arg),) = tree.items()
    if op == "const":
        return chart.constant_fn(_fraction_from_text(arg, path))
    if op == "var":
        if arg not in chart.coordinates:
            raise SchemaError(f"unknown coordinate {arg!r}", path)
        return chart.coordinate_fn(arg)
    if op in ("add", "mul"):
        if not isinstance(arg, list) or not arg:
            raise SchemaError(f"{op!r} needs a nonempty list", path)
        out = expr_to_fn(arg[0], chart, f"{path}/{op}/0")
        for i, sub in enumerate(arg[1:], start=1):
            nxt = expr_to_fn(sub, chart, f"{path}/{op}/{i}")
            out = out + nxt if op == "add" else out * nxt
        return out
    if op == "neg":
        return chart.zero_fn() - expr_to_fn(arg, chart, f"{path}/neg")
    if op == "pow":
        if not isinstance(arg, list) or len(arg) != 2:
            raise SchemaError("'pow' needs [base, exponent]", path)
        if not isinstance(arg[1], int) or arg[1] < 0:
            raise SchemaError("exponent must be a nonnegative integer", path)
        return expr_to_fn(arg[0], chart, f"{path}/pow/0") ** arg[1]
    if op == "div":
        if not isinstance(arg, list) or len(arg) != 2:
            raise SchemaError("'div' needs [numerator, denominator]", path)
        num = expr_to_fn(arg[0], chart, f"{path}/div/0")
        den = expr_to_fn(arg[1], chart, f"{path}/div/1")
        if den.is_zero():
            raise SchemaError("division by the zero function", path)
        return num / den
    raise SchemaError(f"unknown operator {op!r}", path)


def _monomial_expr(expo, coeff, names):
    factors = []
    if coeff != 1 or not any(expo):
        factors.append({"const": str(coeff)})
    for name, k in zip(names, expo):
        if k == 1:
            factors.append({"var": name})
        elif k > 1:
            factors.append({"pow": [{"var": name}, k]})
    if len(factors) == 1:
        return factors[0]
    return {"mul": factors}


def _poly_expr(poly, names):
    if not poly:
        return {"const": "0"}
    terms = [_monomial_expr(e, c, names) for e, c in sorted(poly.items())]
    if len(terms) == 1:
        return terms[0]
    return {"add": terms}


def fn_to_expr(fn):
    """Canonical expression tree: monomials in exponent order, a div node
    only for a genuine denominator."""
    num = _poly_expr(fn.num, fn.variables)
    if fn.is_polynomial():
        return num
    return {"div": [num, _poly_expr(fn.den, fn.variables)]}


# ---------------------------------------------------------------------------
# forms and matrices
# ---------------------------------------------------------------------------

def form_to_json(form):
    comps = {}
    for idx, fn in sorted(form.components.items()):
        comps[",".join(str(i) for i in idx)] = fn_to_expr(fn)
    return {"degree": form.degree, "components": comps}


def form_from_json(obj, chart, mode, path):
    if not isinstance(obj, dict):
        raise SchemaError("form must be an object", path)
    degree = obj.get("degree")
    if not isinstance(degree, int) or degree < 0:
        raise SchemaError("form degree must be a nonnegative integer", path)
    comps_obj = obj.get("components", {})
    if not isinstance(comps_obj, dict):
        raise SchemaError("form components must be an object", path)
    frame = chart.frame_dim(mode)
    comps = {}
    for key, tree in comps_obj.items():
        kpath = f"{path}/components/{key}"
        try:
            idx = tuple(int(s) for s in key.split(","))
        except ValueError:
            raise SchemaError("component key must be comma-joined indices", kpath)
        if len(idx) != degree:
            raise SchemaError(f"index count differs from degree {degree}", kpath)
        if any(i < 0 or i >= frame for i in idx):
            raise SchemaError(f"frame index out of range 0..{frame - 1}", kpath)
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise SchemaError("indices must be strictly increasing", kpath)
        fn = expr_to_fn(tree, chart, kpath)
        if not fn.is_zero():
            comps[idx] = fn
    try:
        return FormField(chart, mode, degree, comps)
    except DiracJacobiError as exc:
        raise InvariantViolation(str(exc), path)


def matrix_to_json(mat):
    return {"rows": [[fn_to_expr(e) for e in row] for row in mat.entries]}


def matrix_from_json(obj, chart, path, rows=None, cols=None):
    if not isinstance(obj, dict) or not isinstance(obj.get("rows"), list):
        raise SchemaError("matrix must be {'rows': [[...], ...]}", path)
    entries = []
    for i, row in enumerate(obj["rows"]):
        if not isinstance(row, list):
            raise SchemaError("matrix row must be a list", f"{path}/rows/{i}")
        entries.append(
            [expr_to_fn(t, chart, f"{path}/rows/{i}/{j}") for j, t in enumerate(row)]
        )
    if rows is not None and len(entries) != rows:
        raise SchemaError(f"expected {rows} rows", path)
    if not entries:
        raise SchemaError("matrix needs at least one row", path)
    width = len(entries[0])
    if any(len(r) != width for r in entries):
        raise SchemaError("ragged matrix rows", path)
    if cols is not None and width != cols:
        raise SchemaError(f"expected {cols} columns", path)
    return Matrix(entries, cols=width, zero=chart.zero_fn())


# ---------------------------------------------------------------------------
# structures and morphisms
# ---------------------------------------------------------------------------

def structure_to_json(spec, chart_key):
    r = spec.repr
    if isinstance(r, GraphForm):
        return {
            "kind": "graph-form",
            "chart": chart_key,
            "form": form_to_json(r.form),
        }
    if isinstance(r, GraphBider):
        return {
            "kind": "graph-bider",
            "chart": chart_key,
            "matrix": matrix_to_json(r.matrix),
        }
    if isinstance(r, Lcps):
        return {
            "kind": "lcps",
            "chart": chart_key,
            "gamma": [fn_to_expr(g) for g in r.gamma],
            "omega": matrix_to_json(r.omega),
        }
    return {
        "kind": "frame",
        "chart": chart_key,
        "rows": [[fn_to_expr(e) for e in row] for row in r.rows],
    }


def structure_from_json(obj, charts, mode, path):
    if not isinstance(obj, dict):
        raise SchemaError("structure must be an object", path)
    chart_key = obj.get("chart")
    if chart_key not in charts:
        raise UnresolvedReference(
            f"unknown chart {chart_key!r}", f"{path}/chart"
        )
    chart = charts[chart_key]
    kind = obj.get("kind")
    d = chart.frame_dim(mode)
    try:
        if kind == "graph-form":
            form = form_from_json(obj.get("form"), chart, mode, f"{path}/form")
            if form.degree != 2:
                raise SchemaError("graph form must have degree 2", f"{path}/form")
            spec = StructureSpec(chart, mode, GraphForm(form))
        elif kind == "graph-bider":
            mat = matrix_from_json(
                obj.get("matrix"), chart, f"{path}/matrix", rows=d, cols=d
            )
            spec = StructureSpec(chart, mode, GraphBider(mat))
        elif kind == "lcps":
            gamma_obj = obj.get("gamma")
            if not isinstance(gamma_obj, list):
                raise SchemaError("lcps gamma must be a list", f"{path}/gamma")
            gamma = tuple(
                expr_to_fn(t, chart, f"{path}/gamma/{i}")
                for i, t in enumerate(gamma_obj)
            )
            omega = matrix_from_json(
                obj.get("omega"),
                chart,
                f"{path}/omega",
                rows=chart.dim,
                cols=chart.dim,
            )
            spec = StructureSpec(chart, mode, Lcps(gamma, omega))
        elif kind == "frame":
            rows_obj = obj.get("rows")
            if not isinstance(rows_obj, list):
                raise SchemaError("frame rows must be a list", f"{path}/rows")
            rows = tuple(
                tuple(
                    expr_to_fn(t, chart, f"{path}/rows/{i}/{j}")
                    for j, t in enumerate(row)
                )
                for i, row in enumerate(rows_obj)
            )
            spec = StructureSpec(chart, mode, FrameRepr(rows))
        else:
            raise SchemaError(f"unknown structure kind {kind!r}", f"{path}/kind")
        # deep invariant check: the rows must span a genuine Lagrangian
        spec.symbolic_fiber()
    except SchemaError:
        raise
    except DiracJacobiError as exc:
        raise InvariantViolation(str(exc), path)
    return spec


def morphism_to_json(morphism, source_key, target_key):
    return {
        "source": source_key,
        "target": target_key,
        "components": [fn_to_expr(c) for c in morphism.components],
        "factor": fn_to_expr(morphism.factor),
    }


def morphism_from_json(obj, charts, mode, path):
    if not isinstance(obj, dict):
        raise SchemaError("morphism must be an object", path)
    for end in ("source", "target"):
        if obj.get(end) not in charts:
            raise UnresolvedReference(
                f"unknown chart {obj.get(end)!r}", f"{path}/{end}"
            )
    source = charts[obj["source"]]
    target = charts[obj["target"]]
    comps_obj = obj.get("components")
    if not isinstance(comps_obj, list) or len(comps_obj) != target.dim:
        raise SchemaError(
            f"need {target.dim} components for the target chart",
            f"{path}/components",
        )
    components = tuple(
        expr_to_fn(t, source, f"{path}/components/{i}")
        for i, t in enumerate(comps_obj)
    )
    factor_obj = obj.get("factor", {"const": "1"})
    factor = expr_to_fn(factor_obj, source, f"{path}/factor")
    try:
        return LBMorphismSpec(source, target, components, factor, mode)
    except DiracJacobiError as exc:
        raise InvariantViolation(str(exc), path)


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------

@dataclass
class InstanceDocument:
    mode: str
    charts: dict
    structures: dict
    morphisms: dict
    instances: dict
    leaf_maps: dict = field(default_factory=dict)
    expectations: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    operations: dict = field(default_factory=dict)
    chart_keys: dict = field(default_factory=dict, repr=False)
    structure_keys: dict = field(default_factory=dict, repr=False)
    morphism_keys: dict = field(default_factory=dict, repr=False)
    instance_refs: dict = field(default_factory=dict, repr=False)

    def sample_points_for(self, instance_key, count=None, seed=None):
        """Resolve the document's sample policy for one instance."""
        inst = self.instances[instance_key]
        policy = self.samples
        if "points" in policy:
            out = []
            for i, pt in enumerate(policy["points"]):
                try:
                    parsed = {
                        name: Fraction(str(v)) for name, v in sorted(pt.items())
                    }
                except (ValueError, ZeroDivisionError) as exc:
                    raise SchemaError(str(exc), f"/samples/points/{i}")
                if tuple(sorted(parsed)) != tuple(sorted(inst.apex.coordinates)):
                    raise SchemaError(
                        "point names must match the apex chart",
                        f"/samples/points/{i}",
                    )
                out.append(parsed)
            return out
        return inst.sample_points(
            count=count or policy.get("count", 5),
            seed=seed if seed is not None else policy.get("seed", 0),
        )


def _key_of(obj, table, section):
    for k, v in table.items():
        if v is obj or v == obj:
            return k
    raise SchemaError(f"object has no key in {section!r}", f"/{section}")


def document_from_objects(
    mode,
    charts,
    structures,
    morphisms=None,
    instances=None,
    leaf_maps=None,
    expectations=None,
    samples=None,
    operations=None,
):
    """Assemble a document from keyed in-memory objects.

    Every apex chart, leg structure, and leg morphism of every instance must
    appear among the keyed objects, mirroring the references load() resolves.
    """
    charts = dict(charts)
    structures = dict(structures)
    morphisms = dict(morphisms or {})
    instances = dict(instances or {})
    instance_refs = {}
    for key, inst in instances.items():
        instance_refs[key] = {
            "apex": _key_of(inst.apex, charts, "charts"),
            "leg0": _key_of(inst.leg0, structures, "structures"),
            "leg1": _key_of(inst.leg1, structures, "structures"),
            "s": _key_of(inst.s_map, morphisms, "morphisms"),
            "t": _key_of(inst.t_map, morphisms, "morphisms"),
        }
    return InstanceDocument(
        mode=mode,
        charts=charts,
        structures=structures,
        morphisms=morphisms,
        instances=instances,
        leaf_maps=dict(leaf_maps or {}),
        expectations=dict(expectations or {}),
        samples=dict(samples or {}),
        operations=dict(operations or {}),
        chart_keys={id(c): k for k, c in charts.items()},
        structure_keys={id(s): k for k, s in structures.items()},
        morphism_keys={id(m): k for k, m in morphisms.items()},
        instance_refs=instance_refs,
    )


def _require_dict(obj, key, path, optional=False):
    val = obj.get(key, {} if optional else None)
    if val is None:
        raise SchemaError(f"missing section {key!r}", path)
    if not isinstance(val, dict):
        raise SchemaError(f"section {key!r} must be an object", path)
    return val


def load(data):
    """Parse and validate a document; bytes, str, or an already-parsed dict."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}", "/")
    if not isinstance(data, dict):
        raise SchemaError("document must be a JSON object", "/")
    if data.get("format_version") != FORMAT_VERSION:
        raise SchemaError(
            f"format_version must be {FORMAT_VERSION}", "/format_version"
        )
    mode = data.get("mode")
    if mode not in MODES:
        raise SchemaError(f"mode must be one of {MODES}", "/mode")

    charts = {}
    for key, names in _require_dict(data, "charts", "/charts").items():
        path = f"/charts/{key}"
        if not isinstance(names, list) or not all(
            isinstance(n, str) for n in names
        ):
            raise SchemaError("chart must be a list of names", path)
        try:
            charts[key] = Chart(tuple(names))
        except (DiracJacobiError, ValueError) as exc:
            raise InvariantViolation(str(exc), path)

    structures = {}
    for key, obj in _require_dict(data, "structures", "/structures").items():
        structures[key] = structure_from_json(
            obj, charts, mode, f"/structures/{key}"
        )

    morphisms = {}
    for key, obj in _require_dict(
        data, "morphisms", "/morphisms", optional=True
    ).items():
        morphisms[key] = morphism_from_json(
            obj, charts, mode, f"/morphisms/{key}"
        )

    instances = {}
    leaf_maps = {}
    expectations = {}
    instance_refs = {}
    for key, obj in _require_dict(
        data, "instances", "/instances", optional=True
    ).items():
        path = f"/instances/{key}"
        if not isinstance(obj, dict):
            raise SchemaError("instance must be an object", path)
        if obj.get("apex") not in charts:
            raise UnresolvedReference(
                f"unknown chart {obj.get('apex')!r}", f"{path}/apex"
            )
        apex = charts[obj["apex"]]
        refs = {"apex": obj["apex"]}
        for leg in ("leg0", "leg1"):
            if obj.get(leg) not in structures:
                raise UnresolvedReference(
                    f"unknown structure {obj.get(leg)!r}", f"{path}/{leg}"
                )
            refs[leg] = obj[leg]
        for mk in ("s", "t"):
            if obj.get(mk) not in morphisms:
                raise UnresolvedReference(
                    f"unknown morphism {obj.get(mk)!r}", f"{path}/{mk}"
                )
            refs[mk] = obj[mk]
        varpi = form_from_json(obj.get("varpi"), apex, mode, f"{path}/varpi")
        try:
            instances[key] = DualPairInstance(
                apex,
                mode,
                varpi,
                structures[obj["leg0"]],
                structures[obj["leg1"]],
                morphisms[obj["s"]],
                morphisms[obj["t"]],
            )
        except DiracJacobiError as exc:
            raise InvariantViolation(str(exc), path)
        leaf_key = obj.get("leaf_parametrization")
        if leaf_key is not None:
            if leaf_key not in morphisms:
                raise UnresolvedReference(
                    f"unknown morphism {leaf_key!r}",
                    f"{path}/leaf_parametrization",
                )
            leaf_maps[key] = leaf_key
        if "expect" in obj:
            expectations[key] = obj["expect"]
        instance_refs[key] = refs

    samples = data.get("samples", {})
    if not isinstance(samples, dict):
        raise SchemaError("samples must be an object", "/samples")
    raw_operations = data.get("operations", {})
    if not isinstance(raw_operations, dict):
        raise SchemaError("operations must be an object", "/operations")
    operations = {}
    for op_key, op in raw_operations.items():
        op_path = f"/operations/{op_key}"
        if not isinstance(op, dict):
            raise SchemaError("operation must be an object", op_path)
        if op_key == "compose":
            for end in ("first", "second"):
                if op.get(end) not in instances:
                    raise UnresolvedReference(
                        f"unknown instance {op.get(end)!r}", f"{op_path}/{end}"
                    )
            operations[op_key] = op
        elif op_key == "transverse":
            if op.get("instance") not in instances:
                raise UnresolvedReference(
                    f"unknown instance {op.get('instance')!r}",
                    f"{op_path}/instance",
                )
            for mk in ("phi0", "phi1"):
                if op.get(mk) not in morphisms:
                    raise UnresolvedReference(
                        f"unknown morphism {op.get(mk)!r}", f"{op_path}/{mk}"
                    )
            operations[op_key] = op
        elif op_key == "normal_form":
            if op.get("structure") not in structures:
                raise UnresolvedReference(
                    f"unknown structure {op.get('structure')!r}",
                    f"{op_path}/structure",
                )
            for mk in ("transversal", "candidate"):
                if op.get(mk) not in morphisms:
                    raise UnresolvedReference(
                        f"unknown morphism {op.get(mk)!r}", f"{op_path}/{mk}"
                    )
            # the shear form is parsed against the candidate source chart
            cand = morphisms[op["candidate"]]
            op = dict(op)
            op["b_form"] = form_from_json(
                op.get("b_form", {"degree": 2, "components": {}}),
                cand.source,
                mode,
                f"{op_path}/b_form",
            )
            operations[op_key] = op
        else:
            raise SchemaError(f"unknown operation {op_key!r}", op_path)

    doc = InstanceDocument(
        mode=mode,
        charts=charts,
        structures=structures,
        morphisms=morphisms,
        instances=instances,
        leaf_maps=leaf_maps,
        expectations=expectations,
        samples=samples,
        operations=operations,
        chart_keys={id(c): k for k, c in charts.items()},
        structure_keys={id(s): k for k, s in structures.items()},
        morphism_keys={id(m): k for k, m in morphisms.items()},
        instance_refs=instance_refs,
    )
    return doc


def document_to_json(doc):
    """Rebuild the JSON object graph from a loaded or constructed document."""
    def chart_key_of(chart):
        for k, c in doc.charts.items():
            if c == chart:
                return k
        raise SchemaError(f"chart {chart.coordinates} has no key", "/charts")

    out = {
        "format_version": FORMAT_VERSION,
        "mode": doc.mode,
        "charts": {k: list(c.coordinates) for k, c in doc.charts.items()},
        "structures": {
            k: structure_to_json(s, chart_key_of(s.chart))
            for k, s in doc.structures.items()
        },
    }
    if doc.morphisms:
        out["morphisms"] = {
            k: morphism_to_json(
                m, chart_key_of(m.source), chart_key_of(m.target)
            )
            for k, m in doc.morphisms.items()
        }
    if doc.instances:
        insts = {}
        for k, inst in doc.instances.items():
            refs = doc.instance_refs[k]
            obj = {
                "apex": refs["apex"],
                "varpi": form_to_json(inst.varpi),
                "leg0": refs["leg0"],
                "leg1": refs["leg1"],
                "s": refs["s"],
                "t": refs["t"],
            }
            if k in doc.leaf_maps:
                obj["leaf_parametrization"] = doc.leaf_maps[k]
            if k in doc.expectations:
                obj["expect"] = doc.expectations[k]
            insts[k] = obj
        out["instances"] = insts
    if doc.samples:
        out["samples"] = doc.samples
    if doc.operations:
        ops = {}
        for op_key, op in doc.operations.items():
            if op_key == "normal_form" and isinstance(
                op.get("b_form"), FormField
            ):
                op = dict(op)
                op["b_form"] = form_to_json(op["b_form"])
            ops[op_key] = op
        out["operations"] = ops
    return out


def serialize(doc):
    """Canonical bytes for a document: sorted keys, two-space indent."""
    return (
        json.dumps(document_to_json(doc), sort_keys=True, indent=2) + "\n"
    ).encode("utf-8")


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def condition_to_json(cond):
    out = {"name": cond.name, "holds": cond.holds}
    if cond.witness is not None:
        out["witness"] = cond.witness
    return out


def point_report_to_json(pr):
    return {
        "point": {name: value for name, value in pr.point},
        "overall": pr.overall,
        "results": [condition_to_json(c) for c in pr.results],
    }


def verification_report_to_json(rep):
    out = {
        "kind": rep.kind,
        "overall": rep.overall,
        "points": [point_report_to_json(pr) for pr in rep.reports],
    }
    if rep.notes:
        out["notes"] = list(rep.notes)
    return out


def dumps_canonical(obj):
    """Deterministic machine rendering, byte-identical for equal content."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def render_text(obj, indent=0):
    """Human-readable walk of a report object, deterministic ordering."""
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        scalar_keys = [
            k for k, v in sorted(obj.items())
            if not isinstance(v, (dict, list))
        ]
        if scalar_keys:
            rendered = ", ".join(f"{k}={obj[k]}" for k in scalar_keys)
            lines.append(f"{pad}{rendered}")
        for k, v in sorted(obj.items()):
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.extend(render_text(v, indent + 1))
    elif isinstance(obj, list):
        for item in obj:
            lines.extend(render_text(item, indent + 1))
    else:
        lines.append(f"{pad}{obj}")
    return lines if indent else "\n".join(lines) + "\n"
