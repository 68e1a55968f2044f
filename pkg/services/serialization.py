"""
JSON payloads in and out.

Input documents are parsed with the pydantic schemas of ``models.objects`` and
turned into engine objects; outputs are plain dicts canonicalized with RFC 8785
so that repeated runs are byte-identical. Keys of built-in objects (tuples and
trees) are written through ``render_key``.
"""

from __future__ import annotations

import io
import json
import sys
from typing import Any, Dict, List, Mapping

import rfc8785
from pydantic import TypeAdapter
from pydantic import ValidationError as PydanticValidationError
from rich.console import Console
from rich.pretty import Pretty
from rich.table import Table

from models.objects import (
    CogebraPayload,
    ComplexPayload,
    CoperadPayload,
    Document,
    Manifest,
    OperadPayload,
    SequencePayload,
    TreeModel,
    TruncationModel,
)
from services import trees
from services.algcog import CogebraOverOperad
from services.errors import MalformedInputError, ShapeMismatchError
from services.graded import ChainComplex, GradedMap, GradedSpace, Key, Vec
from services.keyed import LinearOp
from services.opcop import CurvedCoperad, FreeOperad, Operad
from services.qlinalg import ONE, ZERO, Rational, format_rational, parse_rational
from services.symseq import KeyedCotensor, SymSeq, Truncation
from services.trees import UNIT, Label, Tree
from telemetrics.logger import logger

DOCUMENT = TypeAdapter(Document)


# reading


def parse_document(text: str) -> Any:
    """A manifest or a single object payload; JSON and schema errors become MalformedInputError."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        logger.error(f"malformed JSON: {error.msg} at line {error.lineno}, column {error.colno}")
        raise MalformedInputError(error.msg, error.lineno, error.colno) from None
    return parse_payload(data)


def parse_payload(data: Any) -> Any:
    """Schema validation of an already decoded JSON value."""
    if isinstance(data, dict) and "kind" not in data and "format_version" in data:
        data = {**data, "kind": "manifest"}
    try:
        return DOCUMENT.validate_python(data)
    except PydanticValidationError as error:
        first = error.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        logger.error(f"payload rejected at {where}: {first['msg']}")
        raise MalformedInputError(f"{where}: {first['msg']}") from None


def read_document(path: str) -> Any:
    if path == "-":
        return parse_document(sys.stdin.read())
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_document(f.read())
    except OSError as error:
        raise MalformedInputError(f"cannot read {path}: {error.strerror}") from None


def select(document: Any, kind: str, name: str | None = None) -> Any:
    """The payload of the given kind: the document itself, or an object of a manifest."""
    if not isinstance(document, Manifest):
        if document.kind != kind:
            raise MalformedInputError(f"expected a {kind} payload, got a {document.kind}")
        return document
    if name is not None:
        payload = document.objects.get(name)
        if payload is None or payload.kind != kind:
            raise MalformedInputError(f"manifest has no {kind} named {name!r}")
        return payload
    for payload in document.objects.values():
        if payload.kind == kind:
            return payload
    raise MalformedInputError(f"manifest holds no {kind}")


def truncation_from_model(model: TruncationModel) -> Truncation:
    return Truncation(model.max_arity, tuple(model.degree_window), model.max_weight)


def _rational(text: str) -> Rational:
    try:
        return parse_rational(text)
    except ValueError as error:
        raise MalformedInputError(str(error)) from None


def _vector(sparse: Mapping[str, str], known: Mapping[str, Any], where: str) -> Vec:
    out: Vec = {}
    for key, coeff in sparse.items():
        if key not in known:
            raise MalformedInputError(f"{where}: unknown basis key {key!r}")
        value = _rational(coeff)
        if value:
            out[key] = value
    return out


def _keyed_op(table: Mapping[str, Mapping[str, str]], known: Mapping[str, Any], degree: int, where: str) -> LinearOp:
    values = {}
    for key, sparse in table.items():
        if key not in known:
            raise MalformedInputError(f"{where}: unknown basis key {key!r}")
        values[key] = _vector(sparse, known, f"{where}[{key}]")
    return LinearOp(lambda key: values.get(key, {}), degree, where)


def complex_from_payload(payload: ComplexPayload) -> ChainComplex:
    degrees = {b.key: b.degree for b in payload.basis}
    space = GradedSpace.from_keys(degrees, degrees.__getitem__)
    d = _keyed_op(payload.differential, degrees, -1, "differential")
    try:
        return ChainComplex(space, GradedMap.from_function(space, space, -1, d.on_basis))
    except ShapeMismatchError as error:
        raise MalformedInputError(f"{payload.name}: {error}") from None


def sequence_from_payload(payload: SequencePayload) -> SymSeq:
    seq = SymSeq.from_keys([(b.key, b.arity, b.degree, b.weight) for b in payload.basis])
    if payload.planar:
        return seq
    known = {b.key: b for b in payload.basis}
    actions: Dict[int, List[GradedMap]] = {}
    try:
        for arity_text, maps in payload.transpositions.items():
            n = int(arity_text)
            component = seq.component(n)
            actions[n] = []
            for i, table in enumerate(maps, start=1):
                sigma = _keyed_op(table, known, 0, f"σ{i} in arity {n}")
                actions[n].append(GradedMap.from_function(component, component, 0, sigma.on_basis))
        return SymSeq(seq.components, actions, planar=False, weights=seq.weights)
    except (ShapeMismatchError, ValueError) as error:
        raise MalformedInputError(f"{payload.name}: {error}") from None


def operad_from_payload(payload: OperadPayload, t: Truncation) -> Operad:
    known = {b.key: b for b in payload.basis}
    seq = SymSeq.from_keys([(b.key, b.arity, b.degree, b.weight) for b in payload.basis])
    table: Dict[tuple, Vec] = {}
    for entry in payload.compositions:
        for key in (entry.x, entry.y):
            if key not in known:
                raise MalformedInputError(f"compositions: unknown basis key {key!r}")
        table[(entry.x, entry.i, entry.y)] = _vector(entry.result, known, f"{entry.x}∘{entry.i}{entry.y}")
    d = _keyed_op(payload.differential, known, -1, "differential")
    return Operad(payload.name, seq, payload.unit, lambda x, i, y: table.get((x, i, y), {}), d, t)


def coperad_from_payload(payload: CoperadPayload, t: Truncation) -> CurvedCoperad:
    known = {b.key: b for b in payload.basis}
    seq = SymSeq.from_keys([(b.key, b.arity, b.degree, b.weight) for b in payload.basis])
    decomposition: Dict[str, Vec] = {}
    for entry in payload.decomposition:
        for key in (entry.z, entry.bottom, *entry.tops):
            if key not in known:
                raise MalformedInputError(f"decomposition: unknown basis key {key!r}")
        if len(entry.tops) != known[entry.bottom].arity:
            raise MalformedInputError(f"decomposition of {entry.z}: {entry.bottom} needs {known[entry.bottom].arity} tops")
        composite = (entry.bottom, tuple(entry.tops))
        vec = decomposition.setdefault(entry.z, {})
        vec[composite] = vec.get(composite, ZERO) + _rational(entry.coeff)
    counit = _vector(payload.counit or {payload.unit: "1"}, known, "counit")
    curvature = _vector(payload.curvature, known, "curvature")
    d = _keyed_op(payload.differential, known, -1, "differential")
    return CurvedCoperad(
        payload.name,
        seq,
        payload.unit,
        lambda z: decomposition.get(z, {}),
        lambda z: counit.get(z, ZERO),
        d,
        lambda z: curvature.get(z, ZERO),
        t,
    )


def _tree_from_model(node: TreeModel | None, labels: Mapping[str, Label]) -> Tree:
    if node is None:
        return UNIT
    label = labels.get(node.generator)
    if label is None:
        raise MalformedInputError(f"operation: {node.generator!r} is not a generator")
    if len(node.children) != label.arity:
        raise MalformedInputError(f"operation: {node.generator} has arity {label.arity}, got {len(node.children)} children")
    return (label, tuple(_tree_from_model(child, labels) for child in node.children))


def cogebra_from_payload(payload: CogebraPayload, p: FreeOperad) -> CogebraOverOperad:
    """A cogebra over P = Bar†(Q); tree vertices name elements of Q by ``render_key``."""
    generator_of = getattr(p, "generator_of", None)
    if generator_of is None:
        raise MalformedInputError(f"{p.name} was not built by bar_dual")
    labels = {render_key(z): p.label(name) for name, z in generator_of.items()}
    degrees = {b.key: b.degree for b in payload.basis}
    carrier = GradedSpace.from_keys(degrees, degrees.__getitem__)
    cot = KeyedCotensor(carrier.degree_of, p)
    coaction: Dict[str, Vec] = {}
    for entry in payload.coaction:
        for key in (entry.v, *entry.word):
            if key not in degrees:
                raise MalformedInputError(f"coaction: unknown basis key {key!r}")
        tree = _tree_from_model(entry.operation, labels)
        if trees.arity(tree) != len(entry.word):
            raise MalformedInputError(f"coaction of {entry.v}: arity {trees.arity(tree)} with {len(entry.word)} letters")
        target = ("E", tree, tuple(entry.word))
        if cot.degree(target) != degrees[entry.v]:
            raise MalformedInputError(f"coaction of {entry.v}: term of degree {cot.degree(target)}")
        vec = coaction.setdefault(entry.v, {})
        vec[target] = vec.get(target, ZERO) + _rational(entry.coeff)

    def coaction_of(key: Key) -> Vec:
        return coaction.get(key) or {("E", p.unit, (key,)): ONE}

    d = _keyed_op(payload.differential, degrees, -1, "differential")
    return CogebraOverOperad(p, carrier, coaction_of, d, name=payload.name)


# writing


def render_key(key: Any) -> str:
    """Stable display string of a basis key: strings stay, trees use bracket notation."""
    if isinstance(key, str):
        return key
    if key == UNIT:
        return "|"
    if isinstance(key, tuple) and len(key) == 2 and isinstance(key[0], Label):
        return trees.render(key, lambda label: render_key(label.name))
    if isinstance(key, tuple):
        if len(key) == 1:
            return render_key(key[0])
        return "(" + ", ".join(render_key(part) for part in key) + ")"
    return str(key)


def encode_vector(vec: Mapping[Key, Rational]) -> Dict[str, str]:
    return {render_key(k): format_rational(c) for k, c in vec.items() if c}


def encode_dims(dims: Mapping[int, Any]) -> Dict[str, Any]:
    return {str(k): encode_dims(v) if isinstance(v, Mapping) else v for k, v in sorted(dims.items())}


def _basis(keys, degree_of, arity_of=None, weight_of=None) -> List[Dict[str, Any]]:
    out = []
    for key in keys:
        entry = {"key": render_key(key), "degree": degree_of(key)}
        if arity_of is not None:
            entry["arity"] = arity_of(key)
        if weight_of is not None:
            entry["weight"] = weight_of(key)
        out.append(entry)
    return out


def encode_complex(c: ChainComplex, name: str = "X") -> Dict[str, Any]:
    keys = c.space.keys()
    return {
        "kind": "complex",
        "name": name,
        "basis": _basis(keys, c.space.degree_of),
        "differential": {render_key(k): encode_vector(c.differential(k)) for k in keys if c.differential(k)},
    }


def encode_operad(p: Operad) -> Dict[str, Any]:
    keys = p.keys()
    compositions = []
    for x in keys:
        for i in range(1, p.arity_of(x) + 1):
            for y in keys:
                result = p.restrict(p.partial(x, i, y))
                if result:
                    compositions.append(
                        {"x": render_key(x), "i": i, "y": render_key(y), "result": encode_vector(result)}
                    )
    return {
        "kind": "operad",
        "name": p.name,
        "basis": _basis(keys, p.degree_of, p.arity_of, p.weight_of),
        "unit": render_key(p.unit),
        "compositions": compositions,
        "differential": {render_key(k): encode_vector(p.d.on_basis(k)) for k in keys if p.d.on_basis(k)},
    }


def encode_coperad(q: CurvedCoperad) -> Dict[str, Any]:
    keys = q.keys()
    decomposition = []
    for z in keys:
        for (b, tops), c in q.w(z).items():
            decomposition.append({
                "z": render_key(z),
                "bottom": render_key(b),
                "tops": [render_key(top) for top in tops],
                "coeff": format_rational(c),
            })
    return {
        "kind": "coperad",
        "name": q.name,
        "basis": _basis(keys, q.degree_of, q.arity_of, q.weight_of),
        "unit": render_key(q.unit),
        "counit": {render_key(z): format_rational(q.tau(z)) for z in keys if q.tau(z)},
        "decomposition": decomposition,
        "differential": {render_key(k): encode_vector(q.d.on_basis(k)) for k in keys if q.d.on_basis(k)},
        "curvature": {render_key(z): format_rational(q.theta(z)) for z in keys if q.theta(z)},
    }


def _encode_tree(tree: Tree, generator_of: Mapping[Any, Key]) -> Dict[str, Any] | None:
    if tree == UNIT:
        return None
    label, children = tree
    return {
        "generator": render_key(generator_of[label.name]),
        "children": [_encode_tree(child, generator_of) for child in children],
    }


def encode_cogebra(v: CogebraOverOperad) -> Dict[str, Any]:
    generator_of = getattr(v.operad, "generator_of", {})
    keys = v.carrier.keys()
    coaction = []
    for key in keys:
        for (_, tree, word), c in v.coaction(key).items():
            coaction.append({
                "v": render_key(key),
                "operation": _encode_tree(tree, generator_of),
                "word": [render_key(letter) for letter in word],
                "coeff": format_rational(c),
            })
    return {
        "kind": "cogebra",
        "name": v.name,
        "basis": _basis(keys, v.carrier.degree_of),
        "coaction": coaction,
        "differential": {render_key(k): encode_vector(v.d.on_basis(k)) for k in keys if v.d.on_basis(k)},
    }


def to_plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, Rational):
        return format_rational(value)
    return value


def dumps(payload: Mapping[str, Any]) -> bytes:
    """RFC 8785 canonical JSON."""
    return rfc8785.dumps(to_plain(payload))


def to_text(payload: Mapping[str, Any], width: int = 100) -> str:
    """Human-readable rendering: reports as tables, everything else pretty-printed."""
    console = Console(file=io.StringIO(), width=width, record=True, color_system=None)
    reports = [payload] if "checks" in payload else [v for v in payload.values() if isinstance(v, Mapping) and "checks" in v]
    for report in reports:
        table = Table(title=f"{report['subject']}: {'PASS' if report['passed'] else 'FAIL'}")
        table.add_column("check")
        table.add_column("passed")
        table.add_column("detail")
        for check in report["checks"]:
            table.add_row(check["name"], "yes" if check["passed"] else "no", check["detail"])
        console.print(table)
    rest = {k: v for k, v in payload.items() if not (isinstance(v, Mapping) and "checks" in v) and k != "checks"}
    if rest:
        console.print(Pretty(to_plain(rest)))
    return console.export_text()
