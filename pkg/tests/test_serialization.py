"""Payload parsing, built-in lookup and canonical output."""

import pytest

from models.objects import Manifest
from services import builtins
from services.algcog import validate_cogebra_operad
from services.barcobar import bar_dual
from services.errors import MalformedInputError, ValidationError
from services.graded import homology
from services.opcop import validate_curved_coperad, validate_operad
from services.qlinalg import ONE
from services.serialization import (
    cogebra_from_payload,
    complex_from_payload,
    coperad_from_payload,
    dumps,
    encode_cogebra,
    encode_complex,
    encode_coperad,
    encode_operad,
    operad_from_payload,
    parse_document,
    parse_payload,
    render_key,
    select,
)
from services.trees import UNIT

DISC = {
    "kind": "complex",
    "name": "D",
    "basis": [{"key": "a", "degree": 1}, {"key": "b", "degree": 0}],
    "differential": {"a": {"b": "1"}},
}


def test_broken_json_reports_line_and_column():
    with pytest.raises(MalformedInputError) as info:
        parse_document('{\n  "kind": "complex",\n  "basis": [\n')
    assert info.value.line == 4
    assert info.value.column is not None


def test_schema_errors_are_malformed_input():
    with pytest.raises(MalformedInputError, match="basis"):
        parse_payload({"kind": "complex", "basis": [{"key": "a", "degree": 0}, {"key": "a", "degree": 1}]})
    with pytest.raises(MalformedInputError):
        parse_payload({"kind": "complex", "basis": [], "differential": {"a": {"b": "1/0"}}})


def test_complex_payload():
    c = complex_from_payload(parse_payload(DISC))
    assert homology(c).dims == {}
    squared = {
        **DISC,
        "basis": DISC["basis"] + [{"key": "c", "degree": 2}],
        "differential": {"c": {"a": "1"}, "a": {"b": "1"}},
    }
    with pytest.raises(ValidationError):
        complex_from_payload(parse_payload(squared))
    with pytest.raises(MalformedInputError, match="unknown basis key"):
        complex_from_payload(parse_payload({**DISC, "differential": {"a": {"z": "1"}}}))


def test_manifest_selection():
    document = parse_payload({"format_version": "1", "objects": {"disc": DISC}})
    assert isinstance(document, Manifest)
    assert select(document, "complex").name == "D"
    assert select(document, "complex", "disc").name == "D"
    with pytest.raises(MalformedInputError, match="no operad"):
        select(document, "operad")


def test_operad_and_coperad_payloads(small):
    operad = parse_payload({
        "kind": "operad",
        "name": "𝟙",
        "basis": [{"key": "id", "degree": 0, "arity": 1}],
        "unit": "id",
        "compositions": [{"x": "id", "i": 1, "y": "id", "result": {"id": "1"}}],
    })
    assert validate_operad(operad_from_payload(operad, small)).passed
    coperad = parse_payload({
        "kind": "coperad",
        "name": "𝟙",
        "basis": [{"key": "i", "degree": 0, "arity": 1}],
        "unit": "i",
        "decomposition": [{"z": "i", "bottom": "i", "tops": ["i"]}],
    })
    assert validate_curved_coperad(coperad_from_payload(coperad, small)).passed


def test_decomposition_tops_must_match_the_arity(small):
    coperad = parse_payload({
        "kind": "coperad",
        "basis": [{"key": "i", "degree": 0, "arity": 1}],
        "unit": "i",
        "decomposition": [{"z": "i", "bottom": "i", "tops": ["i", "i"]}],
    })
    with pytest.raises(MalformedInputError, match="needs 1 tops"):
        coperad_from_payload(coperad, small)


def test_cogebra_payload_over_bar_dual(small):
    p = bar_dual(builtins.qx_coperad(small), small)
    payload = parse_payload({
        "kind": "cogebra",
        "name": "V",
        "basis": [{"key": "v", "degree": 1}, {"key": "u", "degree": 0}],
        "coaction": [
            {"v": "v", "operation": None, "word": ["v"]},
            {"v": "v", "operation": {"generator": "X(|)", "children": [None]}, "word": ["u"]},
        ],
    })
    v = cogebra_from_payload(payload, p)
    report = validate_cogebra_operad(v)
    assert report.passed, report.failures()
    bad = parse_payload({
        "kind": "cogebra",
        "basis": [{"key": "u", "degree": 0}],
        "coaction": [{"v": "u", "operation": {"generator": "X(|)", "children": [None]}, "word": ["u"]}],
    })
    with pytest.raises(MalformedInputError, match="term of degree 1"):
        cogebra_from_payload(bad, p)


def test_builtin_lookup():
    assert builtins.lookup("builtin:qx-coperad").kind == "coperad"
    assert "as-planar" in builtins.names("operad")
    with pytest.raises(MalformedInputError, match="unknown built-in"):
        builtins.lookup("builtin:nothing")
    with pytest.raises(MalformedInputError, match="expected a operad"):
        builtins.lookup("builtin:qx-coperad", "operad")


def test_render_key(small):
    assert render_key("v") == "v"
    assert render_key(("v",)) == "v"
    assert render_key(UNIT) == "|"
    assert render_key(("μ", 2)) == "(μ, 2)"
    assert render_key(builtins.qx_coperad(small).cogenerator("X")) == "X(|)"


def test_canonical_json_is_sorted_and_exact():
    assert dumps({"b": 1, "a": [ONE / 2, "x"]}) == b'{"a":["1/2","x"],"b":1}'


def test_encoded_objects_read_back(small):
    c = complex_from_payload(parse_payload(DISC))
    assert complex_from_payload(parse_payload(encode_complex(c, "D"))).differential == c.differential
    p = builtins.as_planar(small)
    operad = operad_from_payload(parse_payload(encode_operad(p)), small)
    assert operad.seq.dims == p.seq.dims
    assert validate_operad(operad).passed
    q = builtins.qx_coperad(small)
    coperad = coperad_from_payload(parse_payload(encode_coperad(q)), small)
    assert coperad.seq.dims == q.seq.dims
    assert validate_curved_coperad(coperad).passed
    bar_dual_qx = bar_dual(q, small)
    v = builtins.coaction_cogebra(bar_dual_qx)
    again = cogebra_from_payload(parse_payload(encode_cogebra(v)), bar_dual_qx)
    assert len(again.coaction("v")) == len(v.coaction(("v",))) == 2
    assert validate_cogebra_operad(again).passed
