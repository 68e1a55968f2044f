"""Command-line front end: exit codes, payloads and byte-stable output."""

import json

import pytest

from cli import EXIT_FAILED, EXIT_MALFORMED, EXIT_OK, main


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out.read_bytes()


def test_bar_of_the_unit_operad(tmp_path):
    code, data = run(tmp_path, "bar", "builtin:unit-operad", "--max-weight", "3", "--check")
    assert code == EXIT_OK
    payload = json.loads(data)
    assert payload["degree_dims"] == {"0": 1, "1": 1, "2": 2, "3": 3, "4": 4, "5": 3, "6": 1}
    assert payload["report"]["passed"] is True


def test_output_is_byte_identical_across_runs(tmp_path):
    argv = ("bardual", "builtin:qx-coperad", "--max-weight", "3", "--check")
    first = run(tmp_path, *argv, name="a.json")
    second = run(tmp_path, *argv, name="b.json")
    assert first == second
    assert first[0] == EXIT_OK


def test_bar_dual_of_the_symmetric_com_coperad(tmp_path):
    code, data = run(tmp_path, "bardual", "builtin:com-coperad", "--max-arity", "3", "--max-weight", "2", "--check")
    payload = json.loads(data)
    assert code == EXIT_OK
    assert payload["dims"] == {"1": {"0": 1}, "2": {"-1": 1}, "3": {"-2": 3, "-1": 1}}
    assert "equivariance" in [check["name"] for check in payload["report"]["checks"]]


def test_coradical_filtration_of_qx(tmp_path):
    code, data = run(tmp_path, "coradical", "builtin:qx-coperad", "--max-weight", "5")
    payload = json.loads(data)
    assert code == EXIT_OK
    assert payload["dims"] == [1, 2, 3, 4, 5, 6]
    assert payload["locally_conilpotent"] is True


def test_grouplike_coperad_is_not_locally_conilpotent(tmp_path):
    code, data = run(tmp_path, "coradical", "builtin:grouplike-coperad", "--max-weight", "3")
    assert code == EXIT_OK
    assert json.loads(data)["locally_conilpotent"] is False


def test_homology_of_a_payload_file(tmp_path):
    source = tmp_path / "point.json"
    source.write_text(json.dumps({
        "kind": "complex",
        "basis": [{"key": "p", "degree": 0}, {"key": "a", "degree": 5}, {"key": "b", "degree": 4}],
        "differential": {"a": {"b": "1"}},
    }))
    code, data = run(tmp_path, "homology", str(source))
    assert code == EXIT_OK
    assert json.loads(data)["homology"] == {"0": 1}


def test_failed_check_exits_with_one(tmp_path):
    source = tmp_path / "broken.json"
    source.write_text(json.dumps({
        "kind": "complex",
        "basis": [{"key": "c", "degree": 2}, {"key": "a", "degree": 1}, {"key": "b", "degree": 0}],
        "differential": {"c": {"a": "1"}, "a": {"b": "1"}},
    }))
    code, data = run(tmp_path, "validate", str(source))
    assert code == EXIT_FAILED
    assert json.loads(data)["report"]["passed"] is False


def test_malformed_input_exits_with_two(tmp_path):
    source = tmp_path / "broken.json"
    source.write_text('{"kind": "complex",\n "basis": [')
    code, data = run(tmp_path, "validate", str(source))
    assert code == EXIT_MALFORMED
    assert json.loads(data)["error"] == "MalformedInputError"


@pytest.mark.parametrize(
    "argv",
    [
        ("bar", "builtin:qx-coperad"),
        ("bar", "builtin:nothing"),
        ("homology", "missing.json"),
    ],
)
def test_unprocessable_inputs(tmp_path, argv):
    code, _ = run(tmp_path, *argv)
    assert code == EXIT_MALFORMED


def test_validate_builtin_cogebra(tmp_path):
    code, data = run(tmp_path, "validate", "builtin:coaction-cogebra", "--max-weight", "3")
    assert code == EXIT_OK
    assert json.loads(data)["report"]["passed"] is True


def test_resolve_with_acyclicity(tmp_path):
    code, data = run(
        tmp_path,
        "resolve",
        "builtin:coaction-cogebra",
        "--max-arity",
        "1",
        "--max-weight",
        "3",
        "--degree-window=-8:8",
        "--check-acyclic",
        "--window=-2:2",
    )
    payload = json.loads(data)
    assert code == EXIT_OK, payload["report"]
    assert payload["trust_window"] == [-6, 6]
    assert payload["identities"] == "pass"
    assert payload["homology"] == {}


def test_windows_may_start_with_a_minus_sign(tmp_path):
    code, data = run(
        tmp_path,
        "resolve",
        "builtin:coaction-cogebra",
        "--coperad",
        "builtin:qx-coperad",
        "--planar",
        "--max-arity",
        "1",
        "--max-weight",
        "3",
        "--degree-window",
        "-8:8",
        "--check-acyclic",
        "--window",
        "-2:2",
    )
    payload = json.loads(data)
    assert code == EXIT_OK, payload["report"]
    assert payload["acyclicity"]["window"] == [-2, 2]
    assert payload["homology"] == {}


def test_cobar_of_a_builtin_cogebra(tmp_path):
    code, data = run(tmp_path, "cobar", "builtin:onedim-cogebra", "--coperad", "builtin:qx-coperad",
                     "--max-arity", "1", "--max-weight", "3")
    payload = json.loads(data)
    assert code == EXIT_OK, payload["report"]
    assert payload["level_dims"] == [1, 2, 3, 4]


def test_counterexample(tmp_path):
    code, data = run(tmp_path, "counterexample", "--size", "8", "--trials", "10")
    payload = json.loads(data)
    assert code == EXIT_OK
    assert payload["passed"] is True
    assert payload["data"]["dim"] == 37


def test_text_format(tmp_path):
    code, data = run(tmp_path, "bar", "builtin:as-planar", "--max-weight", "2", "--check", "--format", "text",
                     name="out.txt")
    assert code == EXIT_OK
    assert "PASS" in data.decode("utf-8")
