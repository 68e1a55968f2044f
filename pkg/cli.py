"""
Command-line front end.

Every command loads its inputs (``builtin:<name>`` or a JSON payload file),
runs one construction or verification and writes a canonical JSON (or text)
report. Exit codes: 0 when everything passes, 1 when a check fails or a
structure is rejected, 2 when the input cannot be processed.
"""

from __future__ import annotations

import argparse
import sys
from typing import Any, Callable, Dict, List, Sequence, Tuple, Union

from models.objects import Manifest
from services import builtins
from services.algcog import CogebraOverOperad, validate_cogebra_operad
from services.barcobar import bar, bar_dual, canonical_alpha
from services.cobar import (
    cobar,
    cobar_report,
    resolution_report,
    unit_resolution,
    verify_acyclicity,
    verify_homotopy_identities,
)
from services.completion import counterexample_run
from services.errors import (
    MalformedInputError,
    OperadiaError,
    ShapeMismatchError,
    TruncationError,
    UnsupportedError,
    ValidationError,
)
from services.graded import ChainComplex, homology_dims
from services.opcop import (
    CurvedCoperad,
    Operad,
    coradical_filtration,
    validate_curved_coperad,
    validate_operad,
)
from services.report import Report
from services.serialization import (
    cogebra_from_payload,
    complex_from_payload,
    coperad_from_payload,
    dumps,
    encode_dims,
    operad_from_payload,
    parse_payload,
    read_document,
    select,
    sequence_from_payload,
    to_text,
    truncation_from_model,
)
from services.symseq import Truncation
from static_memory_cache import StaticMemoryCache
from telemetrics.logger import logger
from telemetrics.request_manager import RequestIdManager

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_MALFORMED = 2

DEFAULT_COPERAD = "builtin:qx-coperad"
WINDOW_OPTIONS = ("--window", "--degree-window")


class CommandResult:
    """Payload to print plus whether every check in it passed."""

    def __init__(self, payload: Dict[str, Any], passed: bool = True):
        self.payload = payload
        self.passed = passed


def parse_window(text: str) -> Tuple[int, int]:
    """``a:b`` → (a, b)."""
    try:
        lo, hi = (int(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty window {text!r}")
    return lo, hi


# loading


Source = Union[str, Dict[str, Any]]


def _document(ref: Source):
    """None for a built-in, otherwise the parsed payload of a file or of an embedded JSON object."""
    if isinstance(ref, dict):
        return parse_payload(ref)
    return None if builtins.is_builtin(ref) else read_document(ref)


def resolve_truncation(args: argparse.Namespace, document=None) -> Truncation:
    """Config defaults, then the manifest truncation, then command-line flags."""
    t = Truncation.default()
    max_arity, max_weight, window = t.max_arity, t.weight_cap, t.degree_window
    if isinstance(document, Manifest) and document.truncation is not None:
        from_manifest = truncation_from_model(document.truncation)
        max_arity, max_weight, window = from_manifest.max_arity, from_manifest.weight_cap, from_manifest.degree_window
    if getattr(args, "max_arity", None) is not None:
        max_arity = args.max_arity
    if getattr(args, "max_weight", None) is not None:
        max_weight = args.max_weight
    if getattr(args, "degree_window", None) is not None:
        window = args.degree_window
    return Truncation(max_arity, window, max_weight)


def load_operad(ref: Source, t: Truncation, name: str | None = None) -> Operad:
    document = _document(ref)
    if document is None:
        return builtins.lookup(ref, "operad").build(t)
    return operad_from_payload(select(document, "operad", name), t)


def load_coperad(ref: Source, t: Truncation, name: str | None = None) -> CurvedCoperad:
    document = _document(ref)
    if document is None:
        return builtins.lookup(ref, "coperad").build(t)
    return coperad_from_payload(select(document, "coperad", name), t)


def load_cogebra(ref: Source, coperad: CurvedCoperad, t: Truncation, name: str | None = None) -> CogebraOverOperad:
    document = _document(ref)
    if document is None:
        return builtins.build_cogebra(ref, coperad, t)
    return cogebra_from_payload(select(document, "cogebra", name), bar_dual(coperad, t))


def load_complex(ref: Source, t: Truncation, name: str | None = None) -> ChainComplex:
    document = _document(ref)
    if document is None:
        return builtins.lookup(ref, "complex").build(t)
    return complex_from_payload(select(document, "complex", name))


# commands


def _validate_payload(kind: str, payload, t: Truncation, coperad_ref: str) -> Report:
    if kind == "operad":
        return validate_operad(operad_from_payload(payload, t))
    if kind == "coperad":
        return validate_curved_coperad(coperad_from_payload(payload, t))
    if kind == "cogebra":
        q = load_coperad(coperad_ref, t)
        return validate_cogebra_operad(cogebra_from_payload(payload, bar_dual(q, t)))
    if kind == "sequence":
        report = Report(f"sequence {payload.name}")
        failures = sequence_from_payload(payload).coxeter_failures()
        report.add("coxeter", "; ".join(failures) if failures else None)
        return report
    report = Report(f"complex {payload.name}")
    try:
        complex_from_payload(payload)
        report.add("square_zero")
    except ValidationError as error:
        report.add("square_zero", str(error))
    return report


def cmd_validate(args: argparse.Namespace) -> CommandResult:
    document = _document(args.input)
    t = resolve_truncation(args, document)
    if document is None:
        builtin = builtins.lookup(args.input)
        if builtin.kind == "operad":
            report = validate_operad(builtin.build(t))
        elif builtin.kind == "coperad":
            report = validate_curved_coperad(builtin.build(t))
        elif builtin.kind == "cogebra":
            report = validate_cogebra_operad(load_cogebra(args.input, load_coperad(args.coperad, t), t))
        else:
            report = Report(f"complex {builtin.name}")
            builtin.build(t)
            report.add("square_zero")
        return CommandResult({"report": report.to_dict()}, report.passed)
    if isinstance(document, Manifest):
        reports = {
            name: _validate_payload(payload.kind, payload, t, args.coperad)
            for name, payload in document.objects.items()
        }
        passed = all(r.passed for r in reports.values())
        return CommandResult({"passed": passed, "reports": {n: r.to_dict() for n, r in reports.items()}}, passed)
    report = _validate_payload(document.kind, document, t, args.coperad)
    return CommandResult({"report": report.to_dict()}, report.passed)


def _degree_dims(dims: Dict[int, Dict[int, int]]) -> Dict[int, int]:
    totals: Dict[int, int] = {}
    for by_degree in dims.values():
        for d, n in by_degree.items():
            totals[d] = totals.get(d, 0) + n
    return totals


def cmd_bar(args: argparse.Namespace) -> CommandResult:
    t = resolve_truncation(args, _document(args.input))
    q = bar(load_operad(args.input, t, args.object), t)
    payload: Dict[str, Any] = {
        "object": q.name,
        "dims": encode_dims(q.seq.dims),
        "degree_dims": encode_dims(_degree_dims(q.seq.dims)),
    }
    passed = True
    if args.check:
        report = validate_curved_coperad(q)
        payload["report"] = report.to_dict()
        passed = report.passed
    return CommandResult(payload, passed)


def cmd_bardual(args: argparse.Namespace) -> CommandResult:
    t = resolve_truncation(args, _document(args.input))
    p = bar_dual(load_coperad(args.input, t, args.object), t)
    payload: Dict[str, Any] = {
        "object": p.name,
        "dims": encode_dims(p.seq.dims),
        "degree_dims": encode_dims(_degree_dims(p.seq.dims)),
    }
    passed = True
    if args.check:
        report = validate_operad(p, ["unit", "sequential_associativity", "parallel_associativity", "equivariance",
                                     "derivation", "square_zero"])
        payload["report"] = report.to_dict()
        passed = report.passed
    return CommandResult(payload, passed)


def cmd_cobar(args: argparse.Namespace) -> CommandResult:
    t = resolve_truncation(args, _document(args.input))
    q = load_coperad(args.coperad, t)
    v = load_cogebra(args.input, q, t, args.object)
    tower = cobar(v, canonical_alpha(q, v.operad), t)
    report = cobar_report(tower)
    payload = {
        "object": tower.name,
        "level_dims": tower.total_dims(),
        "report": report.to_dict(),
    }
    return CommandResult(payload, report.passed)


def cmd_resolve(args: argparse.Namespace) -> CommandResult:
    t = resolve_truncation(args, _document(args.input))
    q = load_coperad(args.coperad, t)
    v = load_cogebra(args.input, q, t, args.object)
    res = unit_resolution(v, canonical_alpha(q, v.operad), t)
    report = resolution_report(res)
    report.extend(verify_homotopy_identities(res), "identities")
    payload: Dict[str, Any] = {
        "object": f"C†C {v.name}",
        "dims": encode_dims(res.space.dims),
        "kernel_dims": encode_dims(res.kernel.dims),
        "trust_window": res.trust.as_list(),
        "identities": "pass" if report.passed else "fail",
    }
    passed = report.passed
    if args.check_acyclic:
        acyclicity = verify_acyclicity(res, args.window)
        payload["acyclicity"] = acyclicity.to_dict()
        payload["homology"] = encode_dims(acyclicity.kernel_homology)
        passed = passed and acyclicity.passed
    payload["report"] = report.to_dict()
    return CommandResult(payload, passed)


def cmd_coradical(args: argparse.Namespace) -> CommandResult:
    t = resolve_truncation(args, _document(args.input))
    q = load_coperad(args.input, t, args.object)
    filtration = coradical_filtration(q, t)
    stage_dims = [filtration.dims(n) for n in range(len(filtration.stages))]
    payload = {
        "object": q.name,
        "dims": [sum(dims.values()) for dims in stage_dims],
        "by_arity": [encode_dims(dims) for dims in stage_dims],
        "stable": filtration.stable,
        "locally_conilpotent": filtration.exhausts(),
    }
    return CommandResult(payload)


def cmd_homology(args: argparse.Namespace) -> CommandResult:
    t = resolve_truncation(args, _document(args.input))
    c = load_complex(args.input, t, args.object)
    return CommandResult({"dims": encode_dims(c.space.dims), "homology": encode_dims(homology_dims(c, args.window))})


def cmd_counterexample(args: argparse.Namespace) -> CommandResult:
    t = resolve_truncation(args)
    coperad = builtins.qx_coperad(t.with_weight(max(t.weight_cap, args.size - 1)))
    result = counterexample_run(args.size, args.seed, args.trials, coperad)
    return CommandResult(result.to_dict(), result.passed)


# parser


def _add_truncation(parser: argparse.ArgumentParser):
    parser.add_argument("--max-arity", type=int, default=None, help="largest arity kept")
    parser.add_argument("--max-weight", type=int, default=None, help="largest weight kept")
    parser.add_argument("--degree-window", type=parse_window, default=None, help="degree range a:b")
    parser.add_argument("--planar", action="store_true", help="planar mode (Bar† also takes symmetric coperads)")
    parser.add_argument("--format", choices=["json", "text"], default=None, help="output format")
    parser.add_argument("--out", default=None, help="write the report to this file instead of stdout")
    parser.add_argument("--object", default=None, help="object of a manifest to use")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="operadia", description="Exact ℚ-linear operad and coperad constructions")
    sub = parser.add_subparsers(dest="command", required=True)

    commands: List[Tuple[str, Callable, str]] = [
        ("validate", cmd_validate, "run the validator matching the input"),
        ("bar", cmd_bar, "Bar of an operad"),
        ("bardual", cmd_bardual, "Bar† of a curved coperad"),
        ("cobar", cmd_cobar, "Cobar tower of a cogebra over Bar†(Q)"),
        ("resolve", cmd_resolve, "the resolution C†C V and its homotopy identities"),
        ("coradical", cmd_coradical, "coradical filtration of a coperad"),
        ("homology", cmd_homology, "homology of a chain complex"),
    ]
    for name, func, help_text in commands:
        command = sub.add_parser(name, help=help_text)
        command.add_argument("input", help="builtin:<name> or a JSON payload file ('-' for stdin)")
        _add_truncation(command)
        command.set_defaults(func=func)
        if name in ("validate", "cobar", "resolve"):
            command.add_argument("--coperad", default=DEFAULT_COPERAD, help="coperad Q of P = Bar†(Q)")
        if name in ("bar", "bardual"):
            command.add_argument("--check", action="store_true", help="also validate the result")
        if name in ("resolve", "homology"):
            command.add_argument("--window", type=parse_window, default=None, help="homology window a:b")
        if name == "resolve":
            command.add_argument("--check-acyclic", action="store_true", help="compute H_*(K) and test the unit")

    command = sub.add_parser("counterexample", help="the non-complete algebra Λ_N")
    _add_truncation(command)
    command.add_argument("--size", type=int, default=8, help="N")
    command.add_argument("--seed", type=int, default=0)
    command.add_argument("--trials", type=int, default=100)
    command.set_defaults(func=cmd_counterexample)
    return parser


def _emit(payload: Dict[str, Any], fmt: str, out: str | None):
    data = dumps(payload) + b"\n" if fmt == "json" else to_text(payload).encode("utf-8")
    if out:
        with open(out, "wb") as f:
            f.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _attach_windows(argv: Sequence[str]) -> List[str]:
    """``--window -2:2`` → ``--window=-2:2``; argparse reads a leading ``-`` as an option."""
    out: List[str] = []
    it = iter(argv)
    for arg in it:
        if arg in WINDOW_OPTIONS:
            value = next(it, None)
            out.append(arg if value is None else f"{arg}={value}")
        else:
            out.append(arg)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_attach_windows(sys.argv[1:] if argv is None else argv))
    RequestIdManager.set()
    fmt = args.format or StaticMemoryCache.get_config("output", "format", "json")
    logger.info(f"operadia {args.command}", tag="cli")
    try:
        result = args.func(args)
    except (MalformedInputError, TruncationError, ShapeMismatchError, UnsupportedError) as error:
        logger.error(f"{args.command}: {error}", tag="cli")
        _emit({"error": type(error).__name__, "message": str(error)}, fmt, args.out)
        return EXIT_MALFORMED
    except (ValidationError, OperadiaError) as error:
        logger.error(f"{args.command}: {error}", tag="cli")
        _emit({"error": type(error).__name__, "message": str(error)}, fmt, args.out)
        return EXIT_FAILED
    finally:
        RequestIdManager.clear()
    _emit(result.payload, fmt, args.out)
    return EXIT_OK if result.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
