"""
Verification routes: validators, the resolution, homology and the counterexample harness.

A failed check answers 409 with the full report as detail.
"""

from fastapi import APIRouter

import cli
from api.v1.commands import namespace, run
from models.api import CommandResponse, CounterexampleRequest, HomologyRequest, ObjectRequest, ResolveRequest

router = APIRouter(prefix="/verifications", tags=["Verifications"])


@router.post("/validate", response_model=CommandResponse)
def verify_object(request: ObjectRequest):
    """Run the validator matching the object kind."""
    return run("validate", cli.cmd_validate, namespace(request.model_dump()))


@router.post("/resolve", response_model=CommandResponse)
def verify_resolution(request: ResolveRequest):
    """Homotopy identities of C†C V and, with ``check_acyclic``, H_*(K) = 0 in the window."""
    return run("resolve", cli.cmd_resolve, namespace(request.model_dump()))


@router.post("/homology", response_model=CommandResponse)
def verify_homology(request: HomologyRequest):
    return run("homology", cli.cmd_homology, namespace(request.model_dump()))


@router.post("/counterexample", response_model=CommandResponse)
def verify_counterexample(request: CounterexampleRequest):
    """Λ_N: axioms, nilpotency of ε and non-completeness."""
    return run("counterexample", cli.cmd_counterexample, namespace(request.model_dump()))
