"""
Construction routes: Bar, Bar†, Cobar and the coradical filtration.

Each endpoint runs the CLI command of the same name and returns its report.
"""

from fastapi import APIRouter

import cli
from api.v1.commands import namespace, run
from models.api import CommandResponse, ObjectRequest

router = APIRouter(prefix="/constructions", tags=["Constructions"])


@router.post("/bar", response_model=CommandResponse)
def construct_bar(request: ObjectRequest):
    """Bar(P) of an operad; with ``check`` the curved coperad axioms are verified too."""
    return run("bar", cli.cmd_bar, namespace(request.model_dump()))


@router.post("/bardual", response_model=CommandResponse)
def construct_bar_dual(request: ObjectRequest):
    """Bar†(Q) of a cogmented curved coperad."""
    return run("bardual", cli.cmd_bardual, namespace(request.model_dump()))


@router.post("/cobar", response_model=CommandResponse)
def construct_cobar(request: ObjectRequest):
    return run("cobar", cli.cmd_cobar, namespace(request.model_dump()))


@router.post("/coradical", response_model=CommandResponse)
def construct_coradical(request: ObjectRequest):
    return run("coradical", cli.cmd_coradical, namespace(request.model_dump()))
