"""
API request and response models.

This module contains Pydantic models for the ``/v1`` endpoints.
"""

from typing import Any, Dict, Optional, Tuple, Union

from pydantic import BaseModel, Field


class ObjectRequest(BaseModel):
    """Request naming a built-in object or embedding a payload, plus truncation."""

    input: Union[str, Dict[str, Any]] = Field(
        ..., description="builtin:<name>, or an embedded object payload or manifest"
    )
    object: Optional[str] = Field(None, description="Object of an embedded manifest to use")
    coperad: Union[str, Dict[str, Any]] = Field(
        "builtin:qx-coperad", description="Coperad Q of P = Bar†(Q), for cogebra inputs"
    )
    max_arity: Optional[int] = Field(None, ge=0)
    max_weight: Optional[int] = Field(None, ge=0)
    degree_window: Optional[Tuple[int, int]] = Field(None, description="Degree range [a, b]")
    check: bool = Field(False, description="Also validate the constructed object")


class ResolveRequest(ObjectRequest):
    """Request for the resolution C†C V."""

    check_acyclic: bool = Field(False, description="Compute H_*(K) and test the unit")
    window: Optional[Tuple[int, int]] = Field(None, description="Homology window [a, b]")


class HomologyRequest(ObjectRequest):
    window: Optional[Tuple[int, int]] = Field(None, description="Homology window [a, b]")


class CounterexampleRequest(BaseModel):
    size: int = Field(8, ge=2, le=32, description="N")
    seed: int = Field(0, ge=0)
    trials: int = Field(100, ge=1, le=10000)
    max_weight: Optional[int] = Field(None, ge=0)


class CommandResponse(BaseModel):
    """Response model shared by every command."""

    success: bool
    command: str
    run_id: str
    result: Dict[str, Any]
