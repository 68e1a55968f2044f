"""
Shared plumbing for the ``/v1`` routes: a request becomes the argument
namespace of the matching CLI command, and engine errors become HTTP errors.
"""

import argparse
from typing import Any, Callable, Dict

from fastapi import HTTPException

from cli import CommandResult
from models.api import CommandResponse
from services.errors import (
    MalformedInputError,
    OperadiaError,
    ShapeMismatchError,
    TruncationError,
    UnsupportedError,
)
from services.serialization import to_plain
from telemetrics.logger import logger
from telemetrics.request_manager import RequestIdManager

UNPROCESSABLE = (MalformedInputError, TruncationError, ShapeMismatchError, UnsupportedError)


def namespace(fields: Dict[str, Any], **defaults: Any) -> argparse.Namespace:
    values = {"object": None, "max_arity": None, "max_weight": None, "degree_window": None, "check": False}
    values.update(defaults)
    values.update({k: (tuple(v) if isinstance(v, list) else v) for k, v in fields.items()})
    return argparse.Namespace(**values)


def run(command: str, func: Callable[[argparse.Namespace], CommandResult], args: argparse.Namespace
        ) -> CommandResponse:
    """Run one command; 422 for unprocessable input, 409 for a failed verification."""
    run_id = RequestIdManager.set()
    try:
        logger.info(f"{command} requested", tag="api")
        result = func(args)
    except UNPROCESSABLE as e:
        logger.error(f"{command}: {e}")
        raise HTTPException(status_code=422, detail=f"{type(e).__name__}: {e}")
    except OperadiaError as e:
        logger.error(f"{command}: {e}")
        raise HTTPException(status_code=409, detail=f"{type(e).__name__}: {e}")
    finally:
        RequestIdManager.clear()
    payload = to_plain(result.payload)
    if not result.passed:
        logger.warning(f"{command}: verification failed", tag="api")
        raise HTTPException(status_code=409, detail=payload)
    return CommandResponse(success=True, command=command, run_id=run_id, result=payload)
