"""FastAPI application exposing the operadia commands."""

from contextlib import asynccontextmanager

from fastapi import APIRouter, FastAPI

from api.v1.routes import constructions_routes, verifications_routes
from services import builtins
from telemetrics.logger import logger

VERSION = "0.1.0"


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info("operadia API startup")
    yield
    logger.info("operadia API shutdown")


app = FastAPI(
    title="operadia",
    description="Exact ℚ-linear constructions on operads, coperads, algebras and cogebras",
    version=VERSION,
    lifespan=lifespan,
)

v1_router = APIRouter(prefix="/v1")
v1_router.include_router(constructions_routes.router)
v1_router.include_router(verifications_routes.router)
app.include_router(v1_router)


@app.get("/health", tags=["Health"])
async def health():
    """Health check."""
    return {"status": "healthy", "service": "operadia", "version": VERSION}


@app.get("/v1/builtins", tags=["Health"])
async def list_builtins():
    """Names of the built-in objects, by kind."""
    return {kind: builtins.names(kind) for kind in ("operad", "coperad", "cogebra", "complex")}
