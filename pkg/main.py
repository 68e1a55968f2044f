#!/usr/bin/env python3
"""
Main entry point for operadia.

``python main.py serve`` starts the HTTP API; any other arguments are handed
to the command-line front end.
"""

import os
import sys

import uvicorn

from static_memory_cache import StaticMemoryCache
from telemetrics.logger import logger


def serve():
    """Start the FastAPI application under uvicorn."""
    StaticMemoryCache.initialize()
    host = os.getenv("HOST") or StaticMemoryCache.get_config("server", "host", "0.0.0.0")
    port = int(os.getenv("PORT") or StaticMemoryCache.get_config("server", "port", 8080))
    workers = int(os.getenv("WORKERS", "1"))
    reload = os.getenv("RELOAD", "false").lower() == "true"

    logger.info(f"Starting operadia API on {host}:{port}")
    uvicorn.run(
        "api.app:app",
        host=host,
        port=port,
        workers=workers,
        reload=reload,
        log_level="info",
        access_log=True,
    )


def main() -> int:
    if len(sys.argv) > 1 and sys.argv[1] == "serve":
        serve()
        return 0
    from cli import main as cli_main

    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
