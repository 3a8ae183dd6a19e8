"""FastAPI application setup for the MTD game service."""

from __future__ import annotations

import logging

import uvicorn
from fastapi import FastAPI

from .api import games_router
from .deps import get_config

logger = logging.getLogger(__name__)


def create_app() -> FastAPI:
    app = FastAPI(title="MTD Game Server", version="0.1.0")
    app.include_router(games_router)
    return app


def main() -> None:
    """Entrypoint for running the MTD game server with uvicorn."""
    logging.basicConfig(level=get_config().log_level)
    app = create_app()
    uvicorn.run(app, host="0.0.0.0", port=8000, reload=False)


if __name__ == "__main__":
    main()
