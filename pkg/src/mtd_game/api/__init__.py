"""Route groupings for the MTD game FastAPI application."""

from .games import router as games_router

__all__ = ["games_router"]
