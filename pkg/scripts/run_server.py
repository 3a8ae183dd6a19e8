#!/usr/bin/env python3
"""Helper script to run the MTD game FastAPI server."""

from mtd_game.server import main

if __name__ == "__main__":
    main()
