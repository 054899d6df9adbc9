"""HTTP facade over the simulator: pydantic schemas, handlers, FastAPI app.

The handlers are plain functions; the CLI calls them in-process and the
FastAPI app exposes the same functions over POST endpoints, so neither path
has logic the other lacks.
"""
