"""Service package: settings, logging, dependencies and the FastAPI app factory."""
