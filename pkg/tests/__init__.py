"""
Test suite for parthines.

Run tests with:
    uv run pytest
    uv run pytest -m "not slow"
"""
