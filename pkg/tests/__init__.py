"""Test package for the LLM training API."""
