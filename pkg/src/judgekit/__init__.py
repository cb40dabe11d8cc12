"""Detect whether groups of evaluation judgments were produced by a human or an LLM judge."""

__version__ = "0.1.0"
