"""Retrieval-augmented question answering over guideline corpora."""

__version__ = "0.1.0"
