"""Corpus-adapted sentiment dictionaries for financial text."""

__version__ = "0.1.0"
