"""Exceptions for the extractor."""


class ExtractorError(Exception):
    """Raised for invalid jobs, unloadable models, or bad output files."""
