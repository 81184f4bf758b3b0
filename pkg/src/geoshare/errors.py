"""Shared exception base for all geoshare modules."""


class GeoshareError(Exception):
    """Base class for every domain error raised by this package."""
