"""
Exception types shared by the laboratory modules.
"""


class NuclabError(Exception):
    """Base class for all laboratory errors."""


class GridError(NuclabError, ValueError):
    """Invalid grid, test family or subspace construction."""


class LubError(NuclabError, RuntimeError):
    """Failure in the least-upper-bound construction or its eigenbasis."""


class FockError(NuclabError, ValueError):
    """Invalid truncated Fock space request (dimension cap, mode leakage)."""


class TruncationError(NuclabError, RuntimeError):
    """A truncation defect exceeded its configured cap."""


class PreconditionError(NuclabError, ValueError):
    """An inequality check was called outside its hypotheses."""


class ConfigError(NuclabError, ValueError):
    """Invalid run configuration.

    Args:
        field: name of the offending configuration field
        message: human readable reason
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ReportError(NuclabError, OSError):
    """Report files could not be written."""
