"""Exception hierarchy shared across the package.

Two families matter to callers: problems with the supplied data
(:class:`InputError`) and problems that arise while computing on valid
data (:class:`ComputationError`).  The command line maps them to exit
codes 2 and 1 respectively.
"""

from __future__ import annotations


class ConduitNetError(Exception):
    """Base class for all package errors."""


class InputError(ConduitNetError):
    """Malformed or inconsistent input data (CSV rows, codes, config)."""


class ComputationError(ConduitNetError):
    """A well-formed network on which a requested quantity is undefined."""


class ZeroTotalValueError(ComputationError):
    """Total propagated value is zero, so normalized scores are undefined."""


class ZeroVarianceError(ComputationError):
    """A series with zero variance cannot be standardized."""
