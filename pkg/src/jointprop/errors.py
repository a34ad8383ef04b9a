"""Exception types shared across the package.

The CLI maps ValidationError to exit code 1 and OS-level I/O failures to
exit code 2; everything else is a bug.
"""


class JointpropError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(JointpropError):
    """Input data or parameters violate a documented contract."""
