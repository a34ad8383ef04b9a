class BridgeError(Exception):
    """Base class for everything this package raises on purpose."""


class ValidationError(BridgeError):
    """Bad inputs: malformed corpus, impossible parameters, alignment holes."""
