"""
errors.py — Exception types for SmbmSim.

Validation failures always name the field that caused them, so the CLI can
print "n_tx: must be a power of two" instead of a bare traceback.
"""


class ConfigError(ValueError):
    """An invalid configuration value. `field` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class QuadratureError(RuntimeError):
    """Numerical integration did not converge to the requested tolerance."""
