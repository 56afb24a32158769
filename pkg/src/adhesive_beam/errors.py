"""Exception types shared across the package."""


class BeamError(Exception):
    """Base class for all package errors."""


class ConfigError(BeamError, ValueError):
    """Invalid parameters or configuration (names the offending key)."""


class PreconditionError(BeamError, ValueError):
    """An operation was called outside its domain of validity."""


class DimensionError(BeamError, ValueError):
    """Array lengths or grids do not match the basis."""


class NoCrossingError(BeamError):
    """The attached amplitude never reaches the threshold."""


class MixedRegimeError(BeamError):
    """Field is partly attached and partly detached; closed forms do not apply."""


class BlowUpError(BeamError, FloatingPointError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, step_index, message=None):
        self.step_index = step_index
        super().__init__(message or f"non-finite state at step {step_index}")
