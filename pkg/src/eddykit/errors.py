"""Exception types shared across the package."""

from __future__ import annotations


class ParameterError(ValueError):
    """A parameter lies outside its admissible domain."""


class UnsupportedFlowError(ValueError):
    """The requested operation does not apply to this flow."""


class CommensurabilityError(ValueError):
    """A sampling interval is not an integer multiple of the stored step."""


class InsufficientDataError(ValueError):
    """Too few observations to form the requested estimate."""


class IntegrationBlowupError(FloatingPointError):
    """Non-finite state encountered during time integration."""

    def __init__(self, step: int, message: str | None = None):
        self.step = int(step)
        super().__init__(message or f"non-finite state encountered at step {self.step}")


class ConvergenceError(RuntimeError):
    """A linear solve or adaptive refinement failed to reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)


class ConfigError(ValueError):
    """A configuration file or command line argument set is invalid."""
