"""Exception types shared across the package."""


class OscistepError(Exception):
    pass


class JetMismatchError(OscistepError):
    """Operands disagree in base point, order or variable count."""


class JetOrderError(OscistepError):
    """A derivative order was requested that the field cannot supply."""


class RegimeError(OscistepError):
    """Oscillator parameters outside the supported regime (omega <= 0 or nu <= -1)."""


class DegenerateOscillatorError(OscistepError):
    """All Fourier coefficients vanish after mean removal."""


class NumericStepError(OscistepError):
    """Non-finite arithmetic encountered while stepping."""


class DomainError(OscistepError):
    """Closed-form expression evaluated outside its domain."""


class ResolutionError(OscistepError):
    """Micro time step too coarse to resolve the oscillation."""


class QuadratureError(OscistepError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ConfigError(OscistepError):
    """Invalid run configuration."""
