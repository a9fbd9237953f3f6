"""Exception types raised by the mpdirac modules."""


class MPDiracError(Exception):
    """Base class for all package errors."""


class ExtremalOrNaked(MPDiracError, ValueError):
    """Black hole parameters violate strict non-extremality."""


class InsufficientDecades(MPDiracError, ValueError):
    """A decay ladder is too short for a meaningful fit."""


class AxisModeError(MPDiracError, ValueError):
    """Azimuthal mode numbers must be half-integers."""


class ConvergenceError(MPDiracError, RuntimeError):
    """An eigensolver failed to converge."""


class StepSizeUnderflow(MPDiracError, RuntimeError):
    """The adaptive ODE integrator could not make progress."""


class SolveFailure(MPDiracError, RuntimeError):
    """A linear solve inside the time stepper failed."""


class DomainTooSmall(MPDiracError, ValueError):
    """Boundary reflections could re-enter the observation window."""


class WindowAtThreshold(MPDiracError, ValueError):
    """A spectral window touches one of the thresholds +-mass."""


class ConfigError(MPDiracError, ValueError):
    """A run configuration does not match the expected schema."""
