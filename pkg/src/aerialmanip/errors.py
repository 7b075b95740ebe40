"""Exception types raised across the package."""


class AerialManipError(Exception):
    """Base class for all package errors."""


class GimbalSingularity(AerialManipError, ValueError):
    """Pitch angle too close to +/- pi/2 for the Euler-rate map to be inverted."""


class NegativeSpeed(AerialManipError, ValueError):
    pass


class SolveFailure(AerialManipError, ArithmeticError):
    """Inertia matrix lost positive definiteness."""


class ConstraintViolation(AerialManipError, ValueError):
    """One or more DOb channels break the damping-ratio robustness bound."""

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


class CovarianceBreakdown(AerialManipError, ArithmeticError):
    pass


class NearSingularJacobian(AerialManipError, ArithmeticError):
    pass


class VerticalThrustTooSmall(AerialManipError, ValueError):
    pass


class AllocationSingular(AerialManipError, ArithmeticError):
    pass


class UnstableImpedanceConfig(AerialManipError, ValueError):
    pass


class DivergenceDetected(AerialManipError, RuntimeError):
    """Simulation state blew up; ``log`` holds the samples recorded so far."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


class ConfigError(AerialManipError, ValueError):
    pass


class IOFailure(AerialManipError, OSError):
    pass
