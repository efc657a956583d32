"""Exception types shared across the package."""


class BusQEDError(Exception):
    """Base class for all package-specific errors."""


class InvalidTruncationError(BusQEDError, ValueError):
    """A Fock truncation dimension below 2 was requested."""


class WrongSubsystemError(BusQEDError, ValueError):
    """A bosonic-mode operation was requested on the qutrit (or vice versa)."""


class OutOfRangeError(BusQEDError, ValueError):
    """An occupation number or level index exceeds the space truncation."""


class DimensionMismatchError(BusQEDError, ValueError):
    """Operands live on different space layouts."""


class InvalidParameterError(BusQEDError, ValueError):
    """A physical parameter violates its invariant (negative rate, ...)."""


class DegenerateScheduleError(BusQEDError, ValueError):
    """A control schedule with zero coupling or zero duration was requested."""


class AnharmonicityError(BusQEDError, ValueError):
    """The qutrit frequency of the e-f resonance step does not hit the bus."""


class ScheduleVerificationError(BusQEDError, ValueError):
    """A derived-duration schedule failed its ideal-unitary verification."""


class SolverError(BusQEDError, RuntimeError):
    """The integrator failed; carries the time stamp of the failure."""

    def __init__(self, message: str, t_ns: float | None = None,
                 segment: int | None = None):
        if t_ns is not None:
            message = f"{message} (t = {t_ns:.6f} ns"
            message += f", segment {segment})" if segment is not None else ")"
        super().__init__(message)
        self.t_ns = t_ns
        self.segment = segment


class PhysicalityError(BusQEDError, RuntimeError):
    """An integrated state violates a density-matrix invariant."""


class ConfigError(BusQEDError, ValueError):
    """An experiment configuration file failed to parse or validate."""
