"""Exception types raised by the solvers."""


class VacuumChargeError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class SpecError(VacuumChargeError, ValueError):
    """A potential or box definition violates its invariants."""

    code = "invalid_spec"


class ZeroModeError(VacuumChargeError):
    """An eigenvalue sits at E = 0 (accidental zero mode excluded by assumption)."""

    code = "zero_mode"


class ScheduleTooCoarseError(VacuumChargeError):
    """A continuation step moved a level by more than half the local spacing."""

    code = "schedule_too_coarse"


class WindowError(VacuumChargeError):
    """An energy window is too narrow or too coarse for the requested operation."""

    code = "window"


class MatchingRegionError(VacuumChargeError):
    """The potential reaches into the region used for asymptotic matching."""

    code = "matching_region"


class ExtrapolationError(VacuumChargeError):
    """A limit (E -> -inf, s -> 0, tail continuation) did not converge."""

    code = "extrapolation"


class TruncationError(VacuumChargeError):
    """A partial-wave sum was truncated above its tolerance."""

    code = "truncation"
