"""Vacuum charge of Dirac fermions in one-dimensional bags and spherical Fermi gases."""

__version__ = "0.1.0"

from .errors import (ExtrapolationError, MatchingRegionError, ScheduleTooCoarseError,
                     SpecError, TruncationError, VacuumChargeError, WindowError,
                     ZeroModeError)
from .model import (BoxGeometry, ChargeDecomposition, FermiWindow, Level, LevelLedger,
                    LevelPair, PointTerm, PotentialSpec, Segment, Spectrum,
                    validate_potential)
from .dirac import (phase_shift_table, phase_shifts, solve_spectrum,
                    solve_transformed_spectrum, transform_potential)
from .charge import (ContinuationSchedule, charge_split, continuum_Qc, continuum_Qd,
                     fermi_window, match_levels, total_charge)

__all__ = [
    "__version__",
    "VacuumChargeError", "SpecError", "ZeroModeError", "ScheduleTooCoarseError",
    "WindowError", "MatchingRegionError", "ExtrapolationError", "TruncationError",
    "BoxGeometry", "Segment", "PointTerm", "PotentialSpec", "validate_potential",
    "Level", "Spectrum", "LevelPair", "LevelLedger", "FermiWindow", "ChargeDecomposition",
    "solve_spectrum", "phase_shifts", "phase_shift_table", "transform_potential",
    "solve_transformed_spectrum", "ContinuationSchedule", "match_levels", "fermi_window",
    "total_charge", "charge_split", "continuum_Qc", "continuum_Qd",
]
