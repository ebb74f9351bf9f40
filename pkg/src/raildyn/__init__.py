"""Finite-element transient dynamics of a ballasted railway track under wheel pulses."""

__version__ = "0.1.0"

from .errors import (
    CalibrationError,
    ConfigError,
    DefectiveMatrixError,
    LoadPlacementError,
    NumericalError,
    RailDynError,
)
from .track_model import TrackProperties, assemble_track, calibrate_element_length, section_matrices
from .loading import PulseLoad, load_dof_index, load_vector, tonnes_to_newtons
from .solvers import TimeGrid, ResponseHistory, solve
from .postprocess import peak_summary, repartition_table, substructure_forces

__all__ = [
    "CalibrationError", "ConfigError", "DefectiveMatrixError", "LoadPlacementError",
    "NumericalError", "RailDynError", "TrackProperties", "assemble_track",
    "calibrate_element_length", "section_matrices", "PulseLoad", "load_dof_index",
    "load_vector", "tonnes_to_newtons", "TimeGrid", "ResponseHistory", "solve",
    "peak_summary", "repartition_table", "substructure_forces",
]
