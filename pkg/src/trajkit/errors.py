"""Typed exceptions shared by every pipeline stage.

All domain errors derive from :class:`ToolkitError` so callers (and the CLI)
can catch one base class; the concrete subclasses name the contract that was
violated.
"""


class ToolkitError(Exception):
    """Base class for all trajkit domain errors."""


class InsufficientData(ToolkitError):
    """Too few samples/frames/windows to carry out the operation."""


class InvalidData(ToolkitError):
    """Input contains non-finite or otherwise unusable values."""


class DegenerateNodes(ToolkitError):
    """Interpolation nodes with duplicated abscissae."""


class ExtrapolationRefused(ToolkitError):
    """Query point outside the interpolation hull without an override."""


class InvalidCoefficient(ToolkitError):
    """Filter coefficient outside its admissible range."""


class NonphysicalPressure(ToolkitError):
    """Pressure value at or below zero."""


class DegeneratePoints(ToolkitError):
    """Coincident points where distinct ones are required."""


class DimensionError(ToolkitError):
    """Vector/matrix dimension does not match the fitted model."""


class DegenerateLabels(ToolkitError):
    """Binary training set with only one class present."""


class ConvergenceFailure(ToolkitError):
    """Iterative solver exhausted its pass budget without converging."""


class MetricUndefined(ToolkitError):
    """Metric requested where a denominator vanishes."""


class SingularDesign(ToolkitError):
    """Regression design rank-deficient beyond the ridge rescue."""


class FieldBlowup(ToolkitError):
    """Velocity field returned a non-finite value during integration."""


class DegenerateSpread(ToolkitError):
    """Zero spread in regression statistics; interval radius undefined."""


class DegenerateDirection(ToolkitError):
    """Coincident points leave the travel direction undefined."""


class DivergedTraining(ToolkitError):
    """Network training produced a non-finite loss."""


class AlignmentError(ToolkitError):
    """Trajectories of unequal length or mismatched timestamps."""


class InvalidScenario(ToolkitError):
    """Simulation scenario with out-of-range parameters."""
