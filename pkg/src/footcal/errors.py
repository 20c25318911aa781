"""Exception hierarchy shared across the toolkit."""


class FootcalError(Exception):
    """Base class for all toolkit errors."""


class DegenerateCalibration(FootcalError):
    """Single-sensor tare/scale failed (sensor not responding or inverted wiring)."""


class InsufficientLoad(FootcalError):
    """Total force too small for a defined center of pressure."""


class UnknownProtrusion(FootcalError):
    """Protrusion id not present in the apparatus configuration."""


class DegenerateTrial(FootcalError):
    """A trial's measured total force is below the load gate at the evaluated parameters."""


class SingularSystem(FootcalError):
    """Normal equations are rank deficient, or the solution is physically inadmissible."""


class CopOutsideSupport(FootcalError):
    """Requested center of pressure admits no non-negative force distribution."""


class UnstableStance(FootcalError):
    """World center of pressure falls outside the combined support polygon."""


class EmptyLog(FootcalError):
    """Stream log contained no valid records."""


class EmptyInput(FootcalError):
    """Metric requested over an empty collection."""


class FileFormatError(FootcalError):
    """Structured file is missing fields, has wrong types, or inconsistent references."""
