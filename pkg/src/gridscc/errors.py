"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3, any
other GridSccError (or unexpected exception) -> 4.
"""


class GridSccError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GridSccError):
    """Invalid or incomplete run configuration."""


class DataError(GridSccError):
    """Invalid input data."""


# scenario ingest
class MissingColumn(DataError):
    pass


class NegativeExposure(DataError):
    pass


class DuplicateRow(DataError):
    pass


class UnknownRegion(DataError):
    pass


class OutOfRange(DataError):
    """Requested year falls outside the interpolation support."""


# climate inputs
class NonPositiveEcs(DataError):
    pass


class MissingPattern(DataError):
    pass


class PulseOutsideAxis(DataError):
    pass


# damage calibration
class NonMonotoneTable(DataError):
    pass


class ZeroDenominator(GridSccError):
    """Calibration aggregate vanished while the target damages did not."""


class PhiOutOfRange(DataError):
    pass


# reporting
class VariantMismatch(GridSccError):
    pass


class YearOutOfRange(GridSccError):
    pass


class ZeroPopulation(GridSccError):
    pass


class EmptyEnsemble(GridSccError):
    pass


# configuration
class ParseError(ConfigError):
    pass


class MissingFile(ConfigError):
    pass


class InvalidRange(ConfigError):
    pass


class IoFailure(GridSccError):
    pass
