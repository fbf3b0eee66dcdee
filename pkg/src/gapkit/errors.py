"""Exception hierarchy.

Two branches matter operationally: ConfigError maps to CLI exit code 2
(bad arguments / bad config), DataError maps to exit code 3 (bad data or
bad files). Everything raised by the library derives from GapkitError.
"""


class GapkitError(Exception):
    pass


class ConfigError(GapkitError):
    """Invalid parameters or configuration (CLI exit code 2)."""


class DataError(GapkitError):
    """Invalid data, dimensions, or files (CLI exit code 3)."""


# --- data errors ---------------------------------------------------------

class ZeroRow(DataError):
    """A row with (near-)zero norm where a direction is required."""


class DimMismatch(DataError):
    """Operands disagree on embedding dimension or row count."""


class DegenerateInput(DataError):
    """Input has too little structure for the operation (e.g. rank 0)."""


class NotBijective(DataError):
    """Operation requires a bijective pairing (equal row counts)."""


class ZeroGap(DataError):
    """Gap norm is (near-)zero, so gap-relative quantities are undefined."""


class ZeroCovariance(DataError):
    """Centered noise matrix is identically zero."""


class LabelOutOfRange(DataError):
    """A class label falls outside [0, num_classes)."""


class BadMagic(DataError):
    """File does not start with the expected magic bytes."""


class BadVersion(DataError):
    """File declares an unsupported format version."""


class TruncatedPayload(DataError):
    """File payload length does not match the declared shape."""


class RaggedRows(DataError):
    """CSV rows do not all have the same number of columns."""


class ParseError(DataError):
    """A value could not be parsed; message carries the line number."""


class IoError(DataError):
    """Underlying I/O failure while reading or writing a data file."""


# --- config errors -------------------------------------------------------

class NonPositiveTau(ConfigError):
    """Temperature must be > 0."""


class BadConfig(ConfigError):
    """Simulation or experiment configuration is invalid."""


class BadModel(ConfigError):
    """Noise model parameters are invalid for the requested operation."""


class BadRange(ConfigError):
    """Quantizer range or level count is invalid."""


class BadEpsilon(ConfigError):
    """Variance-fraction threshold must lie in [0, 1]."""
