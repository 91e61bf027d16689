"""Exception types raised by the glandseg package."""


class GlandSegError(Exception):
    """Base class for all package-specific errors."""


class IngestError(GlandSegError):
    """A dataset entry could not be read, decoded, or paired."""


class ConfigError(GlandSegError):
    """A configuration file is malformed or contains invalid values."""


class DegenerateInputError(GlandSegError):
    """An input is structurally valid but too degenerate to process."""


class ModelFormatError(GlandSegError):
    """A model file is not in the expected binary format."""


class ModelVersionError(ModelFormatError):
    """A model file uses an unsupported format version."""


class ModelChecksumError(ModelFormatError):
    """A model file's payload does not match its checksum."""


class TruncatedModelError(ModelFormatError):
    """A model file ends before the declared payload does."""
