"""Exception types shared across the package."""


class DataTailorError(Exception):
    """Base class for every error raised by this package."""


class ContainerError(DataTailorError):
    """A container file violates the binary format."""


class BadMagicError(ContainerError):
    pass


class UnsupportedVersionError(ContainerError):
    pass


class TruncatedPayloadError(ContainerError):
    pass


class DimensionMismatchError(ContainerError):
    """Feature matrices are malformed or disagree on the feature dimension."""


class InvalidDatasetError(DataTailorError):
    """Dataset failed validation. Carries the offending report when available."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ZeroMatrixError(DataTailorError):
    """All-zero singular spectrum; spectral scores are undefined."""


class DataQualityError(DataTailorError):
    """Input data is structurally valid but unusable for selection."""


class ConfigError(DataTailorError):
    """Invalid or unknown configuration values."""


class UnknownSampleError(DataTailorError):
    """A referenced sample id does not exist in the dataset."""
