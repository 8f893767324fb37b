"""Exception hierarchy shared across the toolkit."""


class CaneError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(CaneError):
    """A tensor axis does not match what an operation requires.

    The message always names the offending axis.
    """


class ConfigurationError(CaneError):
    """Invalid layer/model configuration (e.g. groups not dividing channels)."""


class FormatError(CaneError):
    """A serialized artifact (weight container, image file) is malformed."""


class IncompleteContainerError(FormatError):
    """A weight container is readable but missing required tensors."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"container is missing tensors: {', '.join(self.missing)}")
