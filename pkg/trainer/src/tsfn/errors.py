"""Exception types raised by the trainer."""


class TsfnError(Exception):
    """Base class for all trainer failures."""


class ShapeError(TsfnError):
    """Array dimensions are inconsistent with each other or with the model."""


class FormatError(TsfnError):
    """A file does not conform to its declared on-disk layout."""


class ParameterError(TsfnError):
    """A configuration value is outside its valid range."""


class DataError(TsfnError):
    """The training corpus is missing, empty, or unusable."""
