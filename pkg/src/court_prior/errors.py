"""Exception types raised across the package."""


class CourtPriorError(Exception):
    """Base class for every error this package raises on purpose."""


class MalformedImage(CourtPriorError):
    pass


class UnsupportedFormat(CourtPriorError):
    pass


class EmptyCrop(CourtPriorError):
    pass


class ImageTooSmall(CourtPriorError):
    pass


class DimensionMismatch(CourtPriorError):
    pass


class DegenerateInput(CourtPriorError):
    pass


class InvalidFactor(CourtPriorError):
    pass


class SchemaError(CourtPriorError):
    """Malformed COCO document; the message carries a JSON path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class EmptyMask(CourtPriorError):
    pass


class MissingRegion(CourtPriorError):
    pass


class RegionTooSmall(CourtPriorError):
    pass


class OutOfFrame(CourtPriorError):
    pass


class ConfigError(CourtPriorError):
    pass
