"""Exception hierarchy shared by all geosolid modules."""


class GeometryError(Exception):
    """Base class for every error raised by geosolid."""


class InvalidInputError(GeometryError):
    """Input value violates a precondition (non-finite coordinate, non-planar face, ...)."""


class InvalidMeshError(GeometryError):
    """A mesh violates the solid-body invariants (open, non-manifold, inverted...).

    Carries the offending report so callers can show diagnostics.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParameterError(GeometryError):
    """A numeric parameter is out of its documented range."""


class DegenerateInputError(GeometryError):
    """Input spans too low an affine dimension for the requested operation."""

    def __init__(self, message, affine_dim=None):
        super().__init__(message)
        self.affine_dim = affine_dim


class CRSMismatchError(GeometryError):
    """Layers fed to overlay carry different spatial-reference tags."""


class ClassificationError(GeometryError):
    """A reclassification rule is undefined for an observed attribute combination."""

    def __init__(self, message, combination=None):
        super().__init__(message)
        self.combination = combination


class BudgetExceededError(GeometryError):
    """A piece/size budget could not be met; carries the achieved count."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class UnknownIdError(GeometryError):
    """Lookup of an element id that is not present in a topology model."""


class StaleTreeError(GeometryError):
    """A spatial index no longer matches the scene it was built over."""


class FileFormatError(GeometryError):
    """A mesh/layer/manifest file could not be parsed."""
