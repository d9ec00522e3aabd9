"""Exception types shared across the package."""


class GeoSceneError(Exception):
    """Base class for every error raised by this package."""


class UnknownPredicate(GeoSceneError):
    """A predicate name does not resolve to a vocabulary entry."""


class CategoryConflict(GeoSceneError):
    """A vocabulary addition contradicts an existing entry's category."""


class MissingPredicate(GeoSceneError):
    """The vocabulary lacks a predicate the refinement stage requires."""


class CrossSceneMerge(GeoSceneError):
    """Triplets handed to a merge reference objects from different scenes."""


class ProtocolViolation(GeoSceneError):
    """Evaluation inputs do not satisfy the task protocol's preconditions."""


class EmptyGroundTruth(GeoSceneError):
    """Recall is undefined for an image without ground-truth triplets."""


class SchemaError(GeoSceneError):
    """A file does not match the expected JSON schema (message carries a JSON pointer)."""


class DegenerateBox(GeoSceneError):
    """A bounding box has non-positive extent or invalid coordinates."""


class LayoutOverflow(GeoSceneError):
    """Requested objects cannot be placed on the synthetic canvas."""


class OutOfRange(GeoSceneError):
    """A value lies outside its documented interval."""
