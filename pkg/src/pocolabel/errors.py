"""Exception hierarchy shared across the toolkit.

Every error raised on purpose derives from :class:`PocoError` so callers
(CLI, HTTP service) can map failures to exit codes / status codes in one
place.
"""

from __future__ import annotations


class PocoError(Exception):
    """Base class for all toolkit errors."""

    #: short machine-readable code, used by the HTTP error payload
    code = "error"


# --- geometry ---------------------------------------------------------------

class TooFewPoints(PocoError):
    """Stroke has fewer than 3 distinct points."""

    code = "too_few_points"


class EmptyRegion(PocoError):
    """Operation requires a region with at least one exterior ring."""

    code = "empty_region"


class CountOverflow(PocoError):
    """RLE counts do not sum to width * height."""

    code = "count_overflow"


class SeedOutOfBounds(PocoError):
    """Flood-fill seed lies outside the image."""

    code = "seed_out_of_bounds"


# --- dataset format ----------------------------------------------------------

class ParseError(PocoError):
    """Input document is not well-formed JSON."""

    code = "parse_error"


class SchemaError(PocoError):
    """A record is missing a required field or has a wrong type/shape."""

    code = "schema_error"


class IntegrityError(PocoError):
    """Cross-record rule broken: dangling reference, duplicate id, bad index."""

    code = "integrity_error"


class ConflictError(PocoError):
    """Two inputs define the same category name with different types."""

    code = "conflict"


class UnknownCategory(PocoError):
    """A category name matched nothing in the dataset."""

    code = "unknown_category"


class EmptySegmentation(PocoError):
    """Annotation has no segmentation to derive geometry from."""

    code = "empty_segmentation"


# --- annotation store --------------------------------------------------------

class NameTaken(PocoError):
    code = "name_taken"


class IoFailure(PocoError):
    code = "io_failure"


class UnknownDataset(PocoError):
    code = "unknown_dataset"


class UnknownUser(PocoError):
    code = "unknown_user"


class UnknownImage(PocoError):
    code = "unknown_image"


class UnknownAnnotation(PocoError):
    code = "unknown_annotation"


class NothingToUndo(PocoError):
    code = "nothing_to_undo"


# --- model clients ------------------------------------------------------------

class EndpointUnreachable(PocoError):
    """Model endpoint not configured, refused the connection, or timed out."""

    code = "endpoint_unreachable"


class ModelError(PocoError):
    """Endpoint answered but reported a failure."""

    code = "model_error"


class InvalidResponse(PocoError):
    """Endpoint answered with a payload we cannot turn into geometry."""

    code = "invalid_response"


class UnknownCategoryName(PocoError):
    """Detections referenced category names absent from the dataset."""

    code = "unknown_category_name"

    def __init__(self, names: list[str]):
        super().__init__(f"unknown category names: {', '.join(sorted(names))}")
        self.names = sorted(names)


class ProviderUnavailable(PocoError):
    code = "provider_unavailable"


class QuotaExceeded(PocoError):
    code = "quota_exceeded"


# --- service ------------------------------------------------------------------

class BindFailure(PocoError):
    code = "bind_failure"


class UnknownTarget(PocoError):
    """Tool request referenced a target annotation that does not exist."""

    code = "unknown_target"


class ToolRejected(PocoError):
    """Tool input was understood but cannot produce an annotation."""

    code = "tool_rejected"
