"""Exception hierarchy for the toolkit.

Every operation raises a subclass of :class:`ToolkitError` for domain
failures; plain I/O problems surface as the builtin ``OSError`` family
(``FileNotFoundError`` for missing inputs) and arithmetic degeneracies as
builtins where Python already has the exact match (``ZeroDivisionError``).
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all domain errors raised by signerlab."""


class ParseError(ToolkitError):
    """A record file could not be parsed."""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class InvariantViolation(ToolkitError):
    """A loaded or constructed value breaks a data-model invariant."""


class DimensionMismatch(InvariantViolation):
    """A vector or tensor has the wrong number of components."""


class ConfigError(ToolkitError):
    """A configuration value violates its constraints."""


class CenterSeparationError(ToolkitError):
    """Synthetic embedding centers could not be separated within the
    resampling budget."""


class EmptyVideoError(ToolkitError):
    """A video offers no frames to sample from."""


class NonFiniteInputError(ToolkitError):
    """An input array contains NaN or infinity."""


class UnknownVideoError(ToolkitError):
    """A video id is referenced but absent from the relevant table."""


class UnassignedVideoError(ToolkitError):
    """A split references a video with no cluster assignment."""


class UnknownSegmentError(ToolkitError):
    """A segment id has no entry in the segment-to-video index."""


class NoLabeledSignersError(ToolkitError):
    """Clustering accuracy requires at least one labeled signer."""


class TooFewSignersError(ToolkitError):
    """Signer-disjoint splitting needs at least three non-garbage signers."""


class TooFewVideosError(ToolkitError):
    """Video-disjoint splitting needs at least three videos."""


class EmptyManifestError(ToolkitError):
    """The manifest contains no videos."""


class NoValidShouldersError(ToolkitError):
    """No frame has both shoulder landmarks with positive confidence."""


class DegeneratePoseError(ToolkitError):
    """Mean shoulder distance is too small to normalize against."""


class FpsError(ConfigError):
    """Frame rate must be finite and positive."""


class NonFiniteLossError(ToolkitError):
    """The loss became NaN or infinite."""


class DivergedError(ToolkitError):
    """Training produced non-finite parameters or loss."""


class EmptySetError(ToolkitError):
    """An evaluation or training set is empty."""
