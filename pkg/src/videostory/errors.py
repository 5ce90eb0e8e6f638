"""Exception hierarchy shared by all videostory modules."""

from __future__ import annotations


class VideoStoryError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(VideoStoryError):
    """Input file or payload does not match its schema."""


class RangeError(VideoStoryError):
    """A value falls outside its documented domain."""


class EmptyIndexError(VideoStoryError):
    """A keyframe index cannot be normalized to a nonempty list."""


class DimensionError(VideoStoryError):
    """Embedding dimensions disagree with each other or with the configuration."""


class MissingEmbeddingError(VideoStoryError):
    """A frame scheduled for redundancy reduction has no embedding."""


class AgentError(VideoStoryError):
    """A perception or LLM call failed; recorded per clip during pipeline runs."""


class TransportError(AgentError):
    """Agent service unreachable or failing at the transport level, after retries."""


class ProtocolError(AgentError):
    """Agent service answered, but the response violates the wire schema."""


class EmptyResponseError(AgentError):
    """Agent returned empty text where nonempty text is required."""


class MissingFieldError(VideoStoryError):
    """A prompt slot has no value to fill it with."""


class EmptyInputError(VideoStoryError):
    """An operation that needs at least one element received none."""


class SchemaVersionError(VideoStoryError):
    """Persisted representation uses an unsupported schema version."""
