"""Exception types shared across the package."""

from __future__ import annotations


class GuideQaError(Exception):
    """Base class for every error raised by this package."""


class ParseError(GuideQaError):
    """Input bytes could not be parsed at all; carries the failing byte offset."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class SchemaError(GuideQaError):
    """Input parsed but does not match the expected shape (names the field)."""


class ValidationError(GuideQaError):
    """A caller-supplied value violates a documented precondition."""


class CleaningError(GuideQaError):
    """Delimiter-based cleaning found an unmatched start title."""


class EnrichmentError(GuideQaError):
    """Table description generation failed; the table is left untouched."""


class StorageError(GuideQaError):
    """Reading or writing persisted state failed."""


class FormatError(GuideQaError):
    """A persisted file exists but its version or layout is not understood."""


class ProviderError(GuideQaError):
    """A model provider call failed (transport, HTTP status, bad payload)."""


class IndexingError(GuideQaError):
    """Embedding or index construction failed; names the offending chunk."""


class QueryError(GuideQaError):
    """A search query is unusable (dimension mismatch, empty after tokenization)."""


class ExpansionError(GuideQaError):
    """Query expansion failed; callers degrade to the original question."""


class ConversionError(GuideQaError):
    """HTML-to-Markdown table conversion received non-table input."""


class GenerationError(GuideQaError):
    """Answer generation failed; carries the question and pipeline mode."""


class PlanningError(GuideQaError):
    """The planning call failed."""


class RegistryError(GuideQaError):
    """Tool registration conflict (duplicate tool id)."""


class AgentError(GuideQaError):
    """The agent loop could not proceed (malformed actions after reprompt)."""


class AggregationError(GuideQaError):
    """The final aggregation pass failed."""


class UndefinedMetricError(GuideQaError):
    """A metric was requested over an empty record set."""


class NotFoundError(GuideQaError):
    """A referenced entity (session, message, chunk) does not exist."""


class ConfigError(GuideQaError):
    """The configuration file is missing or invalid."""
