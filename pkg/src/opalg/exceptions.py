"""Exception classes for opalg operations."""

from typing import Any


class OpalgError(Exception):
    """
    Base exception for opalg operations.

    Provides structured error handling with user-friendly messages and actionable suggestions.
    """

    def __init__(
        self,
        message: str,
        suggestion: str | None = None,
        error_code: str | None = None,
        details: dict[str, Any] | None = None,
    ):
        """
        Initialize opalg error.

        Args:
            message: Human-readable error message
            suggestion: Actionable suggestion to resolve the error
            error_code: Machine-readable error code for programmatic handling
            details: Additional error details for debugging
        """
        super().__init__(message)
        self.message = message
        self.suggestion = suggestion
        self.error_code = error_code
        self.details = details or {}

    def __str__(self) -> str:
        """Return formatted error message with suggestion if available."""
        result = self.message
        if self.suggestion:
            result += f"\n\nSuggestion: {self.suggestion}"
        return result

    def get_user_message(self) -> str:
        """Get user-friendly error message."""
        return str(self)

    def get_debug_info(self) -> dict[str, Any]:
        """Get detailed error information for debugging."""
        return {
            "error_type": self.__class__.__name__,
            "message": self.message,
            "suggestion": self.suggestion,
            "error_code": self.error_code,
            "details": self.details,
        }


class ConfigurationError(OpalgError):
    """Configuration validation errors with specific guidance."""

    def __init__(
        self, message: str, field: str | None = None, suggestion: str | None = None, **kwargs
    ):
        """
        Initialize configuration error.

        Args:
            message: Error message
            field: Configuration field that caused the error
            suggestion: How to fix the configuration
        """
        if not suggestion and field:
            suggestion = self._get_field_suggestion(field)

        super().__init__(message, suggestion, error_code="CONFIG_ERROR", **kwargs)
        self.field = field

    def _get_field_suggestion(self, field: str) -> str:
        """Get field-specific suggestions."""
        suggestions = {
            "field": "Use --field q for the rationals or --field f<p> for a prime p (e.g. f5)",
            "weight_cap": "Use a positive weight cap (OPALG_WEIGHT_CAP or the cap of an algebra block)",
            "stage_cap": "Use a positive stage cap with OPALG_STAGE_CAP",
            "max_workers": "Use a positive worker count with OPALG_MAX_WORKERS",
            "cache_dir": "Point --cache or OPALG_CACHE_DIR at a writable directory",
        }
        return suggestions.get(field, f"Check the {field} configuration parameter")


class ValidationError(OpalgError):
    """Input validation errors with format guidance."""

    def __init__(
        self,
        message: str,
        field: str | None = None,
        value: str | None = None,
        expected_format: str | None = None,
        suggestion: str | None = None,
        **kwargs,
    ):
        """
        Initialize validation error.

        Args:
            message: Error message
            field: Field that failed validation
            value: Invalid value
            expected_format: Expected format description
            suggestion: How to fix the validation issue
        """
        if not suggestion and expected_format:
            suggestion = f"Expected format: {expected_format}"
        elif not suggestion:
            suggestion = self._get_validation_suggestion(field)

        super().__init__(message, suggestion, error_code="VALIDATION_ERROR", **kwargs)
        self.field = field
        self.value = value
        self.expected_format = expected_format

    def _get_validation_suggestion(self, field: str | None) -> str:
        """Get validation-specific suggestions."""
        suggestions = {
            "window": "Use a degree window with lo <= hi, e.g. [-4, 1]",
            "permutation": "Give the images of 1..n, each exactly once",
            "injection": "Give a strictly increasing list of values inside 1..n",
            "tree": "A tree needs exactly one root and no cycles",
            "workspace": "Check the workspace file against the documented grammar",
        }
        return suggestions.get(field, "Check the input format and try again")


class DimensionMismatchError(OpalgError):
    """Matrix or vector shapes that do not fit together."""

    def __init__(self, message: str, expected: int | None = None, actual: int | None = None, **kwargs):
        error_code = kwargs.pop("error_code", "DIMENSION_MISMATCH")
        super().__init__(
            message,
            suggestion=kwargs.pop("suggestion", "Check the sizes of the operands"),
            error_code=error_code,
            **kwargs,
        )
        self.expected = expected
        self.actual = actual


class FieldArithmeticError(OpalgError):
    """Division by zero in the coefficient field, including 1/n! in small characteristic."""

    def __init__(self, message: str, characteristic: int | None = None, **kwargs):
        suggestion = kwargs.pop("suggestion", None)
        if not suggestion and characteristic:
            suggestion = (
                f"The characteristic {characteristic} divides a required denominator; "
                "run over q or a larger prime"
            )
        super().__init__(message, suggestion, error_code="FIELD_ARITHMETIC", **kwargs)
        self.characteristic = characteristic


class ChainComplexError(OpalgError):
    """A differential that does not square to zero or has inconsistent shape."""

    def __init__(self, message: str, degree: int | None = None, **kwargs):
        error_code = kwargs.pop("error_code", "CHAIN_COMPLEX_ERROR")
        suggestion = kwargs.pop("suggestion", "Check the differential matrices for d o d = 0")
        super().__init__(message, suggestion, error_code=error_code, **kwargs)
        self.degree = degree


class ChainMapError(ChainComplexError):
    """A map that was required to commute with differentials but does not."""

    def __init__(self, message: str, degree: int | None = None, **kwargs):
        kwargs.setdefault("suggestion", "The map must satisfy d f = f d in every degree")
        super().__init__(message, degree=degree, error_code="CHAIN_MAP_ERROR", **kwargs)


class VerificationError(OpalgError):
    """An identity that was checked entrywise and failed."""

    def __init__(self, message: str, identity: str | None = None, **kwargs):
        error_code = kwargs.pop("error_code", "VERIFICATION_FAILED")
        suggestion = kwargs.pop("suggestion", None)
        super().__init__(message, suggestion, error_code=error_code, **kwargs)
        self.identity = identity


class AxiomError(VerificationError):
    """Operad axiom failure naming the arity triple and basis pair."""

    def __init__(
        self,
        message: str,
        identity: str,
        triple: tuple[int, int, int] | None = None,
        pair: tuple[int, ...] | None = None,
        **kwargs,
    ):
        details = kwargs.pop("details", {})
        details.update({"identity": identity, "triple": triple, "pair": pair})
        super().__init__(
            message,
            identity=identity,
            error_code="AXIOM_FAILED",
            details=details,
            suggestion=kwargs.pop("suggestion", "Inspect the structure constants for this triple"),
            **kwargs,
        )
        self.triple = triple
        self.pair = pair


class SplittingError(VerificationError):
    """Sigma-splitting axiom failure, or a splitting that cannot be built."""

    def __init__(
        self,
        message: str,
        axiom: str | None = None,
        arity: int | None = None,
        basis: Any = None,
        **kwargs,
    ):
        details = kwargs.pop("details", {})
        details.update({"axiom": axiom, "arity": arity, "basis": basis})
        super().__init__(
            message, identity=axiom, error_code="SPLITTING_FAILED", details=details, **kwargs
        )
        self.axiom = axiom
        self.arity = arity
        self.basis = basis


class TruncationError(OpalgError):
    """The requested computation does not fit inside the configured caps or window."""

    def __init__(self, message: str, suggestion: str | None = None, **kwargs):
        if not suggestion:
            suggestion = "Enlarge the weight cap, the arity bound or the degree window"
        super().__init__(message, suggestion, error_code="TRUNCATION", **kwargs)


class ResolutionError(OpalgError):
    """Resolution or factorization could not be completed."""

    def __init__(self, message: str, unresolved: list[Any] | None = None, **kwargs):
        suggestion = kwargs.pop("suggestion", None)
        if not suggestion:
            suggestion = "Raise the stage cap (OPALG_STAGE_CAP) or narrow the degree window"
        super().__init__(message, suggestion, error_code="RESOLUTION_ERROR", **kwargs)
        self.unresolved = unresolved or []


class PresentationError(OpalgError):
    """Malformed algebra or operad presentation."""

    def __init__(self, message: str, generator: str | None = None, **kwargs):
        suggestion = kwargs.pop("suggestion", None)
        if not suggestion:
            if "triangular" in message.lower():
                suggestion = "A differential may only use generators declared before it"
            elif "d^2" in message.lower() or "square" in message.lower():
                suggestion = "Check the differentials: d(d(x)) must vanish for every generator"
            else:
                suggestion = "Check generator names, degrees and differentials"
        super().__init__(message, suggestion, error_code="PRESENTATION_ERROR", **kwargs)
        self.generator = generator


class WorkspaceParseError(OpalgError):
    """Syntax or reference errors in a workspace file."""

    def __init__(
        self, message: str, line: int | None = None, column: int | None = None, **kwargs
    ):
        location = ""
        if line is not None:
            location = f" at line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(
            f"{message}{location}",
            suggestion=kwargs.pop("suggestion", "Check the workspace syntax near the location"),
            error_code="PARSE_ERROR",
            **kwargs,
        )
        self.line = line
        self.column = column


class CacheError(OpalgError):
    """Unreadable or inconsistent cache entries."""

    def __init__(self, message: str, path: str | None = None, **kwargs):
        super().__init__(
            message,
            suggestion=kwargs.pop("suggestion", "Delete the cache entry or run with --no-cache"),
            error_code="CACHE_ERROR",
            **kwargs,
        )
        self.path = path
