"""Exact computer algebra for dg operads, their algebras, enveloping algebras and tangent complexes."""

from .cli import __version__, main
from .config import EngineConfig
from .exceptions import (
    AxiomError,
    CacheError,
    ConfigurationError,
    OpalgError,
    ResolutionError,
    TruncationError,
    ValidationError,
    VerificationError,
    WorkspaceParseError,
)
from .models import Certificate, TaskResult

__all__ = [
    "__version__",
    "main",
    "EngineConfig",
    "Certificate",
    "TaskResult",
    "OpalgError",
    "ConfigurationError",
    "ValidationError",
    "VerificationError",
    "AxiomError",
    "TruncationError",
    "ResolutionError",
    "WorkspaceParseError",
    "CacheError",
]


if __name__ == "__main__":
    main()
