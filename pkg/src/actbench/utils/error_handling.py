"""
Error handling utilities for ActBench.

Provides the exception hierarchy shared by every module and a decorator that
turns low-level I/O failures into reportable errors.
"""

from enum import Enum
from functools import wraps
from typing import Any, Callable, Dict, Iterable, Optional, Sequence, Type, TypeVar

from .logging_config import get_logger

logger = get_logger(__name__)

F = TypeVar("F", bound=Callable[..., Any])


class ErrorSeverity(Enum):
    """Error severity levels."""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ActBenchError(Exception):
    """Base exception for the benchmark lab."""

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        severity: ErrorSeverity = ErrorSeverity.MEDIUM,
        user_message: Optional[str] = None,
        context: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or self.__class__.__name__
        self.severity = severity
        self.context = context or {}
        self.user_message = user_message or self._get_user_friendly_message()

    def _get_user_friendly_message(self) -> str:
        return self.message

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary for logging and JSON reports."""
        return {
            "error_code": self.error_code,
            "message": self.message,
            "user_message": self.user_message,
            "severity": self.severity.value,
            "context": self.context,
            "type": self.__class__.__name__,
        }


class ValidationError(ActBenchError):
    """Raised when an argument is invalid."""

    def __init__(self, field: str, value: Any, message: Optional[str] = None,
                 user_message: Optional[str] = None):
        self.field = field
        self.value = value
        error_message = message or f"Invalid value for {field}: {value!r}"
        super().__init__(
            error_message,
            error_code="INVALID_ARGUMENT",
            severity=ErrorSeverity.LOW,
            user_message=user_message,
            context={"field": field, "value": str(value)},
        )


class ShapeMismatchError(ValidationError):
    """Raised when array shapes do not chain."""

    def __init__(self, field: str, expected: Any, found: Any):
        self.expected = expected
        self.found = found
        super().__init__(
            field,
            found,
            f"Shape mismatch for {field}: expected {expected}, found {found}",
        )
        self.error_code = "SHAPE_MISMATCH"


class ConfigurationError(ActBenchError):
    """Raised when configuration is invalid."""

    def __init__(self, setting: str, value: Any = None, message: Optional[str] = None):
        self.setting = setting
        self.value = value

        error_message = message or f"Invalid configuration for {setting}"
        if value is not None and message is None:
            error_message += f": {value}"

        super().__init__(
            error_message,
            error_code="CONFIGURATION_ERROR",
            severity=ErrorSeverity.HIGH,
            context={"setting": setting, "value": None if value is None else str(value)},
        )


class BudgetExceededError(ActBenchError):
    """Raised when an allocation would exceed the configured memory cap."""

    def __init__(self, requested_bytes: int, cap_bytes: int, what: str = "allocation"):
        self.requested_bytes = int(requested_bytes)
        self.cap_bytes = int(cap_bytes)
        super().__init__(
            f"{what} of {self.requested_bytes} bytes exceeds memory cap of "
            f"{self.cap_bytes} bytes ({self.cap_bytes / 2**30:.2f} GiB)",
            error_code="BUDGET_EXCEEDED",
            severity=ErrorSeverity.MEDIUM,
            context={"requested_bytes": self.requested_bytes, "cap_bytes": self.cap_bytes},
        )


class DivergenceError(ActBenchError):
    """Raised when training produces non-finite values."""

    def __init__(self, stage: str, epoch: Optional[int] = None, detail: str = "non-finite values"):
        self.stage = stage
        self.epoch = epoch
        where = f" at epoch {epoch}" if epoch is not None else ""
        super().__init__(
            f"{stage} diverged{where}: {detail}",
            error_code="DIVERGED",
            severity=ErrorSeverity.MEDIUM,
            context={"stage": stage, "epoch": epoch},
        )


class FileProcessingError(ActBenchError):
    """Raised when a file cannot be read or written."""

    def __init__(self, file_path: str, operation: str, original_error: Optional[Exception] = None):
        self.file_path = str(file_path)
        self.operation = operation
        self.original_error = original_error

        message = f"Failed to {operation} file: {file_path}"
        if original_error:
            message += f" - {str(original_error)}"

        super().__init__(
            message,
            error_code="FILE_PROCESSING_ERROR",
            severity=ErrorSeverity.MEDIUM,
            context={
                "file_path": self.file_path,
                "operation": operation,
                "original_error": str(original_error) if original_error else None,
            },
        )


class IdxFormatError(ActBenchError):
    """Raised when a binary container has the wrong magic number."""

    def __init__(self, path: str, expected: int, found: int, kind: str = "IDX"):
        self.path = str(path)
        self.expected = expected
        self.found = found
        super().__init__(
            f"{kind} format error in {path}: expected magic 0x{expected:08x}, "
            f"found 0x{found:08x}",
            error_code="FORMAT_ERROR",
            context={"path": self.path, "expected": expected, "found": found},
        )


class ConsistencyError(ActBenchError):
    """Raised when paired inputs disagree."""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message, error_code="CONSISTENCY_ERROR", context=context)


class TruncatedFileError(ActBenchError):
    """Raised when a file is shorter than its header declares."""

    def __init__(self, path: str, expected_bytes: int, found_bytes: int):
        self.path = str(path)
        self.expected_bytes = expected_bytes
        self.found_bytes = found_bytes
        super().__init__(
            f"Truncated file {path}: expected {expected_bytes} bytes, found {found_bytes}",
            error_code="LENGTH_ERROR",
            context={"path": self.path, "expected": expected_bytes, "found": found_bytes},
        )


class SchemaError(ActBenchError):
    """Raised when a timing table lacks required columns."""

    def __init__(self, missing_columns: Sequence[str], source: str = "input"):
        self.missing_columns = list(missing_columns)
        self.source = str(source)
        super().__init__(
            f"Schema mismatch in {source}: missing column(s) "
            + ", ".join(self.missing_columns),
            error_code="SCHEMA_ERROR",
            severity=ErrorSeverity.LOW,
            context={"missing_columns": self.missing_columns, "source": self.source},
        )


class NoDataError(ActBenchError):
    """Raised when an input holds no data rows."""

    def __init__(self, source: str):
        self.source = str(source)
        super().__init__(
            f"No data in {source}",
            error_code="NO_DATA",
            severity=ErrorSeverity.LOW,
            context={"source": self.source},
        )


class UndefinedSpreadError(ActBenchError):
    """Raised when a group spread has fewer than two usable members."""

    def __init__(self, group: str, size_exponent: int, members: Iterable[str], reason: str = ""):
        self.group = group
        self.size_exponent = size_exponent
        self.members = list(members)
        detail = reason or f"needs at least 2 members, found {len(self.members)}"
        super().__init__(
            f"Spread undefined for group {group} at n={size_exponent}: {detail}",
            error_code="UNDEFINED_SPREAD",
            severity=ErrorSeverity.LOW,
            context={"group": group, "n": size_exponent, "members": self.members},
        )


class MissingBaselineError(ActBenchError):
    """Raised when the identity baseline is absent or not positive."""

    def __init__(self, size_exponent: int):
        self.size_exponent = size_exponent
        super().__init__(
            f"Identity baseline missing or non-positive at n={size_exponent}",
            error_code="MISSING_BASELINE",
            severity=ErrorSeverity.LOW,
            context={"n": size_exponent},
        )


class ListingParseError(ActBenchError):
    """Raised when a listing line cannot be parsed."""

    def __init__(self, line_number: int, line: str, reason: str, source: str = "<text>"):
        self.line_number = line_number
        self.line = line
        self.reason = reason
        super().__init__(
            f"{source}:{line_number}: {reason}: {line.strip()!r}",
            error_code="PARSE_ERROR",
            severity=ErrorSeverity.LOW,
            context={"line_number": line_number, "line": line, "source": source},
        )


class MissingSymbolError(ActBenchError):
    """Raised when a call target cannot be resolved."""

    def __init__(self, symbol: str, caller: str):
        self.symbol = symbol
        self.caller = caller
        super().__init__(
            f"Unresolved call target '{symbol}' in listing '{caller}'",
            error_code="MISSING_SYMBOL",
            context={"symbol": symbol, "caller": caller},
        )


class CycleDetectedError(ActBenchError):
    """Raised when listings call each other recursively."""

    def __init__(self, chain: Sequence[str]):
        self.chain = list(chain)
        super().__init__(
            "Recursive call chain: " + " -> ".join(self.chain),
            error_code="CYCLE_DETECTED",
            context={"chain": self.chain},
        )


class UnknownMnemonicError(ActBenchError):
    """Raised when a cost table has no entry for a mnemonic."""

    def __init__(self, mnemonic: str):
        self.mnemonic = mnemonic
        super().__init__(
            f"No cost defined for mnemonic '{mnemonic}'",
            error_code="UNKNOWN_MNEMONIC",
            context={"mnemonic": mnemonic},
        )


def handle_errors(
    default_return: Any = None,
    reraise: bool = True,
    log_error: bool = True,
    error_mapping: Optional[Dict[Type[Exception], Callable[[Exception], ActBenchError]]] = None,
) -> Callable[[F], F]:
    """
    Decorator for consistent error handling.

    Args:
        default_return: Value to return if an error occurs and reraise=False
        reraise: Whether to reraise the exception after handling
        log_error: Whether to log the error
        error_mapping: Map standard exceptions to ActBench errors
    """
    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            try:
                return func(*args, **kwargs)
            except ActBenchError:
                if log_error:
                    logger.debug(f"Error in {func.__name__}", exc_info=True)
                if reraise:
                    raise
                return default_return
            except Exception as e:
                factory = None
                if error_mapping:
                    for exc_type, candidate in error_mapping.items():
                        if isinstance(e, exc_type):
                            factory = candidate
                            break
                if factory is None:
                    raise

                mapped_error = factory(e)
                if log_error:
                    logger.error(f"Error in {func.__name__}: {mapped_error.to_dict()}")
                if reraise:
                    raise mapped_error from e
                return default_return

        return wrapper  # type: ignore[return-value]

    return decorator


def _filename_of(e: Exception) -> str:
    return str(getattr(e, "filename", None) or "unknown")


# Mapping applied at file-reading boundaries
FILE_ERROR_MAPPING: Dict[Type[Exception], Callable[[Exception], ActBenchError]] = {
    FileNotFoundError: lambda e: FileProcessingError(_filename_of(e), "read", e),
    IsADirectoryError: lambda e: FileProcessingError(_filename_of(e), "read", e),
    PermissionError: lambda e: FileProcessingError(_filename_of(e), "access", e),
    EOFError: lambda e: FileProcessingError("unknown", "read", e),
}
