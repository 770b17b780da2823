"""
Logging configuration for ActBench.

Structured logging with rotation and levels. Console output goes to stderr
so that tables and CSV printed by the CLI stay clean on stdout.
"""

import json
import logging
import logging.handlers
import os
import sys
from datetime import datetime
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, Optional, TypeVar, Union

ROOT_LOGGER_NAME = "actbench"

# Extra attributes copied from a record into JSON output when present
_EXTRA_FIELDS = ("operation", "function_name", "size_exponent", "run_index", "epoch")

F = TypeVar("F", bound=Callable[..., Any])


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured logging."""

    def format(self, record: logging.LogRecord) -> str:
        log_entry: Dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        for field_name in _EXTRA_FIELDS:
            if hasattr(record, field_name):
                log_entry[field_name] = getattr(record, field_name)

        return json.dumps(log_entry, default=str)


class ColoredFormatter(logging.Formatter):
    """Colored formatter for console output."""

    COLORS = {
        "DEBUG": "\033[36m",  # Cyan
        "INFO": "\033[32m",  # Green
        "WARNING": "\033[33m",  # Yellow
        "ERROR": "\033[31m",  # Red
        "CRITICAL": "\033[35m",  # Magenta
    }
    RESET = "\033[0m"

    def format(self, record: logging.LogRecord) -> str:
        # Work on a copy so file handlers sharing the record see the plain level
        record = logging.makeLogRecord(record.__dict__)
        log_color = self.COLORS.get(record.levelname, "")
        record.levelname = f"{log_color}{record.levelname}{self.RESET}"
        return super().format(record)


def setup_logging(
    app_name: str = ROOT_LOGGER_NAME,
    log_level: str = "INFO",
    log_dir: Optional[Union[str, Path]] = None,
    enable_json: bool = False,
    enable_console: bool = True,
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
) -> logging.Logger:
    """
    Set up logging for the benchmark lab.

    Args:
        app_name: Name of the root logger
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir: Directory for rotating log files; no files are written when None
        enable_json: Whether to use JSON formatting for files
        enable_console: Whether to enable console logging on stderr
        max_bytes: Maximum size of log files before rotation
        backup_count: Number of backup files to keep

    Returns:
        Configured logger instance
    """
    level = getattr(logging, str(log_level).upper(), None)
    if not isinstance(level, int):
        level = logging.INFO

    logger = logging.getLogger(app_name)
    logger.setLevel(level)
    logger.propagate = False

    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    if log_dir is not None:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)

        if enable_json:
            file_formatter: logging.Formatter = JSONFormatter()
        else:
            file_formatter = logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - "
                "%(module)s:%(funcName)s:%(lineno)d - %(message)s"
            )

        file_handler = logging.handlers.RotatingFileHandler(
            log_path / f"{app_name}.log",
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding="utf-8",
        )
        file_handler.setFormatter(file_formatter)
        logger.addHandler(file_handler)

        error_handler = logging.handlers.RotatingFileHandler(
            log_path / f"{app_name}_errors.log",
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding="utf-8",
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(file_formatter)
        logger.addHandler(error_handler)

    if enable_console:
        console_handler = logging.StreamHandler(sys.stderr)
        if os.getenv("COLORIZE_LOGS", "true").lower() == "true" and sys.stderr.isatty():
            console_formatter: logging.Formatter = ColoredFormatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
        else:
            console_formatter = logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
        console_handler.setFormatter(console_formatter)
        logger.addHandler(console_handler)

    if not logger.handlers:
        logger.addHandler(logging.NullHandler())

    logger.debug(f"Logging configured for {app_name} at level {log_level}")
    return logger


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a specific module."""
    if name == ROOT_LOGGER_NAME or name.startswith(f"{ROOT_LOGGER_NAME}."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")


def log_operation(operation: str) -> Callable[[F], F]:
    """Decorator to log start, completion and failure of an operation."""

    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            logger = get_logger(func.__module__)
            start_time = datetime.now()

            try:
                logger.info(f"Starting operation: {operation}", extra={"operation": operation})
                result = func(*args, **kwargs)
                duration = (datetime.now() - start_time).total_seconds()
                logger.info(
                    f"Completed operation: {operation} in {duration:.2f}s",
                    extra={"operation": operation},
                )
                return result
            except Exception as e:
                duration = (datetime.now() - start_time).total_seconds()
                logger.error(
                    f"Failed operation: {operation} after {duration:.2f}s - {str(e)}",
                    exc_info=True,
                    extra={"operation": operation},
                )
                raise

        return wrapper  # type: ignore[return-value]

    return decorator


# Environment-specific configuration
def configure_for_environment(env: Optional[str] = None) -> Dict[str, Any]:
    """Get logging configuration for a specific environment."""
    if env is None:
        env = os.getenv("ENVIRONMENT", "development")

    configs: Dict[str, Dict[str, Any]] = {
        "development": {
            "log_level": "INFO",
            "enable_json": False,
            "enable_console": True,
        },
        "testing": {
            "log_level": "WARNING",
            "enable_json": False,
            "enable_console": False,
        },
        "production": {
            "log_level": "INFO",
            "enable_json": True,
            "enable_console": True,
        },
        "staging": {
            "log_level": "INFO",
            "enable_json": True,
            "enable_console": True,
        },
    }

    config = dict(configs.get(env, configs["development"]))
    override = os.getenv("ACTBENCH_LOG_LEVEL")
    if override:
        config["log_level"] = override.upper()
    return config
