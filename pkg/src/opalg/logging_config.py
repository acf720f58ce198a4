"""Logging configuration for opalg."""

import functools
import logging
import logging.handlers
import sys
import time
from pathlib import Path


class ColoredFormatter(logging.Formatter):
    """Colored log formatter for console output."""

    COLORS = {
        "DEBUG": "\033[36m",
        "INFO": "\033[32m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[35m",
        "RESET": "\033[0m",
    }

    def format(self, record: logging.LogRecord) -> str:
        """Format log record with a colored level name."""
        original = record.levelname
        if original in self.COLORS:
            record.levelname = f"{self.COLORS[original]}{original}{self.COLORS['RESET']}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


class OpalgLogger:
    """
    Logging configuration manager.

    Console output goes to stderr so that report tables written to stdout stay clean.
    """

    CONSOLE_FORMATS = {
        "debug": "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s",
        "verbose": "%(asctime)s - %(levelname)s - %(message)s",
        "plain": "%(levelname)s - %(message)s",
    }
    FILE_FORMAT = (
        "%(asctime)s - %(name)s - %(levelname)s - "
        "%(filename)s:%(lineno)d - %(funcName)s - %(message)s"
    )
    THIRD_PARTY = ("arpeggio", "hypothesis")

    def __init__(self, log_dir: Path | None = None):
        self.log_dir = log_dir or Path.home() / ".opalg" / "logs"
        self.configured = False
        self.log_file: Path | None = None

    def configure_logging(
        self,
        level: str = "WARNING",
        console: bool = True,
        file_logging: bool = True,
        debug_mode: bool = False,
        verbose: bool = False,
    ) -> None:
        """
        Configure the ``opalg`` logger hierarchy.

        Args:
            level: Logging level name used when neither debug nor verbose is set
            console: Enable console logging
            file_logging: Enable the rotating log file
            debug_mode: Debug level with source locations
            verbose: INFO level with timestamps
        """
        if self.configured:
            return

        if debug_mode:
            log_level = logging.DEBUG
            style = "debug"
        elif verbose:
            log_level = logging.INFO
            style = "verbose"
        else:
            log_level = getattr(logging, level.upper(), logging.WARNING)
            style = "plain"

        root_logger = logging.getLogger("opalg")
        root_logger.setLevel(logging.DEBUG if file_logging else log_level)
        root_logger.handlers.clear()
        root_logger.propagate = False

        if console:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setLevel(log_level)
            fmt = self.CONSOLE_FORMATS[style]
            formatter = ColoredFormatter(fmt) if sys.stderr.isatty() else logging.Formatter(fmt)
            console_handler.setFormatter(formatter)
            root_logger.addHandler(console_handler)

        if file_logging:
            try:
                self.log_dir.mkdir(parents=True, exist_ok=True)
                self.log_file = self.log_dir / "opalg.log"
                file_handler = logging.handlers.RotatingFileHandler(
                    self.log_file,
                    maxBytes=10 * 1024 * 1024,
                    backupCount=5,
                )
                file_handler.setLevel(logging.DEBUG)
                file_handler.setFormatter(logging.Formatter(self.FILE_FORMAT))
                root_logger.addHandler(file_handler)
            except OSError as e:
                self.log_file = None
                root_logger.warning(f"File logging disabled: {e}")

        self._configure_third_party_loggers(debug_mode)

        logger = logging.getLogger(__name__)
        logger.debug(f"Logging configured - Level: {logging.getLevelName(log_level)}")
        if self.log_file:
            logger.debug(f"Log file: {self.log_file}")

        self.configured = True

    def _configure_third_party_loggers(self, debug_mode: bool) -> None:
        """Quiet parser and property-testing libraries unless debugging."""
        for name in self.THIRD_PARTY:
            logging.getLogger(name).setLevel(logging.DEBUG if debug_mode else logging.WARNING)

    def get_logger(self, name: str) -> logging.Logger:
        """Return the logger for a module name."""
        return logging.getLogger(name)


_logger_instance: OpalgLogger | None = None


def get_logger_instance() -> OpalgLogger:
    """Get the global logger manager."""
    global _logger_instance
    if _logger_instance is None:
        _logger_instance = OpalgLogger()
    return _logger_instance


def configure_logging(
    level: str = "WARNING",
    console: bool = True,
    file_logging: bool = True,
    debug_mode: bool = False,
    verbose: bool = False,
) -> None:
    """Configure logging for the opalg command line."""
    get_logger_instance().configure_logging(level, console, file_logging, debug_mode, verbose)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger for a module.

    Args:
        name: Module name (usually __name__)
    """
    return get_logger_instance().get_logger(name)


class PerformanceTimer:
    """Context manager for timing operations."""

    def __init__(self, operation_name: str, logger: logging.Logger | None = None):
        self.operation_name = operation_name
        self.logger = logger or logging.getLogger("opalg.performance")
        self.start_time: float | None = None
        self.end_time: float | None = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        self.logger.debug(f"Started: {self.operation_name}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.end_time = time.perf_counter()
        duration = self.end_time - self.start_time
        if exc_type is None:
            self.logger.info(f"Completed: {self.operation_name} in {duration:.2f}s")
        else:
            self.logger.error(f"Failed: {self.operation_name} after {duration:.2f}s - {exc_val}")

    def get_duration(self) -> float | None:
        """Get the duration of the operation."""
        if self.start_time is not None and self.end_time is not None:
            return self.end_time - self.start_time
        return None


def log_function_call(func):
    """Decorator to log function calls in debug mode."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        logger = logging.getLogger(func.__module__)
        if not logger.isEnabledFor(logging.DEBUG):
            return func(*args, **kwargs)

        logger.debug(f"Calling {func.__qualname__} with {len(args)} args, kwargs={sorted(kwargs)}")
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.debug(f"{func.__qualname__} raised {type(e).__name__}: {e}")
            raise
        logger.debug(f"{func.__qualname__} returned: {type(result).__name__}")
        return result

    return wrapper


def log_performance(operation_name: str):
    """Decorator to time a function with :class:`PerformanceTimer`."""

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            with PerformanceTimer(f"{operation_name} ({func.__name__})"):
                return func(*args, **kwargs)

        return wrapper

    return decorator
