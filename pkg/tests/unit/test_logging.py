"""Unit tests for logging configuration and functionality."""

import logging
import logging.handlers
from unittest.mock import MagicMock, patch

import pytest

import opalg.logging_config
from opalg.logging_config import (
    ColoredFormatter,
    OpalgLogger,
    PerformanceTimer,
    configure_logging,
    get_logger,
    log_function_call,
    log_performance,
)


def _record(level=logging.INFO, msg="Test message"):
    return logging.LogRecord(
        name="test", level=level, pathname="test.py", lineno=1, msg=msg, args=(), exc_info=None
    )


@pytest.fixture(autouse=True)
def reset_opalg_logger():
    yield
    root_logger = logging.getLogger("opalg")
    for handler in root_logger.handlers:
        handler.close()
    root_logger.handlers.clear()
    root_logger.setLevel(logging.NOTSET)
    root_logger.propagate = True
    opalg.logging_config._logger_instance = None


class TestColoredFormatter:
    """Test ColoredFormatter class."""

    def test_format_with_colors(self):
        """Test formatting with colors."""
        formatted = ColoredFormatter("%(levelname)s - %(message)s").format(_record())

        assert "\033[32m" in formatted  # Green for INFO
        assert "\033[0m" in formatted
        assert "Test message" in formatted

    @pytest.mark.parametrize(
        "level,color",
        [
            (logging.DEBUG, "\033[36m"),
            (logging.INFO, "\033[32m"),
            (logging.WARNING, "\033[33m"),
            (logging.ERROR, "\033[31m"),
            (logging.CRITICAL, "\033[35m"),
        ],
    )
    def test_format_different_levels(self, level, color):
        assert color in ColoredFormatter("%(levelname)s").format(_record(level))

    def test_record_is_left_unchanged(self):
        """Other handlers must still see the plain level name."""
        record = _record(logging.WARNING)
        ColoredFormatter("%(levelname)s").format(record)
        assert record.levelname == "WARNING"


class TestOpalgLogger:
    """Test OpalgLogger class."""

    @pytest.fixture
    def manager(self, tmp_path):
        return OpalgLogger(log_dir=tmp_path)

    def test_configure_logging_basic(self, manager):
        manager.configure_logging()

        assert manager.configured
        assert logging.getLogger("opalg").handlers

    def test_configure_only_once(self, manager):
        manager.configure_logging(file_logging=False)
        handlers = list(logging.getLogger("opalg").handlers)
        manager.configure_logging(file_logging=False, debug_mode=True)
        assert logging.getLogger("opalg").handlers == handlers

    def test_configure_logging_debug_mode(self, manager):
        manager.configure_logging(debug_mode=True, file_logging=False)
        assert logging.getLogger("opalg").level == logging.DEBUG

    def test_configure_logging_verbose_mode(self, manager):
        manager.configure_logging(verbose=True, file_logging=False)
        assert logging.getLogger("opalg").level == logging.INFO

    def test_configure_logging_custom_level(self, manager):
        manager.configure_logging(level="ERROR", file_logging=False)
        assert logging.getLogger("opalg").level == logging.ERROR

    def test_file_logging_keeps_everything(self, manager):
        """With a log file the logger passes DEBUG records on; the console handler filters."""
        manager.configure_logging(level="ERROR")
        root_logger = logging.getLogger("opalg")
        assert root_logger.level == logging.DEBUG
        console = [h for h in root_logger.handlers if not isinstance(h, logging.handlers.RotatingFileHandler)]
        assert [h.level for h in console] == [logging.ERROR]

    def test_configure_logging_no_console(self, manager):
        manager.configure_logging(console=False, file_logging=False)
        assert logging.getLogger("opalg").handlers == []

    def test_configure_logging_no_file(self, manager):
        manager.configure_logging(file_logging=False)

        file_handlers = [
            h for h in logging.getLogger("opalg").handlers if isinstance(h, logging.handlers.RotatingFileHandler)
        ]
        assert file_handlers == []
        assert manager.log_file is None

    def test_configure_logging_file_creation(self, manager, tmp_path):
        manager.configure_logging(console=False)
        get_logger("opalg.test").warning("written")
        for handler in logging.getLogger("opalg").handlers:
            handler.flush()

        assert manager.log_file == tmp_path / "opalg.log"
        assert "written" in manager.log_file.read_text()

    def test_unwritable_log_dir(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        manager = OpalgLogger(log_dir=blocker / "logs")
        manager.configure_logging(console=False)

        assert manager.configured
        assert manager.log_file is None

    def test_third_party_loggers_quiet(self, manager):
        manager.configure_logging(file_logging=False)
        assert logging.getLogger("arpeggio").level == logging.WARNING

        manager.configured = False
        manager.configure_logging(file_logging=False, debug_mode=True)
        assert logging.getLogger("arpeggio").level == logging.DEBUG

    def test_get_logger(self, manager):
        test_logger = manager.get_logger("opalg.module")
        assert isinstance(test_logger, logging.Logger)
        assert test_logger.name == "opalg.module"


class TestPerformanceTimer:
    """Test PerformanceTimer class."""

    def test_performance_timer_success(self):
        mock_logger = MagicMock()

        with PerformanceTimer("test_operation", mock_logger) as timer:
            pass

        assert "Started: test_operation" in mock_logger.debug.call_args[0][0]
        assert "Completed: test_operation" in mock_logger.info.call_args[0][0]
        assert timer.get_duration() is not None
        assert timer.get_duration() >= 0

    def test_performance_timer_exception(self):
        mock_logger = MagicMock()

        with pytest.raises(ValueError):
            with PerformanceTimer("test_operation", mock_logger):
                raise ValueError("Test error")

        message = mock_logger.error.call_args[0][0]
        assert "Failed: test_operation" in message
        assert "Test error" in message

    def test_duration_before_exit(self):
        assert PerformanceTimer("pending").get_duration() is None

    def test_performance_timer_default_logger(self):
        with PerformanceTimer("test_operation") as timer:
            pass
        assert timer.logger.name == "opalg.performance"


class TestLoggingDecorators:
    """Test logging decorators."""

    def test_log_function_call_decorator(self):
        @log_function_call
        def test_function(arg1, arg2, kwarg1=None):
            return f"{arg1}-{arg2}-{kwarg1}"

        with patch("opalg.logging_config.logging.getLogger") as mock_get_logger:
            mock_logger = MagicMock()
            mock_logger.isEnabledFor.return_value = True
            mock_get_logger.return_value = mock_logger

            assert test_function("a", "b", kwarg1="c") == "a-b-c"
            assert mock_logger.debug.call_count == 2  # entry and exit

    def test_log_function_call_decorator_disabled(self):
        @log_function_call
        def test_function(arg1):
            return arg1 * 2

        with patch("opalg.logging_config.logging.getLogger") as mock_get_logger:
            mock_logger = MagicMock()
            mock_logger.isEnabledFor.return_value = False
            mock_get_logger.return_value = mock_logger

            assert test_function(5) == 10
            assert not mock_logger.debug.called

    def test_log_function_call_decorator_exception(self):
        @log_function_call
        def test_function():
            raise ValueError("Test error")

        with patch("opalg.logging_config.logging.getLogger") as mock_get_logger:
            mock_logger = MagicMock()
            mock_logger.isEnabledFor.return_value = True
            mock_get_logger.return_value = mock_logger

            with pytest.raises(ValueError):
                test_function()
            assert mock_logger.debug.call_count == 2

    def test_log_performance_decorator(self):
        @log_performance("test_operation")
        def test_function():
            return "result"

        with patch("opalg.logging_config.PerformanceTimer") as mock_timer:
            mock_timer.return_value.__exit__.return_value = None

            assert test_function() == "result"
            mock_timer.assert_called_once_with("test_operation (test_function)")


class TestGlobalFunctions:
    """Test module-level logging functions."""

    def test_configure_logging_global(self, tmp_path, monkeypatch):
        monkeypatch.setattr(opalg.logging_config, "_logger_instance", OpalgLogger(log_dir=tmp_path))
        configure_logging(level="DEBUG", debug_mode=True, file_logging=False)
        assert logging.getLogger("opalg").level == logging.DEBUG

    def test_get_logger_global(self):
        test_logger = get_logger("opalg.module")
        assert isinstance(test_logger, logging.Logger)
        assert test_logger.name == "opalg.module"
