#!/usr/bin/env python3
# SaddleKit - Logger Utility

import os
import logging
import datetime
from PyQt6.QtCore import QObject, pyqtSignal

LOG_DIR = os.path.expanduser("~/.saddlekit/logs")
ENV_LEVEL = "SADDLEKIT_LOG"

LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL,
}

FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

_loggers = {}


class Logger(QObject):
    """
    Logger utility for SaddleKit.
    Wraps a logger of the ``saddlekit`` hierarchy and re-emits every record
    as a Qt signal so progress can be observed without touching the output.
    """

    # Signals
    log_added = pyqtSignal(str, str, str)  # level, module, message

    def __init__(self, module_name):
        """Initialize the logger."""
        super().__init__()
        self.module_name = module_name

        # Child of the package logger; handlers live on the parent
        self.logger = logging.getLogger(f"saddlekit.{module_name}")
        _root_logger()

    def is_debug(self):
        """True when debug records would be emitted."""
        return self.logger.isEnabledFor(logging.DEBUG)

    def debug(self, message):
        """Log a debug message."""
        self.logger.debug(message)
        self.log_added.emit("debug", self.module_name, message)

    def info(self, message):
        """Log an info message."""
        self.logger.info(message)
        self.log_added.emit("info", self.module_name, message)

    def warning(self, message):
        """Log a warning message."""
        self.logger.warning(message)
        self.log_added.emit("warning", self.module_name, message)

    def error(self, message):
        """Log an error message."""
        self.logger.error(message)
        self.log_added.emit("error", self.module_name, message)

    def critical(self, message):
        """Log a critical message."""
        self.logger.critical(message)
        self.log_added.emit("critical", self.module_name, message)

    @staticmethod
    def log_file_path():
        """Path of today's log file."""
        today = datetime.datetime.now().strftime("%Y-%m-%d")
        return os.path.join(LOG_DIR, f"saddlekit_{today}.log")


def level_from_name(name):
    """Map error/warn/info/debug (case-insensitive) to a logging level."""
    try:
        return LEVELS[str(name).strip().lower()]
    except KeyError:
        raise ValueError(f"Unknown log level: {name!r}") from None


def _root_logger():
    root = logging.getLogger("saddlekit")

    # Check if handlers already exist
    if not root.handlers:
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(logging.Formatter(FORMAT))
        root.addHandler(console_handler)
        root.setLevel(logging.WARNING)
        root.propagate = False

    return root


def configure_logging(level=None, log_to_file=False):
    """
    Set the package-wide level and optionally add the daily log file.

    ``level`` falls back to $SADDLEKIT_LOG, then to "warn".
    """
    root = _root_logger()
    name = level or os.environ.get(ENV_LEVEL) or "warn"
    try:
        root.setLevel(level_from_name(name))
    except ValueError:
        root.setLevel(logging.WARNING)
        root.warning(f"Ignoring unknown {ENV_LEVEL} level {name!r}")

    if log_to_file and not any(isinstance(h, logging.FileHandler) for h in root.handlers):
        try:
            os.makedirs(LOG_DIR, exist_ok=True)
            file_handler = logging.FileHandler(Logger.log_file_path())
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(logging.Formatter(FORMAT))
            root.addHandler(file_handler)
        except OSError as e:
            root.warning(f"Could not open log file: {e}")

    return root


def get_logger(module_name):
    """Shared Logger instance per module name."""
    if module_name not in _loggers:
        _loggers[module_name] = Logger(module_name)
    return _loggers[module_name]
