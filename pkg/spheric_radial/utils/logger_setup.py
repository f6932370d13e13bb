import logging
import sys
from typing import Type

from .settings import settings

PACKAGE = "spheric_radial"
_FORMAT = "%(asctime)s %(name)s (%(filename)s:%(lineno)d) %(levelname)s: %(message)s"
_DATEFMT = "%Y-%m-%d %H:%M:%S"


class ColoredFormatter(logging.Formatter):
    """Level names in color; the record itself is left untouched for other handlers."""

    COLORS = {
        "DEBUG": "\033[94m",
        "INFO": "\033[92m",
        "WARNING": "\033[93m",
        "ERROR": "\033[91m",
        "CRITICAL": "\033[95m",
    }
    RESET = "\033[0m"

    def format(self, record):
        painted = logging.makeLogRecord(record.__dict__)
        painted.levelname = f"{self.COLORS.get(record.levelname, self.RESET)}{record.levelname}{self.RESET}"
        return super().format(painted)


def _formatter(stream) -> logging.Formatter:
    # no escape codes in redirected stderr
    if getattr(stream, "isatty", lambda: False)():
        return ColoredFormatter(_FORMAT, datefmt=_DATEFMT)
    return logging.Formatter(_FORMAT, datefmt=_DATEFMT)


class Logger(logging.Logger):
    """Logger factory: one stderr handler per name, level from `settings.log_level`.

    Reports are written to stdout, log lines never are.
    """

    def __new__(cls: Type["Logger"], name: str) -> "Logger":
        logger = logging.getLogger(name)
        if not logger.hasHandlers():
            logger.setLevel(settings.log_level.upper())
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(_formatter(sys.stderr))
            logger.addHandler(handler)
            logger.propagate = False
        return logger


def set_level(level: str):
    """Apply a new level to every package logger created so far."""
    for name, logger in logging.Logger.manager.loggerDict.items():
        if name.startswith(PACKAGE) and isinstance(logger, logging.Logger):
            logger.setLevel(level.upper())
