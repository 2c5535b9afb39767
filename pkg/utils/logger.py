import logging
import sys
from typing import Optional
from datetime import datetime

from config import LOG_LEVEL


def setup_logger(name: Optional[str] = None, level: Optional[int] = None) -> logging.Logger:
    """
    Set up a logger with colored output and detailed formatting.

    Records go to stderr so that verdicts and witnesses printed on stdout
    stay machine-readable.

    Args:
        name: Logger name (optional)
        level: Logging level (default: config.LOG_LEVEL)

    Returns:
        Configured logger instance
    """
    if level is None:
        level = logging.getLevelName(LOG_LEVEL.upper())
        if not isinstance(level, int):
            level = logging.INFO

    # Color codes for different log levels
    COLORS = {
        logging.DEBUG: '\033[0;36m',    # Cyan
        logging.INFO: '\033[0;32m',     # Green
        logging.WARNING: '\033[0;33m',  # Yellow
        logging.ERROR: '\033[0;31m',    # Red
        logging.CRITICAL: '\033[1;31m'  # Bold Red
    }
    RESET = '\033[0m'
    use_color = sys.stderr.isatty()

    class ColoredFormatter(logging.Formatter):
        def format(self, record):
            levelname = record.levelname
            if use_color and record.levelno in COLORS:
                record.levelname = f"{COLORS[record.levelno]}{levelname}{RESET}"

            # Add timestamp with milliseconds
            record.created_fmt = datetime.fromtimestamp(record.created).strftime('%Y-%m-%d %H:%M:%S.%f')[:-3]

            msg = super().format(record)
            record.levelname = levelname  # Restore original levelname
            return msg

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False

    # Remove existing handlers
    logger.handlers = []

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)

    formatter = ColoredFormatter(
        fmt='%(created_fmt)s | %(levelname)-8s | %(name)s:%(funcName)s:%(lineno)d | %(message)s'
    )
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    return logger


def set_level(level: int) -> None:
    """Change the level of every logger created through setup_logger."""
    for logger in logging.Logger.manager.loggerDict.values():
        if isinstance(logger, logging.Logger) and logger.handlers:
            logger.setLevel(level)
            for handler in logger.handlers:
                handler.setLevel(level)
