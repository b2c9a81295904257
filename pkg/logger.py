"""
Logging configuration for finlab.
Console output goes to stderr so reports on stdout stay byte-identical;
an optional daily log file lives under the config directory.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

LOGGER_NAME = "finlab"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(config_dir: Optional[Path] = None, debug: bool = False,
                  quiet: bool = False) -> logging.Logger:
    """
    Set up the package logger.

    Args:
        config_dir: Directory for log files (optional)
        debug: Enable debug level logging on the console
        quiet: Only warnings and errors on the console

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(LOGGER_NAME)

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    logger.setLevel(logging.DEBUG)
    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    if debug:
        console_handler.setLevel(logging.DEBUG)
    elif quiet:
        console_handler.setLevel(logging.WARNING)
    else:
        console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if config_dir:
        log_dir = Path(config_dir) / "logs"
        log_file = log_dir / f"finlab_{datetime.now().strftime('%Y%m%d')}.log"
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_file, encoding="utf-8")
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

            # keep the last 5
            _cleanup_old_logs(log_dir, keep=5)
        except (IOError, PermissionError, OSError) as e:
            logger.warning(f"Could not create log file: {e}")

    return logger


def _cleanup_old_logs(log_dir: Path, keep: int = 5):
    """Remove old log files, keeping the most recent ones."""
    try:
        log_files = sorted(log_dir.glob("finlab_*.log"), reverse=True)
        for old_log in log_files[keep:]:
            try:
                old_log.unlink()
            except (IOError, PermissionError):
                pass
    except (OSError, PermissionError):
        pass


def reset_logging() -> None:
    """Drop the package handlers (used by tests that call setup_logging repeatedly)."""
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Get a logger instance.

    Args:
        name: Logger name (will be prefixed with 'finlab.')
    """
    if name:
        return logging.getLogger(f"{LOGGER_NAME}.{name}")
    return logging.getLogger(LOGGER_NAME)
