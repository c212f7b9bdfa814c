"""
Centralized Logging System
==========================
One named logger per module, writing to logs/<name>.log and the console.
"""

import logging
import logging.handlers

from src.paths import ProjectPaths
from src.config import LOG_LEVEL, LOG_MAX_SIZE, LOG_BACKUP_COUNT


class LoggerSetup:
    """Builds and caches loggers."""

    _loggers = {}

    @classmethod
    def setup_logger(cls, name, level=None):
        """
        Create a logger with file + console handlers.

        Args:
            name: logger name (e.g. 'genlang', 'engines', 'bench')
            level: logging level, defaults to LOG_LEVEL from config

        Returns:
            logger object
        """
        if name in cls._loggers:
            return cls._loggers[name]

        if level is None:
            level = getattr(logging, str(LOG_LEVEL).upper(), logging.INFO)

        logger = logging.getLogger(name)
        logger.setLevel(level)
        logger.handlers.clear()
        logger.propagate = False

        log_dir = ProjectPaths.LOGS
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = log_dir / f"{name}.log"

        formatter = logging.Formatter(
            fmt='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        file_handler = logging.handlers.RotatingFileHandler(
            filename=log_file,
            maxBytes=LOG_MAX_SIZE,
            backupCount=LOG_BACKUP_COUNT,
            encoding='utf-8'
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

        # Console only shows warnings and above; stdout belongs to the CLI output
        console_handler = logging.StreamHandler()
        console_handler.setLevel(max(level, logging.WARNING))
        console_handler.setFormatter(logging.Formatter(
            fmt='%(levelname)s - %(name)s - %(message)s'
        ))
        logger.addHandler(console_handler)

        cls._loggers[name] = logger
        return logger


def get_logger(name):
    """Logger for the given module name."""
    return LoggerSetup.setup_logger(name)
