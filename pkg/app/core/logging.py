"""
Logging configuration for the application

Records go to stderr; stdout is reserved for command results. Every record
carries the run fields bound with ``bind_run`` (subcommand, seed, scene,
scale, group) next to its own ``extra={"context": {...}}`` fields.
"""
import json
import logging
import sys
from contextlib import contextmanager
from contextvars import ContextVar
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, Optional

from app.core.config import settings

RUN_FIELDS = ("subcommand", "seed", "scene", "scale", "group")

_run_context: ContextVar[Dict[str, Any]] = ContextVar("run_context", default={})


@contextmanager
def bind_run(**fields: Any) -> Iterator[Dict[str, Any]]:
    """
    Attach run fields to every record logged inside the block.

    Nested blocks add to (and may override) the outer fields. None values
    are dropped.

    Raises:
        ValueError: For a field outside RUN_FIELDS
    """
    unknown = set(fields) - set(RUN_FIELDS)
    if unknown:
        raise ValueError(f"Unknown run fields: {sorted(unknown)}")
    bound = {**_run_context.get(), **{key: value for key, value in fields.items() if value is not None}}
    token = _run_context.set(bound)
    try:
        yield bound
    finally:
        _run_context.reset(token)


def run_fields() -> Dict[str, Any]:
    """Run fields bound in the current context."""
    return dict(_run_context.get())


def record_fields(record: logging.LogRecord) -> Dict[str, Any]:
    """Run fields merged with the record's own context; the record wins on clashes."""
    fields = run_fields()
    context = getattr(record, "context", None)
    if isinstance(context, dict):
        fields.update(context)
    return fields


class JSONFormatter(logging.Formatter):
    """Custom JSON formatter for structured logging"""

    def format(self, record: logging.LogRecord) -> str:
        log_data: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        log_data.update(record_fields(record))

        return json.dumps(log_data, default=str)


class TextFormatter(logging.Formatter):
    """Human-readable lines with the run fields as trailing key=value pairs"""

    def __init__(self, datefmt: Optional[str] = "%Y-%m-%d %H:%M:%S"):
        super().__init__("%(asctime)s - %(name)s - %(levelname)s - %(message)s", datefmt=datefmt)

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        fields = record_fields(record)
        if fields:
            line += " " + " ".join(f"{key}={value}" for key, value in fields.items())
        return line


def setup_logging() -> logging.Logger:
    """
    Configure application logging based on settings

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger()
    logger.setLevel(getattr(logging, settings.LOG_LEVEL.upper()))

    logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, settings.LOG_LEVEL.upper()))

    formatter: logging.Formatter
    if settings.LOG_FORMAT.lower() == "json":
        formatter = JSONFormatter()
    else:
        formatter = TextFormatter()

    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # Tensor-backend chatter only in development
    if settings.is_production:
        logging.getLogger("torch").setLevel(logging.WARNING)

    return logger


# Initialize logger
logger = setup_logging()
