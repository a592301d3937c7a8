"""
Structured logging configuration for the irqracer pipeline.
"""

import logging
import os
import sys
import time
from contextlib import contextmanager
from typing import Any, Dict, Optional

import structlog


def configure_structured_logging():
    """Configure structured logging based on environment."""

    environment = os.getenv("ENVIRONMENT", "development").lower()
    log_level = os.getenv("LOG_LEVEL", "WARNING").upper()

    if environment == "production":
        # Production: JSON logs for log aggregation
        processors = [
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            structlog.stdlib.add_logger_name,
            structlog.processors.TimeStamper(fmt="ISO"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer()
        ]
    else:
        # Development: Human-readable logs
        processors = [
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            structlog.stdlib.add_logger_name,
            structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.dev.ConsoleRenderer(colors=False)
        ]

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        context_class=dict,
        cache_logger_on_first_use=True,
    )

    # stdout carries the human summary, so logs go to stderr
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, log_level, logging.WARNING),
    )


class PipelineLogger:
    """Structured logger for pipeline stage operations."""

    def __init__(self, component: str = "race_pipeline"):
        self.logger = structlog.get_logger("irqracer").bind(component=component)

    def log_stage_start(self, stage: str, program: str, warning_count: int = 0):
        """Log the start of a pipeline stage."""
        self.logger.info(
            "Stage started",
            event_type="stage_start",
            stage=stage,
            program=program,
            warning_count=warning_count
        )

    def log_stage_end(
        self,
        stage: str,
        program: str,
        success: bool = True,
        error: Optional[str] = None,
        duration_ms: Optional[float] = None,
        counts: Optional[Dict[str, int]] = None
    ):
        """Log the end of a pipeline stage."""
        log_data: Dict[str, Any] = {
            "event_type": "stage_end",
            "stage": stage,
            "program": program,
            "success": success
        }

        if duration_ms is not None:
            log_data["duration_ms"] = round(duration_ms, 3)
        if counts:
            log_data["counts"] = counts

        if success:
            self.logger.info("Stage completed", **log_data)
        else:
            log_data["error"] = error
            self.logger.error("Stage failed", **log_data)

    def log_warning_verdict(self, key: str, stage: str, verdict: str, detail: Optional[str] = None):
        """Log the verdict one stage reached for one warning."""
        self.logger.debug(
            "Warning verdict",
            event_type="warning_verdict",
            warning=key,
            stage=stage,
            verdict=verdict,
            detail=detail
        )

    def log_repair_step(self, step: str, attempt: int, surviving: int, detail: Optional[str] = None):
        """Log one iteration of the repair-and-revalidate loop."""
        self.logger.info(
            "Repair step",
            event_type="repair_step",
            step=step,
            attempt=attempt,
            surviving=surviving,
            detail=detail
        )

    @contextmanager
    def track_program(self, program: str, command: str):
        """Context manager to track a whole command run with timing."""
        start_time = time.time()
        self.logger.info("Run started", event_type="run_start", program=program, command=command)

        try:
            yield
            duration_ms = (time.time() - start_time) * 1000
            self.logger.info(
                "Run completed",
                event_type="run_end",
                program=program,
                command=command,
                success=True,
                duration_ms=round(duration_ms, 3)
            )
        except Exception as e:
            duration_ms = (time.time() - start_time) * 1000
            self.logger.error(
                "Run failed",
                event_type="run_end",
                program=program,
                command=command,
                success=False,
                error=str(e),
                duration_ms=round(duration_ms, 3)
            )
            raise


def get_logger(name: str = "irqracer") -> structlog.stdlib.BoundLogger:
    """Get a configured structured logger."""
    return structlog.get_logger(name)


# Initialize logging configuration when module is imported
configure_structured_logging()
