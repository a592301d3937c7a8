"""
Base processor class for the race pipeline stages
"""

import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Dict

from ...config import ToolConfig
from ...observability.structured_logging import PipelineLogger
from ..run import PipelineRun, WarningRecord

logger = logging.getLogger(__name__)


class BaseStageProcessor(ABC):
    """
    Abstract base class for all stage processors

    A processor updates the PipelineRun in place. Failures on one warning are
    recorded on that warning's record and never abort the stage.
    """

    stage = "base"

    def __init__(self, config: ToolConfig):
        self.config = config
        self.pipeline_logger = PipelineLogger(component=f"{self.stage}_stage")
        self.processing_stats = self._fresh_stats()

    @staticmethod
    def _fresh_stats() -> Dict[str, Any]:
        return {
            "total_processed": 0,
            "successful": 0,
            "failed": 0,
            "average_processing_time": 0.0,
        }

    @abstractmethod
    def process(self, run: PipelineRun) -> Dict[str, int]:
        """
        Run the stage over a program

        Args:
            run: Pipeline state; the stage fills in its own fields

        Returns:
            Counts to log at stage end
        """

    def _timed(self, record: WarningRecord, fn, *args, **kwargs):
        """Call fn for one warning, recording its time and turning an exception into an error entry."""
        start = time.time()
        try:
            result = fn(*args, **kwargs)
            success = True
        except AssertionError:
            raise
        except Exception as e:
            logger.error(f"{self.stage} failed on {record.key_text}: {e}")
            record.error = f"{self.stage}: {e}"
            result = None
            success = False
        duration = time.time() - start
        record.timings[self.stage] = round(duration, 6)
        self._update_stats(success, duration)
        return result

    def _update_stats(self, success: bool, processing_time: float):
        """Update processing statistics"""
        self.processing_stats["total_processed"] += 1

        if success:
            self.processing_stats["successful"] += 1
        else:
            self.processing_stats["failed"] += 1

        total = self.processing_stats["total_processed"]
        current_avg = self.processing_stats["average_processing_time"]
        self.processing_stats["average_processing_time"] = (
            (current_avg * (total - 1) + processing_time) / total
        )

    def get_stats(self) -> Dict[str, Any]:
        """Get processing statistics"""
        total = self.processing_stats["total_processed"]
        if total == 0:
            return {"message": "No warnings processed yet"}

        return {
            **self.processing_stats,
            "success_rate": (self.processing_stats["successful"] / total) * 100,
            "failure_rate": (self.processing_stats["failed"] / total) * 100,
        }

    def reset_stats(self):
        """Reset processing statistics"""
        self.processing_stats = self._fresh_stats()
