"""
Race Pipeline

Coordinates the static, symbolic, dynamic and repair stages for one program
"""

import logging
import time
from typing import Any, Dict, Optional, Tuple

from ..analysis.detector import racing_points
from ..config import ToolConfig
from ..errors import BudgetExceeded
from ..frontend import load_program
from ..frontend.ast import Program
from ..observability.structured_logging import PipelineLogger
from ..vm.oracle import exhaustive_oracle
from .processors import DynamicProcessor, RepairProcessor, StaticProcessor, SymbolicProcessor
from .run import PipelineRun
from .utils.metrics import PipelineMetrics

logger = logging.getLogger(__name__)

COMMAND_STAGES: Dict[str, Tuple[str, ...]] = {
    "detect": ("static",),
    "validate": ("static", "symbolic", "dynamic"),
    "repair": ("static", "symbolic", "dynamic", "repair"),
    "oracle": ("static", "oracle"),
}


class RacePipeline:
    """
    Detection, validation and repair pipeline

    Features:
    - one processor per stage, each timed and logged
    - a failing stage stops the run and is recorded in run.errors
    - per-stage metrics across every program the pipeline has seen
    """

    def __init__(self, config: Optional[ToolConfig] = None, oracle_mode: str = "strict"):
        self.config = config or ToolConfig()
        self.oracle_mode = oracle_mode
        self.processors = {
            "static": StaticProcessor(self.config),
            "symbolic": SymbolicProcessor(self.config),
            "dynamic": DynamicProcessor(self.config),
            "repair": RepairProcessor(self.config),
        }
        self.pipeline_logger = PipelineLogger()
        self.metrics = PipelineMetrics()
        self.pipeline_stats = self._fresh_stats()

    @staticmethod
    def _fresh_stats() -> Dict[str, Any]:
        return {
            "total_processed": 0,
            "total_time": 0.0,
            "success_count": 0,
            "error_count": 0,
        }

    def run_source(self, source: str, path: str = "", command: str = "detect") -> PipelineRun:
        """Parse, check and run; frontend errors propagate to the caller."""
        return self.run(load_program(source), source, path, command)

    def run(self, program: Program, source: str = "", path: str = "", command: str = "detect") -> PipelineRun:
        """
        Run the stages a command needs

        Args:
            program: Checked program
            source: Original text (used for the report digest)
            path: Where the program came from
            command: detect, validate, repair or oracle

        Returns:
            PipelineRun with every stage's results
        """
        if command not in COMMAND_STAGES:
            raise ValueError(f"unknown command {command!r}")

        run = PipelineRun(program, self.config, source, path, command)
        start = time.time()
        with self.pipeline_logger.track_program(run.name, command):
            for stage in COMMAND_STAGES[command]:
                if not self._run_stage(run, stage):
                    break

        total_time = time.time() - start
        for record in run.records:
            self.metrics.record_verdict(record.status.value)
        if run.repair is not None:
            for plan in run.repair.plans:
                self.metrics.record_strategy(plan.strategy.value)
        self._update_pipeline_stats(total_time, not run.errors)
        return run

    def _run_stage(self, run: PipelineRun, stage: str) -> bool:
        warning_count = len(run.records)
        self.pipeline_logger.log_stage_start(stage, run.name, warning_count)
        start = time.time()
        try:
            if stage == "oracle":
                counts = self._run_oracle(run)
            else:
                counts = self.processors[stage].process(run)
        except (AssertionError, BudgetExceeded):
            raise
        except Exception as e:
            duration = time.time() - start
            logger.error(f"{stage} stage failed on {run.name}: {e}")
            run.errors.append(f"{stage}: {e}")
            run.stage_times[stage] = round(duration, 6)
            self.metrics.record_processing_time(stage, duration, False)
            self.pipeline_logger.log_stage_end(stage, run.name, False, str(e), duration * 1000)
            return False

        duration = time.time() - start
        run.stage_times[stage] = round(duration, 6)
        self.metrics.record_processing_time(stage, duration, True)
        self.pipeline_logger.log_stage_end(stage, run.name, True, None, duration * 1000, counts)
        return True

    def _run_oracle(self, run: PipelineRun) -> Dict[str, int]:
        points = run.racing_points or racing_points(run.static.warnings if run.static else [])
        run.oracle = exhaustive_oracle(run.program, None, self.config, self.oracle_mode, points)
        return {
            "races": len(run.oracle.races),
            "deadlocks": len(run.oracle.deadlocks),
            "assignments": run.oracle.assignments,
            "aborted": run.oracle.aborted,
        }

    def _update_pipeline_stats(self, total_time: float, success: bool):
        """Update pipeline statistics"""
        self.pipeline_stats["total_processed"] += 1
        self.pipeline_stats["total_time"] += total_time
        if success:
            self.pipeline_stats["success_count"] += 1
        else:
            self.pipeline_stats["error_count"] += 1

    def get_comprehensive_stats(self) -> Dict[str, Any]:
        """Get comprehensive statistics for the entire pipeline"""
        total = self.pipeline_stats["total_processed"]
        if total == 0:
            return {"message": "No programs processed yet"}

        return {
            "pipeline_overview": {
                "total_processed": total,
                "success_rate": (self.pipeline_stats["success_count"] / total) * 100,
                "error_rate": (self.pipeline_stats["error_count"] / total) * 100,
                "avg_total_time": self.pipeline_stats["total_time"] / total,
            },
            "processor_stats": {name: p.get_stats() for name, p in self.processors.items()},
            "performance": self.metrics.get_performance_summary(),
        }

    def reset_stats(self):
        """Reset all pipeline statistics"""
        self.pipeline_stats = self._fresh_stats()
        self.metrics.reset_metrics()
        for processor in self.processors.values():
            processor.reset_stats()


def create_race_pipeline(config: Optional[ToolConfig] = None, oracle_mode: str = "strict") -> RacePipeline:
    """
    Factory function to create a RacePipeline instance

    Args:
        config: Effective configuration (defaults when omitted)
        oracle_mode: "strict" or "postpone" for the oracle command

    Returns:
        Configured RacePipeline instance
    """
    return RacePipeline(config, oracle_mode)
