"""
Race pipeline: stage processors, run state, metrics and the JSON report
"""

from .race_pipeline import COMMAND_STAGES, RacePipeline, create_race_pipeline
from .report import SCHEMA_VERSION, PipelineReport, build_report, rank_key
from .run import PipelineRun, WarningRecord

__all__ = [
    "COMMAND_STAGES", "PipelineReport", "PipelineRun", "RacePipeline", "SCHEMA_VERSION", "WarningRecord",
    "build_report", "create_race_pipeline", "rank_key",
]
