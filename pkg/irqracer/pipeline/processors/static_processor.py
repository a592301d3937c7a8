"""
Static stage: aliases, shared resources, reduced graphs and potential race warnings
"""

import logging
from typing import Dict

from ...analysis.detector import racing_points
from ...analysis.static import run_static_analysis
from ..run import PipelineRun, WarningRecord
from .base_processor import BaseStageProcessor

logger = logging.getLogger(__name__)


class StaticProcessor(BaseStageProcessor):
    stage = "static"

    def process(self, run: PipelineRun) -> Dict[str, int]:
        static = run_static_analysis(run.program, self.config)
        run.static = static
        run.records = [WarningRecord(warning) for warning in static.warnings]
        run.racing_points = racing_points(static.warnings)
        self._update_stats(True, 0.0)
        logger.debug(f"{run.name}: {len(run.records)} static warning(s)")
        return {
            "shared_resources": len(static.srs),
            "interrupt_ops": len(static.itrl),
            "lock_ops": len(static.lock_ops),
            "warnings": len(run.records),
        }
