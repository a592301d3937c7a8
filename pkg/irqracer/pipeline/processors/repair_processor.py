"""
Repair stage: patch every confirmed race and revalidate the patched program
"""

import logging
import time
from typing import Dict

from ...repair.loop import RepairStatus, repair_and_validate
from ..run import PipelineRun
from .base_processor import BaseStageProcessor

logger = logging.getLogger(__name__)


class RepairProcessor(BaseStageProcessor):
    stage = "repair"

    def process(self, run: PipelineRun) -> Dict[str, int]:
        confirmed = [r for r in run.confirmed() if r.error is None]
        if not confirmed:
            run.patched = run.program
            run.repair = None
            return {"confirmed": 0}

        inputs = {r.warning.key: dict(r.symbolic.assignment) for r in confirmed if r.symbolic is not None}
        start = time.time()
        try:
            patched, report = repair_and_validate(
                run.program, [r.warning for r in confirmed], self.config, run.static, inputs=inputs,
            )
        except Exception:
            self._update_stats(False, time.time() - start)
            raise
        self._update_stats(True, time.time() - start)

        run.patched = patched
        run.repair = report
        for plan in report.plans:
            self.pipeline_logger.log_repair_step(
                plan.strategy.value, report.iterations, len(report.surviving), plan.describe(),
            )
        if report.status is RepairStatus.PARTIALLY_REPAIRED:
            for failure in report.surviving:
                logger.warning(f"still failing after repair: {failure.kind.value} {failure.warning.key_text}")

        return {
            "confirmed": len(confirmed),
            "plans": len(report.plans),
            "unrepairable": sum(1 for plan in report.plans if not plan.repairable),
            "iterations": report.iterations,
            "widenings": report.widenings,
            "inserted_operations": report.inserted_operations,
            "surviving": len(report.surviving),
        }
