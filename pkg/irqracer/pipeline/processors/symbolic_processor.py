"""
Symbolic stage: guided exploration for an input that reaches e_i and then e_j
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, FrozenSet, List, Tuple

from ...analysis.detector import RaceWarning, WarningStatus
from ...config import ToolConfig
from ...frontend.ast import Location, Program
from ...symbolic.explorer import SymExecKind, SymExecResult, explore_warning
from ...vm.validator import replay_covers
from ..run import PipelineRun, WarningRecord
from .base_processor import BaseStageProcessor

logger = logging.getLogger(__name__)

_STATUS = {
    SymExecKind.REACHABLE: WarningStatus.INPUT_FOUND,
    SymExecKind.INFEASIBLE: WarningStatus.INFEASIBLE,
    SymExecKind.INCONCLUSIVE: WarningStatus.INCONCLUSIVE,
}


def _explore_job(job: Tuple[Program, RaceWarning, ToolConfig, FrozenSet[Location]]) -> Tuple[SymExecResult, float]:
    program, warning, config, points = job
    start = time.time()
    result = explore_warning(program, warning, config, points)
    return result, time.time() - start


class SymbolicProcessor(BaseStageProcessor):
    stage = "symbolic"

    def process(self, run: PipelineRun) -> Dict[str, int]:
        records = [r for r in run.records if r.error is None]
        if self.config.workers > 1 and len(records) > 1:
            self._fan_out(run, records)
        else:
            for record in records:
                result = self._timed(
                    record, explore_warning, run.program, record.warning, self.config, run.racing_points,
                    run.static.symbols if run.static else None,
                )
                if result is not None:
                    self._conclude(run, record, result)

        counts: Dict[str, int] = {}
        for record in run.records:
            counts[record.status.value] = counts.get(record.status.value, 0) + 1
        return counts

    def _fan_out(self, run: PipelineRun, records: List[WarningRecord]) -> None:
        jobs = [(run.program, r.warning, self.config, run.racing_points) for r in records]
        with ProcessPoolExecutor(max_workers=self.config.workers) as executor:
            futures = [executor.submit(_explore_job, job) for job in jobs]
            for record, future in zip(records, futures):
                try:
                    result, duration = future.result()
                except Exception as e:
                    logger.error(f"symbolic failed on {record.key_text}: {e}")
                    record.error = f"symbolic: {e}"
                    self._update_stats(False, 0.0)
                    continue
                record.timings[self.stage] = round(duration, 6)
                self._update_stats(True, duration)
                self._conclude(run, record, result)

    def _conclude(self, run: PipelineRun, record: WarningRecord, result: SymExecResult) -> None:
        record.symbolic = result
        record.warning.status = _STATUS[result.kind]
        detail = result.reason.value if result.reason is not None else None
        self.pipeline_logger.log_warning_verdict(record.key_text, self.stage, result.kind.value, detail)
        if self.config.assert_replay and result.reachable and not result.blocked:
            assert replay_covers(run.program, record.warning, result.assignment, result.occurrence, self.config), \
                f"replay of {record.key_text} with {result.assignment} does not cover e_i then e_j"
