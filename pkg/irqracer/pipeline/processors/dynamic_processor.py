"""
Dynamic stage: replay each found input with the ISR forced right after e_i
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, FrozenSet, List, Mapping, Tuple

from ...analysis.detector import RaceWarning, WarningStatus
from ...config import ToolConfig
from ...frontend.ast import Location, Program
from ...vm.validator import ValidationVerdict, VerdictKind, validate_race
from ..run import PipelineRun, WarningRecord
from .base_processor import BaseStageProcessor

logger = logging.getLogger(__name__)

_STATUS = {
    VerdictKind.CONFIRMED: WarningStatus.CONFIRMED,
    VerdictKind.REFUTED_DISABLED: WarningStatus.REFUTED_DYNAMIC,
    VerdictKind.REFUTED_NO_ACCESS: WarningStatus.REFUTED_DYNAMIC,
    VerdictKind.DEADLOCK: WarningStatus.REFUTED_DYNAMIC,
    VerdictKind.NOT_COVERED: WarningStatus.INCONCLUSIVE,
}


def _validate_job(job: Tuple[Program, RaceWarning, Mapping[str, int], ToolConfig, int, FrozenSet[Location]]
                  ) -> Tuple[ValidationVerdict, float]:
    program, warning, inputs, config, occurrence, points = job
    start = time.time()
    verdict = validate_race(program, warning, inputs, config, occurrence, points)
    return verdict, time.time() - start


class DynamicProcessor(BaseStageProcessor):
    stage = "dynamic"

    def process(self, run: PipelineRun) -> Dict[str, int]:
        counts: Dict[str, int] = {kind.value: 0 for kind in VerdictKind}
        records = [
            r for r in run.records_with(WarningStatus.INPUT_FOUND)
            if r.error is None and r.symbolic is not None
        ]
        if self.config.workers > 1 and len(records) > 1:
            verdicts = self._fan_out(run, records)
        else:
            symbols = run.static.symbols if run.static else None
            verdicts = [
                self._timed(
                    record, validate_race, run.program, record.warning, record.symbolic.assignment, self.config,
                    record.symbolic.occurrence, run.racing_points, symbols,
                )
                for record in records
            ]
        for record, verdict in zip(records, verdicts):
            if verdict is None:
                continue
            self._conclude(record, verdict)
            counts[verdict.kind.value] += 1
        return counts

    def _fan_out(self, run: PipelineRun, records: List[WarningRecord]) -> List[ValidationVerdict]:
        jobs = [
            (run.program, r.warning, r.symbolic.assignment, self.config, r.symbolic.occurrence, run.racing_points)
            for r in records
        ]
        verdicts = []
        with ProcessPoolExecutor(max_workers=self.config.workers) as executor:
            futures = [executor.submit(_validate_job, job) for job in jobs]
            for record, future in zip(records, futures):
                try:
                    verdict, duration = future.result()
                except AssertionError:
                    raise
                except Exception as e:
                    logger.error(f"dynamic failed on {record.key_text}: {e}")
                    record.error = f"dynamic: {e}"
                    self._update_stats(False, 0.0)
                    verdicts.append(None)
                    continue
                record.timings[self.stage] = round(duration, 6)
                self._update_stats(True, duration)
                verdicts.append(verdict)
        return verdicts

    def _conclude(self, record: WarningRecord, verdict) -> None:
        record.verdict = verdict
        record.warning.status = _STATUS[verdict.kind]
        record.warning.notes["verdict"] = verdict.kind.value
        if verdict.confirmed:
            record.warning.notes["harmful"] = str(verdict.harmful).lower()
        if verdict.kind is VerdictKind.DEADLOCK:
            logger.warning(f"{record.key_text}: firing the ISR deadlocked ({verdict.detail})")
        self.pipeline_logger.log_warning_verdict(record.key_text, self.stage, verdict.kind.value, verdict.detail or None)
