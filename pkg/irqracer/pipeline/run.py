"""
State carried through the pipeline stages for one program
"""

import hashlib
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional

from ..analysis.detector import RaceWarning, WarningStatus
from ..analysis.static import StaticAnalysis
from ..config import ToolConfig
from ..frontend.ast import Location, Program
from ..repair.loop import RepairReport
from ..symbolic.explorer import SymExecResult
from ..vm.oracle import OracleResult
from ..vm.validator import ValidationVerdict


@dataclass
class WarningRecord:
    """One static warning and what each later stage concluded about it."""
    warning: RaceWarning
    symbolic: Optional[SymExecResult] = None
    verdict: Optional[ValidationVerdict] = None
    error: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def key_text(self) -> str:
        return self.warning.key_text

    @property
    def status(self) -> WarningStatus:
        return self.warning.status


@dataclass
class PipelineRun:
    program: Program
    config: ToolConfig
    source: str = ""
    path: str = ""
    command: str = "detect"
    static: Optional[StaticAnalysis] = None
    records: List[WarningRecord] = field(default_factory=list)
    racing_points: FrozenSet[Location] = frozenset()
    patched: Optional[Program] = None
    repair: Optional[RepairReport] = None
    oracle: Optional[OracleResult] = None
    stage_times: Dict[str, float] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.source.encode("utf-8")).hexdigest()

    @property
    def name(self) -> str:
        return self.path or "<memory>"

    def records_with(self, *statuses: WarningStatus) -> List[WarningRecord]:
        return [r for r in self.records if r.status in statuses]

    def confirmed(self) -> List[WarningRecord]:
        return self.records_with(WarningStatus.CONFIRMED)
