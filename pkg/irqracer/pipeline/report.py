"""
Versioned JSON report built from a PipelineRun
"""

import json
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .. import __version__
from ..analysis.detector import AccessEvent, WarningStatus
from ..repair.loop import RepairReport
from ..vm.oracle import OracleResult
from ..vm.validator import VerdictKind
from .run import PipelineRun, WarningRecord

SCHEMA_VERSION = 1


class EventReport(BaseModel):
    context: str
    routine: str
    location: str
    line: int = Field(description="Source line of the accessing statement")
    access: str


class SymbolicReport(BaseModel):
    result: str
    reason: Optional[str] = None
    assignment: Dict[str, int] = Field(default_factory=dict)
    occurrence: int = 1
    blocked: bool = False


class DynamicReport(BaseModel):
    verdict: str
    harmful: bool = False
    postponed: bool = False
    fired_at: Optional[str] = None
    detail: str = ""
    trace: Optional[str] = Field(default=None, description="Line-oriented dump of the injected run")


class WarningReport(BaseModel):
    key: str
    e_i: EventReport
    e_j: EventReport
    resource: str
    status: str
    symbolic: Optional[SymbolicReport] = None
    dynamic: Optional[DynamicReport] = None
    error: Optional[str] = None
    timings: Optional[Dict[str, float]] = None


class ProgramReport(BaseModel):
    path: str
    sha256: str
    tasks: int
    isrs: int
    funcs: int


class PlanReport(BaseModel):
    warning: str
    strategy: str
    sections: List[str] = Field(default_factory=list)
    moves: List[str] = Field(default_factory=list)
    reason: str = ""


class RepairSection(BaseModel):
    status: str
    plans: List[PlanReport]
    iterations: int
    widenings: int
    inserted_operations: int
    diff: str
    remap: Dict[str, str] = Field(default_factory=dict, description="Original location -> patched location")
    surviving: List[str] = Field(default_factory=list)


class OracleRaceReport(BaseModel):
    key: str
    entry: str
    isr: str
    assignment: Dict[str, int]
    postponed: bool = False


class OracleSection(BaseModel):
    races: List[OracleRaceReport]
    deadlocks: List[str]
    assignments: int
    runs: int
    aborted: int


class PipelineReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    tool_version: str = __version__
    command: str
    program: ProgramReport
    config: Dict[str, Any]
    warnings: List[WarningReport] = Field(default_factory=list)
    summary: Dict[str, int] = Field(default_factory=dict)
    errors: List[str] = Field(default_factory=list)
    repair: Optional[RepairSection] = None
    oracle: Optional[OracleSection] = None
    timings: Optional[Dict[str, float]] = None

    def to_json(self) -> str:
        return json.dumps(self.model_dump(exclude_none=True), indent=2, sort_keys=True) + "\n"


def _event(event: AccessEvent) -> EventReport:
    return EventReport(
        context=event.context, routine=event.routine, location=str(event.location),
        line=event.line, access=event.access.value,
    )


def rank_key(record: WarningRecord):
    """Confirmed first, harmful before harmless, refuted last; ties by warning key."""
    status = record.status
    if status is WarningStatus.CONFIRMED:
        group = 0 if record.verdict is not None and record.verdict.harmful else 1
    elif status is WarningStatus.REFUTED_DYNAMIC or status is WarningStatus.INFEASIBLE:
        group = 3
    else:
        group = 2
    return (group, record.warning.key)


def _warning(record: WarningRecord, timings: bool) -> WarningReport:
    wn = record.warning
    symbolic = dynamic = None
    if record.symbolic is not None:
        result = record.symbolic
        symbolic = SymbolicReport(
            result=result.kind.value,
            reason=result.reason.value if result.reason is not None else None,
            assignment=dict(sorted(result.assignment.items())),
            occurrence=result.occurrence,
            blocked=result.blocked,
        )
    if record.verdict is not None:
        verdict = record.verdict
        dynamic = DynamicReport(
            verdict=verdict.kind.value,
            harmful=verdict.harmful,
            postponed=verdict.postponed,
            fired_at=str(verdict.fired_at) if verdict.fired_at is not None else None,
            detail=verdict.detail,
            trace=verdict.trace.dump() if verdict.trace is not None and verdict.kind is VerdictKind.CONFIRMED else None,
        )
    return WarningReport(
        key=wn.key_text, e_i=_event(wn.e_i), e_j=_event(wn.e_j), resource=wn.resource,
        status=record.status.value, symbolic=symbolic, dynamic=dynamic, error=record.error,
        timings=dict(record.timings) if timings and record.timings else None,
    )


def _repair(report: RepairReport) -> RepairSection:
    plans = [
        PlanReport(
            warning=plan.warning.key_text, strategy=plan.strategy.value,
            sections=[str(s) for s in plan.sections], moves=[str(m) for m in plan.moves], reason=plan.reason,
        )
        for plan in report.plans
    ]
    return RepairSection(
        status=report.status.value, plans=plans, iterations=report.iterations, widenings=report.widenings,
        inserted_operations=report.inserted_operations, diff=report.diff,
        remap={str(k): str(v) for k, v in sorted(report.remap.items(), key=lambda kv: kv[0])},
        surviving=[str(f) for f in report.surviving],
    )


def _oracle(result: OracleResult) -> OracleSection:
    races = [
        OracleRaceReport(
            key=f"{race.loc_i}->{race.loc_j}[{race.resource}]", entry=race.entry, isr=race.isr,
            assignment=dict(race.assignment), postponed=race.postponed,
        )
        for _, race in sorted(result.races.items(), key=lambda kv: kv[0])
    ]
    deadlocks = [f"{entry}@{location}<-{isr}" for entry, location, isr in sorted(result.deadlocks)]
    return OracleSection(
        races=races, deadlocks=deadlocks, assignments=result.assignments, runs=result.runs, aborted=result.aborted,
    )


def build_report(run: PipelineRun) -> PipelineReport:
    """Assemble the report; warning order depends only on statuses and keys."""
    timings = run.config.report_timings
    records = sorted(run.records, key=rank_key)
    summary = {status.value: 0 for status in WarningStatus}
    for record in records:
        summary[record.status.value] += 1
    program = run.program
    return PipelineReport(
        command=run.command,
        program=ProgramReport(
            path=run.path, sha256=run.digest, tasks=len(program.tasks), isrs=len(program.isrs),
            funcs=len(program.routines) - len(program.contexts),
        ),
        config=run.config.model_dump(),
        warnings=[_warning(r, timings) for r in records],
        summary=summary,
        errors=list(run.errors),
        repair=_repair(run.repair) if run.repair is not None else None,
        oracle=_oracle(run.oracle) if run.oracle is not None else None,
        timings=dict(run.stage_times) if timings else None,
    )
