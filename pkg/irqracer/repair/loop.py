"""
Repair and revalidation loop

Plans are made once against the original program. Every round applies all
plans to the original, merges the generated sections and re-runs detection
on the result. A race or deadlock that survives widens the section closest
to it by one statement. Once no race survives, the ISR is also injected
inside each routine's repaired span: if some injection point gives an
outcome that neither firing before nor after the span gives, the span is
not atomic yet and its first section grows.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Set, Tuple

from ..analysis.detector import RaceWarning, WarningKey, racing_points
from ..analysis.static import StaticAnalysis, run_static_analysis
from ..config import ToolConfig
from ..errors import StepLimitExceeded
from ..frontend.ast import Location, Program, walk_block
from ..symbolic.explorer import explore_warning
from ..vm.interpreter import InterruptController, Interpreter, StepInfo, Trace
from ..vm.validator import VerdictKind, validate_race
from .holdsets import compute_hold_sets
from .ide import plan_ide_repair
from .lock_order import acquisition_sequence, compute_lock_order
from .locking import plan_lock_repair
from .merge import merge_fixes
from .patcher import apply_patches, inserted_operation_count, location_remap, unified_diff
from .plan import RepairPlan, Section, SectionKind, block_path, section_statements, widen

logger = logging.getLogger(__name__)


class RepairStatus(str, Enum):
    REPAIRED = "Repaired"
    PARTIALLY_REPAIRED = "PartiallyRepaired"


class FailureKind(str, Enum):
    RACE = "Confirmed"
    DEADLOCK = "Deadlock"
    ATOMICITY = "Atomicity"


@dataclass(frozen=True)
class RepairFailure:
    kind: FailureKind
    warning: Optional[RaceWarning] = None
    inputs: Tuple[Tuple[str, int], ...] = ()
    section: Optional[str] = None     # atomicity failures name the section to grow
    detail: str = ""

    def __str__(self) -> str:
        what = self.warning.key_text if self.warning is not None else self.section
        return f"{self.kind.value} {what}" + (f" ({self.detail})" if self.detail else "")


@dataclass
class RepairReport:
    status: RepairStatus
    plans: List[RepairPlan] = field(default_factory=list)
    iterations: int = 0
    widenings: int = 0
    inserted_operations: int = 0
    diff: str = ""
    remap: Dict[Location, Location] = field(default_factory=dict)
    surviving: List[RepairFailure] = field(default_factory=list)


Revalidator = Callable[[Program], List[RepairFailure]]


# --------------------------------------------------------------------- planning

class RepairPlanner:
    """Chooses a strategy per warning: IDE, then AL, then ECS (``repair_strategy`` narrows the chain)."""

    def __init__(self, program: Program, static: StaticAnalysis, config: ToolConfig):
        self.program = program
        self.static = static
        self.config = config
        self.hold_sets = compute_hold_sets(static.icfg, static.lock_ops)
        self.lock_order = compute_lock_order(program, static.icfg, static.lock_ops, self.hold_sets)
        self.count = 0
        self.taken: List[str] = []

    def plan(self, wn: RaceWarning) -> RepairPlan:
        ident = f"s{self.count}"
        self.count += 1
        strategy = self.config.repair_strategy
        if strategy in ("auto", "ide"):
            plan = plan_ide_repair(wn, self.static.icfg, self.hold_sets, program=self.program, ident=ident)
            if plan.repairable or strategy == "ide":
                return plan
        plan = plan_lock_repair(
            wn, self.lock_order, self.static.icfg, self.program, self.static.lock_ops, ident, self.taken,
        )
        self.taken.extend(section.lock for section in plan.sections if section.lock)
        return plan


def build_patched(p: Program, plans: Sequence[RepairPlan]) -> Program:
    patches = [op for plan in plans for op in plan.patches]
    return merge_fixes(apply_patches(p, patches))


# ------------------------------------------------------------------ revalidation

def revalidate_program(p: Program, config: Optional[ToolConfig] = None) -> List[RepairFailure]:
    """Static detection, symbolic exploration and dynamic validation; Confirmed races and deadlocks fail."""
    config = config or ToolConfig()
    static = run_static_analysis(p, config)
    points = racing_points(static.warnings)
    failures = []
    for wn in static.warnings:
        result = explore_warning(p, wn, config, points, static.symbols)
        if not result.reachable:
            continue
        verdict = validate_race(p, wn, result.assignment, config, result.occurrence, points, static.symbols)
        if verdict.kind is VerdictKind.CONFIRMED:
            failures.append(RepairFailure(FailureKind.RACE, wn, tuple(sorted(result.assignment.items()))))
        elif verdict.kind is VerdictKind.DEADLOCK:
            failures.append(RepairFailure(
                FailureKind.DEADLOCK, wn, tuple(sorted(result.assignment.items())), detail=verdict.detail,
            ))
    return failures


class _Recorder(InterruptController):
    """Depth-0 boundaries of the entry context, with whether the ISR could run there."""

    def __init__(self, entry: str, line: int, isr_locks: Set[str]):
        self.entry = entry
        self.line = line
        self.isr_locks = isr_locks
        self.steps: List[Tuple[Location, bool]] = []

    def at_boundary(self, vm, step: StepInfo):
        if step.context == self.entry and step.depth == 0:
            held = {lock for lock, holder in vm.state.lock_holder.items() if holder is not None}
            self.steps.append((step.location, vm.state.isr_enabled(self.line) and not held & self.isr_locks))
        return []


class _FireAt(InterruptController):
    """Raises the line at the n-th depth-0 boundary of the entry context."""

    def __init__(self, entry: str, index: int, line: int):
        self.entry = entry
        self.index = index
        self.line = line
        self.seen = 0

    def at_boundary(self, vm, step: StepInfo):
        if step.context != self.entry or step.depth != 0:
            return []
        self.seen += 1
        return [self.line] if self.seen - 1 == self.index else []


def _outcome(trace: Trace) -> Tuple:
    outputs = tuple(sorted((ctx, tuple(values)) for ctx, values in trace.outputs_by_context().items()))
    return outputs, tuple(sorted(trace.final_globals.items())), trace.deadlocked


def span_is_atomic(p: Program, entry: str, span: Section, line: int, inputs: Mapping[str, int],
                   config: ToolConfig) -> Tuple[bool, str]:
    """
    Inject at every open boundary inside the span and compare with firing just before or just after it

    Returns:
        (atomic, detail); spans the run never reaches count as atomic
    """
    isr = p.isr_for_line(line)
    isr_locks = {lock for group in acquisition_sequence(p, isr.name, {}) for lock in group}
    inside = {stmt.location for stmt in walk_block(tuple(section_statements(p, span)))}
    try:
        recorder = _Recorder(entry, line, isr_locks)
        Interpreter(p, inputs, config, recorder).run(entry)
        steps = recorder.steps
        start = next((k for k, (loc, _) in enumerate(steps) if loc in inside), None)
        if start is None:
            return True, "span not reached"
        end = start
        while end < len(steps) and (steps[end][0].routine != span.routine or steps[end][0] in inside):
            end += 1

        def fire_at(index: int, forced: bool) -> Tuple:
            vm = Interpreter(p, inputs, config, _FireAt(entry, index, line))
            if forced:
                vm.state.forced.add(line)
            return _outcome(vm.run(entry))

        if start == 0:
            before = _outcome(Interpreter(p, inputs, config).run(entry, prelude=[line]))
        else:
            before = fire_at(start - 1, forced=True)
        allowed = {before, fire_at(end - 1, forced=True)}
        for index in range(start, end - 1):
            location, open_ = steps[index]
            if open_ and fire_at(index, forced=False) not in allowed:
                return False, f"firing line {line} after {location} breaks {span}"
    except StepLimitExceeded:
        return True, "step limit"
    return True, ""


def atomicity_failures(p: Program, plans: Sequence[RepairPlan], inputs: Mapping[WarningKey, Mapping[str, int]],
                       config: ToolConfig) -> List[RepairFailure]:
    """One failure per (context, routine, line) group of e_i-side sections whose span is not atomic."""
    groups: Dict[Tuple[str, str, int], List[Tuple[Section, RepairPlan]]] = {}
    for plan in plans:
        wn = plan.warning
        for section in plan.sections:
            if section.routine == wn.e_i.location.routine:
                groups.setdefault((wn.e_i.context, section.routine, wn.irq_line), []).append((section, plan))

    failures = []
    for (entry, routine, line), members in sorted(groups.items()):
        body = p.routine(routine).body
        members.sort(key=lambda m: m[0].first.index)
        first, last = members[0][0], max(members, key=lambda m: m[0].last.index)[0]
        first_slot, last_slot = block_path(body, first.first), block_path(body, last.last)
        if not first_slot or not last_slot or first_slot[0].block is not last_slot[0].block:
            continue
        span = Section("span", first.kind, first.first, last.last, line=line)
        atomic, detail = span_is_atomic(p, entry, span, line, inputs.get(members[0][1].warning.key, {}), config)
        if not atomic:
            failures.append(RepairFailure(FailureKind.ATOMICITY, members[0][1].warning, section=first.ident,
                                          detail=detail))
    return failures


# ---------------------------------------------------------------------- widening

def _distance(section: Section, location: Location) -> int:
    if section.first.index <= location.index <= section.last.index:
        return 0
    return min(abs(location.index - section.first.index), abs(location.index - section.last.index))


def _nearest(plans: Sequence[RepairPlan], failure: RepairFailure) -> Optional[Tuple[RepairPlan, int]]:
    wn = failure.warning
    location = wn.e_i.location
    own = [(plan, i) for plan in plans if plan.warning.key == wn.key
           for i, s in enumerate(plan.sections) if s.routine == location.routine]
    same_resource = [(plan, i) for plan in plans if plan.warning.resource == wn.resource
                     for i, s in enumerate(plan.sections) if s.routine == location.routine]
    any_section = [(plan, i) for plan in plans for i, s in enumerate(plan.sections) if s.routine == location.routine]
    for pool in (own, same_resource, any_section):
        if pool:
            return min(pool, key=lambda m: (_distance(m[0].sections[m[1]], location), m[0].sections[m[1]].ident))
    return None


def repair_and_validate(p: Program, warnings: Sequence[RaceWarning], config: Optional[ToolConfig] = None,
                        static: Optional[StaticAnalysis] = None, revalidate: Optional[Revalidator] = None,
                        inputs: Optional[Mapping[WarningKey, Mapping[str, int]]] = None
                        ) -> Tuple[Program, RepairReport]:
    """
    Plan, patch, revalidate and widen until no confirmed race, deadlock or atomicity break survives

    Args:
        p: Checked program
        warnings: Confirmed warnings of ``p``
        static: Static analysis of ``p`` (recomputed when omitted)
        revalidate: Program -> surviving failures; defaults to the full detection pipeline
        inputs: Validating input assignment per warning key, used for the atomicity check

    Returns:
        (patched program, RepairReport)
    """
    config = config or ToolConfig()
    warnings = sorted(warnings, key=lambda w: w.key)
    if not warnings:
        return p, RepairReport(RepairStatus.REPAIRED)

    static = static or run_static_analysis(p, config)
    revalidate = revalidate or (lambda program: revalidate_program(program, config))
    inputs = dict(inputs or {})
    planner = RepairPlanner(p, static, config)
    plans = [planner.plan(wn) for wn in warnings]
    for plan in plans:
        logger.debug(f"plan {plan.describe()}")

    report = RepairReport(RepairStatus.PARTIALLY_REPAIRED, plans)
    while True:
        report.iterations += 1
        patched = build_patched(p, plans)
        failures = revalidate(patched)
        for failure in failures:
            if failure.warning is not None and failure.warning.key not in inputs:
                inputs[failure.warning.key] = dict(failure.inputs)
        if not failures:
            failures = atomicity_failures(patched, plans, inputs, config)
        if not failures or report.widenings >= config.max_widening_attempts:
            break
        if not _respond(p, plans, failures, planner):
            break
        report.widenings += 1

    report.status = RepairStatus.PARTIALLY_REPAIRED if failures else RepairStatus.REPAIRED
    report.surviving = failures
    report.inserted_operations = inserted_operation_count(patched)
    report.diff = unified_diff(p, patched)
    report.remap = location_remap(patched)
    logger.debug(
        f"repair: {report.status.value} after {report.iterations} round(s), "
        f"{report.inserted_operations} inserted operation(s), {len(failures)} surviving"
    )
    return patched, report


def _respond(p: Program, plans: List[RepairPlan], failures: Sequence[RepairFailure],
             planner: RepairPlanner) -> bool:
    """Widen or add plans for the failures of one round; False when nothing changed."""
    changed = False
    grown: Set[str] = set()
    planned = {plan.warning.key for plan in plans}

    for failure in failures:
        if failure.kind is FailureKind.ATOMICITY:
            for plan in plans:
                for i, section in enumerate(plan.sections):
                    if section.ident == failure.section and section.ident not in grown:
                        wider = widen(p, section, forward=True)
                        if wider is not None:
                            plan.sections[i] = wider
                            grown.add(section.ident)
                            changed = True
            continue

        wn = failure.warning
        if wn.key not in planned:
            try:
                p.statement_at(wn.e_i.location)
                p.statement_at(wn.e_j.location)
            except KeyError:
                continue
            plan = planner.plan(wn)
            plans.append(plan)
            planned.add(wn.key)
            changed = changed or plan.repairable
            logger.debug(f"plan for surfaced warning: {plan.describe()}")
            continue

        match = _nearest(plans, failure)
        if match is None:
            continue
        plan, i = match
        section = plan.sections[i]
        if section.ident in grown:
            continue
        if failure.kind is FailureKind.DEADLOCK and section.kind is SectionKind.LOCK:
            # a wider lock section cannot release what the ISR waits for
            continue
        forward = wn.e_i.location.index >= section.first.index
        wider = widen(p, section, forward)
        if wider is not None:
            logger.debug(f"widening {section} -> {wider} for {failure}")
            plan.sections[i] = wider
            grown.add(section.ident)
            changed = True
    return changed
