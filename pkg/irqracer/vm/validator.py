"""
Dynamic race validation

The warning's first context runs twice with the same inputs: once without
interrupts (baseline) and once with the second context's interrupt raised
right after the chosen execution of e_i. A line that is disabled at that
point stays pending until the ISR can fire, but only until the next racing
point of the first context or its exit; past that window the request is
dropped.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from ..config import ToolConfig
from ..errors import StepLimitExceeded
from ..frontend.ast import Location, Program
from ..frontend.symbols import SymbolTable
from .interpreter import EventKind, InterruptController, Interpreter, StepInfo, Trace

logger = logging.getLogger(__name__)


class VerdictKind(str, Enum):
    CONFIRMED = "Confirmed"
    REFUTED_DISABLED = "RefutedDisabled"
    REFUTED_NO_ACCESS = "RefutedNoAccess"
    NOT_COVERED = "NotCovered"
    DEADLOCK = "Deadlock"


@dataclass
class ValidationVerdict:
    kind: VerdictKind
    trace: Optional[Trace] = None
    harmful: bool = False
    postponed: bool = False
    fired_at: Optional[Location] = None
    detail: str = ""

    @property
    def confirmed(self) -> bool:
        return self.kind is VerdictKind.CONFIRMED


class RaceController(InterruptController):
    """Raises one line after the n-th execution of a trigger location in the entry context."""

    def __init__(self, entry: str, trigger: Location, line: int, occurrence: int = 1,
                 racing_points: Iterable[Location] = ()):
        self.entry = entry
        self.trigger = trigger
        self.line = line
        self.occurrence = occurrence
        self.racing_points = frozenset(racing_points)
        self.triggered = False
        self.waiting = False
        self.fired = False
        self.cancelled = False
        self.steps_waited = 0
        self.fired_at: Optional[Location] = None
        self.trigger_event = 0
        self._last_entry_location: Optional[Location] = None
        self._enabled_before = True

    def _settle(self, vm: Interpreter) -> None:
        if self.waiting and self.line not in vm.state.pending:
            self.waiting = False
            self.fired = True
            self.fired_at = self._last_entry_location

    def at_boundary(self, vm, step: StepInfo):
        self._settle(vm)
        in_entry = step.context == self.entry and step.depth == 0

        if not self.triggered:
            enabled_before = self._enabled_before
            if in_entry:
                self._enabled_before = vm.state.isr_enabled(self.line)
            if in_entry and step.location == self.trigger and step.occurrence == self.occurrence:
                self.triggered = True
                if not enabled_before and not self._enabled_before:
                    # e_i ran with the line masked: no request to keep pending
                    return []
                self.waiting = True
                self.trigger_event = len(vm.trace.events)
                self._last_entry_location = step.location
                return [self.line]
            return []

        if self.waiting and in_entry:
            self.steps_waited += 1
            self._last_entry_location = step.location
            if step.location in self.racing_points:
                vm.cancel(self.line)
                self.waiting = False
                self.cancelled = True
        return []

    def at_exit(self, vm) -> None:
        self._settle(vm)
        if self.waiting:
            vm.cancel(self.line)
            self.waiting = False
            self.cancelled = True

    @property
    def postponed(self) -> bool:
        return self.fired and self.steps_waited > 0


def isr_activation(trace: Trace, isr: str, start: int = 0) -> Sequence:
    """Events of the first activation of ``isr`` recorded at or after ``start``."""
    events = trace.events
    begin = None
    for index in range(start, len(events)):
        event = events[index]
        if event.kind is EventKind.ISR_ENTRY and event.context == isr:
            begin = index
            break
    if begin is None:
        return []
    for index in range(begin + 1, len(events)):
        event = events[index]
        if event.kind is EventKind.ISR_EXIT and event.context == isr:
            return events[begin:index + 1]
    return events[begin:]


def validate_race(program: Program, wn, inputs: Optional[Mapping[str, int]] = None,
                  config: Optional[ToolConfig] = None, occurrence: int = 1,
                  racing_points: Optional[Iterable[Location]] = None,
                  symbols: Optional[SymbolTable] = None) -> ValidationVerdict:
    """
    Check a warning by forcing its ISR right after e_i

    Args:
        program: Checked program
        wn: RaceWarning
        inputs: Input assignment (symbolic result or user supplied)
        occurrence: Which execution of e_i to fire after
        racing_points: Locations that close the postponement window (defaults to e_i alone)

    Returns:
        ValidationVerdict; Confirmed only when the fired ISR performed the e_j access
    """
    config = config or ToolConfig()
    symbols = symbols or SymbolTable(program)
    entry = wn.e_i.context
    isr = wn.e_j.context
    line = program.routine(isr).irq_line
    points = set(racing_points) if racing_points is not None else {wn.e_i.location}

    try:
        baseline = Interpreter(program, inputs, config, None, symbols).run(entry)
        controller = RaceController(entry, wn.e_i.location, line, occurrence, points)
        injected = Interpreter(program, inputs, config, controller, symbols).run(entry)
    except StepLimitExceeded as exc:
        return ValidationVerdict(VerdictKind.NOT_COVERED, detail=str(exc))

    if not controller.triggered:
        detail = injected.fault or f"{wn.e_i.location} occurrence {occurrence} not reached"
        return ValidationVerdict(VerdictKind.NOT_COVERED, injected, detail=detail)
    if not controller.fired:
        return ValidationVerdict(
            VerdictKind.REFUTED_DISABLED, injected,
            detail=f"line {line} stayed disabled after {wn.e_i.location}",
        )

    activation = isr_activation(injected, isr, controller.trigger_event)
    if injected.deadlocked:
        return ValidationVerdict(
            VerdictKind.DEADLOCK, injected, postponed=controller.postponed, fired_at=controller.fired_at,
            detail=f"blocked on {injected.blocked_on}",
        )

    accessed = any(
        e.kind is EventKind.ACCESS and e.location == wn.e_j.location and e.resource == wn.resource
        for e in activation
    )
    if not accessed:
        return ValidationVerdict(
            VerdictKind.REFUTED_NO_ACCESS, injected, postponed=controller.postponed,
            fired_at=controller.fired_at, detail=f"{isr} did not access {wn.resource} at {wn.e_j.location}",
        )

    harmful = injected.outputs != baseline.outputs
    logger.debug(
        f"{wn.key_text}: confirmed (harmful={harmful}, postponed={controller.postponed})"
    )
    return ValidationVerdict(
        VerdictKind.CONFIRMED, injected, harmful=harmful, postponed=controller.postponed,
        fired_at=controller.fired_at,
    )


def replay_covers(program: Program, wn, inputs: Mapping[str, int], occurrence: int = 1,
                  config: Optional[ToolConfig] = None) -> bool:
    """Whether firing right after the given e_i occurrence covers e_i then e_j."""
    config = config or ToolConfig()
    line = program.routine(wn.e_j.context).irq_line
    controller = RaceController(wn.e_i.context, wn.e_i.location, line, occurrence)
    vm = Interpreter(program, inputs, config, controller)
    # the symbolic result promises coverage, not enabledness
    vm.state.forced.add(line)
    trace = vm.run(wn.e_i.context)
    if not controller.triggered:
        return False
    activation = isr_activation(trace, wn.e_j.context, controller.trigger_event)
    return any(e.kind is EventKind.ACCESS and e.location == wn.e_j.location for e in activation)
