"""
Exhaustive race oracle for bounded programs

For every input assignment in a finite space and every entry context, one
uninterrupted run is observed. At each boundary of the entry context the
machine is forked and every enabled preempting ISR is fired on the fork; the
ISR's accesses are paired with the accesses of the step that just ran. The
result is the ground truth the static and dynamic stages are tested against.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from ..config import ToolConfig
from ..errors import BudgetExceeded, StepLimitExceeded
from ..frontend.ast import Access, IntLit, Location, Program, stmt_exprs, walk_expr
from ..frontend.symbols import SymbolTable
from ..symbolic.inputs import input_points
from . import arith
from .interpreter import EventKind, InterruptController, Interpreter, StepAccess, StepInfo

logger = logging.getLogger(__name__)

RaceKey = Tuple[Location, Location, str]


@dataclass(frozen=True)
class OracleRace:
    loc_i: Location
    loc_j: Location
    resource: str
    entry: str
    isr: str
    assignment: Tuple[Tuple[str, int], ...] = ()
    postponed: bool = False

    @property
    def key(self) -> RaceKey:
        return (self.loc_i, self.loc_j, self.resource)


@dataclass
class OracleResult:
    races: Dict[RaceKey, OracleRace] = field(default_factory=dict)
    deadlocks: Set[Tuple[str, Location, str]] = field(default_factory=set)
    assignments: int = 0
    runs: int = 0
    aborted: int = 0

    @property
    def keys(self) -> Set[RaceKey]:
        return set(self.races)

    def add(self, race: OracleRace) -> None:
        self.races.setdefault(race.key, race)


def program_literals(p: Program) -> Set[int]:
    values = set(p.const_values.values())
    values.update(g.init for g in p.globals)
    for routine in p.routines:
        for stmt in routine.statements():
            for expr in stmt_exprs(stmt):
                values.update(node.value for node in walk_expr(expr) if isinstance(node, IntLit))
    return values


def default_input_space(p: Program, config: Optional[ToolConfig] = None) -> Dict[str, List[int]]:
    """{0, 1, max} plus every program literal c and c +/- 1, per input point, masked to its width."""
    config = config or ToolConfig()
    literals = program_literals(p)
    space = {}
    for name, point in input_points(p, config.word_width).items():
        width_mask = arith.mask(point.width)
        values = {0, 1, width_mask}
        for c in literals:
            values.update(((c - 1) & width_mask, c & width_mask, (c + 1) & width_mask))
        space[name] = sorted(values)
    return space


def _pairs(step_accesses: Iterable[StepAccess], isr_accesses) -> Iterable[Tuple[Location, str]]:
    for mine in step_accesses:
        for theirs in isr_accesses:
            if theirs.resource != mine.resource:
                continue
            if mine.access is Access.READ and theirs.access is Access.READ:
                continue
            yield theirs.location, mine.resource


class _Observer(InterruptController):
    """Forks the run at every boundary of the entry context and fires each preempting ISR."""

    def __init__(self, program: Program, entry: str, isrs: Sequence[str], result: OracleResult,
                 assignment: Tuple[Tuple[str, int], ...], postpone: bool, racing_points: Set[Location]):
        self.program = program
        self.entry = entry
        self.isrs = list(isrs)
        self.result = result
        self.assignment = assignment
        self.postpone = postpone
        self.racing_points = racing_points
        self.pending: Dict[str, List[StepInfo]] = {isr: [] for isr in self.isrs}
        self.enabled_before: Dict[str, bool] = {isr: True for isr in self.isrs}

    def at_boundary(self, vm: Interpreter, step: StepInfo):
        if step.context != self.entry or step.depth != 0:
            return []
        for isr in self.isrs:
            line = self.program.routine(isr).irq_line
            waiting = self.pending[isr]
            was_enabled = self.enabled_before[isr]
            enabled = vm.state.isr_enabled(line)
            self.enabled_before[isr] = enabled
            if step.location in self.racing_points:
                waiting.clear()
            if not enabled:
                # only a step that ran unmasked can leave a request pending
                if self.postpone and was_enabled:
                    waiting.append(step)
                continue
            self._inject(vm, isr, line, step, postponed=False)
            for earlier in waiting:
                self._inject(vm, isr, line, earlier, postponed=True, fork_from=step)
            waiting.clear()
        return []

    def at_exit(self, vm) -> None:
        for waiting in self.pending.values():
            waiting.clear()

    def _inject(self, vm: Interpreter, isr: str, line: int, step: StepInfo, postponed: bool,
                fork_from: Optional[StepInfo] = None) -> None:
        twin = vm.fork()
        start = len(twin.trace.events)
        trace = twin.fire(line)
        where = fork_from or step
        if trace.deadlocked:
            self.result.deadlocks.add((self.entry, where.location, isr))
        isr_accesses = [
            e for e in trace.events[start:] if e.kind is EventKind.ACCESS and e.context == isr
        ]
        for loc_j, resource in _pairs(step.accesses, isr_accesses):
            self.result.add(OracleRace(step.location, loc_j, resource, self.entry, isr, self.assignment, postponed))


def exhaustive_oracle(p: Program, input_space: Optional[Mapping[str, Sequence[int]]] = None,
                      config: Optional[ToolConfig] = None, mode: str = "strict",
                      racing_points: Optional[Iterable[Location]] = None) -> OracleResult:
    """
    Enumerate inputs and single injection points

    Args:
        p: Checked program
        input_space: Values per input point; defaults to default_input_space
        mode: "strict" fires only right after a step; "postpone" also keeps a
            disabled request pending until the ISR becomes enabled, up to the next racing point
        racing_points: Locations that close a postponement window

    Returns:
        OracleResult with races keyed like warnings and deadlocks as (entry, location, isr)

    Raises:
        BudgetExceeded: the input space is larger than config.oracle_budget
    """
    config = config or ToolConfig()
    if mode not in ("strict", "postpone"):
        raise ValueError(f"unknown oracle mode {mode!r}")
    space = dict(input_space) if input_space is not None else default_input_space(p, config)
    names = sorted(space)
    needed = 1
    for name in names:
        needed *= max(1, len(space[name]))
    if needed > config.oracle_budget:
        raise BudgetExceeded(needed, config.oracle_budget)

    symbols = SymbolTable(p)
    points = set(racing_points or ())
    result = OracleResult()
    entries = [r.name for r in p.contexts]

    for values in itertools.product(*(space[name] for name in names)):
        assignment = tuple(zip(names, values))
        inputs = dict(assignment)
        result.assignments += 1
        for entry in entries:
            isrs = [r.name for r in p.isrs if p.preempts(r.name, entry)]
            if not isrs:
                continue
            observer = _Observer(p, entry, isrs, result, assignment, mode == "postpone", points)
            result.runs += 1
            try:
                Interpreter(p, inputs, config, observer, symbols).run(entry)
            except StepLimitExceeded:
                result.aborted += 1

    logger.debug(
        f"Oracle: {len(result.races)} race(s), {len(result.deadlocks)} deadlock(s) over "
        f"{result.assignments} assignment(s), {result.runs} run(s)"
    )
    return result
