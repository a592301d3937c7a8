"""
Interrupt operations and interrupt status tracking

The interrupt operation list records every explicit enable/disable plus every
write to an interrupt-controlling register. Such writes are taken as
enabling every line, which over-approximates what the hardware may do.

Interrupt status vectors carry one bit per interrupt line (1 = disabled).
They are propagated over a component graph in topological order, joining
with bitwise AND so that "enabled" wins wherever paths meet.
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from ..frontend.ast import Assign, IrqDisable, IrqEnable, Location, Program
from ..graphs.icfg import ControlFlowGraph, NodeKind
from .resources import context_routines

logger = logging.getLogger(__name__)


class IrqAction(str, Enum):
    ENABLE = "enable"
    DISABLE = "disable"


@dataclass(frozen=True)
class InterruptOperation:
    routine: str
    location: Location
    line: Optional[int]     # None = every line
    action: IrqAction
    implicit: bool = False  # interrupt-controlling register write

    def __str__(self) -> str:
        line = "all" if self.line is None else str(self.line)
        return f"<{self.routine}, {self.location.index}, {line}, {self.action.value}>"


def identify_interrupt_ops(program: Program, interrupt_registers: Iterable[str] = ("IER",)
                           ) -> List[InterruptOperation]:
    """
    Build the interrupt operation list

    Args:
        program: Checked program
        interrupt_registers: Registers whose writes implicitly enable interrupts

    Returns:
        Operations in routine declaration order, then source order
    """
    controlling = set(interrupt_registers) & program.register_names
    ops: List[InterruptOperation] = []
    for routine in program.routines:
        for stmt in routine.statements():
            if isinstance(stmt, IrqDisable):
                ops.append(InterruptOperation(routine.name, stmt.location, stmt.irq, IrqAction.DISABLE))
            elif isinstance(stmt, IrqEnable):
                ops.append(InterruptOperation(routine.name, stmt.location, stmt.irq, IrqAction.ENABLE))
            elif isinstance(stmt, Assign) and stmt.target in controlling:
                ops.append(InterruptOperation(routine.name, stmt.location, None, IrqAction.ENABLE, implicit=True))
    return ops


@dataclass(frozen=True)
class InterruptStatusVector:
    lines: Tuple[int, ...]
    disabled: FrozenSet[int] = frozenset()

    def bit(self, line: int) -> int:
        return int(line in self.disabled)

    def enabled(self, line: int) -> bool:
        return line not in self.disabled

    def bits(self) -> Tuple[int, ...]:
        return tuple(self.bit(line) for line in self.lines)

    def disable(self, line: Optional[int]) -> "InterruptStatusVector":
        lines = self.lines if line is None else (line,)
        return InterruptStatusVector(self.lines, self.disabled | frozenset(lines))

    def enable(self, line: Optional[int]) -> "InterruptStatusVector":
        if line is None:
            return InterruptStatusVector(self.lines)
        return InterruptStatusVector(self.lines, self.disabled - {line})

    def join(self, other: "InterruptStatusVector") -> "InterruptStatusVector":
        return InterruptStatusVector(self.lines, self.disabled & other.disabled)

    def __str__(self) -> str:
        return "<" + ", ".join(str(b) for b in self.bits()) + ">"


@dataclass
class IntbMap(Mapping):
    """Interrupt status on entry to (``map[node]``) and after (``after(node)``) each node."""
    graph: ControlFlowGraph
    before: Dict[int, InterruptStatusVector] = field(default_factory=dict)
    post: Dict[int, InterruptStatusVector] = field(default_factory=dict)
    ignored: Tuple[Location, ...] = ()

    def __getitem__(self, node: int) -> InterruptStatusVector:
        return self.before[node]

    def __iter__(self):
        return iter(self.before)

    def __len__(self) -> int:
        return len(self.before)

    def after(self, node: int) -> InterruptStatusVector:
        return self.post[node]


def reenabling_lines(program: Program, itrl: Sequence[InterruptOperation]) -> Dict[str, Optional[FrozenSet[int]]]:
    """
    Lines each ISR may re-enable while it runs (itself or through its callees)

    Masks nest, so a routine only re-enables a line when its enables of that
    line outnumber its disables. None means every line (a surplus enable-all
    or a controlling register write).
    """
    by_routine: Dict[str, List[InterruptOperation]] = {}
    for op in itrl:
        by_routine.setdefault(op.routine, []).append(op)
    routines = context_routines(program)
    result: Dict[str, Optional[FrozenSet[int]]] = {}
    for isr in program.isrs:
        lines = set()
        everything = False
        for routine in routines[isr.name]:
            net: Dict[Optional[int], int] = {}
            for op in by_routine.get(routine.name, ()):
                if op.implicit:
                    everything = True
                    continue
                net[op.line] = net.get(op.line, 0) + (1 if op.action is IrqAction.ENABLE else -1)
            for line, surplus in net.items():
                if surplus <= 0:
                    continue
                if line is None:
                    everything = True
                else:
                    lines.add(line)
        result[isr.name] = None if everything else frozenset(lines)
    return result


def propagate_intb(g: ControlFlowGraph, itrl: Sequence[InterruptOperation], program: Program) -> IntbMap:
    """
    Compute the interrupt status vector at every node of one component graph

    A disable of line n is ignored when some ISR that is still enabled right
    after it, and that can preempt this context, may enable line n again.

    Args:
        g: Component graph (reduced or not) of one task or ISR
        itrl: Interrupt operation list of the same program
        program: Program supplying ISR lines and priorities

    Returns:
        IntbMap with entry and exit vectors per node
    """
    lines = program.irq_lines
    ops = {op.location: op for op in itrl}
    reenablers = reenabling_lines(program, itrl)
    own_line = g.irq_line if g.is_isr else None
    rivals = [isr for isr in program.isrs if program.preempts(isr.name, g.name)]

    def force_own(vector: InterruptStatusVector) -> InterruptStatusVector:
        return vector.disable(own_line) if own_line is not None else vector

    result = IntbMap(g)
    ignored: List[Location] = []
    empty = force_own(InterruptStatusVector(lines))

    for node in nx.topological_sort(g.graph):
        preds = list(g.graph.predecessors(node))
        if not preds:
            vector = empty
        else:
            vector = result.post[preds[0]]
            for pred in preds[1:]:
                vector = vector.join(result.post[pred])
            vector = force_own(vector)
        result.before[node] = vector

        instr = g.instr(node)
        op = ops.get(instr.location) if instr.kind is NodeKind.STMT else None
        out = vector
        if op is not None:
            if op.action is IrqAction.ENABLE:
                out = vector.enable(op.line)
            elif op.line is None:
                out = vector.disable(None)
            else:
                out = vector.disable(op.line)
                still_enabled = [isr for isr in rivals if out.enabled(isr.irq_line)]
                if any(reenablers[isr.name] is None or op.line in reenablers[isr.name] for isr in still_enabled):
                    out = vector
                    ignored.append(op.location)
        result.post[node] = force_own(out)

    result.ignored = tuple(sorted(set(ignored)))
    if result.ignored:
        logger.debug(f"INTB {g.name}: disables ignored at {[str(loc) for loc in result.ignored]}")
    return result
