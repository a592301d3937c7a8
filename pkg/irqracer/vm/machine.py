"""
Machine state of the interleaving VM

Models the interrupt hardware the race validator needs: a global interrupt
flag, a per-line mask depth (nested disables), the in-service pin of every
line, pending requests, lock holders and the stack of active contexts.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set

from ..errors import UnknownLine
from ..frontend.ast import Location, Program
from .arith import Value


@dataclass
class Frame:
    """One routine activation inside a context (the context body or an inlined call)."""
    routine: str
    ident: int

    def cell(self, name: str) -> str:
        return f"{self.ident}:{name}"


@dataclass
class Activation:
    """One entry of the context stack: a task or an ISR run."""
    context: str
    priority: int
    irq_line: Optional[int]
    frames: List[Frame] = field(default_factory=list)
    location: Optional[Location] = None
    occurrences: Dict[Location, int] = field(default_factory=dict)

    @property
    def frame(self) -> Frame:
        return self.frames[-1]


@dataclass
class MachineState:
    program: Program
    width: int
    cells: Dict[str, Value] = field(default_factory=dict)
    registers: Dict[str, int] = field(default_factory=dict)   # raw register contents, latched on first read
    global_enabled: bool = True
    mask_depth: Dict[int, int] = field(default_factory=dict)
    pin_raised: Dict[int, bool] = field(default_factory=dict)
    pending: Set[int] = field(default_factory=set)
    lock_holder: Dict[str, Optional[str]] = field(default_factory=dict)
    contexts: List[Activation] = field(default_factory=list)
    registered_args: Dict[str, List[Value]] = field(default_factory=dict)
    frame_counter: int = 0
    forced: Set[int] = field(default_factory=set)   # lines that ignore masking and priority (replay)

    def __post_init__(self):
        for line in self.program.irq_lines:
            self.mask_depth.setdefault(line, 0)
            self.pin_raised.setdefault(line, False)
        for lock in self.program.lock_names:
            self.lock_holder.setdefault(lock, None)

    @property
    def active(self) -> Optional[Activation]:
        return self.contexts[-1] if self.contexts else None

    def _check_line(self, line: int) -> None:
        if line not in self.mask_depth:
            raise UnknownLine(line)

    def isr_enabled(self, line: int) -> bool:
        """Global flag set, line unmasked, pin low, and the ISR outranks the running context."""
        self._check_line(line)
        if line in self.forced:
            return not self.pin_raised[line]
        if not self.global_enabled or self.mask_depth[line] > 0 or self.pin_raised[line]:
            return False
        active = self.active
        if active is None:
            return True
        return self.program.isr_for_line(line).priority < active.priority

    def disable_line(self, line: Optional[int]) -> None:
        if line is None:
            self.global_enabled = False
            return
        self._check_line(line)
        self.mask_depth[line] += 1

    def enable_line(self, line: Optional[int]) -> None:
        if line is None:
            self.global_enabled = True
            return
        self._check_line(line)
        self.mask_depth[line] = max(0, self.mask_depth[line] - 1)

    def write_interrupt_register(self, raw: int) -> None:
        """Bit n-1 of the written value unmasks line n; a clear bit masks it."""
        for line in self.mask_depth:
            self.mask_depth[line] = 0 if (raw >> (line - 1)) & 1 else 1

    def new_frame(self, routine: str) -> Frame:
        self.frame_counter += 1
        return Frame(routine, self.frame_counter)

    def holds(self, context: str) -> List[str]:
        return sorted(lock for lock, holder in self.lock_holder.items() if holder == context)

    def globals_snapshot(self) -> Dict[str, Value]:
        return {name: self.cells[name] for name in sorted(self.program.global_names)}


def isr_enabled(s: MachineState, line: int) -> bool:
    """
    Whether the ISR on ``line`` could start now

    Raises:
        UnknownLine: no ISR handles the line
    """
    return s.isr_enabled(line)
