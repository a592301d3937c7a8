"""
Repair plans and the critical sections they insert
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from ..frontend.ast import Block, Call, Location, Lock, Program, Stmt, child_blocks, walk_block
from .patcher import PatchKind, PatchOp, Side


class RepairStrategy(str, Enum):
    IDE = "IDE"
    AL = "AL"
    ECS = "ECS"
    UNREPAIRABLE = "Unrepairable"


class SectionKind(str, Enum):
    IRQ = "irq"
    LOCK = "lock"


@dataclass(frozen=True)
class Section:
    """Contiguous sibling statements first..last of one block, guarded by a line mask or a lock."""
    ident: str
    kind: SectionKind
    first: Location
    last: Location
    line: Optional[int] = None
    lock: Optional[str] = None

    @property
    def routine(self) -> str:
        return self.first.routine

    def patches(self) -> List[PatchOp]:
        if self.kind is SectionKind.IRQ:
            return [
                PatchOp(PatchKind.IRQ_DISABLE, self.first, Side.BEFORE, line=self.line, section=self.ident),
                PatchOp(PatchKind.IRQ_ENABLE, self.last, Side.AFTER, line=self.line, section=self.ident),
            ]
        return [
            PatchOp(PatchKind.LOCK, self.first, Side.BEFORE, lock=self.lock, section=self.ident),
            PatchOp(PatchKind.UNLOCK, self.last, Side.AFTER, lock=self.lock, section=self.ident),
        ]

    def __str__(self) -> str:
        guard = f"line {self.line}" if self.kind is SectionKind.IRQ else self.lock
        span = str(self.first) if self.first == self.last else f"{self.first}..{self.last}"
        return f"{self.ident}[{guard}] {span}"


@dataclass
class RepairPlan:
    warning: object
    strategy: RepairStrategy
    sections: List[Section] = field(default_factory=list)
    moves: List[PatchOp] = field(default_factory=list)
    reason: str = ""

    @property
    def patches(self) -> List[PatchOp]:
        if self.strategy is RepairStrategy.UNREPAIRABLE:
            return []
        ops = [op for section in self.sections for op in section.patches()]
        return ops + list(self.moves)

    @property
    def repairable(self) -> bool:
        return self.strategy is not RepairStrategy.UNREPAIRABLE

    @classmethod
    def unrepairable(cls, warning, reason: str) -> "RepairPlan":
        return cls(warning, RepairStrategy.UNREPAIRABLE, reason=reason)

    def describe(self) -> str:
        if not self.repairable:
            return f"{self.warning.key_text}: unrepairable ({self.reason})"
        ops = ", ".join(str(op) for op in self.patches)
        return f"{self.warning.key_text}: {self.strategy.value} {ops}"


# ------------------------------------------------------------- block structure

@dataclass(frozen=True)
class BlockSlot:
    """Where a statement sits: its block, its index there and the statement owning the block."""
    block: Block
    index: int
    owner: Optional[Stmt]

    @property
    def stmt(self) -> Stmt:
        return self.block[self.index]


def block_path(body: Block, location: Location) -> List[BlockSlot]:
    """Slots from the statement's own block outwards to the routine body; empty when absent."""
    for index, stmt in enumerate(body):
        if stmt.location == location:
            return [BlockSlot(body, index, None)]
        for child in child_blocks(stmt):
            inner = block_path(child, location)
            if inner:
                return inner[:-1] + [replace(inner[-1], owner=stmt), BlockSlot(body, index, None)]
    return []


def section_statements(p: Program, section: Section) -> List[Stmt]:
    slot = block_path(p.routine(section.routine).body, section.first)[0]
    end = next(i for i, stmt in enumerate(slot.block) if stmt.location == section.last)
    return list(slot.block[slot.index:end + 1])


def calls_lock(p: Program, stmts: Sequence[Stmt], seen: Tuple[str, ...] = ()) -> bool:
    """Whether the statements (or funcs they call) acquire a lock."""
    for stmt in walk_block(tuple(stmts)):
        if isinstance(stmt, Lock):
            return True
        if isinstance(stmt, Call) and stmt.callee not in seen:
            if calls_lock(p, p.routine(stmt.callee).body, seen + (stmt.callee,)):
                return True
    return False


def widen(p: Program, section: Section, forward: bool) -> Optional[Section]:
    """
    Grow a section by one statement

    At the edge of its block the section becomes the enclosing compound
    statement. Returns None when it already spans a whole routine body.
    """
    body = p.routine(section.routine).body
    first_slot = block_path(body, section.first)
    last_slot = block_path(body, section.last)
    if not first_slot or not last_slot:
        return None
    block = first_slot[0].block
    start, end = first_slot[0].index, last_slot[0].index
    if forward and end + 1 < len(block):
        return replace(section, last=block[end + 1].location)
    if not forward and start > 0:
        return replace(section, first=block[start - 1].location)
    owner = first_slot[0].owner
    if owner is None:
        # routine body edge: grow the other way instead
        if forward and start > 0:
            return replace(section, first=block[start - 1].location)
        if not forward and end + 1 < len(block):
            return replace(section, last=block[end + 1].location)
        return None
    return replace(section, first=owner.location, last=owner.location)
