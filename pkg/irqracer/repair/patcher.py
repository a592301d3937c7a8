"""
Patch operations and their application to a Program

Generated statements keep their anchor's index and get a positive ``sub``
number, so every source Location survives patching unchanged. Printing the
patched program renumbers statements; ``location_remap`` gives the mapping.
"""

import difflib
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from ..errors import AnchorVanished
from ..frontend.ast import (
    IrqDisable, IrqEnable, Location, Lock, LockDecl, Program, Stmt, Unlock, map_blocks, walk_block,
)
from ..frontend.checker import check_program
from ..frontend.printer import print_program

logger = logging.getLogger(__name__)

GENERATED_LOCK_PREFIX = "__sdr_lock_"


class PatchKind(str, Enum):
    IRQ_DISABLE = "InsertIrqDisable"
    IRQ_ENABLE = "InsertIrqEnable"
    LOCK = "InsertLock"
    UNLOCK = "InsertUnlock"
    MOVE_LOCK = "MoveLock"


class Side(str, Enum):
    BEFORE = "Before"
    AFTER = "After"


@dataclass(frozen=True)
class PatchOp:
    kind: PatchKind
    anchor: Location
    side: Side
    line: Optional[int] = None          # irq line for IDE ops
    lock: Optional[str] = None          # lock name for AL ops
    source: Optional[Location] = None   # existing lock/unlock statement for MoveLock
    section: str = ""

    def __str__(self) -> str:
        what = self.kind.value
        if self.line is not None:
            what += f"({self.line})"
        if self.lock is not None:
            what += f"({self.lock})"
        if self.source is not None:
            what += f"[{self.source}]"
        return f"{what} {self.side.value.lower()} {self.anchor}"


# Outer operations first before an anchor, last after it
_BEFORE_ORDER = {PatchKind.IRQ_DISABLE: 0, PatchKind.LOCK: 1, PatchKind.MOVE_LOCK: 1}
_AFTER_ORDER = {PatchKind.UNLOCK: 0, PatchKind.MOVE_LOCK: 0, PatchKind.IRQ_ENABLE: 1}


def _next_subs(program: Program) -> Dict[Tuple[str, int], int]:
    subs: Dict[Tuple[str, int], int] = {}
    for routine in program.routines:
        for stmt in routine.statements():
            key = (routine.name, stmt.location.index)
            subs[key] = max(subs.get(key, 0), stmt.location.sub)
    return subs


def _build(op: PatchOp, location: Location, line: int) -> Stmt:
    role = {
        PatchKind.IRQ_DISABLE: "disable", PatchKind.IRQ_ENABLE: "enable",
        PatchKind.LOCK: "lock", PatchKind.UNLOCK: "unlock",
    }[op.kind]
    origin = f"{op.section}:{role}"
    if op.kind is PatchKind.IRQ_DISABLE:
        return IrqDisable(location, line, origin, irq=op.line)
    if op.kind is PatchKind.IRQ_ENABLE:
        return IrqEnable(location, line, origin, irq=op.line)
    if op.kind is PatchKind.LOCK:
        return Lock(location, line, origin, lock=op.lock)
    return Unlock(location, line, origin, lock=op.lock)


def apply_patches(p: Program, patches: Sequence[PatchOp]) -> Program:
    """
    Insert and move statements

    Args:
        p: Program to patch
        patches: Operations; several at one anchor and side are ordered with
            interrupt disabling outermost

    Returns:
        Patched program (the input when ``patches`` is empty)

    Raises:
        AnchorVanished: an anchor or a moved statement is not in the program
        ProgramCheckError: the patched program breaks a program invariant
    """
    if not patches:
        return p

    subs = _next_subs(p)
    before: Dict[Location, List[Tuple[int, int, Stmt]]] = {}
    after: Dict[Location, List[Tuple[int, int, Stmt]]] = {}
    removed: Set[Location] = set()
    new_locks: List[str] = []

    for order, op in enumerate(patches):
        try:
            anchor_stmt = p.statement_at(op.anchor)
        except KeyError:
            raise AnchorVanished(f"patch anchor {op.anchor} is not a statement of the program")
        if op.kind is PatchKind.MOVE_LOCK:
            try:
                stmt = p.statement_at(op.source)
            except KeyError:
                raise AnchorVanished(f"moved statement {op.source} is not in the program")
            if op.anchor.routine != op.source.routine:
                raise AnchorVanished(f"cannot move {op.source} into routine {op.anchor.routine!r}")
            removed.add(op.source)
        else:
            key = (op.anchor.routine, op.anchor.index)
            subs[key] = subs.get(key, 0) + 1
            stmt = _build(op, Location(op.anchor.routine, op.anchor.index, subs[key]), anchor_stmt.line)
            if op.kind is PatchKind.LOCK and op.lock not in p.lock_names and op.lock not in new_locks:
                new_locks.append(op.lock)
        if op.side is Side.BEFORE:
            before.setdefault(op.anchor, []).append((_BEFORE_ORDER[op.kind], order, stmt))
        else:
            after.setdefault(op.anchor, []).append((_AFTER_ORDER[op.kind], order, stmt))

    def rebuild(block: Tuple[Stmt, ...]) -> Tuple[Stmt, ...]:
        out: List[Stmt] = []
        for stmt in block:
            out.extend(s for _, _, s in sorted(before.get(stmt.location, []), key=lambda t: t[:2]))
            if stmt.location not in removed:
                out.append(stmt)
            out.extend(s for _, _, s in sorted(after.get(stmt.location, []), key=lambda t: t[:2]))
        return tuple(out)

    routines = tuple(replace(r, body=map_blocks(r.body, rebuild)) for r in p.routines)
    locks = p.locks + tuple(LockDecl(name) for name in new_locks)
    logger.debug(f"Applied {len(patches)} patch op(s), {len(new_locks)} new lock(s)")
    return check_program(replace(p, routines=routines, locks=locks)).require_clean()


def generated_statements(p: Program) -> List[Stmt]:
    return [stmt for routine in p.routines for stmt in routine.statements() if stmt.generated]


def inserted_operation_count(p: Program) -> int:
    return len(generated_statements(p))


def unapply(p: Program) -> Program:
    """Remove every generated statement and the generated locks nothing uses any more."""
    def strip(block: Tuple[Stmt, ...]) -> Tuple[Stmt, ...]:
        return tuple(stmt for stmt in block if not stmt.generated)

    routines = tuple(replace(r, body=map_blocks(r.body, strip)) for r in p.routines)
    stripped = replace(p, routines=routines)
    return drop_unused_locks(stripped)


def used_locks(p: Program) -> Set[str]:
    return {
        stmt.lock for routine in p.routines for stmt in routine.statements()
        if isinstance(stmt, (Lock, Unlock)) and not stmt.via_pointer
    }


def drop_unused_locks(p: Program) -> Program:
    used = used_locks(p)
    locks = tuple(lock for lock in p.locks if not lock.name.startswith(GENERATED_LOCK_PREFIX) or lock.name in used)
    return replace(p, locks=locks)


def fresh_lock_name(p: Program, taken: Iterable[str] = ()) -> str:
    names = set(p.lock_names) | set(taken)
    k = 0
    while f"{GENERATED_LOCK_PREFIX}{k}" in names:
        k += 1
    return f"{GENERATED_LOCK_PREFIX}{k}"


def location_remap(p: Program) -> Dict[Location, Location]:
    """Source Location -> Location of the same statement once the patched program is printed and re-parsed."""
    table: Dict[Location, Location] = {}
    for routine in p.routines:
        for index, stmt in enumerate(walk_block(routine.body), start=1):
            if stmt.location.sub == 0:
                table[stmt.location] = Location(routine.name, index)
    return table


def unified_diff(original: Program, patched: Program, name: str = "program.idl") -> str:
    before = print_program(original).splitlines(keepends=True)
    after = print_program(patched).splitlines(keepends=True)
    return "".join(difflib.unified_diff(before, after, f"a/{name}", f"b/{name}"))

