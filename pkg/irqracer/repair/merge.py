"""
Merging of generated critical sections

Two generated sections merge when nothing separates them (an enable
immediately followed by a disable of the same line, an unlock immediately
followed by a lock) or when they overlap. Interrupt sections only merge with
sections of the same line; lock sections merge by renaming one generated
lock to the other. Source statements are never touched.
"""

import logging
from dataclasses import replace
from typing import Dict, FrozenSet, List, Optional, Tuple

from ..frontend.ast import (
    Block, IrqDisable, IrqEnable, Lock, Program, Stmt, Unlock, child_blocks, map_blocks, with_blocks,
)
from .patcher import GENERATED_LOCK_PREFIX, drop_unused_locks, inserted_operation_count

logger = logging.getLogger(__name__)


def _gen_lock(stmt: Stmt, kind) -> bool:
    return isinstance(stmt, kind) and stmt.generated and not stmt.via_pointer \
        and stmt.lock.startswith(GENERATED_LOCK_PREFIX)


def _gen_irq(stmt: Stmt, kind) -> bool:
    return isinstance(stmt, kind) and stmt.generated


def _rename_in_block(block: Block, enclosing: Tuple[str, ...] = ()) -> Optional[Tuple[str, str]]:
    """
    A generated lock to fold into another: (old, new)

    ``enclosing`` holds the generated locks already open around the block, so a
    section nested in an if or while body folds into the one wrapping it.
    """
    open_locks: List[str] = list(enclosing)
    for current, following in zip(block, block[1:] + (None,)):
        if _gen_lock(current, Unlock) and following is not None and _gen_lock(following, Lock) \
                and following.lock != current.lock:
            return following.lock, current.lock
        if _gen_lock(current, Lock):
            outer = [name for name in open_locks if name != current.lock]
            if outer:
                return current.lock, outer[0]
            open_locks.append(current.lock)
        elif _gen_lock(current, Unlock) and current.lock in open_locks:
            open_locks.remove(current.lock)
        for child in child_blocks(current):
            pair = _rename_in_block(child, tuple(open_locks))
            if pair is not None:
                return pair
    return None


def _find_rename(p: Program) -> Optional[Tuple[str, str]]:
    for routine in p.routines:
        pair = _rename_in_block(routine.body)
        if pair is not None:
            return pair
    return None


def _rename(p: Program, old: str, new: str) -> Program:
    def rename(block: Block) -> Block:
        return tuple(
            replace(stmt, lock=new) if (_gen_lock(stmt, Lock) or _gen_lock(stmt, Unlock)) and stmt.lock == old
            else stmt
            for stmt in block
        )

    return replace(p, routines=tuple(replace(r, body=map_blocks(r.body, rename)) for r in p.routines))


def _drop_adjacent(block: Block) -> Block:
    out: List[Stmt] = []
    for stmt in block:
        prev = out[-1] if out else None
        if prev is not None and _gen_irq(prev, IrqEnable) and _gen_irq(stmt, IrqDisable) and prev.irq == stmt.irq:
            out.pop()
            continue
        if prev is not None and _gen_lock(prev, Unlock) and _gen_lock(stmt, Lock) and prev.lock == stmt.lock:
            out.pop()
            continue
        out.append(stmt)
    return tuple(out)


def _section_key(stmt: Stmt) -> Optional[Tuple[str, object]]:
    if _gen_irq(stmt, IrqDisable) or _gen_irq(stmt, IrqEnable):
        return "irq", stmt.irq
    if _gen_lock(stmt, Lock) or _gen_lock(stmt, Unlock):
        return "lock", stmt.lock
    return None


def _collapse_nested(block: Block, enclosing: FrozenSet[Tuple[str, object]] = frozenset()) -> Block:
    """
    Keep only the outermost generated open/close of each line or lock

    Walks from the routine body inwards. ``enclosing`` holds the generated
    sections open around the block; any generated pair on the same guard
    inside it is redundant and dropped.
    """
    depth: Dict[Tuple[str, object], int] = {}
    out: List[Stmt] = []
    for stmt in _drop_adjacent(block):
        key = _section_key(stmt)
        if key is not None:
            if key in enclosing:
                continue
            if isinstance(stmt, (IrqDisable, Lock)):
                depth[key] = depth.get(key, 0) + 1
                if depth[key] > 1:
                    continue
            else:
                level = depth.get(key, 0)
                if level > 0:
                    depth[key] = level - 1
                if level > 1:
                    continue
        children = child_blocks(stmt)
        if children:
            held = enclosing | {open_key for open_key, level in depth.items() if level > 0}
            stmt = with_blocks(stmt, tuple(_collapse_nested(child, held) for child in children))
        out.append(stmt)
    return tuple(out)


def merge_fixes(p: Program) -> Program:
    """
    Coalesce adjacent and overlapping generated critical sections until nothing changes

    The inserted-operation count never grows, and a merged program merges to itself.
    """
    before = inserted_operation_count(p)
    while True:
        pair = _find_rename(p)
        if pair is not None:
            logger.debug(f"Merging generated lock {pair[0]} into {pair[1]}")
            p = _rename(p, *pair)
            continue
        merged = replace(p, routines=tuple(replace(r, body=_collapse_nested(r.body)) for r in p.routines))
        if inserted_operation_count(merged) == inserted_operation_count(p):
            break
        p = merged
    p = drop_unused_locks(p)
    logger.debug(f"merge_fixes: {before} -> {inserted_operation_count(p)} inserted operation(s)")
    return p
