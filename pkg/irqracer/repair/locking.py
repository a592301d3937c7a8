"""
Lock-based repair: add a lock (AL), or extend an existing critical section (ECS)

A new lock must not order two locks differently in the two contexts it joins.
When the fresh lock would, one lock already acquired near both events is
stretched over them instead.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from ..analysis.locks import LockOperation, identify_lock_ops
from ..frontend.ast import Location, Lock, Program, Unlock
from ..graphs.icfg import Icfg, build_icfg
from .lock_order import (
    LockOrderGraph, acquisition_sequence, compute_lock_order, reversed_edges, rule2_violations,
)
from .patcher import PatchKind, PatchOp, Side, apply_patches, fresh_lock_name
from .plan import BlockSlot, RepairPlan, RepairStrategy, Section, SectionKind, block_path

logger = logging.getLogger(__name__)


def _ops_by_location(lock_ops: Sequence[LockOperation]) -> Dict[Location, LockOperation]:
    return {op.location: op for op in lock_ops}


def _slot(p: Program, location: Location) -> BlockSlot:
    return block_path(p.routine(location.routine).body, location)[0]


def _tagged(move: PatchOp, section: str) -> PatchOp:
    return PatchOp(move.kind, move.anchor, move.side, lock=move.lock, source=move.source, section=section)


def _with_generated(patched: Program, ops: Mapping[Location, LockOperation]) -> Dict[Location, LockOperation]:
    """Original alias-resolved operations plus the plain ones a patch inserted."""
    merged = dict(ops)
    for op in identify_lock_ops(patched):
        merged.setdefault(op.location, op)
    return merged


def _names(stmt, ops: Mapping[Location, LockOperation]) -> Set[str]:
    op = ops.get(stmt.location)
    if op is not None:
        return set(op.locks)
    return {stmt.lock}


def order_conflicts(patched: Program, contexts: Tuple[str, str], ops: Mapping[Location, LockOperation],
                    original_order: Optional[LockOrderGraph], unroll: int) -> List[Tuple[str, str]]:
    """Lock pairs the two contexts acquire in opposite orders once patched, plus reversed nesting edges."""
    ops = _with_generated(patched, ops)
    ls_i = acquisition_sequence(patched, contexts[0], ops)
    ls_j = acquisition_sequence(patched, contexts[1], ops)
    conflicts = rule2_violations(ls_i, ls_j)
    if original_order is not None:
        patched_order = compute_lock_order(patched, build_icfg(patched, unroll), list(ops.values()))
        conflicts += [edge for edge in reversed_edges(original_order, patched_order) if edge not in conflicts]
    return conflicts


def candidate_locks(p: Program, location: Location, ops: Mapping[Location, LockOperation]) -> Set[str]:
    """Locks acquired before the statement in its block, plus the closest one acquired after it."""
    slot = _slot(p, location)
    found: Set[str] = set()
    for stmt in slot.block[:slot.index]:
        if isinstance(stmt, Lock):
            found |= _names(stmt, ops)
    for stmt in slot.block[slot.index + 1:]:
        if isinstance(stmt, Lock):
            found |= _names(stmt, ops)
            break
    return found


def extend_moves(p: Program, location: Location, lock: str, ops: Mapping[Location, LockOperation]) -> List[PatchOp]:
    """MoveLock operations stretching ``lock``'s critical section over the statement at ``location``."""
    slot = _slot(p, location)
    anchor = slot.stmt.location
    held = False
    release = None
    for stmt in slot.block[:slot.index]:
        if isinstance(stmt, Lock) and lock in _names(stmt, ops):
            held, release = True, None
        elif isinstance(stmt, Unlock) and held and _names(stmt, ops) == {lock}:
            held, release = False, stmt.location
    if release is not None:
        return [PatchOp(PatchKind.MOVE_LOCK, anchor, Side.AFTER, lock=lock, source=release)]
    if held:
        return []
    for stmt in slot.block[slot.index + 1:]:
        if isinstance(stmt, Lock) and lock in _names(stmt, ops):
            return [PatchOp(PatchKind.MOVE_LOCK, anchor, Side.BEFORE, lock=lock, source=stmt.location)]
    return []


def plan_lock_repair(wn, lock_order: Optional[LockOrderGraph], ricfgs: Icfg, program: Optional[Program] = None,
                     lock_ops: Optional[Sequence[LockOperation]] = None, ident: str = "s0",
                     taken: Sequence[str] = ()) -> RepairPlan:
    """
    AL first, ECS when the fresh lock breaks the lock order

    Args:
        wn: Confirmed RaceWarning
        lock_order: Lock order of the unpatched program
        ricfgs: Graphs of the unpatched program
        lock_ops: Alias-resolved lock operations
        ident: Section name prefix
        taken: Generated lock names already used by other plans

    Returns:
        AL plan (one section per event, sharing a fresh lock), ECS plan
        (MoveLock operations), or Unrepairable
    """
    program = program or ricfgs.program
    lock_ops = list(lock_ops) if lock_ops is not None else identify_lock_ops(program)
    ops = _ops_by_location(lock_ops)
    contexts = (wn.e_i.context, wn.e_j.context)
    unroll = ricfgs.unroll

    lock = fresh_lock_name(program, taken)
    sections = [Section(f"{ident}.i", SectionKind.LOCK, wn.e_i.location, wn.e_i.location, lock=lock)]
    if wn.e_j.location != wn.e_i.location:
        sections.append(Section(f"{ident}.j", SectionKind.LOCK, wn.e_j.location, wn.e_j.location, lock=lock))
    al = RepairPlan(wn, RepairStrategy.AL, sections=sections)
    conflicts = order_conflicts(apply_patches(program, al.patches), contexts, ops, lock_order, unroll)
    if not conflicts:
        logger.debug(f"{wn.key_text}: AL with {lock}")
        return al
    logger.debug(f"{wn.key_text}: AL with {lock} reorders {conflicts}, trying ECS")

    common = candidate_locks(program, wn.e_i.location, ops) & candidate_locks(program, wn.e_j.location, ops)
    if not common:
        return RepairPlan.unrepairable(wn, "unable to repair by ECS: no common enclosing lock")
    for candidate in sorted(common):
        moves = [
            _tagged(move, f"{ident}.i")
            for move in extend_moves(program, wn.e_i.location, candidate, ops)
        ]
        if wn.e_j.location != wn.e_i.location:
            moves += [
                _tagged(move, f"{ident}.j")
                for move in extend_moves(program, wn.e_j.location, candidate, ops)
            ]
        ecs = RepairPlan(wn, RepairStrategy.ECS, moves=moves)
        if not order_conflicts(apply_patches(program, ecs.patches), contexts, ops, lock_order, unroll):
            logger.debug(f"{wn.key_text}: ECS with {candidate}")
            return ecs
    return RepairPlan.unrepairable(wn, "unable to repair by ECS: every extension reorders locks")
