"""
Interrupt disable/enable placement

The disable point is searched from e_i outwards: e_i's own statement first,
then each earlier statement of its block, then the enclosing compound
statement and its earlier siblings, up to the routine body. The enable point
closes the section right after the statement containing e_i in that block.
Each candidate is checked on the context's graph: the disable point must
dominate every copy of e_i and be post-dominated by the section's end.
"""

import logging
from typing import FrozenSet, Iterator, Optional

from ..analysis.locks import identify_lock_ops
from ..errors import MultipleExits
from ..frontend.ast import Program
from ..graphs.dominators import DomInfo, compute_dominators
from ..graphs.icfg import ControlFlowGraph, Icfg
from .holdsets import HoldSets, compute_hold_sets
from .plan import RepairPlan, RepairStrategy, Section, SectionKind, block_path, calls_lock, section_statements

logger = logging.getLogger(__name__)


def candidate_sections(p: Program, wn, line: int, ident: str) -> Iterator[Section]:
    """Sections [S_d .. A] ordered by distance of S_d from e_i."""
    location = wn.e_i.location
    for slot in block_path(p.routine(location.routine).body, location):
        anchor = slot.stmt.location
        for start in range(slot.index, -1, -1):
            yield Section(ident, SectionKind.IRQ, slot.block[start].location, anchor, line=line)


def eq1_holds(hold_sets: HoldSets, context: str, section: Section, isr_locks: FrozenSet[str]) -> bool:
    """No lock possibly held at the disable point is one the ISR acquires."""
    return not (hold_sets.at_location(context, section.first) & isr_locks)


def dominance_holds(dom: DomInfo, cfg: ControlFlowGraph, wn, section: Section) -> bool:
    """Some copy of the disable point dominates each copy of e_i, and the section end post-dominates it."""
    starts = cfg.nodes_at(section.first)
    ends = cfg.nodes_at(section.last)
    events = cfg.nodes_at(wn.e_i.location)
    if not (starts and ends and events):
        return False
    if not all(any(dom.dominates(start, event) for start in starts) for event in events):
        return False
    return all(any(end in dom.post_dom(start) for end in ends) for start in starts)


def plan_ide_repair(wn, ricfgs: Icfg, hold_sets: Optional[HoldSets] = None, dom_info: Optional[DomInfo] = None,
                    program: Optional[Program] = None, ident: str = "s0") -> RepairPlan:
    """
    Wrap e_i between irq_disable(line) and irq_enable(line) of e_j's interrupt

    Args:
        wn: Confirmed RaceWarning whose e_j runs in an ISR
        ricfgs: Graphs the hold sets and dominators are computed over (full ICFG preferred)
        hold_sets: Precomputed hold sets
        dom_info: Dominators of e_i's context graph; computed when omitted
        ident: Name of the generated section

    Returns:
        IDE plan, or Unrepairable("no I_d/I_e") when every candidate violates
        the hold-set condition, the dominance condition, or would mask
        interrupts across a lock acquire
    """
    program = program or ricfgs.program
    hold_sets = hold_sets or compute_hold_sets(ricfgs, identify_lock_ops(program))
    isr = program.routine(wn.e_j.context)
    if not isr.is_isr or not program.preempts(isr.name, wn.e_i.context):
        return RepairPlan.unrepairable(wn, f"{wn.e_j.context} cannot preempt {wn.e_i.context}")

    cfg = ricfgs[wn.e_i.context]
    if dom_info is None:
        try:
            dom_info = compute_dominators(cfg)
        except MultipleExits as e:
            logger.warning(f"{wn.key_text}: no dominators for {cfg.name} ({e}), using block structure only")

    line = isr.irq_line
    isr_locks = hold_sets.of_context(isr.name)
    for section in candidate_sections(program, wn, line, ident):
        if not eq1_holds(hold_sets, wn.e_i.context, section, isr_locks):
            logger.debug(f"{wn.key_text}: {section.first} violates the hold-set condition")
            continue
        if dom_info is not None and not dominance_holds(dom_info, cfg, wn, section):
            logger.debug(f"{wn.key_text}: {section} does not enclose e_i on every path")
            continue
        if calls_lock(program, section_statements(program, section)):
            logger.debug(f"{wn.key_text}: {section} would mask line {line} across a lock acquire")
            continue
        logger.debug(f"{wn.key_text}: IDE section {section}")
        return RepairPlan(wn, RepairStrategy.IDE, sections=[section])

    return RepairPlan.unrepairable(wn, "no I_d/I_e")
