"""
One-call static stage: aliases, shared resources, interrupt and lock operations, reduced graphs, INTB and warnings
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

from ..config import ToolConfig
from ..frontend.ast import Program
from ..frontend.symbols import SymbolTable
from ..graphs.icfg import Icfg, build_icfg
from ..graphs.ricfg import Ricfg, build_ricfg
from .detector import RaceWarning, detect_static_races
from .interrupts import InterruptOperation, IntbMap, identify_interrupt_ops, propagate_intb
from .locks import LockOperation, identify_lock_ops
from .pointer import AliasSet, analyse_aliases
from .resources import SharedResourceAccess, SharedResourceSet, identify_shared_resources

logger = logging.getLogger(__name__)


@dataclass
class StaticAnalysis:
    program: Program
    symbols: SymbolTable
    aliases: AliasSet
    srs: SharedResourceSet
    accesses: List[SharedResourceAccess]
    itrl: List[InterruptOperation]
    lock_ops: List[LockOperation]
    icfg: Icfg
    ricfg: Ricfg
    intb: Dict[str, IntbMap]
    warnings: List[RaceWarning]


def run_static_analysis(program: Program, config: Optional[ToolConfig] = None) -> StaticAnalysis:
    """Run every static analysis on a checked program."""
    config = config or ToolConfig()
    symbols = SymbolTable(program)
    aliases = analyse_aliases(program, symbols)
    srs, accesses = identify_shared_resources(program, aliases, symbols)
    itrl = identify_interrupt_ops(program, config.interrupt_registers)
    lock_ops = identify_lock_ops(program, aliases, symbols)
    icfg = build_icfg(program, config.initial_unroll)
    ricfg = build_ricfg(icfg, srs, itrl, lock_ops)
    intb = {cfg.name: propagate_intb(cfg, itrl, program) for cfg in ricfg}
    warnings = detect_static_races(ricfg, accesses, intb, program)
    logger.debug(
        f"Static analysis: {len(srs)} shared resource(s), {len(itrl)} interrupt op(s), "
        f"{len(warnings)} warning(s)"
    )
    return StaticAnalysis(program, symbols, aliases, srs, accesses, itrl, lock_ops, icfg, ricfg, intb, warnings)
