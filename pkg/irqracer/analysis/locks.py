"""
Lock operation identification
"""

from dataclasses import dataclass
from typing import FrozenSet, List, Optional

from ..frontend.ast import Location, Lock, Program, Stmt, Unlock
from ..frontend.symbols import SymbolTable
from .pointer import AliasSet


@dataclass(frozen=True)
class LockOperation:
    routine: str
    location: Location
    locks: FrozenSet[str]   # declared locks the operation may act on
    acquire: bool


def lock_targets(stmt: Stmt, routine: str, program: Program, aliases: Optional[AliasSet],
                 symbols: SymbolTable) -> FrozenSet[str]:
    """Declared locks a lock/unlock statement may name, following pointers through the alias set."""
    if not stmt.via_pointer:
        return frozenset({stmt.lock})
    if aliases is None:
        return frozenset()
    return aliases.pts(symbols.qualify(routine, stmt.lock)) & program.lock_names


def identify_lock_ops(program: Program, aliases: Optional[AliasSet] = None,
                      symbols: Optional[SymbolTable] = None) -> List[LockOperation]:
    symbols = symbols or SymbolTable(program)
    ops = []
    for routine in program.routines:
        for stmt in routine.statements():
            if isinstance(stmt, (Lock, Unlock)):
                ops.append(LockOperation(
                    routine.name, stmt.location,
                    lock_targets(stmt, routine.name, program, aliases, symbols),
                    isinstance(stmt, Lock),
                ))
    return ops
