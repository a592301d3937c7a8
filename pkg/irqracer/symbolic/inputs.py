"""
Input points: the values the environment controls

Every register the program reads is hardware input; globals declared with
``input`` carry data handed in by other components.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet

from ..frontend.ast import Name, Program, stmt_exprs, walk_expr
from ..frontend.symbols import SymbolKind, SymbolTable

InputAssignment = Dict[str, int]


@dataclass(frozen=True)
class InputPoint:
    name: str
    width: int
    is_register: bool

    @property
    def max_value(self) -> int:
        return (1 << self.width) - 1


def identify_input_points(p: Program) -> FrozenSet[str]:
    """Names of every read register plus every ``input`` global."""
    symbols = SymbolTable(p)
    names = {g.name for g in p.globals if g.is_input}
    for routine in p.routines:
        for stmt in routine.statements():
            for expr in stmt_exprs(stmt):
                for node in walk_expr(expr):
                    if isinstance(node, Name) and symbols.lookup(routine.name, node.name) is SymbolKind.REGISTER:
                        names.add(node.name)
    return frozenset(names)


def input_points(p: Program, word_width: int) -> Dict[str, InputPoint]:
    """Input points with their value widths (register width, or the word width for globals)."""
    result = {}
    for name in sorted(identify_input_points(p)):
        if name in p.register_names:
            result[name] = InputPoint(name, p.register(name).width, True)
        else:
            result[name] = InputPoint(name, word_width, False)
    return result
