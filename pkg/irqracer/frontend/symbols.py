"""
Name resolution shared by the analyses, the interpreter and the symbolic engine
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict

from .ast import Program, Routine
from .parser import routine_locals


class SymbolKind(str, Enum):
    GLOBAL = "global"
    REGISTER = "register"
    CONST = "const"
    LOCK = "lock"
    PARAM = "param"
    LOCAL = "local"


@dataclass
class SymbolTable:
    program: Program
    _routine_scopes: Dict[str, Dict[str, SymbolKind]] = field(default_factory=dict)

    def __post_init__(self):
        for routine in self.program.routines:
            self._routine_scopes[routine.name] = self._scope(routine)

    def _scope(self, routine: Routine) -> Dict[str, SymbolKind]:
        scope: Dict[str, SymbolKind] = {}
        for name in routine_locals(routine):
            scope[name] = SymbolKind.LOCAL
        for name in routine.params:
            scope[name] = SymbolKind.PARAM
        # Program-level declarations win over implicit locals
        for name in self.program.lock_names:
            scope[name] = SymbolKind.LOCK
        for name in self.program.const_values:
            scope[name] = SymbolKind.CONST
        for name in self.program.register_names:
            scope[name] = SymbolKind.REGISTER
        for name in self.program.global_names:
            scope[name] = SymbolKind.GLOBAL
        return scope

    def kind(self, routine: str, name: str) -> SymbolKind:
        return self._routine_scopes[routine][name]

    def lookup(self, routine: str, name: str):
        return self._routine_scopes.get(routine, {}).get(name)

    def qualify(self, routine: str, name: str) -> str:
        """Program-wide name of a variable: globals and registers bare, the rest routine-qualified."""
        kind = self.lookup(routine, name)
        if kind in (SymbolKind.PARAM, SymbolKind.LOCAL):
            return f"{routine}.{name}"
        return name


def qualified_owner(qualified: str) -> str:
    """Routine that owns a qualified local, or '' for program-level names."""
    return qualified.split(".", 1)[0] if "." in qualified else ""
