"""
IDL frontend: lexer, parser, checker and pretty-printer
"""

from .ast import Access, Location, Program, Routine, RoutineKind
from .checker import CheckResult, Diagnostic, check_program
from .parser import parse_program
from .printer import print_program


def load_program(source: str) -> Program:
    """Parse and check; raises on any diagnostic."""
    return check_program(parse_program(source)).require_clean()


__all__ = [
    "Access", "CheckResult", "Diagnostic", "Location", "Program", "Routine", "RoutineKind",
    "check_program", "load_program", "parse_program", "print_program",
]
