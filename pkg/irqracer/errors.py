"""
Exception hierarchy for the irqracer toolchain
"""

from typing import List, Optional


class IrqRacerError(Exception):
    """Base class for every error raised by irqracer."""


class IdlSyntaxError(IrqRacerError):
    """Raised by the lexer or parser with the offending position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class DuplicateRoutine(IrqRacerError):
    pass


class DuplicateIrqLine(IrqRacerError):
    pass


class UnknownIdentifier(IrqRacerError):
    pass


class ProgramCheckError(IrqRacerError):
    """Raised when a caller insists on a clean program and check_program found problems."""

    def __init__(self, diagnostics: List["object"]):
        lines = "; ".join(str(d) for d in diagnostics)
        super().__init__(f"program has {len(diagnostics)} diagnostic(s): {lines}")
        self.diagnostics = diagnostics


class RecursionDetected(IrqRacerError):
    pass


class EventNotInGraph(IrqRacerError):
    pass


class MultipleExits(IrqRacerError):
    pass


class ArityMismatch(IrqRacerError):
    pass


class StepLimitExceeded(IrqRacerError):
    def __init__(self, limit: int):
        super().__init__(f"step limit of {limit} exceeded")
        self.limit = limit


class UnknownLine(IrqRacerError):
    def __init__(self, line: int):
        super().__init__(f"interrupt line {line} is not declared by any ISR")
        self.line = line


class BudgetExceeded(IrqRacerError):
    def __init__(self, needed: int, budget: int):
        super().__init__(f"enumeration needs {needed} runs, budget is {budget}")
        self.needed = needed
        self.budget = budget


class AnchorVanished(IrqRacerError):
    pass


class VmFault(IrqRacerError):
    """Runtime fault inside the interpreter (bad dereference, address arithmetic, ...)."""

    def __init__(self, message: str, location: Optional["object"] = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
