"""
Static well-formedness checks for parsed IDL programs
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set

import networkx as nx

from ..errors import ProgramCheckError
from .ast import (
    AddrOf, Assign, Call, Deref, IrqDisable, IrqEnable, Location, Lock, Name, Program,
    RequestIrq, Store, Unlock, stmt_exprs, walk_expr,
)
from .symbols import SymbolKind, SymbolTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    location: Optional[Location] = None
    line: int = 0

    def __str__(self) -> str:
        where = f"{self.location} (line {self.line})" if self.location else f"line {self.line}"
        return f"{where}: [{self.code}] {self.message}"


@dataclass
class CheckResult:
    program: Program
    symbols: SymbolTable
    diagnostics: List[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def require_clean(self) -> Program:
        if self.diagnostics:
            raise ProgramCheckError(self.diagnostics)
        return self.program


def call_graph(program: Program) -> nx.DiGraph:
    """Routine-level call graph; request_irq is not a call edge."""
    graph = nx.DiGraph()
    for routine in program.routines:
        graph.add_node(routine.name)
        for stmt in routine.statements():
            if isinstance(stmt, Call) and program.has_routine(stmt.callee):
                graph.add_edge(routine.name, stmt.callee)
    return graph


def check_program(program: Program) -> CheckResult:
    """
    Verify the Program invariants

    Args:
        program: Parsed program

    Returns:
        CheckResult carrying the resolved symbol table and one Diagnostic per violation
    """
    symbols = SymbolTable(program)
    diags: List[Diagnostic] = []

    # Program-level namespace clashes
    owners: Dict[str, str] = {}
    declared = (
        [(g.name, "global", g.line) for g in program.globals]
        + [(r.name, "register", r.line) for r in program.registers]
        + [(lock.name, "lock", lock.line) for lock in program.locks]
        + [(c.name, "const", c.line) for c in program.consts]
        + [(r.name, "routine", r.line) for r in program.routines]
    )
    for name, what, line in declared:
        if name in owners:
            diags.append(Diagnostic(
                "duplicate-declaration", f"{what} {name!r} clashes with {owners[name]} of the same name",
                line=line,
            ))
        else:
            owners[name] = what

    task_prios = [r.priority for r in program.tasks]
    isr_prios: Dict[int, str] = {}
    lines = set(program.irq_lines)
    for isr in program.isrs:
        if isr.priority in isr_prios:
            diags.append(Diagnostic(
                "duplicate-priority",
                f"ISR {isr.name!r} shares priority {isr.priority} with {isr_prios[isr.priority]!r}",
                line=isr.line,
            ))
        isr_prios.setdefault(isr.priority, isr.name)
        if task_prios and isr.priority >= min(task_prios):
            diags.append(Diagnostic(
                "priority-overlap",
                f"ISR {isr.name!r} priority {isr.priority} is not higher than every task priority",
                line=isr.line,
            ))

    for routine in program.routines:
        for param in routine.params:
            if param in owners:
                diags.append(Diagnostic(
                    "shadowed-name", f"parameter {param!r} of {routine.name!r} shadows a declaration",
                    line=routine.line,
                ))

        for stmt in routine.statements():
            loc, line = stmt.location, stmt.line
            if isinstance(stmt, Assign):
                kind = symbols.lookup(routine.name, stmt.target)
                if kind is SymbolKind.REGISTER and program.register(stmt.target).readonly:
                    diags.append(Diagnostic(
                        "readonly-write", f"write to read-only register {stmt.target!r}", loc, line))
                elif kind in (SymbolKind.CONST, SymbolKind.LOCK):
                    diags.append(Diagnostic(
                        "bad-assignment", f"cannot assign to {kind.value} {stmt.target!r}", loc, line))
            if isinstance(stmt, Store):
                kind = symbols.lookup(routine.name, stmt.pointer)
                if kind not in (SymbolKind.GLOBAL, SymbolKind.PARAM, SymbolKind.LOCAL):
                    diags.append(Diagnostic(
                        "bad-pointer", f"{stmt.pointer!r} cannot hold an address", loc, line))

            for expr in stmt_exprs(stmt):
                for node in walk_expr(expr):
                    if isinstance(node, AddrOf):
                        kind = symbols.lookup(routine.name, node.name)
                        if kind in (SymbolKind.REGISTER, SymbolKind.CONST):
                            diags.append(Diagnostic(
                                "bad-address", f"cannot take the address of {kind.value} {node.name!r}",
                                loc, line))
                    elif isinstance(node, Deref):
                        kind = symbols.lookup(routine.name, node.name)
                        if kind not in (SymbolKind.GLOBAL, SymbolKind.PARAM, SymbolKind.LOCAL):
                            diags.append(Diagnostic(
                                "bad-pointer", f"{node.name!r} cannot hold an address", loc, line))
                    elif isinstance(node, Name):
                        if symbols.lookup(routine.name, node.name) is SymbolKind.LOCK:
                            diags.append(Diagnostic(
                                "bad-expression", f"lock {node.name!r} used as a value", loc, line))

            if isinstance(stmt, (Lock, Unlock)):
                if stmt.via_pointer:
                    kind = symbols.lookup(routine.name, stmt.lock)
                    if kind not in (SymbolKind.GLOBAL, SymbolKind.PARAM, SymbolKind.LOCAL):
                        diags.append(Diagnostic(
                            "unknown-lock", f"{stmt.lock!r} cannot hold a lock address", loc, line))
                elif stmt.lock not in program.lock_names:
                    diags.append(Diagnostic("unknown-lock", f"undeclared lock {stmt.lock!r}", loc, line))

            if isinstance(stmt, (IrqDisable, IrqEnable)) and stmt.irq is not None and stmt.irq not in lines:
                diags.append(Diagnostic(
                    "unknown-line", f"no ISR handles interrupt line {stmt.irq}", loc, line))

            if isinstance(stmt, Call):
                if not program.has_routine(stmt.callee):
                    diags.append(Diagnostic("unknown-routine", f"call to undeclared {stmt.callee!r}", loc, line))
                else:
                    callee = program.routine(stmt.callee)
                    if not callee.is_func:
                        diags.append(Diagnostic(
                            "bad-call", f"{stmt.callee!r} is a {callee.kind.value}, only funcs can be called",
                            loc, line))
                    elif len(callee.params) != len(stmt.args):
                        diags.append(Diagnostic(
                            "arity", f"{stmt.callee!r} takes {len(callee.params)} argument(s), "
                                     f"got {len(stmt.args)}", loc, line))

            if isinstance(stmt, RequestIrq):
                if not program.has_routine(stmt.isr) or not program.routine(stmt.isr).is_isr:
                    diags.append(Diagnostic("unknown-routine", f"{stmt.isr!r} is not an ISR", loc, line))
                elif len(program.routine(stmt.isr).params) != len(stmt.args):
                    diags.append(Diagnostic(
                        "arity", f"ISR {stmt.isr!r} takes {len(program.routine(stmt.isr).params)} "
                                 f"argument(s), got {len(stmt.args)}", loc, line))

    graph = call_graph(program)
    reported: Set[frozenset] = set()
    for cycle in nx.simple_cycles(graph):
        key = frozenset(cycle)
        if key in reported:
            continue
        reported.add(key)
        head = program.routine(sorted(cycle)[0])
        diags.append(Diagnostic(
            "recursion", f"recursive call cycle through {' -> '.join(cycle)}", line=head.line))

    logger.debug(f"check_program: {len(diags)} diagnostic(s)")
    return CheckResult(program, symbols, diags)
