"""
Shared resource identification

A variable is shared when at least two ISRs access it, or at least one task
and one ISR do. Accesses are attributed to the context (task or ISR) whose
execution performs them, so statements of a helper func count once for
every context that calls it.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import networkx as nx

from ..frontend.ast import (
    Access, Assign, Deref, Location, Name, Program, Routine, Stmt, Store, stmt_exprs, walk_expr,
)
from ..frontend.checker import call_graph
from ..frontend.symbols import SymbolKind, SymbolTable, qualified_owner
from .pointer import AliasSet

logger = logging.getLogger(__name__)

_VARIABLE_KINDS = (SymbolKind.GLOBAL, SymbolKind.REGISTER, SymbolKind.PARAM, SymbolKind.LOCAL)


@dataclass(frozen=True)
class SharedResourceAccess:
    """One access event: who, where, through which name, to which real variable, and how."""
    context: str            # task or ISR executing the access
    location: Location      # statement position (may lie in an inlined func)
    name: str               # qualified name used at the site ("*r.p" for a dereference)
    is_real: bool           # the site names the variable itself, not an alias
    resource: str           # real (declared) variable
    access: Access

    @property
    def routine(self) -> str:
        return self.location.routine


@dataclass
class SharedResourceSet:
    resources: FrozenSet[str] = frozenset()
    names: FrozenSet[str] = frozenset()
    users: Dict[str, FrozenSet[str]] = field(default_factory=dict)
    accesses: Tuple[SharedResourceAccess, ...] = ()

    def __contains__(self, name: str) -> bool:
        return name in self.names or name in self.resources

    def __len__(self) -> int:
        return len(self.resources)

    def access_sites(self) -> Set[Tuple[str, Location]]:
        return {(a.context, a.location) for a in self.accesses}


def expression_reads(expr, routine: str, symbols: SymbolTable) -> List[str]:
    """Qualified names an expression reads; a dereference reads the pointer and ``*pointer``."""
    reads: List[str] = []
    for node in walk_expr(expr):
        if isinstance(node, Name):
            if symbols.lookup(routine, node.name) in _VARIABLE_KINDS:
                reads.append(symbols.qualify(routine, node.name))
        elif isinstance(node, Deref):
            pointer = symbols.qualify(routine, node.name)
            reads.extend([pointer, f"*{pointer}"])
    return reads


def statement_accesses(stmt: Stmt, routine: str, symbols: SymbolTable) -> List[Tuple[str, Access]]:
    """
    Memory accesses a statement performs by itself (nested blocks excluded)

    Returns:
        (qualified name, access type) pairs, reads before writes
    """
    accesses = [(name, Access.READ) for expr in stmt_exprs(stmt) for name in expression_reads(expr, routine, symbols)]
    if isinstance(stmt, Assign):
        accesses.append((symbols.qualify(routine, stmt.target), Access.WRITE))
    elif isinstance(stmt, Store):
        pointer = symbols.qualify(routine, stmt.pointer)
        accesses.append((pointer, Access.READ))
        accesses.append((f"*{pointer}", Access.WRITE))
    return accesses


def context_routines(program: Program) -> Dict[str, List[Routine]]:
    """Routines whose statements run inside each task/ISR context (the context first)."""
    graph = call_graph(program)
    result = {}
    for context in program.contexts:
        reachable = sorted(nx.descendants(graph, context.name))
        result[context.name] = [context] + [program.routine(name) for name in reachable]
    return result


def _real_names(name: str, aliases: AliasSet) -> List[Tuple[str, bool]]:
    if name.startswith("*"):
        return [(target, False) for target in sorted(aliases.resolve(name))]
    return [(name, True)]


def _isr_keeps(resource: str, isr: Routine, aliases: AliasSet) -> bool:
    """The ISR's own locals only count when one of its parameters may point at them."""
    if qualified_owner(resource) != isr.name:
        return True
    return any(resource in aliases.pts(f"{isr.name}.{param}") for param in isr.params)


def collect_accesses(program: Program, aliases: AliasSet,
                     symbols: Optional[SymbolTable] = None) -> List[SharedResourceAccess]:
    """Every access in every context, resolved to real variables."""
    symbols = symbols or SymbolTable(program)
    events: List[SharedResourceAccess] = []
    for context, routines in context_routines(program).items():
        owner = program.routine(context)
        for routine in routines:
            for stmt in routine.statements():
                for name, access in statement_accesses(stmt, routine.name, symbols):
                    for resource, is_real in _real_names(name, aliases):
                        if owner.is_isr and not _isr_keeps(resource, owner, aliases):
                            continue
                        events.append(SharedResourceAccess(
                            context, stmt.location, name, is_real, resource, access))
    return events


def identify_shared_resources(program: Program, aliases: AliasSet,
                              symbols: Optional[SymbolTable] = None
                              ) -> Tuple[SharedResourceSet, List[SharedResourceAccess]]:
    """
    Find the shared resource set and every access to one of its members

    Args:
        program: Checked program
        aliases: Linked program-wide AliasSet

    Returns:
        (SharedResourceSet, accesses to SRS members sorted by context and location)
    """
    symbols = symbols or SymbolTable(program)
    events = collect_accesses(program, aliases, symbols)

    task_users: Dict[str, Set[str]] = defaultdict(set)
    isr_users: Dict[str, Set[str]] = defaultdict(set)
    for event in events:
        if program.routine(event.context).is_isr:
            isr_users[event.resource].add(event.context)
        else:
            task_users[event.resource].add(event.context)

    shared = frozenset(
        resource for resource in set(task_users) | set(isr_users)
        if len(isr_users[resource]) >= 2 or (task_users[resource] and isr_users[resource])
    )

    # Alias closure: every name that may designate a shared variable
    names: Set[str] = set(shared)
    for event in events:
        if event.resource in shared:
            names.add(event.name)
    for pointer, targets in aliases.points_to.items():
        if targets & shared:
            names.add(f"*{pointer}")

    accesses = sorted(
        (e for e in events if e.resource in shared),
        key=lambda e: (e.context, e.location, e.resource, e.access.value, e.name),
    )
    users = {r: frozenset(task_users[r] | isr_users[r]) for r in shared}
    srs = SharedResourceSet(shared, frozenset(names), users, tuple(accesses))
    logger.debug(f"Shared resources: {sorted(shared)} ({len(accesses)} access events)")
    return srs, list(accesses)
