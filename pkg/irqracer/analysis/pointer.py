"""
Andersen-style inclusion-based points-to analysis

Flow-, field- and context-insensitive. Names are qualified: globals bare,
params/locals as ``routine.name``, dereferences as ``*routine.p``.
Registers never take part in pointer flow.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from networkx.utils import UnionFind

from ..errors import ArityMismatch
from ..frontend.ast import AddrOf, Assign, Call, Deref, Expr, Name, Program, RequestIrq, Routine, Store
from ..frontend.symbols import SymbolKind, SymbolTable

logger = logging.getLogger(__name__)


class ConstraintKind(str, Enum):
    ADDR = "addr"    # p = &x
    COPY = "copy"    # p = q
    LOAD = "load"    # p = *q
    STORE = "store"  # *p = q


@dataclass(frozen=True)
class PointerConstraint:
    kind: ConstraintKind
    lhs: str
    rhs: str


@dataclass
class AliasSet:
    """Points-to sets plus the may-alias closure derived from them."""
    points_to: Dict[str, FrozenSet[str]] = field(default_factory=dict)
    constraints: Tuple[PointerConstraint, ...] = ()
    _classes: Optional[UnionFind] = field(default=None, repr=False)

    def __post_init__(self):
        classes = UnionFind()
        for pointer, targets in self.points_to.items():
            classes.union(pointer)
            for target in targets:
                classes.union(f"*{pointer}", target)
        self._classes = classes

    def pts(self, name: str) -> FrozenSet[str]:
        return self.points_to.get(name, frozenset())

    def resolve(self, name: str) -> FrozenSet[str]:
        """Real variables a (possibly dereferenced) name may designate."""
        if name.startswith("*"):
            return self.pts(name[1:])
        return frozenset({name})

    def aliases_of(self, name: str) -> FrozenSet[str]:
        """Alias class of name (reflexive, symmetric, transitive)."""
        if name not in self._classes.parents:
            return frozenset({name})
        root = self._classes[name]
        return frozenset(n for n in self._classes.parents if self._classes[n] == root)

    def may_alias(self, a: str, b: str) -> bool:
        if a == b:
            return True
        if self.resolve(a) & self.resolve(b):
            return True
        return b in self.aliases_of(a)

    def restricted(self, keep) -> "AliasSet":
        return AliasSet(
            {name: targets for name, targets in self.points_to.items() if keep(name)},
            self.constraints,
        )


def solve_constraints(constraints: Iterable[PointerConstraint]) -> Dict[str, FrozenSet[str]]:
    """Worklist fixpoint over the four inclusion rules."""
    constraints = list(constraints)
    pts: Dict[str, Set[str]] = defaultdict(set)
    edges: Dict[str, Set[str]] = defaultdict(set)     # q -> p : pts(p) ⊇ pts(q)
    loads: Dict[str, Set[str]] = defaultdict(set)     # q -> {p}: p = *q
    stores: Dict[str, Set[str]] = defaultdict(set)    # p -> {q}: *p = q

    worklist: List[str] = []
    for c in constraints:
        if c.kind is ConstraintKind.ADDR:
            pts[c.lhs].add(c.rhs)
            worklist.append(c.lhs)
        elif c.kind is ConstraintKind.COPY:
            edges[c.rhs].add(c.lhs)
            worklist.append(c.rhs)
        elif c.kind is ConstraintKind.LOAD:
            loads[c.rhs].add(c.lhs)
            worklist.append(c.rhs)
        else:
            stores[c.lhs].add(c.rhs)
            worklist.append(c.lhs)

    def add_edge(src: str, dst: str) -> None:
        if dst not in edges[src]:
            edges[src].add(dst)
            if not pts[src] <= pts[dst]:
                pts[dst] |= pts[src]
                worklist.append(dst)

    while worklist:
        node = worklist.pop()
        for target in list(pts[node]):
            for dst in loads.get(node, ()):
                add_edge(target, dst)
            for src in stores.get(node, ()):
                add_edge(src, target)
        for dst in list(edges.get(node, ())):
            if not pts[node] <= pts[dst]:
                pts[dst] |= pts[node]
                worklist.append(dst)

    return {name: frozenset(targets) for name, targets in pts.items() if targets}


def _value_constraints(lhs: str, expr: Expr, routine: str, symbols: SymbolTable) -> List[PointerConstraint]:
    """Constraints for ``lhs = expr`` where lhs is already qualified."""
    if isinstance(expr, AddrOf):
        return [PointerConstraint(ConstraintKind.ADDR, lhs, symbols.qualify(routine, expr.name))]
    if isinstance(expr, Name):
        kind = symbols.lookup(routine, expr.name)
        if kind in (SymbolKind.GLOBAL, SymbolKind.PARAM, SymbolKind.LOCAL):
            return [PointerConstraint(ConstraintKind.COPY, lhs, symbols.qualify(routine, expr.name))]
        return []
    if isinstance(expr, Deref):
        return [PointerConstraint(ConstraintKind.LOAD, lhs, symbols.qualify(routine, expr.name))]
    return []


def routine_constraints(routine: Routine, symbols: SymbolTable) -> List[PointerConstraint]:
    constraints: List[PointerConstraint] = []
    for stmt in routine.statements():
        if isinstance(stmt, Assign):
            if symbols.lookup(routine.name, stmt.target) is SymbolKind.REGISTER:
                continue
            lhs = symbols.qualify(routine.name, stmt.target)
            constraints.extend(_value_constraints(lhs, stmt.value, routine.name, symbols))
        elif isinstance(stmt, Store):
            pointer = symbols.qualify(routine.name, stmt.pointer)
            value = stmt.value
            if isinstance(value, Name) and symbols.lookup(routine.name, value.name) in (
                    SymbolKind.GLOBAL, SymbolKind.PARAM, SymbolKind.LOCAL):
                constraints.append(PointerConstraint(
                    ConstraintKind.STORE, pointer, symbols.qualify(routine.name, value.name)))
            elif isinstance(value, (AddrOf, Deref)):
                temp = f"{routine.name}.$t{stmt.location.index}"
                constraints.extend(_value_constraints(temp, value, routine.name, symbols))
                constraints.append(PointerConstraint(ConstraintKind.STORE, pointer, temp))
    return constraints


def binding_constraints(program: Program, symbols: SymbolTable) -> List[PointerConstraint]:
    """Parameter bindings for calls and for ISR registration (treated as an immediate call)."""
    constraints: List[PointerConstraint] = []
    for routine in program.routines:
        for stmt in routine.statements():
            if isinstance(stmt, Call):
                target = program.routine(stmt.callee)
            elif isinstance(stmt, RequestIrq):
                target = program.routine(stmt.isr)
            else:
                continue
            if len(target.params) != len(stmt.args):
                raise ArityMismatch(
                    f"{stmt.location}: {target.name!r} takes {len(target.params)} argument(s), "
                    f"got {len(stmt.args)}"
                )
            for param, arg in zip(target.params, stmt.args):
                lhs = f"{target.name}.{param}"
                constraints.extend(_value_constraints(lhs, arg, routine.name, symbols))
    return constraints


def andersen_points_to(routine: Routine, program: Program,
                       symbols: Optional[SymbolTable] = None) -> AliasSet:
    """
    Intra-routine points-to sets

    Args:
        routine: Routine to analyse
        program: Program supplying global names
        symbols: Optional pre-built symbol table

    Returns:
        AliasSet restricted to the routine's own names and globals
    """
    symbols = symbols or SymbolTable(program)
    constraints = routine_constraints(routine, symbols)
    prefix = routine.name + "."
    globals_ = program.global_names
    aliases = AliasSet(solve_constraints(constraints), tuple(constraints))
    return aliases.restricted(lambda name: name.startswith(prefix) or name in globals_)


def link_alias_sets(program: Program, sets: Mapping[str, AliasSet],
                    symbols: Optional[SymbolTable] = None) -> AliasSet:
    """
    Merge per-routine results through call and registration bindings

    Args:
        program: Checked program
        sets: Per-routine AliasSets from andersen_points_to, keyed by routine name

    Returns:
        Program-wide AliasSet solved to a global fixpoint

    Raises:
        ArityMismatch: a call or registration passes the wrong number of arguments
    """
    symbols = symbols or SymbolTable(program)
    constraints: List[PointerConstraint] = []
    for routine in program.routines:
        if routine.name in sets:
            constraints.extend(sets[routine.name].constraints)
        else:
            constraints.extend(routine_constraints(routine, symbols))
    constraints.extend(binding_constraints(program, symbols))
    linked = AliasSet(solve_constraints(constraints), tuple(constraints))
    logger.debug(f"Linked alias analysis: {len(linked.points_to)} pointer(s), {len(constraints)} constraint(s)")
    return linked


def analyse_aliases(program: Program, symbols: Optional[SymbolTable] = None) -> AliasSet:
    """Per-routine analysis followed by linking."""
    symbols = symbols or SymbolTable(program)
    sets = {r.name: andersen_points_to(r, program, symbols) for r in program.routines}
    return link_alias_sets(program, sets, symbols)
