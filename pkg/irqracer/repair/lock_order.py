"""
Lock order: which locks are acquired before which

Two views are kept. The nesting graph has an edge (a, b) when b is acquired
while a may be held. The acquisition sequence of a context lists its locks in
the order they are first acquired (locks named by one operation share a
position), and is what the ordering rule for new locks is checked against.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from ..analysis.locks import LockOperation, identify_lock_ops
from ..frontend.ast import Call, Location, Lock, Program, Stmt, walk_block
from ..graphs.icfg import Icfg, NodeKind
from .holdsets import HoldSets, compute_hold_sets

logger = logging.getLogger(__name__)

LockSequence = List[FrozenSet[str]]


@dataclass
class LockOrderGraph:
    graph: nx.DiGraph = field(default_factory=nx.DiGraph)
    classes: Set[FrozenSet[str]] = field(default_factory=set)
    sequences: Dict[str, LockSequence] = field(default_factory=dict)

    def edges(self) -> Set[Tuple[str, str]]:
        return set(self.graph.edges)

    def before(self, a: str, b: str) -> bool:
        """a -> b: some path acquires a and then b while holding a (possibly via other locks)."""
        return a in self.graph and b in self.graph and a != b and nx.has_path(self.graph, a, b)


def acquisition_sequence(program: Program, context: str, ops: Mapping[Location, LockOperation]) -> LockSequence:
    """Locks of a context (its body plus called funcs) in first-acquisition order."""
    sequence: LockSequence = []
    seen: Set[str] = set()

    def visit(body: Sequence[Stmt], stack: Tuple[str, ...]) -> None:
        for stmt in walk_block(tuple(body)):
            if isinstance(stmt, Lock):
                op = ops.get(stmt.location)
                locks = op.locks if op is not None else frozenset({stmt.lock})
                fresh = frozenset(locks - seen)
                if fresh:
                    sequence.append(fresh)
                    seen.update(fresh)
            elif isinstance(stmt, Call) and stmt.callee not in stack:
                visit(program.routine(stmt.callee).body, stack + (stmt.callee,))

    visit(program.routine(context).body, (context,))
    return sequence


def compute_lock_order(p: Program, ricfgs: Icfg, lock_ops: Optional[Iterable[LockOperation]] = None,
                       hold_sets: Optional[HoldSets] = None) -> LockOrderGraph:
    """
    Lock order of a program

    Args:
        p: Checked program
        ricfgs: Graphs the acquire events are read from
        lock_ops: Lock operations (identified without alias information when omitted)
        hold_sets: Precomputed hold sets over the same graphs

    Returns:
        LockOrderGraph with nesting edges, same-order classes and per-context sequences
    """
    lock_ops = list(lock_ops) if lock_ops is not None else identify_lock_ops(p)
    ops = {op.location: op for op in lock_ops}
    hold_sets = hold_sets or compute_hold_sets(ricfgs, lock_ops)
    order = LockOrderGraph()
    order.graph.add_nodes_from(sorted(p.lock_names))

    for cfg in ricfgs:
        for node in cfg.graph.nodes:
            instr = cfg.instr(node)
            op = ops.get(instr.location) if instr.kind is NodeKind.STMT else None
            if op is None or not op.acquire:
                continue
            if len(op.locks) > 1:
                order.classes.add(op.locks)
            for held in hold_sets[(cfg.name, node)]:
                for acquired in op.locks:
                    if held != acquired:
                        order.graph.add_edge(held, acquired)
        order.sequences[cfg.name] = acquisition_sequence(p, cfg.name, ops)

    logger.debug(f"Lock order: {order.graph.number_of_edges()} edge(s), {len(order.classes)} class(es)")
    return order


def _positions(sequence: LockSequence) -> Dict[str, int]:
    return {lock: i for i, group in enumerate(sequence) for lock in group}


def rule2_violations(ls_i: LockSequence, ls_j: LockSequence) -> List[Tuple[str, str]]:
    """
    Pairs ordered one way in ls_i and the other way in ls_j

    Locks sharing a position are unordered. An empty result means the two
    contexts agree on the order of every lock they both acquire.
    """
    first, second = _positions(ls_i), _positions(ls_j)
    common = sorted(set(first) & set(second))
    violations = []
    for a in common:
        for b in common:
            if first[a] < first[b] and second[a] > second[b]:
                violations.append((a, b))
    return violations


def reversed_edges(original: LockOrderGraph, patched: LockOrderGraph) -> List[Tuple[str, str]]:
    """New nesting edges (a, b) for which the patched graph also leads from b back to a."""
    found = []
    for a, b in sorted(patched.edges() - original.edges()):
        if nx.has_path(patched.graph, b, a):
            found.append((a, b))
    return found
