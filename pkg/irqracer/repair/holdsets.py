"""
Hold sets: locks possibly held at each instruction

A forward may-analysis over every component graph. An acquire adds every
lock the operation may name; a release only removes a lock when the
operation names exactly one.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Tuple

import networkx as nx

from ..analysis.locks import LockOperation
from ..frontend.ast import Location
from ..graphs.icfg import Icfg, NodeKind

logger = logging.getLogger(__name__)

EMPTY: FrozenSet[str] = frozenset()


@dataclass
class HoldSets:
    """hold(context, node): locks held when the node starts."""
    sets: Dict[Tuple[str, int], FrozenSet[str]] = field(default_factory=dict)
    graphs: Icfg = None

    def __getitem__(self, key: Tuple[str, int]) -> FrozenSet[str]:
        return self.sets.get(key, EMPTY)

    def at_location(self, context: str, location: Location) -> FrozenSet[str]:
        """Union over every instance of a statement in one context."""
        cfg = self.graphs[context]
        held = set()
        for node in cfg.graph.nodes:
            if cfg.instr(node).location == location and cfg.instr(node).kind is not NodeKind.JOIN:
                held |= self[(context, node)]
        return frozenset(held)

    def of_context(self, context: str) -> FrozenSet[str]:
        """Every lock the context may hold at some point."""
        held = set()
        for (name, _), locks in self.sets.items():
            if name == context:
                held |= locks
        return frozenset(held)


def compute_hold_sets(g: Icfg, lock_ops: Iterable[LockOperation]) -> HoldSets:
    """
    Propagate held locks over every component graph

    Args:
        g: Icfg (or Ricfg) of the program
        lock_ops: Lock operations with their alias-resolved lock sets

    Returns:
        HoldSets keyed by (context, node)
    """
    ops: Mapping[Location, LockOperation] = {op.location: op for op in lock_ops}
    result = HoldSets(graphs=g)
    for cfg in g:
        out: Dict[int, FrozenSet[str]] = {}
        for node in nx.topological_sort(cfg.graph):
            held = EMPTY
            for pred in cfg.graph.predecessors(node):
                held = held | out[pred]
            result.sets[(cfg.name, node)] = held
            instr = cfg.instr(node)
            op = ops.get(instr.location) if instr.kind is NodeKind.STMT else None
            if op is not None:
                if op.acquire:
                    held = held | op.locks
                elif len(op.locks) == 1:
                    held = held - op.locks
            out[node] = held
    logger.debug(f"Hold sets over {len(result.sets)} node(s)")
    return result
