"""
Dominator and post-dominator information over component graphs
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Hashable

import networkx as nx

from ..errors import MultipleExits
from .icfg import ControlFlowGraph


@dataclass(frozen=True)
class DomInfo:
    idom: Dict[Hashable, Hashable]
    ipdom: Dict[Hashable, Hashable]
    entry: Hashable
    exit: Hashable

    def dom(self, node) -> FrozenSet:
        """All dominators of node, itself included."""
        return _chain(self.idom, node, self.entry)

    def post_dom(self, node) -> FrozenSet:
        """All post-dominators of node, itself included."""
        return _chain(self.ipdom, node, self.exit)

    def dominates(self, a, b) -> bool:
        return a in self.dom(b)


def _chain(tree: Dict, node, root) -> FrozenSet:
    found = {node}
    while node != root:
        node = tree[node]
        found.add(node)
    return frozenset(found)


def dominance(graph: nx.DiGraph, entry, exit) -> DomInfo:
    """
    Dominators from entry and post-dominators towards exit

    Args:
        graph: Directed graph in which every node lies on an entry-to-exit path
        entry: Unique entry node
        exit: Unique exit node

    Raises:
        MultipleExits: some other node has no successors
    """
    sinks = [n for n in graph.nodes if graph.out_degree(n) == 0]
    if sinks != [exit]:
        raise MultipleExits(f"expected the single exit {exit!r}, found sinks {sorted(map(str, sinks))}")
    idom = dict(nx.immediate_dominators(graph, entry))
    ipdom = dict(nx.immediate_dominators(graph.reverse(copy=False), exit))
    # some networkx releases omit the root's self-mapping
    idom.setdefault(entry, entry)
    ipdom.setdefault(exit, exit)
    return DomInfo(idom, ipdom, entry, exit)


def compute_dominators(cfg: ControlFlowGraph) -> DomInfo:
    return dominance(cfg.graph, cfg.entry, cfg.exit)
