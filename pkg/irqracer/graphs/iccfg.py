"""
Inter-context control flow graphs

Two component graphs joined by one injected edge: from the instruction right
after the first racing event to the entry of the interrupting context.
Nodes are relabeled ``("i", n)`` and ``("j", n)`` so that both halves stay
distinct even when they inline the same helper.
"""

from dataclasses import dataclass
from typing import Hashable, List, Tuple

import networkx as nx

from ..errors import EventNotInGraph
from .icfg import EVALUATING, ControlFlowGraph, Instr

Node = Tuple[str, int]


@dataclass
class Iccfg:
    graph: nx.DiGraph
    g_i: ControlFlowGraph
    g_j: ControlFlowGraph
    source: Node
    target: Node
    event_i: Tuple[Node, ...]
    event_j: Tuple[Node, ...]

    @property
    def entry(self) -> Node:
        return ("i", self.g_i.entry)

    def instr(self, node: Node) -> Instr:
        return self.graph.nodes[node]["instr"]

    def successors(self, node: Node) -> List[Node]:
        return sorted(self.graph.successors(node))

    def component(self, node: Node) -> ControlFlowGraph:
        return self.g_i if node[0] == "i" else self.g_j

    def injected_edges(self) -> List[Tuple[Hashable, Hashable]]:
        return [(u, v) for u, v, kind in self.graph.edges(data="kind") if kind == "inject"]


def _event_nodes(cfg: ControlFlowGraph, event) -> List[int]:
    nodes = cfg.nodes_at(event.location, EVALUATING)
    if not nodes:
        raise EventNotInGraph(f"{event.location} does not occur in the graph of {cfg.name!r}")
    return nodes


def build_iccfg(g_i: ControlFlowGraph, g_j: ControlFlowGraph, wn) -> Iccfg:
    """
    Join the two contexts of a warning

    Args:
        g_i: Graph containing the first event
        g_j: Graph of the interrupting ISR, containing the second event
        wn: RaceWarning

    Returns:
        Iccfg with exactly one cross-context edge

    Raises:
        EventNotInGraph: an event's location has no node in its graph
    """
    first = _event_nodes(g_i, wn.e_i)
    second = _event_nodes(g_j, wn.e_j)

    graph = nx.DiGraph()
    for tag, cfg in (("i", g_i), ("j", g_j)):
        for node in cfg.graph.nodes:
            graph.add_node((tag, node), **cfg.graph.nodes[node])
        for src, dst, attrs in cfg.graph.edges(data=True):
            graph.add_edge((tag, src), (tag, dst), **attrs)

    # The instruction right after the first instance of e_i; e_i itself when it branches
    successors = g_i.successors(first[0])
    source = ("i", successors[0] if len(successors) == 1 else first[0])
    target = ("j", g_j.entry)
    graph.add_edge(source, target, kind="inject")

    return Iccfg(
        nx.freeze(graph), g_i, g_j, source, target,
        tuple(("i", n) for n in first), tuple(("j", n) for n in second),
    )
