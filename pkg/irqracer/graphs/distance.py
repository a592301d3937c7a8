"""
Instruction distances (unit-weight BFS)
"""

from typing import Dict, Hashable, Iterable, Optional, Union

import networkx as nx

from .icfg import ControlFlowGraph

GraphLike = Union[nx.DiGraph, ControlFlowGraph]


def _nx(graph: GraphLike) -> nx.DiGraph:
    return graph.graph if isinstance(graph, ControlFlowGraph) else graph


def distance(graph: GraphLike, source: Hashable, target: Hashable) -> Optional[int]:
    """Length of the shortest instruction path, or None when target is unreachable."""
    try:
        return nx.shortest_path_length(_nx(graph), source, target)
    except nx.NetworkXNoPath:
        return None


def distances_to(graph: GraphLike, targets: Iterable[Hashable]) -> Dict[Hashable, int]:
    """Distance from every node that can reach one of the targets to the nearest one."""
    g = _nx(graph)
    targets = [t for t in targets if t in g]
    if not targets:
        return {}
    reverse = g.reverse(copy=False)
    lengths = nx.multi_source_dijkstra_path_length(reverse, set(targets), weight=lambda u, v, d: 1)
    return dict(lengths)
