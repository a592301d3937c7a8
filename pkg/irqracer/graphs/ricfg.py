"""
Reduced inter-procedural control flow graphs

Pruning keeps the nodes that matter for interrupt races: shared-resource
accesses, interrupt and lock operations, and the control structure around
them. Everything else is contracted away; retained nodes keep their ICFG ids.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Set, Tuple

import networkx as nx

from ..frontend.ast import Location
from .dominators import compute_dominators
from .icfg import EVALUATING, ControlFlowGraph, Icfg, NodeKind

logger = logging.getLogger(__name__)


@dataclass
class Ricfg(Icfg):
    source: Icfg = None
    pruned_branches: Dict[str, FrozenSet[Location]] = field(default_factory=dict)


def _region(graph: nx.DiGraph, start: int, stop: int) -> Set[int]:
    """Nodes reachable from start's successors without passing stop."""
    seen: Set[int] = set()
    stack = [s for s in graph.successors(start) if s != stop]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(s for s in graph.successors(node) if s != stop and s not in seen)
    return seen


def retained_nodes(cfg: ControlFlowGraph, sites: Set[Tuple[str, Location]],
                   op_locations: Set[Location]) -> Set[int]:
    """
    Nodes of one component graph that survive pruning

    Args:
        cfg: Unpruned component graph
        sites: (context, location) pairs of shared-resource accesses
        op_locations: Locations of interrupt and lock operations
    """
    graph = cfg.graph
    keep = {cfg.entry, cfg.exit}
    for node in graph.nodes:
        instr = cfg.instr(node)
        if instr.kind in EVALUATING and (cfg.name, instr.location) in sites:
            keep.add(node)
        elif instr.kind is NodeKind.STMT and instr.location in op_locations:
            keep.add(node)
    base = set(keep)

    dom = compute_dominators(cfg)
    for node in graph.nodes:
        instr = cfg.instr(node)
        if instr.kind is NodeKind.BRANCH and _region(graph, node, dom.ipdom[node]) & base:
            keep.add(node)
        elif instr.kind is NodeKind.CALL:
            returns = [s for s in nx.descendants(graph, node)
                       if cfg.instr(s).kind is NodeKind.RETURN and cfg.instr(s).location == instr.location
                       and cfg.instr(s).frame == instr.frame and cfg.instr(s).unroll == instr.unroll]
            ret = returns[0]
            if node in keep or _region(graph, node, ret) & base:
                keep.add(node)
                keep.add(ret)
                keep.update(graph.successors(node))  # the func entry

    branches = [n for n in keep if cfg.instr(n).kind is NodeKind.BRANCH]
    for node in graph.nodes:
        instr = cfg.instr(node)
        if instr.kind is NodeKind.JOIN and any(dom.ipdom[b] == node for b in branches):
            keep.add(node)
        elif instr.kind is NodeKind.BOUND:
            loop = instr.unroll[:-1]
            if any(cfg.instr(b).location == instr.location and cfg.instr(b).frame == instr.frame
                   and cfg.instr(b).unroll[:-1] == loop for b in branches):
                keep.add(node)
    return keep


def contract(cfg: ControlFlowGraph, keep: Iterable[int]) -> nx.DiGraph:
    """Subgraph on ``keep`` with an edge wherever a path runs through pruned nodes only."""
    keep = set(keep)
    graph = cfg.graph
    reduced = nx.DiGraph()
    for node in sorted(keep):
        reduced.add_node(node, **graph.nodes[node])
    for node in sorted(keep):
        for succ in sorted(graph.successors(node)):
            attrs = dict(graph.edges[node, succ])
            targets: List[int] = []
            stack, seen = [succ], set()
            while stack:
                current = stack.pop()
                if current in seen:
                    continue
                seen.add(current)
                if current in keep:
                    targets.append(current)
                else:
                    stack.extend(graph.successors(current))
            for target in targets:
                if reduced.has_edge(node, target):
                    # both arms of a branch collapse onto the same node
                    reduced.edges[node, target]["branch"] = None
                else:
                    reduced.add_edge(node, target, **attrs)
    return reduced


def build_ricfg(g: Icfg, srs, itrl, lock_ops) -> Ricfg:
    """
    Prune every component graph down to the race-relevant nodes

    Args:
        g: Unpruned ICFG
        srs: SharedResourceSet of the same program
        itrl: Interrupt operation list
        lock_ops: Lock operation list

    Returns:
        Ricfg whose graphs reuse the ICFG node ids and record pruned branches
    """
    sites = srs.access_sites()
    op_locations = {op.location for op in itrl} | {op.location for op in lock_ops}
    graphs: Dict[str, ControlFlowGraph] = {}
    pruned: Dict[str, FrozenSet[Location]] = {}
    for cfg in g:
        keep = retained_nodes(cfg, sites, op_locations)
        reduced = contract(cfg, keep)
        dropped = frozenset(
            cfg.instr(n).location for n in cfg.graph.nodes
            if n not in keep and cfg.instr(n).kind is NodeKind.BRANCH
        )
        pruned[cfg.name] = dropped
        graphs[cfg.name] = ControlFlowGraph(
            cfg.name, cfg.routine, nx.freeze(reduced), cfg.entry, cfg.exit, cfg.unroll, dropped)
        logger.debug(f"RICFG {cfg.name}: kept {len(keep)}/{len(cfg)} nodes, pruned {len(dropped)} branch(es)")
    return Ricfg(g.program, g.unroll, graphs, source=g, pruned_branches=pruned)
