"""
Control flow structures: ICFG, reduced ICFG, inter-context graph, dominators and distances
"""

from .distance import distance, distances_to
from .dominators import DomInfo, compute_dominators, dominance
from .iccfg import Iccfg, build_iccfg
from .icfg import ControlFlowGraph, Icfg, Instr, NodeKind, build_icfg, to_dot
from .ricfg import Ricfg, build_ricfg

__all__ = [
    "ControlFlowGraph", "DomInfo", "Icfg", "Iccfg", "Instr", "NodeKind", "Ricfg",
    "build_icfg", "build_iccfg", "build_ricfg", "compute_dominators", "distance",
    "distances_to", "dominance", "to_dot",
]
