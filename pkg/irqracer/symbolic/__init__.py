"""
Guided symbolic execution: input points, bit-vector terms, solving and exploration
"""

from .explorer import (
    GuidedExplorer, InconclusiveReason, Phase, SymExecKind, SymExecResult, SymState, explore_warning,
    guided_explore,
)
from .inputs import InputAssignment, InputPoint, identify_input_points, input_points
from .solver import SolveResult, SolveStatus, solve
from .terms import TermBuilder

__all__ = [
    "GuidedExplorer", "InconclusiveReason", "InputAssignment", "InputPoint", "Phase", "SolveResult",
    "SolveStatus", "SymExecKind", "SymExecResult", "SymState", "TermBuilder", "explore_warning",
    "guided_explore", "identify_input_points", "input_points", "solve",
]
