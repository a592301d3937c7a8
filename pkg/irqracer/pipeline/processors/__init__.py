"""
Stage processors: static, symbolic, dynamic and repair
"""

from .base_processor import BaseStageProcessor
from .dynamic_processor import DynamicProcessor
from .repair_processor import RepairProcessor
from .static_processor import StaticProcessor
from .symbolic_processor import SymbolicProcessor

__all__ = ["BaseStageProcessor", "DynamicProcessor", "RepairProcessor", "StaticProcessor", "SymbolicProcessor"]
