"""
Static analyses: aliasing, shared resources, interrupt/lock operations and race detection
"""

from .detector import AccessEvent, RaceWarning, WarningStatus, detect_static_races, racing_points
from .interrupts import (
    InterruptOperation, InterruptStatusVector, IntbMap, IrqAction, identify_interrupt_ops, propagate_intb,
)
from .locks import LockOperation, identify_lock_ops
from .pointer import AliasSet, analyse_aliases, andersen_points_to, link_alias_sets
from .resources import SharedResourceAccess, SharedResourceSet, identify_shared_resources
from .static import StaticAnalysis, run_static_analysis

__all__ = [
    "AccessEvent", "AliasSet", "IntbMap", "InterruptOperation", "InterruptStatusVector", "IrqAction",
    "LockOperation", "RaceWarning", "SharedResourceAccess", "SharedResourceSet", "StaticAnalysis",
    "WarningStatus", "analyse_aliases", "andersen_points_to", "detect_static_races",
    "identify_interrupt_ops", "identify_lock_ops", "identify_shared_resources", "link_alias_sets", "racing_points",
    "propagate_intb", "run_static_analysis",
]
