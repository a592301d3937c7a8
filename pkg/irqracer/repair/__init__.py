"""
Race repair: hold sets, lock order, IDE/AL/ECS planning, patching, merging and the revalidation loop
"""

from .catalog import REPAIR_CATALOG, RepairStrategyEntry, format_catalog, get_strategy
from .holdsets import HoldSets, compute_hold_sets
from .ide import plan_ide_repair
from .lock_order import LockOrderGraph, acquisition_sequence, compute_lock_order, reversed_edges, rule2_violations
from .locking import plan_lock_repair
from .loop import (
    FailureKind, RepairFailure, RepairPlanner, RepairReport, RepairStatus, build_patched, repair_and_validate,
    revalidate_program, span_is_atomic,
)
from .merge import merge_fixes
from .patcher import (
    GENERATED_LOCK_PREFIX, PatchKind, PatchOp, Side, apply_patches, generated_statements, inserted_operation_count,
    location_remap, unapply, unified_diff,
)
from .plan import RepairPlan, RepairStrategy, Section, SectionKind, widen

__all__ = [
    "FailureKind", "GENERATED_LOCK_PREFIX", "HoldSets", "LockOrderGraph", "PatchKind", "PatchOp", "REPAIR_CATALOG",
    "RepairFailure", "RepairPlan", "RepairPlanner", "RepairReport", "RepairStatus", "RepairStrategy",
    "RepairStrategyEntry", "Section", "SectionKind", "Side", "acquisition_sequence", "apply_patches",
    "build_patched", "compute_hold_sets", "compute_lock_order", "format_catalog", "generated_statements",
    "get_strategy", "inserted_operation_count", "location_remap", "merge_fixes", "plan_ide_repair",
    "plan_lock_repair", "repair_and_validate", "revalidate_program", "reversed_edges", "rule2_violations",
    "span_is_atomic", "unapply", "unified_diff", "widen",
]
