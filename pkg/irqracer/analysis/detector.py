"""
Static race detection over reduced graphs

Two access events on the same shared variable form a potential race when at
least one writes, the second event's ISR strictly preempts the first event's
context, and the interrupt status right after some instance of the first
event leaves that ISR's line enabled.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from ..frontend.ast import Access, Location, Program
from ..graphs.icfg import EVALUATING
from ..graphs.ricfg import Ricfg
from .interrupts import IntbMap
from .resources import SharedResourceAccess

logger = logging.getLogger(__name__)


class WarningStatus(str, Enum):
    STATIC = "Static"
    INPUT_FOUND = "InputFound"
    INFEASIBLE = "Infeasible"
    INCONCLUSIVE = "Inconclusive"
    CONFIRMED = "Confirmed"
    REFUTED_DYNAMIC = "RefutedDynamic"


@dataclass(frozen=True)
class AccessEvent:
    context: str
    location: Location
    access: Access
    line: int = 0   # source line of the statement

    @property
    def routine(self) -> str:
        return self.location.routine

    def __str__(self) -> str:
        return f"({self.context}, {self.location}, {self.access.value})"


WarningKey = Tuple[Location, Location, str]


@dataclass
class RaceWarning:
    e_i: AccessEvent
    e_j: AccessEvent
    resource: str
    status: WarningStatus = WarningStatus.STATIC
    irq_line: int = 0   # interrupt line of e_j's ISR
    notes: Dict[str, str] = field(default_factory=dict)

    @property
    def key(self) -> WarningKey:
        return (self.e_i.location, self.e_j.location, self.resource)

    @property
    def key_text(self) -> str:
        return f"{self.e_i.location}->{self.e_j.location}[{self.resource}]"

    def __str__(self) -> str:
        return f"<{self.e_i}, {self.e_j}> on {self.resource} [{self.status.value}]"


def access_events(program: Program, accesses: Iterable[SharedResourceAccess]) -> List[Tuple[AccessEvent, str]]:
    """Collapse accesses per (context, location, resource); a location that writes counts as a write."""
    merged: Dict[Tuple[str, Location, str], Access] = {}
    for access in accesses:
        key = (access.context, access.location, access.resource)
        if merged.get(key) is not Access.WRITE:
            merged[key] = access.access
    events = []
    for (context, location, resource), access in sorted(merged.items(), key=lambda kv: kv[0]):
        line = program.statement_at(location).line
        events.append((AccessEvent(context, location, access, line), resource))
    return events


def detect_static_races(ricfgs: Ricfg, accesses: Iterable[SharedResourceAccess],
                        intb_maps: Mapping[str, IntbMap], program: Optional[Program] = None
                        ) -> List[RaceWarning]:
    """
    Emit every potential racing pair

    Args:
        ricfgs: Reduced graphs of the program
        accesses: Shared-resource accesses
        intb_maps: Interrupt status per context, from propagate_intb

    Returns:
        Warnings deduplicated by (e_i location, e_j location, resource), sorted by that key
    """
    program = program or ricfgs.program
    events = access_events(program, accesses)
    found: Dict[WarningKey, RaceWarning] = {}

    for first, resource in events:
        cfg_i = ricfgs[first.context]
        nodes_i = cfg_i.nodes_at(first.location, EVALUATING)
        intb = intb_maps[first.context]
        for second, other in events:
            if other != resource or not program.preempts(second.context, first.context):
                continue
            if first.access is Access.READ and second.access is Access.READ:
                continue
            line = program.routine(second.context).irq_line
            if not any(intb.after(node).enabled(line) for node in nodes_i):
                continue
            warning = RaceWarning(first, second, resource, irq_line=line)
            found.setdefault(warning.key, warning)

    warnings = [found[key] for key in sorted(found)]
    logger.debug(f"Static detection: {len(warnings)} warning(s)")
    return warnings


def racing_points(warnings: Iterable[RaceWarning]) -> FrozenSet[Location]:
    """Every location taking part in some warning."""
    points = set()
    for warning in warnings:
        points.add(warning.e_i.location)
        points.add(warning.e_j.location)
    return frozenset(points)
