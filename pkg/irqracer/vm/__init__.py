"""
Interleaving VM: deterministic interpreter, race validation and the exhaustive oracle
"""

from .arith import Address
from .interpreter import (
    EventKind, InterruptController, InterruptSchedule, Interpreter, ScheduledInterrupt, StepInfo, Trace, TraceEvent,
    execute,
)
from .machine import MachineState, isr_enabled
from .oracle import OracleRace, OracleResult, default_input_space, exhaustive_oracle
from .validator import RaceController, ValidationVerdict, VerdictKind, replay_covers, validate_race

__all__ = [
    "Address", "EventKind", "InterruptController", "InterruptSchedule", "Interpreter", "MachineState",
    "OracleRace", "OracleResult", "RaceController", "ScheduledInterrupt", "StepInfo", "Trace", "TraceEvent",
    "ValidationVerdict", "VerdictKind", "default_input_space", "execute", "exhaustive_oracle", "isr_enabled",
    "replay_covers", "validate_race",
]
