"""
Catalog of race repair strategies seen in industry and in the Linux kernel

Only IDE, AL and ECS are automated by irqracer; the rest are listed with the
condition under which a developer can apply them.
"""

from typing import List

from pydantic import BaseModel, Field


class RepairStrategyEntry(BaseModel):
    """One repair strategy and how often it was used."""
    code: str = Field(description="Short name, e.g. IDE")
    name: str = Field(description="Full strategy name")
    description: str = Field(description="What the fix changes")
    example: str = Field(description="Typical code-level shape of the fix")
    industry: bool = Field(description="Seen in industrial code")
    linux_task: int = Field(description="Linux fixes of task-level races using it")
    linux_interrupt: int = Field(description="Linux fixes of interrupt-level races using it")
    condition: str = Field(description="When it can be applied")
    automated: bool = Field(default=False, description="irqracer plans and applies it")


REPAIR_CATALOG: List[RepairStrategyEntry] = [
    RepairStrategyEntry(
        code="COO", name="Change operation orders",
        description="Reorder operations so the racing accesses happen at separate times",
        example="Move code to a point where the interrupts have finished",
        industry=True, linux_task=88, linux_interrupt=17,
        condition="A separate timing is available",
    ),
    RepairStrategyEntry(
        code="AAC", name="Add additional checks",
        description="Check the program state before the access so the race cannot happen",
        example="if (!dev_initialized()) wait_until_init();",
        industry=False, linux_task=85, linux_interrupt=5,
        condition="There is an available, race-free program state",
    ),
    RepairStrategyEntry(
        code="AL", name="Add locks",
        description="Add lock and unlock operations around both accesses",
        example="spin_lock / spin_unlock",
        industry=True, linux_task=81, linux_interrupt=0,
        condition="It does not introduce deadlocks", automated=True,
    ),
    RepairStrategyEntry(
        code="IDE", name="Interrupt disable and enable",
        description="Mask the racing interrupt line around the task-side access",
        example="disable_irq / enable_irq",
        industry=True, linux_task=0, linux_interrupt=26,
        condition="It does not introduce deadlocks", automated=True,
    ),
    RepairStrategyEntry(
        code="AAI", name="Add atomic instructions",
        description="Replace the racing access with an atomic instruction",
        example="atomic_set",
        industry=False, linux_task=19, linux_interrupt=4,
        condition="A matching atomic instruction is available",
    ),
    RepairStrategyEntry(
        code="Sync", name="Synchronization",
        description="Order the accesses with a synchronization primitive",
        example="Read-copy update, memory barrier",
        industry=True, linux_task=23, linux_interrupt=0,
        condition="Used judiciously, to avoid impeding performance",
    ),
    RepairStrategyEntry(
        code="RRC", name="Remove race codes",
        description="Remove one of the racing accesses",
        example="Remove unnecessary but buggy code",
        industry=False, linux_task=12, linux_interrupt=2,
        condition="The racy code is no longer needed",
    ),
    RepairStrategyEntry(
        code="ECS", name="Extend critical sections",
        description="Stretch an existing critical section over the racing code",
        example="Move spin_unlock after the racing code",
        industry=False, linux_task=10, linux_interrupt=4,
        condition="It does not introduce deadlocks", automated=True,
    ),
    RepairStrategyEntry(
        code="MinUse", name="Minimize the use of shared resources",
        description="Stop sharing the resource where the sharing is redundant",
        example="Use a bit operation instead of a value assignment",
        industry=False, linux_task=3, linux_interrupt=0,
        condition="Some shared accesses are redundant",
    ),
    RepairStrategyEntry(
        code="ATM", name="Add try-again marks",
        description="Let the interrupted task notice the interruption and retry",
        example="T() { if (flag == 0) ... }  ISR() { flag = 1; ... }",
        industry=True, linux_task=2, linux_interrupt=0,
        condition="Performance-insensitive tasks or interrupt handlers",
    ),
    RepairStrategyEntry(
        code="ResUser", name="Restrict users",
        description="Forbid the triggering usage in documentation or the user manual",
        example="Forbid sending requests right after starting a device",
        industry=True, linux_task=0, linux_interrupt=0,
        condition="A general method",
    ),
    RepairStrategyEntry(
        code="ChgPrio", name="Change priorities of tasks or interrupts",
        description="Change priorities so the second context can no longer preempt the first",
        example="Reverse the priorities of two interrupts",
        industry=True, linux_task=0, linux_interrupt=0,
        condition="It does not lead to other races",
    ),
]


def get_strategy(code: str) -> RepairStrategyEntry:
    for entry in REPAIR_CATALOG:
        if entry.code.lower() == code.lower():
            return entry
    raise KeyError(code)


def format_catalog() -> str:
    """Plain-text table for the ``catalog`` command."""
    header = f"{'code':<8} {'auto':<5} {'task':>5} {'int':>5}  name / condition"
    rows = [header, "-" * len(header)]
    for entry in REPAIR_CATALOG:
        rows.append(
            f"{entry.code:<8} {'yes' if entry.automated else 'no':<5} {entry.linux_task:>5} "
            f"{entry.linux_interrupt:>5}  {entry.name}: {entry.condition}"
        )
    return "\n".join(rows)
