#!/usr/bin/env python3
"""
Tests for hold sets, lock order, IDE/AL/ECS planning, patching, merging and the repair loop
"""

import pytest

from irqracer.analysis import run_static_analysis
from irqracer.config import ToolConfig
from irqracer.errors import AnchorVanished, ProgramCheckError
from irqracer.frontend import load_program, print_program
from irqracer.frontend.ast import IrqDisable, IrqEnable, Location, child_blocks, walk_block
from irqracer.graphs import compute_dominators
from irqracer.repair import (
    GENERATED_LOCK_PREFIX, REPAIR_CATALOG, PatchKind, PatchOp, RepairPlanner, RepairStatus, RepairStrategy,
    Section, SectionKind, Side, acquisition_sequence, apply_patches, build_patched, compute_hold_sets,
    compute_lock_order, format_catalog, get_strategy, inserted_operation_count, location_remap, merge_fixes,
    plan_ide_repair, repair_and_validate, rule2_violations, unapply, unified_diff, widen,
)
from irqracer.repair.ide import dominance_holds
from irqracer.vm import execute


def _warning(static, key_text):
    return next(w for w in static.warnings if w.key_text == key_text)


def _planner(program, strategy="auto"):
    config = ToolConfig(repair_strategy=strategy)
    static = run_static_analysis(program, config)
    return RepairPlanner(program, static, config), static


# ------------------------------------------------------------- hold sets / order

def test_hold_sets_and_lock_order(corpus_program):
    program = corpus_program("lock_order")
    static = run_static_analysis(program)
    holds = compute_hold_sets(static.icfg, static.lock_ops)

    assert holds.at_location("producer", Location("producer", 3)) == {"la"}
    assert holds.at_location("producer", Location("producer", 7)) == frozenset()
    assert holds.of_context("consumer") == {"la", "lc"}

    order = compute_lock_order(program, static.icfg, static.lock_ops, holds)
    assert order.edges() == {("la", "lb"), ("lc", "la")}
    assert order.before("lc", "lb")
    assert not order.before("lb", "la")
    assert acquisition_sequence(program, "consumer", {}) == [frozenset({"lc"}), frozenset({"la"})]


def test_rule2_violations():
    a, b, c = frozenset({"a"}), frozenset({"b"}), frozenset({"c"})

    assert rule2_violations([a, b], [b, a]) == [("a", "b")]
    assert rule2_violations([a, b, c], [a, c]) == []
    assert rule2_violations([frozenset({"a", "b"})], [b, a]) == []


# ----------------------------------------------------------------------- planning

def test_ide_plan_for_uart_task_race(corpus_program):
    program = corpus_program("uart")
    planner, static = _planner(program)
    wn = _warning(static, "transmit:6->irq1_handler:2[xmit_tail]")

    plan = planner.plan(wn)

    assert plan.strategy is RepairStrategy.IDE
    assert [str(s) for s in plan.sections] == ["s0[line 1] transmit:6"]
    assert [str(op) for op in plan.patches] == [
        "InsertIrqDisable(1) before transmit:6",
        "InsertIrqEnable(1) after transmit:6",
    ]
    assert plan.describe().startswith("transmit:6->irq1_handler:2[xmit_tail]: IDE")


def test_ide_sections_respect_dominance(corpus_program):
    program = corpus_program("uart")
    static = run_static_analysis(program)
    wn = _warning(static, "transmit:6->irq1_handler:2[xmit_tail]")
    cfg = static.icfg["transmit"]
    dom = compute_dominators(cfg)

    def section(first, last):
        return Section("s0", SectionKind.IRQ, Location("transmit", first), Location("transmit", last), line=1)

    assert dominance_holds(dom, cfg, wn, section(6, 6))
    assert dominance_holds(dom, cfg, wn, section(4, 5))
    # inside the first if: skipped on the path where IIR has no pending bit
    assert not dominance_holds(dom, cfg, wn, section(3, 3))


def test_ide_refuses_to_mask_around_shared_lock():
    program = load_program("""
        lock L;
        global v = 0;
        task main prio 5 {
            lock(L);
            v = v + 1;
            unlock(L);
        }
        isr h line 1 prio 1 {
            lock(L);
            v = 0;
            unlock(L);
        }
    """)
    static = run_static_analysis(program)
    wn = _warning(static, "main:2->h:2[v]")

    plan = plan_ide_repair(wn, static.icfg, program=program)

    assert plan.strategy is RepairStrategy.UNREPAIRABLE
    assert plan.reason == "no I_d/I_e"
    assert plan.patches == []


def test_add_lock_plan(corpus_program):
    planner, static = _planner(corpus_program("add_lock"), "lock")

    first = planner.plan(_warning(static, "worker:1->tick:1[counter]"))
    second = planner.plan(_warning(static, "worker:2->tick:1[counter]"))

    assert first.strategy is RepairStrategy.AL
    assert {s.lock for s in first.sections} == {f"{GENERATED_LOCK_PREFIX}0"}
    assert [s.routine for s in first.sections] == ["worker", "tick"]
    assert {s.lock for s in second.sections} == {f"{GENERATED_LOCK_PREFIX}1"}


def test_extend_existing_section_plan(corpus_program):
    planner, static = _planner(corpus_program("extend_section"), "lock")

    plan = planner.plan(_warning(static, "update:6->reset:4[sv]"))

    assert plan.strategy is RepairStrategy.ECS
    assert plan.sections == []
    moves = {(op.anchor, op.side, op.source) for op in plan.moves}
    assert moves == {
        (Location("update", 6), Side.BEFORE, Location("update", 8)),
        (Location("reset", 4), Side.AFTER, Location("reset", 3)),
    }
    assert all(op.kind is PatchKind.MOVE_LOCK and op.lock == "lock2" for op in plan.moves)


def test_unrepairable_without_common_lock(corpus_program):
    planner, static = _planner(corpus_program("lock_order"), "lock")

    plan = planner.plan(_warning(static, "producer:7->consumer:1[x]"))

    assert plan.strategy is RepairStrategy.UNREPAIRABLE
    assert plan.reason == "unable to repair by ECS: no common enclosing lock"
    assert not plan.repairable


def test_widen_grows_to_enclosing_statement(corpus_program):
    program = corpus_program("uart")
    section = Section("s0", SectionKind.IRQ, Location("transmit", 6), Location("transmit", 6), line=1)

    once = widen(program, section, forward=True)
    twice = widen(program, once, forward=True)
    thrice = widen(program, twice, forward=False)

    assert (once.first, once.last) == (Location("transmit", 6), Location("transmit", 7))
    assert (twice.first, twice.last) == (Location("transmit", 5), Location("transmit", 5))
    assert (thrice.first, thrice.last) == (Location("transmit", 4), Location("transmit", 5))


# ------------------------------------------------------------------ patch / merge

def test_apply_and_unapply(corpus_program):
    program = corpus_program("uart")
    ops = Section("s0", SectionKind.IRQ, Location("transmit", 6), Location("transmit", 6), line=1).patches()

    patched = apply_patches(program, ops)

    assert inserted_operation_count(patched) == 2
    assert patched.statement_at(Location("transmit", 6)) == program.statement_at(Location("transmit", 6))
    remap = location_remap(patched)
    assert remap[Location("transmit", 6)] == Location("transmit", 7)
    assert remap[Location("transmit", 7)] == Location("transmit", 9)
    assert print_program(unapply(patched)) == print_program(program)

    diff = unified_diff(program, patched)
    added = [line for line in diff.splitlines() if line.startswith("+") and not line.startswith("+++")]
    assert [line.strip("+ ") for line in added] == ["irq_disable(1);", "irq_enable(1);"]

    reparsed = load_program(print_program(patched))
    assert inserted_operation_count(reparsed) == 0


def test_patch_anchor_must_exist(corpus_program):
    program = corpus_program("uart")
    op = PatchOp(PatchKind.IRQ_DISABLE, Location("transmit", 99), Side.BEFORE, line=1)

    with pytest.raises(AnchorVanished):
        apply_patches(program, [op])


def test_patched_program_is_checked_again(corpus_program):
    program = corpus_program("uart")
    section = Section("s0", SectionKind.IRQ, Location("transmit", 6), Location("transmit", 6), line=7)

    with pytest.raises(ProgramCheckError) as caught:
        apply_patches(program, section.patches())

    assert {d.code for d in caught.value.diagnostics} == {"unknown-line"}


def test_adjacent_interrupt_sections_merge(corpus_program):
    program = corpus_program("adjacent_reads")
    planner, static = _planner(program)
    plans = [planner.plan(wn) for wn in static.warnings]

    raw = apply_patches(program, [op for plan in plans for op in plan.patches])
    merged = build_patched(program, plans)

    assert inserted_operation_count(raw) == 4
    assert inserted_operation_count(merged) == 2
    assert print_program(merge_fixes(merged)) == print_program(merged)
    assert run_static_analysis(merged).warnings == []


def _generated_inside(stmt):
    return [s for block in child_blocks(stmt) for s in walk_block(block) if s.generated]


def test_interrupt_section_nested_in_branch_collapses(corpus_program):
    program = corpus_program("keyboard")
    planner, static = _planner(program)
    plans = [planner.plan(wn) for wn in static.warnings]
    assert {plan.strategy for plan in plans} == {RepairStrategy.IDE}

    merged = build_patched(program, plans)

    assert inserted_operation_count(merged) == 2
    body = merged.routine("kbd_read").body
    assert isinstance(body[0], IrqDisable) and isinstance(body[-1], IrqEnable)
    assert _generated_inside(body[1]) == []
    assert print_program(merge_fixes(merged)) == print_program(merged)


def test_lock_section_nested_in_branch_does_not_deadlock(corpus_program):
    program = corpus_program("keyboard")
    planner, static = _planner(program, "lock")
    plans = [planner.plan(wn) for wn in static.warnings]

    merged = build_patched(program, plans)

    assert [lock.name for lock in merged.locks] == [f"{GENERATED_LOCK_PREFIX}0"]
    assert inserted_operation_count(merged) == 4
    for routine in merged.routines:
        for stmt in routine.body:
            assert _generated_inside(stmt) == []
    for entry in ("kbd_read", "kbd_irq"):
        trace = execute(merged, {"DATA": 7, "count": 1}, entry=entry)
        assert not trace.deadlocked, entry


def test_generated_locks_fold_into_one(corpus_program):
    program = corpus_program("add_lock")
    planner, static = _planner(program, "lock")
    plans = [planner.plan(wn) for wn in static.warnings]

    merged = build_patched(program, plans)

    assert [lock.name for lock in merged.locks] == [f"{GENERATED_LOCK_PREFIX}0"]
    assert inserted_operation_count(merged) == 4


# ---------------------------------------------------------------------------- loop

def test_repair_loop_fixes_uart(corpus_program, tool_config):
    program = corpus_program("uart")
    static = run_static_analysis(program, tool_config)
    confirmed = [
        _warning(static, "transmit:6->irq1_handler:2[xmit_tail]"),
        _warning(static, "irq2_handler:2->irq1_handler:3[xmit_tail]"),
    ]

    patched, report = repair_and_validate(program, confirmed, tool_config, static)

    assert report.status is RepairStatus.REPAIRED
    assert report.iterations == 1
    assert report.widenings == 0
    assert report.inserted_operations == 4
    assert report.surviving == []
    assert [plan.strategy for plan in report.plans] == [RepairStrategy.IDE, RepairStrategy.IDE]
    keys = {w.key_text for w in run_static_analysis(patched, tool_config).warnings}
    assert "transmit:6->irq1_handler:2[xmit_tail]" not in keys
    assert report.diff.startswith("--- a/program.idl")


def test_repair_loop_widens_split_read_modify_write(corpus_program, tool_config):
    program = corpus_program("atomicity")
    static = run_static_analysis(program, tool_config)

    patched, report = repair_and_validate(program, static.warnings, tool_config, static)

    assert report.status is RepairStatus.REPAIRED
    assert report.widenings >= 1
    # one section from the read to the output
    assert inserted_operation_count(patched) == 2


def test_repair_loop_with_custom_revalidation(corpus_program):
    program = corpus_program("add_lock")
    static = run_static_analysis(program)
    seen = []

    def revalidate(candidate):
        seen.append(inserted_operation_count(candidate))
        return []

    _, report = repair_and_validate(program, static.warnings, ToolConfig(), static, revalidate=revalidate)

    assert report.status is RepairStatus.REPAIRED
    assert seen == [2]


def test_repair_loop_without_warnings(corpus_program):
    program = corpus_program("race_free")
    patched, report = repair_and_validate(program, [])

    assert patched is program
    assert report.status is RepairStatus.REPAIRED
    assert report.plans == []


# ------------------------------------------------------------------------- catalog

def test_catalog():
    automated = {entry.code for entry in REPAIR_CATALOG if entry.automated}

    assert automated == {"IDE", "AL", "ECS"}
    assert len(REPAIR_CATALOG) == 12
    assert get_strategy("ecs").name == "Extend critical sections"
    with pytest.raises(KeyError):
        get_strategy("nope")
    table = format_catalog().splitlines()
    assert table[0].startswith("code")
    assert len(table) == len(REPAIR_CATALOG) + 2


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
