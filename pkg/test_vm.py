#!/usr/bin/env python3
"""
Tests for the interpreter, forced-interleaving validation and the exhaustive oracle
"""

from dataclasses import replace

import pytest

from irqracer.analysis import run_static_analysis
from irqracer.config import ToolConfig
from irqracer.errors import AnchorVanished, BudgetExceeded, StepLimitExceeded, UnknownLine
from irqracer.frontend import load_program
from irqracer.frontend.ast import Location
from irqracer.vm import (
    EventKind, InterruptSchedule, ScheduledInterrupt, VerdictKind, default_input_space, execute,
    exhaustive_oracle, validate_race,
)

UART_INPUTS = {"IIR": 0, "THR": 0x1101, "port_bugs": 2}


def _schedule(*entries):
    return InterruptSchedule(tuple(ScheduledInterrupt(loc, line) for loc, line in entries))


def _warning(program, key_text):
    return next(w for w in run_static_analysis(program).warnings if w.key_text == key_text)


def _keys(result):
    return {f"{i}->{j}[{resource}]" for i, j, resource in result.races}


# ----------------------------------------------------------------------- execute

def test_uninterrupted_run(corpus_program):
    trace = execute(corpus_program("uart"), UART_INPUTS)

    assert trace.entry == "transmit"
    assert trace.outputs == ["1"]
    assert not trace.deadlocked
    assert trace.final_globals["xmit_tail"] == "0"
    assert trace.covers(Location("transmit", 6))


def test_scheduled_interrupt_runs_after_trigger(corpus_program):
    trace = execute(corpus_program("uart"), UART_INPUTS, _schedule((Location("transmit", 6), 1)))

    assert trace.outputs_by_context() == {"irq1_handler": ["1"], "transmit": ["1"]}
    assert trace.final_globals["xmit_tail"] == "1"
    kinds = [e.kind for e in trace.events]
    assert kinds.count(EventKind.ISR_ENTRY) == 1
    read = next(i for i, e in enumerate(trace.events) if e.location == Location("transmit", 6))
    entry = kinds.index(EventKind.ISR_ENTRY)
    assert read < entry


def test_masked_line_never_fires(corpus_program):
    """IER = 1 leaves line 2 masked"""
    trace = execute(corpus_program("uart"), UART_INPUTS, _schedule((Location("transmit", 6), 2)))

    assert EventKind.ISR_ENTRY not in {e.kind for e in trace.events}
    assert trace.outputs == ["1"]


def test_schedule_is_checked(corpus_program):
    program = corpus_program("uart")

    with pytest.raises(UnknownLine):
        execute(program, UART_INPUTS, _schedule((Location("transmit", 6), 7)))
    with pytest.raises(AnchorVanished):
        execute(program, UART_INPUTS, _schedule((Location("transmit", 40), 1)))


def test_nested_masking_waits_for_outer_enable():
    program = load_program("""
        global v = 0;
        task main prio 5 {
            irq_disable(1);
            irq_disable(1);
            irq_enable(1);
            v = 1;
            irq_enable(1);
            output(v);
        }
        isr h line 1 prio 1 {
            v = 7;
        }
    """)
    trace = execute(program, {}, _schedule((Location("main", 1), 1)))

    assert trace.outputs == ["7"]
    kinds = [e.kind for e in trace.events]
    last_enable = max(i for i, e in enumerate(trace.events) if e.location == Location("main", 5))
    assert kinds.index(EventKind.ISR_ENTRY) > last_enable


def test_step_limit():
    program = load_program("""
        global v = 0;
        task main prio 5 {
            while (1) {
                v = v + 1;
            }
        }
        isr h line 1 prio 1 {
            v = 0;
        }
    """)
    with pytest.raises(StepLimitExceeded):
        execute(program, {}, config=ToolConfig(step_limit=100))


def test_trace_dump(corpus_program):
    dump = execute(corpus_program("uart"), UART_INPUTS).dump()
    lines = dump.splitlines()

    assert dump.endswith("\n")
    assert all(len(line.split("\t")) == 4 for line in lines)
    assert "output\ttransmit\ttransmit:7\t1" in lines
    assert "access\ttransmit\ttransmit:6\tR xmit_tail = 0" in lines


# -------------------------------------------------------------------- validation

def test_uart_task_race_confirmed_and_harmful(corpus_program):
    program = corpus_program("uart")
    wn = _warning(program, "transmit:6->irq1_handler:2[xmit_tail]")

    verdict = validate_race(program, wn, UART_INPUTS)

    assert verdict.kind is VerdictKind.CONFIRMED
    assert verdict.harmful
    assert not verdict.postponed
    assert verdict.trace is not None


def test_uart_masked_line_refuted(corpus_program):
    program = corpus_program("uart")
    wn = _warning(program, "transmit:6->irq2_handler:2[xmit_tail]")

    verdict = validate_race(program, wn, {"IIR": 0, "THR": 0, "port_bugs": 2})

    assert verdict.kind is VerdictKind.REFUTED_DISABLED
    assert not verdict.confirmed


def test_uart_isr_without_access_refuted(corpus_program):
    program = corpus_program("uart")
    wn = _warning(program, "transmit:6->irq1_handler:2[xmit_tail]")

    verdict = validate_race(program, wn, {"IIR": 0, "THR": 0, "port_bugs": 2})

    assert verdict.kind is VerdictKind.REFUTED_NO_ACCESS


def test_unreached_event_not_covered(corpus_program):
    program = corpus_program("uart")
    wn = _warning(program, "transmit:6->irq1_handler:2[xmit_tail]")

    verdict = validate_race(program, wn, {"IIR": 0, "THR": 0x1101, "port_bugs": 0})

    assert verdict.kind is VerdictKind.NOT_COVERED


_MASKED_SOURCE = """
    global v = 0;
    task main prio 5 {
        irq_disable(1);
        v = v + 1;
        irq_enable(1);
        output(v);
    }
    isr h line 1 prio 1 {
        v = 2;
    }
"""

# main:1 reads v with line 1 unmasked and its write to IER masks the line
_POSTPONE_SOURCE = """
    register IER width 16;
    global v = 0;
    task main prio 5 {
        IER = v;
        IER = 1;
        output(v);
    }
    isr h line 1 prio 1 {
        v = 2;
    }
"""


def test_disabled_request_fires_when_enabled():
    program = load_program(_POSTPONE_SOURCE)
    wn = _warning(program, "main:3->h:1[v]")
    wn.e_i = replace(wn.e_i, location=Location("main", 1))

    verdict = validate_race(program, wn, {})

    assert verdict.kind is VerdictKind.CONFIRMED
    assert verdict.postponed
    assert verdict.fired_at == Location("main", 2)


def test_postponement_window_closes_at_racing_point():
    program = load_program(_POSTPONE_SOURCE)
    wn = _warning(program, "main:3->h:1[v]")
    wn.e_i = replace(wn.e_i, location=Location("main", 1))

    verdict = validate_race(program, wn, {}, racing_points={Location("main", 1), Location("main", 2)})

    assert verdict.kind is VerdictKind.REFUTED_DISABLED


def test_access_made_while_masked_is_not_postponed():
    program = load_program(_MASKED_SOURCE)
    wn = _warning(program, "main:4->h:1[v]")
    wn.e_i = replace(wn.e_i, location=Location("main", 2))

    verdict = validate_race(program, wn, {})

    assert verdict.kind is VerdictKind.REFUTED_DISABLED
    assert not verdict.postponed


def test_lock_held_by_task_deadlocks():
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
    wn = _warning(program, "main:2->h:2[v]")

    verdict = validate_race(program, wn, {})

    assert verdict.kind is VerdictKind.DEADLOCK
    assert verdict.trace.deadlocked
    assert verdict.trace.blocked_on == "L"


# ------------------------------------------------------------------------ oracle

def test_oracle_matches_confirmed_uart_races(corpus_program):
    program = corpus_program("uart")
    space = {"IIR": [0], "THR": [0, 0x1101], "port_bugs": [2]}

    result = exhaustive_oracle(program, space)

    assert _keys(result) == {
        "transmit:6->irq1_handler:2[xmit_tail]",
        "irq2_handler:2->irq1_handler:3[xmit_tail]",
    }
    assert result.assignments == 2
    assert result.runs == 4
    assert not result.deadlocks


def test_oracle_keyboard(corpus_program):
    result = exhaustive_oracle(corpus_program("keyboard"), {"count": [1], "DATA": [0]})

    assert _keys(result) == {
        "kbd_read:1->kbd_irq:3[count]",
        "kbd_read:2->kbd_irq:2[count]",
        "kbd_read:2->kbd_irq:3[count]",
        "kbd_read:3->kbd_irq:1[last]",
    }


def test_oracle_postpone_mode():
    program = load_program(_POSTPONE_SOURCE)

    strict = exhaustive_oracle(program, {})
    postponed = exhaustive_oracle(program, {}, mode="postpone")
    closed = exhaustive_oracle(program, {}, mode="postpone", racing_points=[Location("main", 2)])

    assert _keys(strict) == {"main:3->h:1[v]"}
    assert _keys(postponed) == {"main:1->h:1[v]", "main:3->h:1[v]"}
    assert postponed.races[(Location("main", 1), Location("h", 1), "v")].postponed
    assert _keys(closed) == {"main:3->h:1[v]"}


def test_oracle_postpone_mode_ignores_masked_accesses(corpus_program):
    masked = exhaustive_oracle(load_program(_MASKED_SOURCE), {}, mode="postpone")
    race_free = exhaustive_oracle(corpus_program("race_free"), None, mode="postpone")

    assert _keys(masked) == {"main:4->h:1[v]"}
    assert _keys(race_free) == set()


def test_oracle_budget(corpus_program):
    program = corpus_program("uart")

    with pytest.raises(BudgetExceeded):
        exhaustive_oracle(program, {"THR": [0, 1], "IIR": [0, 1]}, ToolConfig(oracle_budget=3))
    with pytest.raises(ValueError):
        exhaustive_oracle(program, {}, mode="sometimes")


def test_default_input_space(corpus_program):
    space = default_input_space(corpus_program("keyboard"))

    assert {0, 1, 15, 16, 17, 0xFFFF} <= set(space["count"])
    assert max(space["DATA"]) == 0xFF


def test_oracle_deadlock_reported():
    program = load_program("""
        lock L;
        global v = 0;
        task main prio 5 {
            lock(L);
            v = 1;
            unlock(L);
        }
        isr h line 1 prio 1 {
            lock(L);
            unlock(L);
        }
    """)
    result = exhaustive_oracle(program, {})

    assert ("main", Location("main", 1), "h") in result.deadlocks


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
