#!/usr/bin/env python3
"""
Tests for interrupt status propagation and static race detection
"""

import pytest

from irqracer.analysis import IrqAction, racing_points, run_static_analysis
from irqracer.frontend import load_program
from irqracer.frontend.ast import Access, Location

from conftest import corpus_expected, corpus_names


def _keys(analysis):
    return [w.key_text for w in analysis.warnings]


def _after(analysis, location):
    cfg = analysis.ricfg[location.routine]
    node = cfg.nodes_at(location)[0]
    return analysis.intb[location.routine].after(node)


def test_uart_warnings(corpus_program):
    analysis = run_static_analysis(corpus_program("uart"))

    assert _keys(analysis) == [
        "irq2_handler:2->irq1_handler:2[xmit_tail]",
        "irq2_handler:2->irq1_handler:3[xmit_tail]",
        "transmit:6->irq1_handler:2[xmit_tail]",
        "transmit:6->irq2_handler:2[xmit_tail]",
    ]
    first = analysis.warnings[2]
    assert first.e_i.context == "transmit"
    assert first.e_i.access is Access.READ
    assert first.e_j.access is Access.WRITE
    assert first.irq_line == 1
    assert first.e_i.line > 0


def test_uart_interrupt_status_bits(corpus_program):
    analysis = run_static_analysis(corpus_program("uart"))

    # the IER write counts as enabling every line
    assert _after(analysis, Location("transmit", 6)).bits() == (0, 0)
    # an ISR never preempts itself
    assert _after(analysis, Location("irq1_handler", 2)).bits() == (1, 0)
    assert str(_after(analysis, Location("irq2_handler", 2))) == "<0, 1>"


def test_uart_interrupt_operation_list(corpus_program):
    analysis = run_static_analysis(corpus_program("uart"))

    assert [str(op) for op in analysis.itrl] == ["<transmit, 4, all, enable>"]
    assert analysis.itrl[0].implicit
    assert analysis.itrl[0].action is IrqAction.ENABLE


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_static_warning_counts(corpus_program, name):
    expected = corpus_expected(name)
    analysis = run_static_analysis(corpus_program(name))

    assert len(analysis.warnings) == expected["static_warnings"]
    assert {w["key"] for w in expected["warnings"]} <= set(_keys(analysis))


def test_keyboard_warnings(corpus_program):
    analysis = run_static_analysis(corpus_program("keyboard"))

    assert _keys(analysis) == [
        "kbd_read:1->kbd_irq:3[count]",
        "kbd_read:2->kbd_irq:2[count]",
        "kbd_read:2->kbd_irq:3[count]",
        "kbd_read:3->kbd_irq:1[last]",
    ]


def test_read_read_pairs_are_not_reported():
    program = load_program("""
        global g = 0;
        task main prio 5 {
            output(g);
        }
        isr h line 1 prio 1 {
            output(g + 1);
        }
    """)
    assert run_static_analysis(program).warnings == []


def test_masked_access_is_not_reported():
    source = """
        global v = 0;
        task main prio 5 {
            %s
            v = v + 1;
            %s
        }
        isr h line 1 prio 1 {
            v = 0;
        }
    """
    open_ = run_static_analysis(load_program(source % ("", "")))
    masked = run_static_analysis(load_program(source % ("irq_disable(1);", "irq_enable(1);")))

    assert _keys(open_) == ["main:1->h:1[v]"]
    assert open_.warnings[0].e_i.access is Access.WRITE
    assert masked.warnings == []


def test_disable_all_masks_every_line():
    program = load_program("""
        global v = 0;
        task main prio 5 {
            irq_disable_all();
            v = 1;
            irq_enable_all();
            output(v);
        }
        isr h line 1 prio 1 {
            v = 2;
        }
    """)
    analysis = run_static_analysis(program)

    assert _after(analysis, Location("main", 2)).bits() == (1,)
    assert _keys(analysis) == ["main:4->h:1[v]"]


def test_join_keeps_enabled_lines():
    """Disabled on one branch only: the merge point counts as enabled"""
    program = load_program("""
        register IN width 8 readonly;
        global v = 0;
        task main prio 5 {
            if (IN > 3) {
                irq_disable(1);
            }
            v = 1;
        }
        isr h line 1 prio 1 {
            v = 2;
        }
    """)
    analysis = run_static_analysis(program)

    assert _after(analysis, Location("main", 3)).bits() == (0,)
    assert _keys(analysis) == ["main:3->h:1[v]"]


def test_unbalanced_enable_in_rival_isr_voids_disable():
    source = """
        global v = 0;
        task main prio 5 {
            irq_disable(1);
            v = v + 1;
            irq_enable(1);
        }
        isr h1 line 1 prio 1 {
            v = 0;
        }
        isr h2 line 2 prio 2 {
            %s
        }
    """
    reopening = run_static_analysis(load_program(source % "irq_enable(1);"))
    balanced = run_static_analysis(load_program(source % "irq_disable(1); output(1); irq_enable(1);"))

    assert _keys(reopening) == ["main:2->h1:1[v]"]
    assert reopening.intb["main"].ignored == (Location("main", 1),)
    assert balanced.warnings == []
    assert balanced.intb["main"].ignored == ()


def test_lower_priority_isr_cannot_preempt():
    program = load_program("""
        global v = 0;
        task main prio 5 {
            v = 1;
        }
        isr fast line 1 prio 1 {
            v = 2;
        }
        isr slow line 2 prio 2 {
            v = 3;
        }
    """)
    keys = _keys(run_static_analysis(program))

    assert "slow:1->fast:1[v]" in keys
    assert "fast:1->slow:1[v]" not in keys


def test_racing_points(corpus_program):
    analysis = run_static_analysis(corpus_program("uart"))

    assert racing_points(analysis.warnings) == {
        Location("transmit", 6), Location("irq1_handler", 2),
        Location("irq1_handler", 3), Location("irq2_handler", 2),
    }
    assert racing_points([]) == frozenset()


def test_race_free_program_is_clean(corpus_program):
    analysis = run_static_analysis(corpus_program("race_free"))
    assert analysis.warnings == []
    assert "level" in analysis.srs


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
