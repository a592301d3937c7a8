#!/usr/bin/env python3
"""
Tests for the IDL lexer, parser, checker and printer
"""

import pytest

from conftest import corpus_names, corpus_source
from irqracer.errors import DuplicateIrqLine, DuplicateRoutine, IdlSyntaxError, ProgramCheckError, UnknownIdentifier
from irqracer.frontend import check_program, load_program, parse_program, print_program
from irqracer.frontend.ast import Location


def test_uart_structure(corpus_program):
    """One task and two ISRs, priorities and lines as declared"""
    program = corpus_program("uart")

    assert [r.name for r in program.tasks] == ["transmit"]
    assert [(r.name, r.irq_line, r.priority) for r in program.isrs] == [
        ("irq1_handler", 1, 1), ("irq2_handler", 2, 2),
    ]
    assert program.preempts("irq1_handler", "irq2_handler")
    assert not program.preempts("irq2_handler", "irq1_handler")
    assert program.register("IIR").readonly


def test_locations_follow_preorder(corpus_program):
    program = corpus_program("uart")

    assert program.statement_at(Location("transmit", 6)).target == "p"
    assert program.statement_at(Location("irq1_handler", 3)).target == "b"


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_is_clean(name):
    result = check_program(parse_program(corpus_source(name)))
    assert result.ok, [str(d) for d in result.diagnostics]


def test_syntax_error_position():
    with pytest.raises(IdlSyntaxError) as info:
        parse_program("global x = 0;\ntask t prio 3 {\n  x = ;\n}\n")
    assert info.value.line == 3


def test_duplicate_declarations():
    with pytest.raises(DuplicateRoutine):
        parse_program("task t prio 3 { } task t prio 4 { }")
    with pytest.raises(DuplicateIrqLine):
        parse_program("task t prio 5 { } isr a line 1 prio 1 { } isr b line 1 prio 2 { }")


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier):
        parse_program("task t prio 3 { output(nowhere); }")


def test_checker_diagnostics():
    """Problems the parser lets through come back as diagnostics, not exceptions"""
    source = """
        register R width 8 readonly;
        global x = 0;
        task t prio 1 {
            R = 3;
            irq_disable(7);
            lock(missing);
            call t();
        }
        isr h line 1 prio 2 { x = 1; }
    """
    result = check_program(parse_program(source))
    codes = {d.code for d in result.diagnostics}

    assert {"readonly-write", "unknown-line", "unknown-lock", "bad-call", "priority-overlap"} <= codes
    with pytest.raises(ProgramCheckError):
        result.require_clean()


def test_recursion_is_reported():
    source = """
        task t prio 5 { call f(); }
        func f() { call g(); }
        func g() { call f(); }
    """
    result = check_program(parse_program(source))
    assert [d.code for d in result.diagnostics] == ["recursion"]


def test_printer_is_stable(corpus_program):
    """Printing, re-parsing and printing again yields the same text"""
    for name in ("uart", "extend_section", "lock_order"):
        text = print_program(corpus_program(name))
        assert print_program(load_program(text)) == text


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
