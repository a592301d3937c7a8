#!/usr/bin/env python3
"""
Tests for input points, path-condition solving and guided symbolic exploration
"""

import itertools
import random

import pytest
import z3

from irqracer.analysis import run_static_analysis
from irqracer.config import ToolConfig
from irqracer.frontend import load_program
from irqracer.symbolic import (
    InconclusiveReason, SolveStatus, SymExecKind, explore_warning, identify_input_points, input_points, solve,
)
from irqracer.symbolic.solver import holds
from irqracer.vm.validator import replay_covers

from conftest import corpus_names


def _warning(analysis, key_text):
    return next(w for w in analysis.warnings if w.key_text == key_text)


# ------------------------------------------------------------------ input points

def test_uart_input_points(corpus_program):
    program = corpus_program("uart")

    assert identify_input_points(program) == {"IIR", "THR", "port_bugs"}
    points = input_points(program, 16)
    assert points["THR"].is_register and points["THR"].width == 16
    assert not points["port_bugs"].is_register
    assert points["port_bugs"].max_value == 0xFFFF


# ------------------------------------------------------------------------ solver

def test_solve_prefers_seed_inputs():
    x = z3.BitVec("x", 8)
    result = solve([z3.UGT(x, 3)], {"x": x}, seed_inputs=[{"x": 7}])

    assert result.sat
    assert result.assignment == {"x": 7}
    assert result.method == "seed"


def test_solve_contradiction():
    x = z3.BitVec("x", 8)
    result = solve([x == 1, x == 2])

    assert result.status is SolveStatus.UNSAT
    assert result.assignment == {}


def test_solve_uses_z3_beyond_seeds():
    x = z3.BitVec("x", 16)
    y = z3.BitVec("y", 16)
    result = solve([x * 3 + y == 1001, y == 0x0102])

    assert result.sat
    assert (result.assignment["x"] * 3 + result.assignment["y"]) & 0xFFFF == 1001
    assert result.assignment["y"] == 0x0102


_WIDTH = 8
_MASK = (1 << _WIDTH) - 1


def _signed(value):
    return value - (1 << _WIDTH) if value >> (_WIDTH - 1) else value


def _random_system(rng, x, y):
    """Random constraints over x and y, each paired with a plain evaluator."""
    def term():
        kind = rng.randrange(5)
        c = rng.randint(0, _MASK)
        if kind == 0:
            return x + c, lambda a, b: (a + c) & _MASK
        if kind == 1:
            return y ^ c, lambda a, b: b ^ c
        if kind == 2:
            return x & y, lambda a, b: a & b
        if kind == 3:
            return x - y, lambda a, b: (a - b) & _MASK
        return z3.BitVecVal(c, _WIDTH), lambda a, b: c

    constraints, checks = [], []
    for _ in range(rng.randint(1, 3)):
        (left, f), (right, g) = term(), term()
        op = rng.randrange(4)
        if op == 0:
            constraints.append(left == right)
            checks.append(lambda a, b, f=f, g=g: f(a, b) == g(a, b))
        elif op == 1:
            constraints.append(left != right)
            checks.append(lambda a, b, f=f, g=g: f(a, b) != g(a, b))
        elif op == 2:
            constraints.append(z3.ULT(left, right))
            checks.append(lambda a, b, f=f, g=g: f(a, b) < g(a, b))
        else:
            constraints.append(left < right)
            checks.append(lambda a, b, f=f, g=g: _signed(f(a, b)) < _signed(g(a, b)))
    return constraints, checks


@pytest.mark.parametrize("seed", range(100))
def test_solve_agrees_with_enumeration(seed):
    rng = random.Random(seed)
    x = z3.BitVec("x", _WIDTH)
    y = z3.BitVec("y", _WIDTH)
    variables = {"x": x, "y": y}
    constraints, checks = _random_system(rng, x, y)

    expected = any(
        all(check(a, b) for check in checks)
        for a, b in itertools.product(range(_MASK + 1), repeat=2)
    )
    result = solve(constraints, variables, rng=random.Random(seed))

    assert result.sat == expected
    if result.sat:
        assert holds(constraints, variables, result.assignment)
        assert all(check(result.assignment["x"], result.assignment["y"]) for check in checks)


# -------------------------------------------------------------------- exploration

def test_uart_isr_pair_is_infeasible(corpus_program, tool_config):
    """THR cannot be both 0x1101 and something else"""
    program = corpus_program("uart")
    analysis = run_static_analysis(program, tool_config)
    wn = _warning(analysis, "irq2_handler:2->irq1_handler:2[xmit_tail]")

    result = explore_warning(program, wn, tool_config)

    assert result.kind is SymExecKind.INFEASIBLE
    assert not result.reachable


def test_uart_task_race_is_reachable(corpus_program, tool_config):
    program = corpus_program("uart")
    analysis = run_static_analysis(program, tool_config)
    wn = _warning(analysis, "transmit:6->irq1_handler:2[xmit_tail]")

    result = explore_warning(program, wn, tool_config)

    assert result.reachable
    assert result.assignment["THR"] == 0x1101
    assert result.occurrence == 1
    assert replay_covers(program, wn, result.assignment, result.occurrence, tool_config)


def test_exploration_ignores_masking(corpus_program, tool_config):
    """IER masks line 2 at run time, but the search only asks whether both events are reachable"""
    program = corpus_program("uart")
    analysis = run_static_analysis(program, tool_config)
    wn = _warning(analysis, "transmit:6->irq2_handler:2[xmit_tail]")

    result = explore_warning(program, wn, tool_config)

    assert result.reachable
    assert result.assignment["THR"] != 0x1101


def test_exploration_is_deterministic(corpus_program, tool_config):
    program = corpus_program("keyboard")
    analysis = run_static_analysis(program, tool_config)
    wn = _warning(analysis, "kbd_read:2->kbd_irq:3[count]")

    first = explore_warning(program, wn, tool_config)
    second = explore_warning(program, wn, tool_config)

    assert first.reachable
    assert first.assignment == second.assignment
    assert 0 < first.assignment["count"] <= 16


_LOOP_SOURCE = """
    register IN width 4 readonly;
    global v = 0;
    task main prio 5 {
        i = 0;
        while (i < IN) {
            i = i + 1;
        }
        if (i == 5) {
            v = 1;
        }
    }
    isr h line 1 prio 1 {
        v = 2;
    }
"""


def test_unroll_grows_until_the_loop_fits(tool_config):
    program = load_program(_LOOP_SOURCE)
    analysis = run_static_analysis(program, tool_config)
    wn = _warning(analysis, "main:5->h:1[v]")

    result = explore_warning(program, wn, tool_config)

    assert result.reachable
    assert result.assignment["IN"] == 5
    assert result.unroll == 8


def test_unroll_ceiling_reports_bound():
    config = ToolConfig(lmax=4, symbolic_timeout=30)
    program = load_program(_LOOP_SOURCE)
    analysis = run_static_analysis(program, config)
    wn = _warning(analysis, "main:5->h:1[v]")

    result = explore_warning(program, wn, config)

    assert result.kind is SymExecKind.INFEASIBLE
    assert result.bound_hit
    assert result.unroll == 4


def test_state_budget_gives_inconclusive(corpus_program):
    config = ToolConfig(max_states=1, symbolic_timeout=30)
    program = corpus_program("uart")
    analysis = run_static_analysis(program, config)
    wn = _warning(analysis, "transmit:6->irq1_handler:2[xmit_tail]")

    result = explore_warning(program, wn, config)

    assert result.kind is SymExecKind.INCONCLUSIVE
    assert result.reason is InconclusiveReason.SOLVER_LIMIT


@pytest.mark.parametrize("name", corpus_names())
def test_solver_skip_keeps_verdicts(name, corpus_program, tool_config):
    program = corpus_program(name)
    analysis = run_static_analysis(program, tool_config)
    eager = tool_config.model_copy(update={"solver_skip": False})

    for wn in analysis.warnings:
        deferred = explore_warning(program, wn, tool_config)
        checked = explore_warning(program, wn, eager)
        assert deferred.kind == checked.kind, wn.key_text


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
