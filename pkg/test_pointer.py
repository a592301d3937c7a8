#!/usr/bin/env python3
"""
Tests for the Andersen points-to analysis and alias linking
"""

import random
from collections import defaultdict

import pytest

from irqracer.analysis import analyse_aliases, andersen_points_to, identify_shared_resources
from irqracer.analysis.pointer import ConstraintKind, PointerConstraint, solve_constraints
from irqracer.errors import ArityMismatch
from irqracer.frontend import load_program, parse_program


def _saturate(constraints):
    """Apply the four inclusion rules until nothing changes"""
    pts = defaultdict(set)
    changed = True
    while changed:
        changed = False

        def include(dst, values):
            nonlocal changed
            if not set(values) <= pts[dst]:
                pts[dst] |= set(values)
                changed = True

        for c in constraints:
            if c.kind is ConstraintKind.ADDR:
                include(c.lhs, {c.rhs})
            elif c.kind is ConstraintKind.COPY:
                include(c.lhs, pts[c.rhs])
            elif c.kind is ConstraintKind.LOAD:
                for target in list(pts[c.rhs]):
                    include(c.lhs, pts[target])
            else:
                for target in list(pts[c.lhs]):
                    include(target, pts[c.rhs])
    return {name: frozenset(values) for name, values in pts.items() if values}


@pytest.mark.parametrize("seed", range(100))
def test_solver_matches_saturation(seed):
    rng = random.Random(seed)
    pointers = [f"p{i}" for i in range(4)]
    targets = [f"x{i}" for i in range(3)]
    constraints = []
    for _ in range(rng.randint(1, 10)):
        kind = rng.choice(list(ConstraintKind))
        lhs = rng.choice(pointers)
        rhs = rng.choice(targets + pointers) if kind is ConstraintKind.ADDR else rng.choice(pointers)
        constraints.append(PointerConstraint(kind, lhs, rhs))

    assert solve_constraints(constraints) == _saturate(constraints)


def test_address_and_copy_in_one_routine():
    program = load_program("""
        global g = 0;
        global h = 0;
        task t prio 5 {
            p = &g;
            q = p;
            r = &h;
            *q = 4;
        }
    """)
    aliases = andersen_points_to(program.routine("t"), program)

    assert aliases.pts("t.p") == frozenset({"g"})
    assert aliases.pts("t.q") == frozenset({"g"})
    assert aliases.may_alias("*t.p", "*t.q")
    assert not aliases.may_alias("*t.q", "*t.r")


def test_registration_binds_isr_parameter():
    """request_irq passes the device pointer to the handler as if called right away"""
    program = load_program("""
        global dev = 0;
        task setup prio 5 {
            request_irq(handler, &dev);
            dev = 1;
        }
        isr handler(d) line 1 prio 1 {
            *d = 0;
        }
    """)
    aliases = analyse_aliases(program)
    srs, accesses = identify_shared_resources(program, aliases)

    assert aliases.pts("handler.d") == frozenset({"dev"})
    assert "dev" in srs
    assert any(a.context == "handler" and a.resource == "dev" and not a.is_real for a in accesses)


def test_call_chain_links_through_both_callees():
    program = load_program("""
        global g = 0;
        func outer(a) { call inner(a); }
        func inner(b) { *b = 1; }
        task t prio 5 { call outer(&g); }
    """)
    aliases = analyse_aliases(program)

    assert aliases.pts("inner.b") == frozenset({"g"})


def test_registration_arity_is_checked():
    program = parse_program("""
        global dev = 0;
        task setup prio 5 { request_irq(handler, &dev, &dev); }
        isr handler(d) line 1 prio 1 { *d = 0; }
    """)
    with pytest.raises(ArityMismatch):
        analyse_aliases(program)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
