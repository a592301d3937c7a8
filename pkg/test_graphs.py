#!/usr/bin/env python3
"""
Tests for the ICFG, reduced ICFG, inter-context graph, dominators and distances
"""

import itertools
import random

import networkx as nx
import pytest

from irqracer.analysis import run_static_analysis
from irqracer.errors import MultipleExits
from irqracer.frontend import load_program
from irqracer.frontend.ast import Location
from irqracer.graphs import NodeKind, build_icfg, build_iccfg, distance, distances_to, dominance, to_dot


def _kinds_at(cfg, location):
    return sorted(cfg.instr(n).kind.value for n in cfg.graph.nodes if cfg.instr(n).location == location)


def test_uart_branch_guards_workaround(corpus_program):
    """The task's third if guards both the read and the output"""
    program = corpus_program("uart")
    cfg = build_icfg(program)["transmit"]

    branch = cfg.nodes_at(Location("transmit", 5), [NodeKind.BRANCH])[0]
    read = cfg.nodes_at(Location("transmit", 6))[0]
    taken = [s for s in cfg.successors(branch) if cfg.edge(branch, s).get("branch") is True]

    assert taken == [read]
    assert nx.has_path(cfg.graph, cfg.entry, read)
    assert nx.has_path(cfg.graph, read, cfg.exit)


def test_loop_unrolling_copies():
    program = load_program("""
        global n = 0;
        task t prio 5 {
            while (n < 3) {
                n = n + 1;
            }
        }
    """)
    cfg = build_icfg(program, unroll=3)["t"]
    loop = Location("t", 1)

    guards = cfg.nodes_at(loop, [NodeKind.BRANCH])
    bodies = cfg.nodes_at(Location("t", 2), [NodeKind.STMT])
    bound = cfg.nodes_at(loop, [NodeKind.BOUND])

    assert len(guards) == 3
    assert len(bodies) == 3
    assert len(bound) == 1
    # copies keep the source location and carry an unroll tag
    assert sorted(cfg.instr(n).unroll for n in bodies) == [(1,), (2,), (3,)]


def test_calls_are_inlined_per_site():
    program = load_program("""
        global x = 0;
        func bump() { x = x + 1; }
        task t prio 5 { call bump(); call bump(); }
    """)
    cfg = build_icfg(program)["t"]
    bodies = cfg.nodes_at(Location("bump", 1), [NodeKind.STMT])

    assert len(bodies) == 2
    assert len({cfg.instr(n).frame for n in bodies}) == 2


def test_reduced_graph_drops_unrelated_routine():
    program = load_program("""
        global x = 0;
        global quiet = 0;
        task t prio 5 { x = 1; }
        isr h line 1 prio 1 { x = 2; }
        isr idle line 2 prio 2 { quiet = quiet + 1; }
    """)
    static = run_static_analysis(program)
    idle = static.ricfg["idle"]

    assert sorted(idle.instr(n).kind for n in idle.graph.nodes) == sorted([NodeKind.ENTRY, NodeKind.EXIT])
    assert list(idle.graph.edges) == [(idle.entry, idle.exit)]


def test_reduced_graph_keeps_every_access(corpus_program):
    program = corpus_program("uart")
    static = run_static_analysis(program)
    sites = {(a.context, a.location) for a in static.accesses}

    for cfg in static.ricfg:
        kept = {cfg.instr(n).location for n in cfg.graph.nodes}
        for context, location in sites:
            if context == cfg.name:
                assert location in kept


def test_iccfg_injects_after_first_event(corpus_program):
    program = corpus_program("uart")
    static = run_static_analysis(program)
    wn = next(w for w in static.warnings if w.key_text == "transmit:6->irq1_handler:2[xmit_tail]")
    icfg = build_icfg(program)
    iccfg = build_iccfg(icfg["transmit"], icfg["irq1_handler"], wn)

    (source, target), = iccfg.injected_edges()
    assert target == ("j", icfg["irq1_handler"].entry)
    assert source[0] == "i"
    assert distance(iccfg.graph, iccfg.entry, iccfg.event_j[0]) is not None


def test_to_dot_labels_locations(corpus_program):
    cfg = build_icfg(corpus_program("add_lock"))["worker"]
    dot = to_dot(cfg)

    assert dot.startswith('digraph "worker" {')
    assert 'label="worker:1"' in dot


# ------------------------------------------------------------- dominators

def _random_dag(rng: random.Random, n: int) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < 0.3:
            graph.add_edge(i, j)
    for i in range(n - 1):
        if graph.out_degree(i) == 0:
            graph.add_edge(i, rng.randint(i + 1, n - 1))
    for j in range(1, n):
        if graph.in_degree(j) == 0:
            graph.add_edge(rng.randint(0, j - 1), j)
    return graph


def _brute_dominators(graph: nx.DiGraph, entry, node):
    """a dominates node iff node is unreachable from entry once a is removed"""
    found = {node}
    for a in graph.nodes:
        if a == node:
            continue
        if a == entry:
            found.add(a)
            continue
        pruned = graph.copy()
        pruned.remove_node(a)
        if not nx.has_path(pruned, entry, node):
            found.add(a)
    return frozenset(found)


@pytest.mark.parametrize("seed", range(40))
def test_dominators_match_brute_force(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 15)
    graph = _random_dag(rng, n)
    info = dominance(graph, 0, n - 1)

    for node in graph.nodes:
        assert info.dom(node) == _brute_dominators(graph, 0, node)
        assert info.post_dom(node) == _brute_dominators(graph.reverse(), n - 1, node)


def test_dominance_rejects_second_exit():
    graph = nx.DiGraph([(0, 1), (0, 2)])
    with pytest.raises(MultipleExits):
        dominance(graph, 0, 2)


def test_distance_and_nearest_target():
    graph = nx.DiGraph([(0, 1), (1, 2), (2, 3), (0, 3), (4, 0)])

    assert distance(graph, 0, 3) == 1
    assert distance(graph, 3, 0) is None
    assert distances_to(graph, [2]) == {2: 0, 1: 1, 0: 2, 4: 3}


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
