"""
Inter-procedural control flow graphs

Every task and ISR gets one component graph. Calls to helper funcs are
inlined per call site (a fresh activation frame each time), loops are
unrolled a fixed number of times.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx

from ..errors import RecursionDetected
from ..frontend.ast import (
    Call, If, Location, Program, Routine, Stmt, While,
)

logger = logging.getLogger(__name__)


class NodeKind(str, Enum):
    ENTRY = "entry"
    EXIT = "exit"
    STMT = "stmt"
    BRANCH = "branch"
    JOIN = "join"
    BOUND = "bound"     # loop exit after the last unrolled copy (guard assumed false)
    CALL = "call"
    FENTRY = "fentry"
    RETURN = "return"


# Node kinds whose statement evaluates expressions (and so may access memory)
EVALUATING = (NodeKind.STMT, NodeKind.BRANCH, NodeKind.CALL)


@dataclass(frozen=True)
class Instr:
    kind: NodeKind
    context: str
    routine: str
    frame: str
    location: Optional[Location] = None
    stmt: Optional[Stmt] = None
    unroll: Tuple[int, ...] = ()
    callee_frame: Optional[str] = None

    @property
    def label(self) -> str:
        base = str(self.location) if self.location else self.kind.value
        if self.kind not in (NodeKind.STMT,):
            base = f"{self.kind.value} {base}" if self.location else base
        if self.unroll:
            base += " #" + ".".join(str(u) for u in self.unroll)
        return base


@dataclass
class ControlFlowGraph:
    """One context's graph: a frozen networkx DiGraph with Instr node attributes."""
    name: str
    routine: Routine
    graph: nx.DiGraph
    entry: int
    exit: int
    unroll: int
    pruned: frozenset = field(default_factory=frozenset)

    @property
    def priority(self) -> int:
        return self.routine.priority or 0

    @property
    def is_isr(self) -> bool:
        return self.routine.is_isr

    @property
    def irq_line(self) -> Optional[int]:
        return self.routine.irq_line

    def instr(self, node: int) -> Instr:
        return self.graph.nodes[node]["instr"]

    def nodes(self) -> List[int]:
        return sorted(self.graph.nodes)

    def nodes_at(self, location: Location, kinds: Iterable[NodeKind] = EVALUATING) -> List[int]:
        kinds = tuple(kinds)
        return sorted(
            n for n in self.graph.nodes
            if self.instr(n).location == location and self.instr(n).kind in kinds
        )

    def successors(self, node: int) -> List[int]:
        return sorted(self.graph.successors(node))

    def predecessors(self, node: int) -> List[int]:
        return sorted(self.graph.predecessors(node))

    def edge(self, src: int, dst: int) -> dict:
        return self.graph.edges[src, dst]

    def __len__(self) -> int:
        return self.graph.number_of_nodes()


@dataclass
class Icfg:
    program: Program
    unroll: int
    graphs: Dict[str, ControlFlowGraph]

    def __getitem__(self, context: str) -> ControlFlowGraph:
        return self.graphs[context]

    def __iter__(self):
        return iter(self.graphs.values())


_Pending = List[Tuple[int, dict]]


class _Builder:
    def __init__(self, program: Program, context: Routine, unroll: int):
        self.program = program
        self.context = context
        self.unroll = unroll
        self.graph = nx.DiGraph()
        self.counter = 0

    def _node(self, instr: Instr) -> int:
        node = self.counter
        self.counter += 1
        self.graph.add_node(node, instr=instr)
        return node

    def _connect(self, pending: _Pending, target: int) -> None:
        for src, attrs in pending:
            if self.graph.has_edge(src, target):
                # both arms of an empty if/else meet at the same node
                self.graph.edges[src, target]["branch"] = None
            else:
                self.graph.add_edge(src, target, **attrs)

    def build(self) -> ControlFlowGraph:
        name = self.context.name
        entry = self._node(Instr(NodeKind.ENTRY, name, name, name))
        pending = self._block(self.context.body, [(entry, {"kind": "flow"})], name, name, (), [name])
        exit_node = self._node(Instr(NodeKind.EXIT, name, name, name))
        self._connect(pending, exit_node)
        return ControlFlowGraph(name, self.context, nx.freeze(self.graph), entry, exit_node, self.unroll)

    def _block(self, block: Tuple[Stmt, ...], pending: _Pending, routine: str, frame: str,
               unroll: Tuple[int, ...], stack: List[str]) -> _Pending:
        for stmt in block:
            pending = self._stmt(stmt, pending, routine, frame, unroll, stack)
        return pending

    def _stmt(self, stmt: Stmt, pending: _Pending, routine: str, frame: str,
              unroll: Tuple[int, ...], stack: List[str]) -> _Pending:
        ctx = self.context.name
        flow = {"kind": "flow"}

        if isinstance(stmt, If):
            branch = self._node(Instr(NodeKind.BRANCH, ctx, routine, frame, stmt.location, stmt, unroll))
            self._connect(pending, branch)
            then_exits = self._block(stmt.then, [(branch, {"kind": "flow", "branch": True})],
                                     routine, frame, unroll, stack)
            else_exits = self._block(stmt.orelse, [(branch, {"kind": "flow", "branch": False})],
                                     routine, frame, unroll, stack)
            join = self._node(Instr(NodeKind.JOIN, ctx, routine, frame, stmt.location, stmt, unroll))
            self._connect(then_exits + else_exits, join)
            return [(join, flow)]

        if isinstance(stmt, While):
            exits: _Pending = []
            incoming = pending
            for copy in range(1, self.unroll + 1):
                tag = unroll + (copy,)
                guard = self._node(Instr(NodeKind.BRANCH, ctx, routine, frame, stmt.location, stmt, tag))
                self._connect(incoming, guard)
                exits.append((guard, {"kind": "flow", "branch": False}))
                incoming = self._block(stmt.body, [(guard, {"kind": "flow", "branch": True})],
                                       routine, frame, tag, stack)
            bound = self._node(Instr(NodeKind.BOUND, ctx, routine, frame, stmt.location, stmt,
                                     unroll + (self.unroll,)))
            self._connect(incoming, bound)
            join = self._node(Instr(NodeKind.JOIN, ctx, routine, frame, stmt.location, stmt, unroll))
            self._connect(exits + [(bound, flow)], join)
            return [(join, flow)]

        if isinstance(stmt, Call):
            if stmt.callee in stack:
                raise RecursionDetected(
                    f"recursive call to {stmt.callee!r} at {stmt.location} (chain {' -> '.join(stack)})"
                )
            callee = self.program.routine(stmt.callee)
            callee_frame = f"{frame}/{stmt.callee}@{stmt.location.index}"
            if unroll:
                callee_frame += "#" + ".".join(str(u) for u in unroll)
            call = self._node(Instr(NodeKind.CALL, ctx, routine, frame, stmt.location, stmt, unroll,
                                    callee_frame=callee_frame))
            self._connect(pending, call)
            fentry = self._node(Instr(NodeKind.FENTRY, ctx, callee.name, callee_frame, None, stmt, unroll))
            self.graph.add_edge(call, fentry, kind="call")
            body_exits = self._block(callee.body, [(fentry, flow)], callee.name, callee_frame,
                                     unroll, stack + [callee.name])
            ret = self._node(Instr(NodeKind.RETURN, ctx, routine, frame, stmt.location, stmt, unroll))
            self._connect([(src, {**attrs, "kind": "return"}) for src, attrs in body_exits], ret)
            return [(ret, flow)]

        node = self._node(Instr(NodeKind.STMT, ctx, routine, frame, stmt.location, stmt, unroll))
        self._connect(pending, node)
        return [(node, flow)]


def build_icfg(program: Program, unroll: int = 2, contexts: Optional[Iterable[str]] = None) -> Icfg:
    """
    Build one component graph per task and ISR

    Args:
        program: Checked program
        unroll: Number of unrolled copies per while loop
        contexts: Restrict the build to these contexts (all by default)

    Returns:
        Icfg keyed by context name

    Raises:
        RecursionDetected: a func reaches itself through calls
    """
    wanted = set(contexts) if contexts is not None else None
    graphs = {}
    for routine in program.contexts:
        if wanted is not None and routine.name not in wanted:
            continue
        graphs[routine.name] = _Builder(program, routine, unroll).build()
        logger.debug(f"ICFG {routine.name}: {len(graphs[routine.name])} nodes (unroll={unroll})")
    return Icfg(program, unroll, graphs)


def to_dot(cfg: ControlFlowGraph) -> str:
    """DOT-compatible dump of a component graph; node labels are Locations."""
    lines = [f'digraph "{cfg.name}" {{']
    for node in cfg.nodes():
        instr = cfg.instr(node)
        shape = "diamond" if instr.kind is NodeKind.BRANCH else "box"
        lines.append(f'  n{node} [label="{instr.label}", shape={shape}];')
    for src, dst, attrs in sorted(cfg.graph.edges(data=True), key=lambda e: (e[0], e[1])):
        label = ""
        if attrs.get("branch") is not None:
            label = "T" if attrs["branch"] else "F"
        elif attrs.get("kind") in ("call", "return", "inject"):
            label = attrs["kind"]
        suffix = f' [label="{label}"]' if label else ""
        lines.append(f"  n{src} -> n{dst}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"
