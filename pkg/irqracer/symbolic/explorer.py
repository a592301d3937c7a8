"""
Guided symbolic exploration of one race warning

States live on the ICCFG of the warning. Before the first racing event the
search heads for e_i; every executed instance of e_i spawns a second-phase
state at the interrupting ISR's entry, which then heads for e_j. States are
picked by (phase, distance to target, fewer races passed last, random
tie-break). Loops are explored with a fixed unroll factor that doubles while
some path needs more iterations, up to ``lmax``.
"""

import heapq
import itertools
import logging
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import z3

from ..config import ToolConfig
from ..frontend.ast import (
    AddrOf, Assign, Binary, Call, Deref, Expr, IntLit, Location, Lock, Name, Output, Program, RequestIrq,
    Stmt, Store, Unary, Unlock, While,
)
from ..frontend.symbols import SymbolKind, SymbolTable
from ..graphs.iccfg import Iccfg, Node, build_iccfg
from ..graphs.icfg import NodeKind, Instr, build_icfg
from ..graphs.distance import distances_to
from ..vm.arith import Address
from .inputs import input_points
from .solver import SolveStatus, check, solve
from .terms import TermBuilder

logger = logging.getLogger(__name__)

SymValue = Union[z3.BitVecRef, Address]

# Node kinds that evaluate the statement at their location (BOUND re-evaluates a loop guard)
EVENT_KINDS = (NodeKind.STMT, NodeKind.BRANCH, NodeKind.CALL, NodeKind.BOUND)


class Phase(str, Enum):
    BEFORE_FIRST = "BeforeFirstEvent"
    BETWEEN = "BetweenEvents"


class SymExecKind(str, Enum):
    REACHABLE = "Reachable"
    INFEASIBLE = "Infeasible"
    INCONCLUSIVE = "Inconclusive"


class InconclusiveReason(str, Enum):
    TIMEOUT = "Timeout"
    SOLVER_LIMIT = "SolverLimit"
    EXTERNAL_UNKNOWN = "ExternalUnknown"


@dataclass
class SymExecResult:
    kind: SymExecKind
    assignment: Dict[str, int] = field(default_factory=dict)
    occurrence: int = 1
    blocked: bool = False
    reason: Optional[InconclusiveReason] = None
    unroll: int = 0
    states: int = 0
    solver_calls: int = 0
    bound_hit: bool = False
    detail: str = ""

    @property
    def reachable(self) -> bool:
        return self.kind is SymExecKind.REACHABLE

    @classmethod
    def inconclusive(cls, reason: InconclusiveReason, detail: str = "", **kwargs) -> "SymExecResult":
        return cls(SymExecKind.INCONCLUSIVE, reason=reason, detail=detail, **kwargs)


@dataclass
class SymState:
    node: Node
    phase: Phase
    path: Tuple[z3.BoolRef, ...] = ()
    cells: Dict[str, SymValue] = field(default_factory=dict)
    registers: Dict[str, z3.BitVecRef] = field(default_factory=dict)   # raw contents at register width
    loop_counters: Dict[Tuple[str, Location], int] = field(default_factory=dict)
    locks: Dict[str, str] = field(default_factory=dict)                 # lock -> "i" or "j"
    registered: Dict[str, Tuple[SymValue, ...]] = field(default_factory=dict)
    occurrence: int = 0
    fired_after: int = 0
    races: int = 0

    def copy(self, node: Node, constraint: Optional[z3.BoolRef] = None) -> "SymState":
        return SymState(
            node, self.phase,
            self.path + ((constraint,) if constraint is not None else ()),
            dict(self.cells), dict(self.registers), dict(self.loop_counters), dict(self.locks),
            dict(self.registered), self.occurrence, self.fired_after, self.races,
        )


class _PathFault(Exception):
    """The concrete run would fault here; the path cannot cover the warning."""


class _Blocked(Exception):
    pass


class _Budget(Exception):
    def __init__(self, reason: InconclusiveReason, detail: str):
        super().__init__(detail)
        self.reason = reason
        self.detail = detail


class GuidedExplorer:
    """One exploration of one ICCFG at a fixed unroll factor."""

    def __init__(self, iccfg: Iccfg, wn, config: ToolConfig, program: Program,
                 symbols: Optional[SymbolTable] = None, racing_points: Iterable[Location] = (),
                 deadline: Optional[float] = None, rng: Optional[random.Random] = None,
                 seed_inputs: Sequence[Mapping[str, int]] = ()):
        self.iccfg = iccfg
        self.wn = wn
        self.config = config
        self.program = program
        self.symbols = symbols or SymbolTable(program)
        self.racing_points: FrozenSet[Location] = frozenset(racing_points)
        self.deadline = deadline if deadline is not None else time.monotonic() + config.symbolic_timeout
        self.rng = rng or random.Random(f"{config.seed}:{wn.key_text}")
        self.seed_inputs = list(seed_inputs)
        self.terms = TermBuilder(config.word_width)
        self.points = input_points(program, config.word_width)
        self.solver_timeout_ms = max(1, int(min(config.symbolic_timeout, 60.0) * 1000))

        self.targets_i = [
            n for n in iccfg.graph.nodes
            if n[0] == "i" and iccfg.instr(n).location == wn.e_i.location and iccfg.instr(n).kind in EVENT_KINDS
        ]
        self.event_j = frozenset(iccfg.event_j)
        self.dist_i = distances_to(iccfg.graph, self.targets_i)
        self.dist_j = distances_to(iccfg.graph, iccfg.event_j)
        self.j_name = iccfg.g_j.name

        self.states = 0
        self.solver_calls = 0
        self.bound_hit = False
        self.unknown_seen = False
        self._counter = itertools.count()
        self._heap: List[tuple] = []

    # ------------------------------------------------------------------ search

    def run(self) -> SymExecResult:
        try:
            result = self._search()
        except _Budget as budget:
            result = SymExecResult.inconclusive(budget.reason, budget.detail)
        result.unroll = self.iccfg.g_i.unroll
        result.states = self.states
        result.solver_calls = self.solver_calls
        result.bound_hit = self.bound_hit
        return result

    def _search(self) -> SymExecResult:
        self._push(self._initial_state())
        while self._heap:
            if time.monotonic() > self.deadline:
                raise _Budget(InconclusiveReason.TIMEOUT, f"timeout after {self.states} state(s)")
            state = heapq.heappop(self._heap)[-1]
            found = self._step(state)
            if found is not None:
                return found
        if self.unknown_seen:
            return SymExecResult.inconclusive(InconclusiveReason.SOLVER_LIMIT, "solver returned unknown")
        detail = "loop bound reached" if self.bound_hit else "every path refuted"
        return SymExecResult(SymExecKind.INFEASIBLE, detail=detail)

    def _initial_state(self) -> SymState:
        state = SymState(self.iccfg.entry, Phase.BEFORE_FIRST)
        width = self.config.word_width
        for decl in self.program.globals:
            if decl.is_input:
                state.cells[decl.name] = self.terms.input_var(decl.name, width)
            else:
                state.cells[decl.name] = self.terms.const(decl.init)
        return state

    def _distance(self, state: SymState) -> Optional[int]:
        if state.phase is Phase.BETWEEN:
            return self.dist_j.get(state.node) if state.node[0] == "j" else None
        return self.dist_i.get(state.node)

    def _push(self, state: SymState) -> None:
        dist = self._distance(state)
        if dist is None:
            return
        self.states += 1
        if self.states > self.config.max_states:
            raise _Budget(InconclusiveReason.SOLVER_LIMIT, f"more than {self.config.max_states} states")
        rank = 0 if state.phase is Phase.BETWEEN else 1
        heapq.heappush(self._heap, (rank, dist, -state.races, self.rng.random(), next(self._counter), state))

    def _feasible(self, path: Sequence[z3.BoolRef]) -> bool:
        self.solver_calls += 1
        status = check(list(path), self.solver_timeout_ms)
        if status is SolveStatus.UNKNOWN:
            self.unknown_seen = True
            return False
        return status is SolveStatus.SAT

    def _goal(self, state: SymState, blocked: bool) -> Optional[SymExecResult]:
        variables = {
            name: self.terms.input_var(name, point.width) for name, point in self.points.items()
        }
        self.solver_calls += 1
        solved = solve(list(state.path), variables, self.seed_inputs, self.solver_timeout_ms, self.rng)
        if solved.status is SolveStatus.UNKNOWN:
            self.unknown_seen = True
            return None
        if not solved.sat:
            return None
        logger.debug(
            f"{self.wn.key_text}: reachable after occurrence {state.fired_after} "
            f"({len(state.path)} constraint(s), blocked={blocked})"
        )
        return SymExecResult(SymExecKind.REACHABLE, solved.assignment, state.fired_after, blocked)

    def _step(self, state: SymState) -> Optional[SymExecResult]:
        node = state.node
        instr = self.iccfg.instr(node)
        constraint_for: Dict[Optional[bool], Optional[z3.BoolRef]] = {None: None}

        try:
            if instr.kind is NodeKind.STMT:
                self._exec_stmt(state, instr)
            elif instr.kind is NodeKind.BRANCH:
                cond = self._eval(state, instr.stmt.cond, instr)
                truth = self._truth(cond)
                constraint_for = {True: truth, False: z3.simplify(z3.Not(truth)), None: None}
            elif instr.kind is NodeKind.BOUND:
                cond = self._eval(state, instr.stmt.cond, instr)
                state.path = state.path + (z3.simplify(z3.Not(self._truth(cond))),)
                if not self._feasible(state.path):
                    self.bound_hit = True
                    return None
            elif instr.kind is NodeKind.CALL:
                self._exec_call(state, instr)
        except _PathFault as fault:
            logger.debug(f"{self.wn.key_text}: path dropped at {instr.label}: {fault}")
            return None
        except _Blocked:
            if state.phase is Phase.BETWEEN and self._feasible(state.path):
                return self._goal(state, blocked=True)
            return None

        location = instr.location
        if location is not None and instr.kind in EVENT_KINDS and location in self.racing_points:
            state.races += 1
            if self.config.solver_skip and not self._feasible(state.path):
                return None

        if state.phase is Phase.BETWEEN and node in self.event_j:
            if self._feasible(state.path):
                found = self._goal(state, blocked=False)
                if found is not None:
                    return found
            return None

        if state.phase is Phase.BEFORE_FIRST and node[0] == "i" and instr.kind in EVENT_KINDS \
                and location == self.wn.e_i.location:
            state.occurrence += 1
            if not self._feasible(state.path):
                return None
            self._push(self._switch(state))

        for succ in self.iccfg.successors(node):
            attrs = self.iccfg.graph.edges[node, succ]
            if attrs.get("kind") == "inject":
                continue
            branch = attrs.get("branch")
            constraint = constraint_for.get(branch) if instr.kind is NodeKind.BRANCH else None
            if constraint is not None and z3.is_false(constraint):
                continue
            if constraint is not None and z3.is_true(constraint):
                constraint = None
            child = state.copy(succ, constraint)
            if branch is True and isinstance(instr.stmt, While):
                key = (instr.frame, location)
                child.loop_counters[key] = child.loop_counters.get(key, 0) + 1
            if constraint is not None and not self.config.solver_skip and not self._feasible(child.path):
                continue
            self._push(child)
        return None

    def _switch(self, state: SymState) -> SymState:
        """Second-phase state: the ISR of e_j starts right after this instance of e_i."""
        isr = self.program.routine(self.j_name)
        child = state.copy(self.iccfg.target)
        child.phase = Phase.BETWEEN
        child.fired_after = state.occurrence
        args = state.registered.get(isr.name, ())
        for i, param in enumerate(isr.params):
            child.cells[f"{isr.name}:{param}"] = args[i] if i < len(args) else self.terms.zero
        return child

    # -------------------------------------------------------------- statements

    def _exec_stmt(self, state: SymState, instr: Instr) -> None:
        stmt = instr.stmt
        if isinstance(stmt, Assign):
            value = self._eval(state, stmt.value, instr)
            self._write_name(state, stmt.target, value, instr)
        elif isinstance(stmt, Store):
            value = self._eval(state, stmt.value, instr)
            address = self._read_name(state, stmt.pointer, instr)
            if not isinstance(address, Address):
                raise _PathFault(f"store through non-pointer {stmt.pointer!r}")
            if address.cell not in state.cells:
                raise _PathFault(f"dangling pointer to {address.resource}")
            state.cells[address.cell] = value
        elif isinstance(stmt, Output):
            self._eval(state, stmt.value, instr)
        elif isinstance(stmt, Lock):
            lock = self._lock_name(state, stmt, instr)
            if lock in state.locks:
                raise _Blocked()
            state.locks[lock] = "j" if state.phase is Phase.BETWEEN else "i"
        elif isinstance(stmt, Unlock):
            state.locks.pop(self._lock_name(state, stmt, instr), None)
        elif isinstance(stmt, RequestIrq):
            state.registered[stmt.isr] = tuple(self._eval(state, arg, instr) for arg in stmt.args)

    def _exec_call(self, state: SymState, instr: Instr) -> None:
        stmt: Call = instr.stmt
        args = [self._eval(state, arg, instr) for arg in stmt.args]
        callee = self.program.routine(stmt.callee)
        for param, value in zip(callee.params, args):
            state.cells[f"{instr.callee_frame}:{param}"] = value

    def _lock_name(self, state: SymState, stmt: Stmt, instr: Instr) -> str:
        if not stmt.via_pointer:
            return stmt.lock
        address = self._read_name(state, stmt.lock, instr)
        if not isinstance(address, Address) or address.resource not in self.program.lock_names:
            raise _PathFault(f"{stmt.lock!r} does not hold a lock address")
        return address.resource

    # ------------------------------------------------------------- expressions

    def _truth(self, value: SymValue) -> z3.BoolRef:
        if isinstance(value, Address):
            return z3.BoolVal(True)
        return z3.simplify(self.terms.truth(value))

    def _read_name(self, state: SymState, name: str, instr: Instr) -> SymValue:
        kind = self.symbols.lookup(instr.routine, name)
        if kind is SymbolKind.CONST:
            return self.terms.const(self.program.const_values[name])
        if kind is SymbolKind.REGISTER:
            raw = state.registers.get(name)
            if raw is None:
                raw = self.terms.input_var(name, self.program.register(name).width)
                state.registers[name] = raw
            return self.terms.extend(raw)
        if kind is SymbolKind.GLOBAL:
            return state.cells[name]
        if kind in (SymbolKind.PARAM, SymbolKind.LOCAL):
            return state.cells.get(f"{instr.frame}:{name}", self.terms.zero)
        raise _PathFault(f"{name!r} is not a value")

    def _write_name(self, state: SymState, name: str, value: SymValue, instr: Instr) -> None:
        kind = self.symbols.lookup(instr.routine, name)
        if kind is SymbolKind.REGISTER:
            decl = self.program.register(name)
            if decl.readonly or isinstance(value, Address):
                raise _PathFault(f"invalid write to register {name!r}")
            state.registers[name] = z3.simplify(self.terms.narrow(value, decl.width))
        elif kind is SymbolKind.GLOBAL:
            state.cells[name] = value
        elif kind in (SymbolKind.PARAM, SymbolKind.LOCAL):
            state.cells[f"{instr.frame}:{name}"] = value
        else:
            raise _PathFault(f"cannot assign to {name!r}")

    def _address_of(self, state: SymState, name: str, instr: Instr) -> Address:
        kind = self.symbols.lookup(instr.routine, name)
        if kind is SymbolKind.GLOBAL:
            return Address(name, name)
        if kind in (SymbolKind.PARAM, SymbolKind.LOCAL):
            cell = f"{instr.frame}:{name}"
            state.cells.setdefault(cell, self.terms.zero)
            return Address(cell, f"{instr.routine}.{name}")
        if kind is SymbolKind.LOCK:
            return Address(f"lock:{name}", name)
        raise _PathFault(f"cannot take the address of {name!r}")

    def _eval(self, state: SymState, expr: Expr, instr: Instr) -> SymValue:
        if isinstance(expr, IntLit):
            return self.terms.const(expr.value)
        if isinstance(expr, Name):
            return self._read_name(state, expr.name, instr)
        if isinstance(expr, AddrOf):
            return self._address_of(state, expr.name, instr)
        if isinstance(expr, Deref):
            address = self._read_name(state, expr.name, instr)
            if not isinstance(address, Address):
                raise _PathFault(f"dereference of non-pointer {expr.name!r}")
            if address.cell not in state.cells:
                raise _PathFault(f"dangling pointer to {address.resource}")
            return state.cells[address.cell]
        if isinstance(expr, Unary):
            operand = self._eval(state, expr.operand, instr)
            if isinstance(operand, Address):
                if expr.op == "!":
                    return self.terms.zero
                raise _PathFault(f"operator {expr.op!r} applied to an address")
            return z3.simplify(self.terms.unary(expr.op, operand))
        if isinstance(expr, Binary):
            left = self._eval(state, expr.left, instr)
            right = self._eval(state, expr.right, instr)
            if isinstance(left, Address) or isinstance(right, Address):
                if expr.op not in ("==", "!="):
                    raise _PathFault(f"operator {expr.op!r} applied to an address")
                equal = left == right
                return self.terms.one if equal == (expr.op == "==") else self.terms.zero
            return z3.simplify(self.terms.binary(expr.op, left, right))
        raise _PathFault(f"cannot evaluate {expr!r}")


def guided_explore(iccfg: Iccfg, wn, budget: ToolConfig, program: Program, **kwargs) -> SymExecResult:
    """
    Explore one ICCFG at its own unroll factor

    Returns:
        Reachable with the assignment and the e_i occurrence to fire after,
        Infeasible (``bound_hit`` set when some path needed more loop iterations),
        or Inconclusive with a reason
    """
    return GuidedExplorer(iccfg, wn, budget, program, **kwargs).run()


def explore_warning(program: Program, wn, config: Optional[ToolConfig] = None,
                    racing_points: Iterable[Location] = (), symbols: Optional[SymbolTable] = None,
                    seed_inputs: Sequence[Mapping[str, int]] = ()) -> SymExecResult:
    """
    Symbolic stage for one warning, growing the unroll factor on demand

    The factor starts at ``initial_unroll`` and doubles while a path ran into
    the loop bound, up to ``lmax``. The wall-clock budget covers every round.
    """
    config = config or ToolConfig()
    symbols = symbols or SymbolTable(program)
    racing_points = frozenset(racing_points)
    deadline = time.monotonic() + config.symbolic_timeout
    rng = random.Random(f"{config.seed}:{wn.key_text}")
    contexts = (wn.e_i.context, wn.e_j.context)
    unroll = min(config.initial_unroll, config.lmax)
    total_states = 0
    total_calls = 0

    while True:
        icfg = build_icfg(program, unroll, contexts)
        iccfg = build_iccfg(icfg[wn.e_i.context], icfg[wn.e_j.context], wn)
        result = GuidedExplorer(
            iccfg, wn, config, program, symbols, racing_points, deadline, rng, seed_inputs,
        ).run()
        total_states += result.states
        total_calls += result.solver_calls
        result.states, result.solver_calls = total_states, total_calls
        if result.kind is not SymExecKind.INFEASIBLE or not result.bound_hit or unroll >= config.lmax:
            logger.debug(
                f"{wn.key_text}: {result.kind.value} at unroll {unroll} "
                f"({total_states} state(s), {total_calls} solver call(s))"
            )
            return result
        unroll = min(unroll * 2, config.lmax)
