"""
Deterministic IDL interpreter with an execution observer and an interrupt controller hook

Statements are the atomic unit: after every evaluating step (a simple
statement, a branch or loop condition, or a call's argument evaluation) the
controller may raise interrupt lines, and any pending line whose ISR is
enabled fires right there. A fired ISR runs to completion unless a
higher-priority pending ISR becomes enabled at one of its own boundaries.
"""

import copy
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from ..config import ToolConfig
from ..errors import AnchorVanished, StepLimitExceeded, UnknownLine, VmFault
from ..frontend.ast import (
    Access, AddrOf, Assign, Binary, Call, Deref, Expr, If, IntLit, IrqDisable, IrqEnable, Location, Lock,
    Name, Output, Program, RequestIrq, Stmt, Store, Unary, Unlock, While,
)
from ..frontend.symbols import SymbolKind, SymbolTable
from . import arith
from .arith import Address, Value
from .machine import Activation, Frame, MachineState

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    ACCESS = "access"
    IRQ_OP = "irq"
    ISR_ENTRY = "isr_entry"
    ISR_EXIT = "isr_exit"
    OUTPUT = "output"
    LOCK = "lock"
    UNLOCK = "unlock"
    BLOCK = "block"


@dataclass(frozen=True)
class TraceEvent:
    kind: EventKind
    context: str
    routine: str
    location: Optional[Location] = None
    resource: Optional[str] = None
    access: Optional[Access] = None
    value: Optional[str] = None

    @property
    def detail(self) -> str:
        if self.kind is EventKind.ACCESS:
            return f"{self.access.value} {self.resource} = {self.value}"
        if self.kind is EventKind.OUTPUT:
            return str(self.value)
        return self.value or ""


@dataclass(frozen=True)
class StepAccess:
    resource: str
    access: Access
    value: str


@dataclass(frozen=True)
class StepInfo:
    """What the observer sees at a statement boundary."""
    context: str
    depth: int              # position of the context on the context stack
    location: Location
    stmt: Stmt
    accesses: Tuple[StepAccess, ...]
    occurrence: int         # how often this context has executed the location so far


@dataclass
class Trace:
    entry: str
    events: List[TraceEvent] = field(default_factory=list)
    steps: int = 0
    deadlocked: bool = False
    blocked_on: Optional[str] = None
    fault: Optional[str] = None
    final_globals: Dict[str, str] = field(default_factory=dict)

    @property
    def outputs(self) -> List[str]:
        return [e.value for e in self.events if e.kind is EventKind.OUTPUT]

    def outputs_by_context(self) -> Dict[str, List[str]]:
        result: Dict[str, List[str]] = {}
        for event in self.events:
            if event.kind is EventKind.OUTPUT:
                result.setdefault(event.context, []).append(event.value)
        return result

    def accesses(self, context: Optional[str] = None) -> List[TraceEvent]:
        return [e for e in self.events if e.kind is EventKind.ACCESS and (context is None or e.context == context)]

    def covers(self, location: Location) -> bool:
        return any(e.location == location for e in self.events)

    def dump(self) -> str:
        """Line-oriented text: kind, routine, location, detail separated by tabs."""
        lines = []
        for event in self.events:
            where = str(event.location) if event.location else "-"
            lines.append(f"{event.kind.value}\t{event.routine}\t{where}\t{event.detail}")
        return "\n".join(lines) + ("\n" if lines else "")


class InterruptController:
    """Decides, at every statement boundary, which interrupt lines to raise."""

    def at_boundary(self, vm: "Interpreter", step: StepInfo) -> Sequence[int]:
        return ()

    def at_exit(self, vm: "Interpreter") -> None:
        pass


@dataclass(frozen=True)
class ScheduledInterrupt:
    trigger: Location
    line: int
    occurrence: int = 1


@dataclass(frozen=True)
class InterruptSchedule:
    """Ordered interrupt requests, each raised right after the n-th execution of its trigger."""
    entries: Tuple[ScheduledInterrupt, ...] = ()

    def check(self, program: Program) -> None:
        for entry in self.entries:
            if entry.line not in program.irq_lines:
                raise UnknownLine(entry.line)
            try:
                program.statement_at(entry.trigger)
            except KeyError:
                raise AnchorVanished(f"schedule trigger {entry.trigger} is not a statement of the program")


class ScheduleController(InterruptController):
    def __init__(self, schedule: InterruptSchedule):
        self.remaining = list(schedule.entries)
        self.seen: Dict[Location, int] = {}

    def at_boundary(self, vm, step):
        self.seen[step.location] = self.seen.get(step.location, 0) + 1
        raised = []
        while self.remaining and self.remaining[0].trigger == step.location \
                and self.seen[step.location] >= self.remaining[0].occurrence:
            raised.append(self.remaining.pop(0).line)
        return raised


class _Blocked(Exception):
    def __init__(self, lock: str):
        super().__init__(lock)
        self.lock = lock


class Interpreter:
    """
    Executes one entry context of a program

    The machine state can be forked at any boundary (``fork``) so that an
    observer can explore "what if this ISR fired here" without disturbing the
    main run.
    """

    def __init__(self, program: Program, inputs: Optional[Mapping[str, int]] = None,
                 config: Optional[ToolConfig] = None, controller: Optional[InterruptController] = None,
                 symbols: Optional[SymbolTable] = None):
        self.program = program
        self.config = config or ToolConfig()
        self.width = self.config.word_width
        self.inputs = dict(inputs or {})
        self.controller = controller
        self.symbols = symbols or SymbolTable(program)
        self.interrupt_registers = set(self.config.interrupt_registers)
        self.state = MachineState(program, self.width)
        self.trace: Optional[Trace] = None
        self._step_accesses: List[StepAccess] = []
        for decl in program.globals:
            value = decl.init
            if decl.is_input and decl.name in self.inputs:
                value = self.inputs[decl.name]
            self.state.cells[decl.name] = arith.to_signed(value, self.width)

    # ------------------------------------------------------------------ running

    def run(self, entry: str, prelude: Sequence[int] = ()) -> Trace:
        """Run ``entry`` (a task, or an ISR) to completion, deadlock or fault.

        ``prelude`` lines have their ISRs run first, before the entry context starts.
        """
        routine = self.program.routine(entry)
        self.trace = Trace(entry)
        try:
            for line in prelude:
                self._run_isr(line)
            self._enter_context(routine.name)
        except _Blocked as blocked:
            self.trace.deadlocked = True
            self.trace.blocked_on = blocked.lock
        except VmFault as fault:
            self.trace.fault = str(fault)
        if self.controller is not None:
            self.controller.at_exit(self)
        self.trace.final_globals = {k: str(v) for k, v in self.state.globals_snapshot().items()}
        return self.trace

    def fork(self) -> "Interpreter":
        """Independent copy of the current machine and trace, without a controller."""
        twin = copy.copy(self)
        twin.state = copy.deepcopy(self.state, {id(self.program): self.program})
        twin.trace = replace(self.trace, events=list(self.trace.events))
        twin.controller = None
        twin._step_accesses = []
        return twin

    def fire(self, line: int) -> Trace:
        """Run the ISR of ``line`` now (used on forks); records deadlocks instead of raising."""
        try:
            self._run_isr(line)
        except _Blocked as blocked:
            self.trace.deadlocked = True
            self.trace.blocked_on = blocked.lock
        except VmFault as fault:
            self.trace.fault = str(fault)
        return self.trace

    def raise_line(self, line: int) -> None:
        if line not in self.program.irq_lines:
            raise UnknownLine(line)
        self.state.pending.add(line)

    def cancel(self, line: int) -> None:
        self.state.pending.discard(line)

    def _enter_context(self, name: str, args: Sequence[Value] = ()) -> None:
        routine = self.program.routine(name)
        activation = Activation(name, routine.priority or 0, routine.irq_line)
        frame = self.state.new_frame(name)
        activation.frames.append(frame)
        for i, param in enumerate(routine.params):
            self.state.cells[frame.cell(param)] = args[i] if i < len(args) else 0
        self.state.contexts.append(activation)
        if routine.irq_line is not None:
            self.state.pin_raised[routine.irq_line] = True
        try:
            self._block(routine.body)
        finally:
            if routine.irq_line is not None:
                self.state.pin_raised[routine.irq_line] = False
            self.state.contexts.pop()

    def _run_isr(self, line: int) -> None:
        isr = self.program.isr_for_line(line)
        self._emit(EventKind.ISR_ENTRY, None, value=f"line {line}", context=isr.name, routine=isr.name)
        args = self.state.registered_args.get(isr.name, [0] * len(isr.params))
        self._enter_context(isr.name, args)
        self._emit(EventKind.ISR_EXIT, None, value=f"line {line}", context=isr.name, routine=isr.name)

    def _dispatch(self) -> None:
        while True:
            ready = [line for line in sorted(self.state.pending) if self.state.isr_enabled(line)]
            if not ready:
                return
            line = min(ready, key=lambda ln: self.program.isr_for_line(ln).priority)
            self.state.pending.discard(line)
            self._run_isr(line)

    # ---------------------------------------------------------------- statements

    def _block(self, block: Tuple[Stmt, ...]) -> None:
        for stmt in block:
            self._stmt(stmt)

    def _boundary(self, stmt: Stmt) -> None:
        activation = self.state.active
        activation.location = stmt.location
        count = activation.occurrences.get(stmt.location, 0) + 1
        activation.occurrences[stmt.location] = count
        self.trace.steps += 1
        if self.trace.steps > self.config.step_limit:
            raise StepLimitExceeded(self.config.step_limit)
        step = StepInfo(activation.context, len(self.state.contexts) - 1, stmt.location, stmt,
                        tuple(self._step_accesses), count)
        self._step_accesses = []
        if self.controller is not None:
            for line in self.controller.at_boundary(self, step):
                self.raise_line(line)
        self._dispatch()

    def _stmt(self, stmt: Stmt) -> None:
        routine = self.state.active.frame.routine

        if isinstance(stmt, If):
            cond = self._truth(self._eval(stmt.cond, stmt))
            self._boundary(stmt)
            self._block(stmt.then if cond else stmt.orelse)
            return
        if isinstance(stmt, While):
            while True:
                cond = self._truth(self._eval(stmt.cond, stmt))
                self._boundary(stmt)
                if not cond:
                    return
                self._block(stmt.body)
        if isinstance(stmt, Call):
            args = [self._eval(arg, stmt) for arg in stmt.args]
            self._boundary(stmt)
            callee = self.program.routine(stmt.callee)
            frame = self.state.new_frame(callee.name)
            for param, value in zip(callee.params, args):
                self.state.cells[frame.cell(param)] = value
            self.state.active.frames.append(frame)
            try:
                self._block(callee.body)
            finally:
                self.state.active.frames.pop()
                self._drop_frame(frame)
            return

        if isinstance(stmt, Assign):
            value = self._eval(stmt.value, stmt)
            self._write_name(stmt.target, value, stmt)
        elif isinstance(stmt, Store):
            value = self._eval(stmt.value, stmt)
            address = self._read_name(stmt.pointer, stmt)
            self._store(address, value, stmt)
        elif isinstance(stmt, Output):
            value = self._eval(stmt.value, stmt)
            self._emit(EventKind.OUTPUT, stmt.location, value=str(value))
        elif isinstance(stmt, IrqDisable):
            self.state.disable_line(stmt.irq)
            self._emit(EventKind.IRQ_OP, stmt.location, value=f"disable {_line_text(stmt.irq)}")
        elif isinstance(stmt, IrqEnable):
            self.state.enable_line(stmt.irq)
            self._emit(EventKind.IRQ_OP, stmt.location, value=f"enable {_line_text(stmt.irq)}")
        elif isinstance(stmt, Lock):
            self._acquire(self._lock_name(stmt, routine), stmt)
        elif isinstance(stmt, Unlock):
            lock = self._lock_name(stmt, routine)
            if self.state.lock_holder.get(lock) is not None:
                self.state.lock_holder[lock] = None
                self._emit(EventKind.UNLOCK, stmt.location, value=lock)
        elif isinstance(stmt, RequestIrq):
            args = [self._eval(arg, stmt) for arg in stmt.args]
            self.state.registered_args[stmt.isr] = args
        self._boundary(stmt)

    def _drop_frame(self, frame: Frame) -> None:
        prefix = f"{frame.ident}:"
        for cell in [c for c in self.state.cells if c.startswith(prefix)]:
            del self.state.cells[cell]

    # --------------------------------------------------------------------- locks

    def _lock_name(self, stmt, routine: str) -> str:
        if not stmt.via_pointer:
            return stmt.lock
        address = self._read_name(stmt.lock, stmt, record=False)
        if not isinstance(address, Address) or address.resource not in self.program.lock_names:
            raise VmFault(f"{stmt.lock!r} does not hold a lock address", stmt.location)
        return address.resource

    def _acquire(self, lock: str, stmt: Stmt) -> None:
        me = self.state.active.context
        holder = self.state.lock_holder.get(lock)
        if holder is None:
            self.state.lock_holder[lock] = me
            self._emit(EventKind.LOCK, stmt.location, value=lock)
            return
        # Single core: the holder can never run again while we spin
        self._emit(EventKind.BLOCK, stmt.location, value=f"{lock} held by {holder}")
        raise _Blocked(lock)

    # --------------------------------------------------------------- expressions

    def _emit(self, kind: EventKind, location: Optional[Location], resource: Optional[str] = None,
              access: Optional[Access] = None, value: Optional[str] = None,
              context: Optional[str] = None, routine: Optional[str] = None) -> None:
        active = self.state.active
        self.trace.events.append(TraceEvent(
            kind,
            context or active.context,
            routine or active.frame.routine,
            location, resource, access, value,
        ))

    def _record(self, resource: str, access: Access, value: Value, stmt: Stmt) -> None:
        text = str(value)
        self._step_accesses.append(StepAccess(resource, access, text))
        self._emit(EventKind.ACCESS, stmt.location, resource, access, text)

    def _truth(self, value: Value) -> bool:
        if isinstance(value, Address):
            return True
        return value != 0

    def _int(self, value: Value, stmt: Stmt) -> int:
        if isinstance(value, Address):
            raise VmFault(f"arithmetic on address {value}", stmt.location)
        return value

    def _read_name(self, name: str, stmt: Stmt, record: bool = True) -> Value:
        frame = self.state.active.frame
        kind = self.symbols.lookup(frame.routine, name)
        if kind is SymbolKind.CONST:
            return arith.to_signed(self.program.const_values[name], self.width)
        if kind is SymbolKind.REGISTER:
            decl = self.program.register(name)
            if name not in self.state.registers:
                self.state.registers[name] = self.inputs.get(name, 0) & arith.mask(decl.width)
            value = arith.zero_extend(self.state.registers[name], decl.width, self.width)
            resource = name
        elif kind is SymbolKind.GLOBAL:
            value = self.state.cells[name]
            resource = name
        elif kind in (SymbolKind.PARAM, SymbolKind.LOCAL):
            value = self.state.cells.get(frame.cell(name), 0)
            resource = f"{frame.routine}.{name}"
        else:
            raise VmFault(f"{name!r} is not a value", stmt.location)
        if record:
            self._record(resource, Access.READ, value, stmt)
        return value

    def _write_name(self, name: str, value: Value, stmt: Stmt) -> None:
        frame = self.state.active.frame
        kind = self.symbols.lookup(frame.routine, name)
        if kind is SymbolKind.REGISTER:
            decl = self.program.register(name)
            if decl.readonly:
                raise VmFault(f"write to read-only register {name!r}", stmt.location)
            raw = self._int(value, stmt) & arith.mask(decl.width)
            self.state.registers[name] = raw
            self._record(name, Access.WRITE, arith.zero_extend(raw, decl.width, self.width), stmt)
            if name in self.interrupt_registers:
                self.state.write_interrupt_register(raw)
                self._emit(EventKind.IRQ_OP, stmt.location, value=f"{name} <- {raw:#x}")
            return
        if kind is SymbolKind.GLOBAL:
            cell, resource = name, name
        elif kind in (SymbolKind.PARAM, SymbolKind.LOCAL):
            cell, resource = frame.cell(name), f"{frame.routine}.{name}"
        else:
            raise VmFault(f"cannot assign to {name!r}", stmt.location)
        self.state.cells[cell] = value
        self._record(resource, Access.WRITE, value, stmt)

    def _address_of(self, name: str, stmt: Stmt) -> Address:
        frame = self.state.active.frame
        kind = self.symbols.lookup(frame.routine, name)
        if kind is SymbolKind.GLOBAL:
            return Address(name, name)
        if kind in (SymbolKind.PARAM, SymbolKind.LOCAL):
            cell = frame.cell(name)
            self.state.cells.setdefault(cell, 0)
            return Address(cell, f"{frame.routine}.{name}")
        if kind is SymbolKind.LOCK:
            return Address(f"lock:{name}", name)
        raise VmFault(f"cannot take the address of {name!r}", stmt.location)

    def _load(self, address: Value, stmt: Stmt) -> Value:
        if not isinstance(address, Address):
            raise VmFault(f"dereference of non-pointer value {address}", stmt.location)
        if address.cell not in self.state.cells:
            raise VmFault(f"dangling pointer to {address.resource}", stmt.location)
        value = self.state.cells[address.cell]
        self._record(address.resource, Access.READ, value, stmt)
        return value

    def _store(self, address: Value, value: Value, stmt: Stmt) -> None:
        if not isinstance(address, Address):
            raise VmFault(f"store through non-pointer value {address}", stmt.location)
        if address.cell not in self.state.cells:
            raise VmFault(f"dangling pointer to {address.resource}", stmt.location)
        self.state.cells[address.cell] = value
        self._record(address.resource, Access.WRITE, value, stmt)

    def _eval(self, expr: Expr, stmt: Stmt) -> Value:
        if isinstance(expr, IntLit):
            return arith.to_signed(expr.value, self.width)
        if isinstance(expr, Name):
            return self._read_name(expr.name, stmt)
        if isinstance(expr, AddrOf):
            return self._address_of(expr.name, stmt)
        if isinstance(expr, Deref):
            return self._load(self._read_name(expr.name, stmt), stmt)
        if isinstance(expr, Unary):
            operand = self._eval(expr.operand, stmt)
            if expr.op == "!" and isinstance(operand, Address):
                return 0
            return arith.unary(expr.op, self._int(operand, stmt), self.width)
        if isinstance(expr, Binary):
            left = self._eval(expr.left, stmt)
            right = self._eval(expr.right, stmt)
            if isinstance(left, Address) or isinstance(right, Address):
                if expr.op in ("==", "!="):
                    return int((left == right) == (expr.op == "=="))
                raise VmFault(f"operator {expr.op!r} applied to an address", stmt.location)
            return arith.binary(expr.op, left, right, self.width)
        raise VmFault(f"cannot evaluate {expr!r}", stmt.location)


def _line_text(line: Optional[int]) -> str:
    return "all" if line is None else str(line)


def execute(p: Program, input: Optional[Mapping[str, int]] = None, sched: Optional[InterruptSchedule] = None,
            entry: Optional[str] = None, config: Optional[ToolConfig] = None,
            controller: Optional[InterruptController] = None) -> Trace:
    """
    Run one context of a program under an interrupt schedule

    Args:
        p: Checked program
        input: Values for input points (registers and input globals)
        sched: Interrupt schedule; ignored when a controller is given
        entry: Task (or ISR) to run; defaults to the first task
        config: Word width, step limit and interrupt-controlling registers

    Returns:
        Trace of the run

    Raises:
        StepLimitExceeded: the run exceeded config.step_limit statements
    """
    if entry is None:
        if not p.tasks:
            raise AnchorVanished("program has no task to run")
        entry = p.tasks[0].name
    if controller is None and sched is not None:
        sched.check(p)
        controller = ScheduleController(sched)
    trace = Interpreter(p, input, config, controller).run(entry)
    logger.debug(f"execute {entry}: {trace.steps} step(s), {len(trace.events)} event(s)")
    return trace
