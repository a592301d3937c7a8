"""
AST for IDL, the interrupt-driven modelling language

Nodes are frozen dataclasses; transformations rebuild instead of mutating.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterator, Optional, Tuple, Union


class RoutineKind(str, Enum):
    TASK = "task"
    ISR = "isr"
    FUNC = "func"


class Access(str, Enum):
    READ = "R"
    WRITE = "W"


@dataclass(frozen=True, order=True)
class Location:
    """Stable statement position: preorder index inside a routine body.

    ``sub`` is zero for source statements and positive for statements
    generated by a patch at that anchor.
    """
    routine: str
    index: int
    sub: int = 0

    def __str__(self) -> str:
        if self.sub:
            return f"{self.routine}:{self.index}.{self.sub}"
        return f"{self.routine}:{self.index}"


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class AddrOf:
    name: str


@dataclass(frozen=True)
class Deref:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, Name, AddrOf, Deref, Unary, Binary]

ARITH_OPS = ("+", "-", "*", "&", "|", "^", "<<", ">>")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
LOGIC_OPS = ("&&", "||")


def walk_expr(expr: Expr) -> Iterator[Expr]:
    yield expr
    if isinstance(expr, Unary):
        yield from walk_expr(expr.operand)
    elif isinstance(expr, Binary):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)


# ----------------------------------------------------------------- statements

@dataclass(frozen=True)
class Stmt:
    location: Location
    line: int = field(compare=False)
    # None for source statements, "<section>:<role>" for patch-generated ones
    origin: Optional[str] = field(default=None, compare=False)

    @property
    def generated(self) -> bool:
        return self.origin is not None


@dataclass(frozen=True)
class Assign(Stmt):
    target: str = ""
    value: Expr = IntLit(0)


@dataclass(frozen=True)
class Store(Stmt):
    pointer: str = ""
    value: Expr = IntLit(0)


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr = IntLit(0)
    then: Tuple[Stmt, ...] = ()
    orelse: Tuple[Stmt, ...] = ()


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr = IntLit(0)
    body: Tuple[Stmt, ...] = ()


@dataclass(frozen=True)
class Lock(Stmt):
    lock: str = ""
    via_pointer: bool = False


@dataclass(frozen=True)
class Unlock(Stmt):
    lock: str = ""
    via_pointer: bool = False


@dataclass(frozen=True)
class IrqDisable(Stmt):
    irq: Optional[int] = None  # None = all lines


@dataclass(frozen=True)
class IrqEnable(Stmt):
    irq: Optional[int] = None


@dataclass(frozen=True)
class Output(Stmt):
    value: Expr = IntLit(0)


@dataclass(frozen=True)
class Call(Stmt):
    callee: str = ""
    args: Tuple[Expr, ...] = ()


@dataclass(frozen=True)
class RequestIrq(Stmt):
    isr: str = ""
    args: Tuple[Expr, ...] = ()


Block = Tuple[Stmt, ...]


def child_blocks(stmt: Stmt) -> Tuple[Block, ...]:
    if isinstance(stmt, If):
        return (stmt.then, stmt.orelse)
    if isinstance(stmt, While):
        return (stmt.body,)
    return ()


def with_blocks(stmt: Stmt, blocks: Tuple[Block, ...]) -> Stmt:
    if isinstance(stmt, If):
        return replace(stmt, then=blocks[0], orelse=blocks[1])
    if isinstance(stmt, While):
        return replace(stmt, body=blocks[0])
    return stmt


def walk_block(block: Block) -> Iterator[Stmt]:
    """Preorder walk over a block and every nested block."""
    for stmt in block:
        yield stmt
        for child in child_blocks(stmt):
            yield from walk_block(child)


def map_blocks(block: Block, fn: Callable[[Block], Block]) -> Block:
    """Rebuild a block bottom-up, applying ``fn`` to every (nested) block."""
    rebuilt = []
    for stmt in block:
        children = child_blocks(stmt)
        if children:
            stmt = with_blocks(stmt, tuple(map_blocks(child, fn) for child in children))
        rebuilt.append(stmt)
    return fn(tuple(rebuilt))


def stmt_exprs(stmt: Stmt) -> Tuple[Expr, ...]:
    """Expressions evaluated by the statement itself (not by nested blocks)."""
    if isinstance(stmt, (Assign, Store, Output)):
        return (stmt.value,)
    if isinstance(stmt, (If, While)):
        return (stmt.cond,)
    if isinstance(stmt, (Call, RequestIrq)):
        return stmt.args
    return ()


# --------------------------------------------------------------- declarations

@dataclass(frozen=True)
class GlobalDecl:
    name: str
    init: int = 0
    is_input: bool = False
    line: int = 0


@dataclass(frozen=True)
class RegisterDecl:
    name: str
    width: int = 16
    readonly: bool = False
    line: int = 0


@dataclass(frozen=True)
class LockDecl:
    name: str
    line: int = 0


@dataclass(frozen=True)
class ConstDecl:
    name: str
    value: int = 0
    line: int = 0


@dataclass(frozen=True)
class Routine:
    name: str
    kind: RoutineKind
    priority: Optional[int] = None
    irq_line: Optional[int] = None
    params: Tuple[str, ...] = ()
    body: Block = ()
    line: int = 0

    @property
    def is_task(self) -> bool:
        return self.kind is RoutineKind.TASK

    @property
    def is_isr(self) -> bool:
        return self.kind is RoutineKind.ISR

    @property
    def is_func(self) -> bool:
        return self.kind is RoutineKind.FUNC

    def statements(self) -> Iterator[Stmt]:
        return walk_block(self.body)


@dataclass(frozen=True)
class Program:
    globals: Tuple[GlobalDecl, ...] = ()
    routines: Tuple[Routine, ...] = ()
    registers: Tuple[RegisterDecl, ...] = ()
    locks: Tuple[LockDecl, ...] = ()
    consts: Tuple[ConstDecl, ...] = ()

    def routine(self, name: str) -> Routine:
        for routine in self.routines:
            if routine.name == name:
                return routine
        raise KeyError(name)

    def has_routine(self, name: str) -> bool:
        return any(r.name == name for r in self.routines)

    @property
    def tasks(self) -> Tuple[Routine, ...]:
        return tuple(r for r in self.routines if r.is_task)

    @property
    def isrs(self) -> Tuple[Routine, ...]:
        return tuple(r for r in self.routines if r.is_isr)

    @property
    def contexts(self) -> Tuple[Routine, ...]:
        """Routines that own an execution context: tasks and ISRs."""
        return tuple(r for r in self.routines if not r.is_func)

    def isr_for_line(self, line: int) -> Routine:
        for routine in self.isrs:
            if routine.irq_line == line:
                return routine
        raise KeyError(line)

    @property
    def irq_lines(self) -> Tuple[int, ...]:
        return tuple(sorted(r.irq_line for r in self.isrs if r.irq_line is not None))

    @property
    def global_names(self) -> frozenset:
        return frozenset(g.name for g in self.globals)

    @property
    def register_names(self) -> frozenset:
        return frozenset(r.name for r in self.registers)

    @property
    def lock_names(self) -> frozenset:
        return frozenset(lock.name for lock in self.locks)

    @property
    def const_values(self) -> dict:
        return {c.name: c.value for c in self.consts}

    def register(self, name: str) -> RegisterDecl:
        for reg in self.registers:
            if reg.name == name:
                return reg
        raise KeyError(name)

    def statement_at(self, location: Location) -> Stmt:
        routine = self.routine(location.routine)
        for stmt in routine.statements():
            if stmt.location == location:
                return stmt
        raise KeyError(str(location))

    def priority_of(self, name: str) -> int:
        return self.routine(name).priority or 0

    def preempts(self, high: str, low: str) -> bool:
        """True when ISR ``high`` may interrupt context ``low`` (smaller number = higher priority)."""
        routine = self.routine(high)
        return routine.is_isr and high != low and self.priority_of(high) < self.priority_of(low)
