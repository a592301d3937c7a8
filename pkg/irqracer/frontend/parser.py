"""
Recursive-descent parser for IDL
"""

import logging
from typing import List, Optional, Set, Tuple

from ..errors import DuplicateIrqLine, DuplicateRoutine, IdlSyntaxError, UnknownIdentifier
from .ast import (
    AddrOf, Assign, Binary, Call, ConstDecl, Deref, Expr, GlobalDecl, If, IntLit,
    IrqDisable, IrqEnable, Location, Lock, LockDecl, Name, Output, Program, RegisterDecl,
    RequestIrq, Routine, RoutineKind, Stmt, Store, Unary, Unlock, While, walk_expr, stmt_exprs,
)
from .lexer import Token, tokenize

logger = logging.getLogger(__name__)

# Binary operator precedence, loosest first
_PRECEDENCE = (
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*",),
)


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        self.routine_name = ""
        self.counter = 0

    # ------------------------------------------------------------ token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _error(self, message: str, token: Optional[Token] = None) -> IdlSyntaxError:
        token = token or self.tok
        found = token.text or "end of input"
        return IdlSyntaxError(f"{message} (found {found!r})", token.line, token.column)

    def _advance(self) -> Token:
        token = self.tok
        self.pos += 1
        return token

    def _check(self, text: str) -> bool:
        return self.tok.kind in ("op", "keyword") and self.tok.text == text

    def _accept(self, text: str) -> bool:
        if self._check(text):
            self.pos += 1
            return True
        return False

    def _expect(self, text: str) -> Token:
        if not self._check(text):
            raise self._error(f"expected {text!r}")
        return self._advance()

    def _expect_name(self) -> Token:
        if self.tok.kind != "name":
            raise self._error("expected identifier")
        return self._advance()

    def _expect_int(self) -> int:
        negative = self._accept("-")
        if self.tok.kind != "number":
            raise self._error("expected integer literal")
        value = self._advance().value
        return -value if negative else value

    # ----------------------------------------------------------- declarations

    def parse_program(self) -> Program:
        globals_: List[GlobalDecl] = []
        registers: List[RegisterDecl] = []
        locks: List[LockDecl] = []
        consts: List[ConstDecl] = []
        routines: List[Routine] = []

        while self.tok.kind != "eof":
            token = self.tok
            if self._accept("input"):
                self._expect("global")
                globals_.append(self._global_rest(token.line, is_input=True))
            elif self._accept("global"):
                globals_.append(self._global_rest(token.line, is_input=False))
            elif self._accept("register"):
                name = self._expect_name().text
                self._expect("width")
                width = self._expect_int()
                if width <= 0:
                    raise self._error("register width must be positive", token)
                readonly = self._accept("readonly")
                self._expect(";")
                registers.append(RegisterDecl(name, width, readonly, token.line))
            elif self._accept("lock"):
                name = self._expect_name().text
                self._expect(";")
                locks.append(LockDecl(name, token.line))
            elif self._accept("const"):
                name = self._expect_name().text
                self._expect("=")
                value = self._expect_int()
                self._expect(";")
                consts.append(ConstDecl(name, value, token.line))
            elif self._check("task") or self._check("isr") or self._check("func"):
                routines.append(self._routine())
            else:
                raise self._error("expected a declaration or routine")

        seen: Set[str] = set()
        for routine in routines:
            if routine.name in seen:
                raise DuplicateRoutine(f"routine {routine.name!r} declared twice (line {routine.line})")
            seen.add(routine.name)

        lines: Set[int] = set()
        for routine in routines:
            if routine.is_isr:
                if routine.irq_line in lines:
                    raise DuplicateIrqLine(
                        f"interrupt line {routine.irq_line} already handled (ISR {routine.name!r})"
                    )
                lines.add(routine.irq_line)

        program = Program(
            globals=tuple(globals_),
            routines=tuple(routines),
            registers=tuple(registers),
            locks=tuple(locks),
            consts=tuple(consts),
        )
        _resolve_names(program)
        return program

    def _global_rest(self, line: int, is_input: bool) -> GlobalDecl:
        name = self._expect_name().text
        init = 0
        if self._accept("="):
            init = self._expect_int()
        self._expect(";")
        return GlobalDecl(name, init, is_input, line)

    def _params(self) -> Tuple[str, ...]:
        params: List[str] = []
        self._expect("(")
        if not self._check(")"):
            params.append(self._expect_name().text)
            while self._accept(","):
                params.append(self._expect_name().text)
        self._expect(")")
        return tuple(params)

    def _routine(self) -> Routine:
        token = self._advance()
        kind = RoutineKind(token.text)
        name = self._expect_name().text
        params: Tuple[str, ...] = ()
        if self._check("("):
            params = self._params()
        elif kind is RoutineKind.FUNC:
            raise self._error("expected '(' after function name")

        irq_line = None
        priority = None
        if kind is RoutineKind.ISR:
            self._expect("line")
            irq_line = self._expect_int()
        if kind is not RoutineKind.FUNC:
            self._expect("prio")
            priority = self._expect_int()

        self.routine_name = name
        self.counter = 0
        body = self._block()
        return Routine(name, kind, priority, irq_line, params, body, token.line)

    # -------------------------------------------------------------- statements

    def _block(self) -> Tuple[Stmt, ...]:
        self._expect("{")
        stmts: List[Stmt] = []
        while not self._check("}"):
            if self.tok.kind == "eof":
                raise self._error("unterminated block")
            stmts.append(self._statement())
        self._expect("}")
        return tuple(stmts)

    def _new_location(self) -> Location:
        self.counter += 1
        return Location(self.routine_name, self.counter)

    def _lock_target(self) -> Tuple[str, bool]:
        self._expect("(")
        via_pointer = self._accept("*")
        name = self._expect_name().text
        self._expect(")")
        self._expect(";")
        return name, via_pointer

    def _irq_number(self) -> int:
        self._expect("(")
        value = self._expect_int()
        self._expect(")")
        self._expect(";")
        return value

    def _call_args(self) -> Tuple[Expr, ...]:
        args: List[Expr] = []
        if not self._check(")"):
            args.append(self._expr())
            while self._accept(","):
                args.append(self._expr())
        return tuple(args)

    def _statement(self) -> Stmt:
        token = self.tok
        loc = self._new_location()
        line = token.line

        if self._accept("if"):
            return self._if_rest(loc, line)
        if self._accept("while"):
            self._expect("(")
            cond = self._expr()
            self._expect(")")
            body = self._block()
            return While(loc, line, cond=cond, body=body)
        if self._accept("lock"):
            name, via = self._lock_target()
            return Lock(loc, line, lock=name, via_pointer=via)
        if self._accept("unlock"):
            name, via = self._lock_target()
            return Unlock(loc, line, lock=name, via_pointer=via)
        if self._accept("irq_disable"):
            return IrqDisable(loc, line, irq=self._irq_number())
        if self._accept("irq_enable"):
            return IrqEnable(loc, line, irq=self._irq_number())
        if self._accept("irq_disable_all") or self._accept("irq_enable_all"):
            if self._accept("("):
                self._expect(")")
            self._expect(";")
            cls = IrqDisable if token.text == "irq_disable_all" else IrqEnable
            return cls(loc, line, irq=None)
        if self._accept("output"):
            self._expect("(")
            value = self._expr()
            self._expect(")")
            self._expect(";")
            return Output(loc, line, value=value)
        if self._accept("call"):
            callee = self._expect_name().text
            self._expect("(")
            args = self._call_args()
            self._expect(")")
            self._expect(";")
            return Call(loc, line, callee=callee, args=args)
        if self._accept("request_irq"):
            self._expect("(")
            isr = self._expect_name().text
            args: Tuple[Expr, ...] = ()
            if self._accept(","):
                args = self._call_args()
            self._expect(")")
            self._expect(";")
            return RequestIrq(loc, line, isr=isr, args=args)
        if self._accept("*"):
            pointer = self._expect_name().text
            self._expect("=")
            value = self._expr()
            self._expect(";")
            return Store(loc, line, pointer=pointer, value=value)
        if self.tok.kind == "name":
            target = self._advance().text
            self._expect("=")
            value = self._expr()
            self._expect(";")
            return Assign(loc, line, target=target, value=value)
        raise self._error("expected a statement")

    def _if_rest(self, loc: Location, line: int) -> If:
        self._expect("(")
        cond = self._expr()
        self._expect(")")
        then = self._block()
        orelse: Tuple[Stmt, ...] = ()
        if self._accept("else"):
            if self._check("if"):
                nested_token = self._advance()
                nested_loc = self._new_location()
                orelse = (self._if_rest(nested_loc, nested_token.line),)
            else:
                orelse = self._block()
        return If(loc, line, cond=cond, then=then, orelse=orelse)

    # ------------------------------------------------------------- expressions

    def _expr(self, level: int = 0) -> Expr:
        if level == len(_PRECEDENCE):
            return self._unary()
        left = self._expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _PRECEDENCE[level]:
            op = self._advance().text
            right = self._expr(level + 1)
            left = Binary(op, left, right)
        return left

    def _unary(self) -> Expr:
        if self._accept("-"):
            operand = self._unary()
            if isinstance(operand, IntLit):
                return IntLit(-operand.value)
            return Unary("-", operand)
        if self._accept("~"):
            return Unary("~", self._unary())
        if self._accept("!"):
            return Unary("!", self._unary())
        if self._accept("*"):
            return Deref(self._expect_name().text)
        if self._accept("&"):
            return AddrOf(self._expect_name().text)
        return self._primary()

    def _primary(self) -> Expr:
        if self.tok.kind == "number":
            return IntLit(self._advance().value)
        if self.tok.kind == "name":
            return Name(self._advance().text)
        if self._accept("("):
            inner = self._expr()
            self._expect(")")
            return inner
        raise self._error("expected an expression")


def routine_locals(routine: Routine) -> Set[str]:
    """Names a routine assigns that are not declared at program level."""
    return {stmt.target for stmt in routine.statements() if isinstance(stmt, Assign)}


def _resolve_names(program: Program) -> None:
    program_names = (program.global_names | program.register_names | program.lock_names
                     | set(program.const_values))
    for routine in program.routines:
        visible = program_names | set(routine.params) | routine_locals(routine)
        for stmt in routine.statements():
            for expr in stmt_exprs(stmt):
                for node in walk_expr(expr):
                    name = None
                    if isinstance(node, (Name, AddrOf, Deref)):
                        name = node.name
                    if name is not None and name not in visible:
                        raise UnknownIdentifier(
                            f"{stmt.location} (line {stmt.line}): unknown identifier {name!r}"
                        )
            if isinstance(stmt, Store) and stmt.pointer not in visible:
                raise UnknownIdentifier(
                    f"{stmt.location} (line {stmt.line}): unknown pointer {stmt.pointer!r}"
                )


def parse_program(source: str) -> Program:
    """
    Parse IDL source text into a Program

    Args:
        source: IDL program text

    Returns:
        Program with Locations assigned in source (preorder) order

    Raises:
        IdlSyntaxError, DuplicateRoutine, DuplicateIrqLine, UnknownIdentifier
    """
    program = _Parser(source).parse_program()
    logger.debug(f"Parsed program with {len(program.routines)} routines")
    return program
