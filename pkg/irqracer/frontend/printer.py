"""
Pretty-printer for IDL programs

The output re-parses to a structurally equal AST.
"""

from typing import List

from .ast import (
    AddrOf, Assign, Binary, Call, Deref, Expr, If, IntLit, IrqDisable, IrqEnable, Lock,
    Name, Output, Program, RequestIrq, Routine, RoutineKind, Stmt, Store, Unary, Unlock, While,
)

INDENT = "    "


def format_expr(expr: Expr) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, Name):
        return expr.name
    if isinstance(expr, AddrOf):
        return f"&{expr.name}"
    if isinstance(expr, Deref):
        return f"*{expr.name}"
    if isinstance(expr, Unary):
        return f"{expr.op}({format_expr(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({format_expr(expr.left)} {expr.op} {format_expr(expr.right)})"
    raise TypeError(f"not an expression: {expr!r}")


def _strip_parens(text: str) -> str:
    if text.startswith("(") and text.endswith(")"):
        depth = 0
        for i, ch in enumerate(text):
            depth += ch == "("
            depth -= ch == ")"
            if depth == 0 and i != len(text) - 1:
                return text
        return text[1:-1]
    return text


def format_stmt(stmt: Stmt, depth: int = 0) -> List[str]:
    pad = INDENT * depth
    if isinstance(stmt, Assign):
        return [f"{pad}{stmt.target} = {_strip_parens(format_expr(stmt.value))};"]
    if isinstance(stmt, Store):
        return [f"{pad}*{stmt.pointer} = {_strip_parens(format_expr(stmt.value))};"]
    if isinstance(stmt, If):
        lines = [f"{pad}if ({_strip_parens(format_expr(stmt.cond))}) {{"]
        for child in stmt.then:
            lines.extend(format_stmt(child, depth + 1))
        if stmt.orelse:
            lines.append(f"{pad}}} else {{")
            for child in stmt.orelse:
                lines.extend(format_stmt(child, depth + 1))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, While):
        lines = [f"{pad}while ({_strip_parens(format_expr(stmt.cond))}) {{"]
        for child in stmt.body:
            lines.extend(format_stmt(child, depth + 1))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, (Lock, Unlock)):
        keyword = "lock" if isinstance(stmt, Lock) else "unlock"
        star = "*" if stmt.via_pointer else ""
        return [f"{pad}{keyword}({star}{stmt.lock});"]
    if isinstance(stmt, (IrqDisable, IrqEnable)):
        keyword = "irq_disable" if isinstance(stmt, IrqDisable) else "irq_enable"
        if stmt.irq is None:
            return [f"{pad}{keyword}_all();"]
        return [f"{pad}{keyword}({stmt.irq});"]
    if isinstance(stmt, Output):
        return [f"{pad}output({_strip_parens(format_expr(stmt.value))});"]
    if isinstance(stmt, Call):
        args = ", ".join(_strip_parens(format_expr(a)) for a in stmt.args)
        return [f"{pad}call {stmt.callee}({args});"]
    if isinstance(stmt, RequestIrq):
        args = "".join(", " + _strip_parens(format_expr(a)) for a in stmt.args)
        return [f"{pad}request_irq({stmt.isr}{args});"]
    raise TypeError(f"not a statement: {stmt!r}")


def format_routine(routine: Routine) -> List[str]:
    params = "(" + ", ".join(routine.params) + ")"
    if routine.kind is RoutineKind.TASK:
        header = f"task {routine.name}{params} prio {routine.priority} {{"
    elif routine.kind is RoutineKind.ISR:
        header = f"isr {routine.name}{params} line {routine.irq_line} prio {routine.priority} {{"
    else:
        header = f"func {routine.name}{params} {{"
    lines = [header]
    for stmt in routine.body:
        lines.extend(format_stmt(stmt, 1))
    lines.append("}")
    return lines


def print_program(program: Program) -> str:
    """Render a Program as IDL source."""
    lines: List[str] = []
    for const in program.consts:
        lines.append(f"const {const.name} = {const.value};")
    for glob in program.globals:
        prefix = "input " if glob.is_input else ""
        lines.append(f"{prefix}global {glob.name} = {glob.init};")
    for reg in program.registers:
        suffix = " readonly" if reg.readonly else ""
        lines.append(f"register {reg.name} width {reg.width}{suffix};")
    for lock in program.locks:
        lines.append(f"lock {lock.name};")
    for routine in program.routines:
        if lines:
            lines.append("")
        lines.extend(format_routine(routine))
    return "\n".join(lines) + "\n" if lines else ""
