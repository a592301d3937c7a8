"""
Fixed-width two's-complement integer semantics shared by the interpreter and the solver re-check
"""

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Address:
    """Pointer value: the memory cell it designates plus the variable's qualified name."""
    cell: str
    resource: str

    def __str__(self) -> str:
        return f"&{self.resource}"


Value = Union[int, Address]


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(value: int, width: int) -> int:
    value &= mask(width)
    if value >> (width - 1):
        return value - (1 << width)
    return value


def zero_extend(value: int, reg_width: int, width: int) -> int:
    """Register contents: low reg_width bits, zero-extended to the word width."""
    return to_signed(value & mask(min(reg_width, width)), width)


def unary(op: str, a: int, width: int) -> int:
    if op == "-":
        return to_signed(-a, width)
    if op == "~":
        return to_signed(~a, width)
    if op == "!":
        return int(a == 0)
    raise ValueError(f"unknown unary operator {op!r}")


def binary(op: str, a: int, b: int, width: int) -> int:
    if op == "+":
        return to_signed(a + b, width)
    if op == "-":
        return to_signed(a - b, width)
    if op == "*":
        return to_signed(a * b, width)
    if op == "&":
        return to_signed(a & b, width)
    if op == "|":
        return to_signed(a | b, width)
    if op == "^":
        return to_signed(a ^ b, width)
    if op in ("<<", ">>"):
        # Shift amounts are read as unsigned
        amount = b & mask(width)
        if op == "<<":
            return 0 if amount >= width else to_signed(a << amount, width)
        if amount >= width:
            return -1 if a < 0 else 0
        return a >> amount
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "&&":
        return int(a != 0 and b != 0)
    if op == "||":
        return int(a != 0 or b != 0)
    raise ValueError(f"unknown binary operator {op!r}")
