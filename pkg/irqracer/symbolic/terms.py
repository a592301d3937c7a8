"""
Bit-vector terms mirroring the interpreter's integer semantics

All values are bit-vectors of the configured word width. Comparisons are
signed and yield 0/1, ``&&``/``||`` evaluate both operands, shift amounts
are unsigned.
"""

from typing import Dict, Mapping

import z3


class TermBuilder:
    def __init__(self, width: int):
        self.width = width
        self.one = z3.BitVecVal(1, width)
        self.zero = z3.BitVecVal(0, width)
        self._vars: Dict[str, z3.BitVecRef] = {}

    def const(self, value: int) -> z3.BitVecRef:
        return z3.BitVecVal(value, self.width)

    def input_var(self, name: str, width: int) -> z3.BitVecRef:
        var = self._vars.get(name)
        if var is None:
            var = z3.BitVec(name, width)
            self._vars[name] = var
        return var

    @property
    def variables(self) -> Mapping[str, z3.BitVecRef]:
        return dict(self._vars)

    def extend(self, raw: z3.BitVecRef) -> z3.BitVecRef:
        """Register contents as a word: low bits zero-extended, or truncated when wider."""
        size = raw.size()
        if size < self.width:
            return z3.ZeroExt(self.width - size, raw)
        if size > self.width:
            return z3.Extract(self.width - 1, 0, raw)
        return raw

    def narrow(self, value: z3.BitVecRef, width: int) -> z3.BitVecRef:
        """Word value stored into a register of ``width`` bits."""
        if width < self.width:
            return z3.Extract(width - 1, 0, value)
        if width > self.width:
            return z3.SignExt(width - self.width, value)
        return value

    def _flag(self, cond: z3.BoolRef) -> z3.BitVecRef:
        return z3.If(cond, self.one, self.zero)

    def truth(self, value: z3.BitVecRef) -> z3.BoolRef:
        return value != self.zero

    def unary(self, op: str, a: z3.BitVecRef) -> z3.BitVecRef:
        if op == "-":
            return -a
        if op == "~":
            return ~a
        if op == "!":
            return self._flag(a == self.zero)
        raise ValueError(f"unknown unary operator {op!r}")

    def binary(self, op: str, a: z3.BitVecRef, b: z3.BitVecRef) -> z3.BitVecRef:
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        if op == "^":
            return a ^ b
        if op == "<<":
            return a << b
        if op == ">>":
            return a >> b
        if op == "==":
            return self._flag(a == b)
        if op == "!=":
            return self._flag(a != b)
        if op == "<":
            return self._flag(a < b)
        if op == "<=":
            return self._flag(a <= b)
        if op == ">":
            return self._flag(a > b)
        if op == ">=":
            return self._flag(a >= b)
        if op == "&&":
            return self._flag(z3.And(a != self.zero, b != self.zero))
        if op == "||":
            return self._flag(z3.Or(a != self.zero, b != self.zero))
        raise ValueError(f"unknown binary operator {op!r}")
