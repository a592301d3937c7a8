"""
Tokenizer for IDL source text
"""

import re
from dataclasses import dataclass
from typing import List

from ..errors import IdlSyntaxError

KEYWORDS = frozenset({
    "global", "input", "register", "width", "readonly", "lock", "unlock", "const",
    "task", "isr", "func", "prio", "line", "if", "else", "while",
    "irq_disable", "irq_enable", "irq_disable_all", "irq_enable_all",
    "output", "call", "request_irq",
})

# Longest operators first so that "<<" wins over "<"
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<number>0[xX][0-9a-fA-F]+|0[bB][01]+|\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><<|>>|==|!=|<=|>=|&&|\|\||[-+*&|^~!<>=(){};,])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "name", "keyword", "op", "eof"
    text: str
    line: int
    column: int

    @property
    def value(self) -> int:
        return int(self.text, 0)


def tokenize(source: str) -> List[Token]:
    """Split source into tokens, dropping whitespace and comments."""
    tokens: List[Token] = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise IdlSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        text = match.group()
        column = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = match.end()
        elif kind == "block_comment":
            newlines = text.count("\n")
            if newlines:
                line += newlines
                line_start = pos + text.rfind("\n") + 1
        elif kind == "number":
            tokens.append(Token("number", text, line, column))
        elif kind == "name":
            tokens.append(Token("keyword" if text in KEYWORDS else "name", text, line, column))
        elif kind == "op":
            tokens.append(Token("op", text, line, column))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
