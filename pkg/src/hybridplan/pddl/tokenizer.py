"""S-expression tokenizer for PDDL+ text."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union


class PDDLSyntaxError(ValueError):
    """Raised for malformed PDDL input; carries the 1-based source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


@dataclass(frozen=True)
class Token:
    value: str
    line: int
    column: int

    @property
    def is_open(self) -> bool:
        return self.value == "("

    @property
    def is_close(self) -> bool:
        return self.value == ")"

    @property
    def lower(self) -> str:
        return self.value.lower()


_DELIMITERS = frozenset("();")


def _scan(text: str) -> Iterator[Token]:
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
        elif ch.isspace():
            i += 1
            col += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield Token(ch, line, col)
            i += 1
            col += 1
        else:
            start = i
            while i < n and not text[i].isspace() and text[i] not in _DELIMITERS:
                i += 1
            yield Token(text[start:i], line, col)
            col += i - start


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into parenthesis and atom tokens.

    Comments (``;`` to end of line) are dropped. Parentheses must balance;
    otherwise a :class:`PDDLSyntaxError` points at the offending token.
    """
    tokens = list(_scan(text))
    opened: list[Token] = []
    for tok in tokens:
        if tok.is_open:
            opened.append(tok)
        elif tok.is_close:
            if not opened:
                raise PDDLSyntaxError("unbalanced ')'", tok.line, tok.column)
            opened.pop()
    if opened:
        tok = opened[-1]
        raise PDDLSyntaxError("unclosed '('", tok.line, tok.column)
    return tokens


class SList(list):
    """A parenthesized list of s-expressions remembering where it opened."""

    def __init__(self, items=(), line: int = 0, column: int = 0):
        super().__init__(items)
        self.line = line
        self.column = column


SExpr = Union[Token, SList]


def read_sexprs(tokens: list[Token]) -> list[SExpr]:
    """Nest a balanced token stream into lists."""
    stack: list[SList] = [SList()]
    for tok in tokens:
        if tok.is_open:
            stack.append(SList(line=tok.line, column=tok.column))
        elif tok.is_close:
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise PDDLSyntaxError("unbalanced parentheses")
    return list(stack[0])


def position(node: SExpr) -> tuple[int, int]:
    return node.line, node.column
