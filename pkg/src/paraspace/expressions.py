"""Minimal arithmetic over table columns: + - * /, unary minus, parentheses,
column names, and numeric literals.  Anything richer belongs in a compute node.
"""

from __future__ import annotations

import re

from .errors import ExpressionError

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/()]))"
)


def tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ExpressionError(f"bad character at position {pos}: {text[pos:]!r}")
        pos = m.end()
        for kind in ("num", "name", "op"):
            if m.group(kind) is not None:
                tokens.append((kind, m.group(kind)))
                break
    return tokens


class Expression:
    """Parsed arithmetic expression; evaluate against a row's value mapping."""

    def __init__(self, text: str):
        self.text = text
        self._ast = _Parser(tokenize(text)).parse()
        self.columns = frozenset(_collect_names(self._ast))

    def evaluate(self, values) -> float:
        return _eval(self._ast, values)

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := '-' unary | atom
    # atom   := number | name | '(' expr ')'

    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.pos != len(self.tokens):
            raise ExpressionError(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        return self.atom()

    def atom(self):
        kind, value = self.take()
        if kind == "num":
            return ("num", float(value))
        if kind == "name":
            return ("col", value)
        if (kind, value) == ("op", "("):
            node = self.expr()
            if self.take() != ("op", ")"):
                raise ExpressionError("missing closing parenthesis")
            return node
        raise ExpressionError(f"unexpected token {value!r}")


def _collect_names(node):
    if node[0] == "col":
        yield node[1]
    elif node[0] == "neg":
        yield from _collect_names(node[1])
    elif node[0] in "+-*/":
        yield from _collect_names(node[1])
        yield from _collect_names(node[2])


def _eval(node, values) -> float:
    op = node[0]
    if op == "num":
        return node[1]
    if op == "col":
        try:
            v = values[node[1]]
        except KeyError:
            raise ExpressionError(f"missing value for column {node[1]!r}") from None
        if not isinstance(v, (int, float)):
            raise ExpressionError(f"column {node[1]!r} is not scalar")
        return float(v)
    if op == "neg":
        return -_eval(node[1], values)
    a = _eval(node[1], values)
    b = _eval(node[2], values)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise ExpressionError("division by zero")
        return a / b
    raise ExpressionError(f"bad node {op!r}")
