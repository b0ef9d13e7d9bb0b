"""Boolean task expressions: ``|`` (or), ``&`` (and), ``~`` (not), parentheses.

Grammar::

    expr   := term ('|' term)*
    term   := factor ('&' factor)*
    factor := '~' factor | '(' expr ')' | ident
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, TypeVar

T = TypeVar("T")

_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_\-]*)|(.))")


class ExpressionError(ValueError):
    pass


@dataclass(frozen=True)
class Name:
    ident: str

    def __str__(self):
        return self.ident


@dataclass(frozen=True)
class Not:
    arg: "Expr"

    def __str__(self):
        return f"~{self.arg}"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} & {self.right})"


Expr = Name | Not | Or | And


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        ident, sym = m.groups()
        if ident:
            tokens.append(ident)
        elif sym in "|&~()":
            tokens.append(sym)
        else:
            raise ExpressionError(f"unexpected character {sym!r} at offset {m.start(2)} in {text!r}")
        pos = m.end()
    return tokens


def parse(text: str) -> Expr:
    tokens = _tokenize(text)
    if not tokens:
        raise ExpressionError("empty expression")
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ExpressionError(f"expected {expected or 'operand'} at token {pos} in {text!r}")
        pos += 1
        return tok

    def expr():
        node = term()
        while peek() == "|":
            take("|")
            node = Or(node, term())
        return node

    def term():
        node = factor()
        while peek() == "&":
            take("&")
            node = And(node, factor())
        return node

    def factor():
        tok = peek()
        if tok == "~":
            take("~")
            return Not(factor())
        if tok == "(":
            take("(")
            node = expr()
            take(")")
            return node
        if tok is None or tok in "|&)":
            raise ExpressionError(f"expected operand at token {pos} in {text!r}")
        return Name(take())

    node = expr()
    if pos != len(tokens):
        raise ExpressionError(f"trailing input {tokens[pos]!r} in {text!r}")
    return node


def names(node: Expr) -> set[str]:
    if isinstance(node, Name):
        return {node.ident}
    if isinstance(node, Not):
        return names(node.arg)
    return names(node.left) | names(node.right)


def evaluate(node: Expr | str, leaf: Callable[[str], T], or_: Callable[[T, T], T],
             and_: Callable[[T, T], T], not_: Callable[[T], T]) -> T:
    """Fold an expression tree with the given operator implementations."""
    if isinstance(node, str):
        node = parse(node)

    def go(n):
        if isinstance(n, Name):
            return leaf(n.ident)
        if isinstance(n, Not):
            return not_(go(n.arg))
        if isinstance(n, Or):
            return or_(go(n.left), go(n.right))
        return and_(go(n.left), go(n.right))

    return go(node)
