"""Tiny arithmetic expression language for coefficient and data functions.

Grammar (precedence climbing):

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # right associative
    atom    := NUMBER | "i" | "pi" | "x" | "t" | NAME "(" expr ")" | "(" expr ")"

Functions: sin, cos, exp, tanh, sqrt, abs, re, im.  Evaluation is pure and
vectorizes over numpy arrays; printing produces a string that parses back to
an identical tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ConfigError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "sqrt": lambda v: np.sqrt(np.asarray(v, dtype=complex)),
    "abs": np.abs,
    "re": np.real,
    "im": np.imag,
}


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Const:
    name: str  # "i" or "pi"

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "t"

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"

    def __str__(self):
        return f"{self.fn}({self.arg})"


Node = Union[Num, Const, Var, Unary, Binary, Call]


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        self._lex()
        self.idx = 0

    def _lex(self):
        s = self.text
        i = 0
        while i < len(s):
            ch = s[i]
            if ch.isspace():
                i += 1
                continue
            if ch in "+-*/^()":
                self.tokens.append(("op", ch, i))
                i += 1
                continue
            if ch.isdigit() or ch == ".":
                j = i
                seen_e = False
                while j < len(s) and (s[j].isdigit() or s[j] == "."
                                      or (s[j] in "eE" and not seen_e)
                                      or (s[j] in "+-" and j > i and s[j - 1] in "eE")):
                    if s[j] in "eE":
                        seen_e = True
                    j += 1
                self.tokens.append(("num", s[i:j], i))
                i = j
                continue
            if ch.isalpha() or ch == "_":
                j = i
                while j < len(s) and (s[j].isalnum() or s[j] == "_"):
                    j += 1
                self.tokens.append(("name", s[i:j], i))
                i = j
                continue
            raise ConfigError(self._caret(i, f"unexpected character {ch!r}"))

    def _caret(self, pos: int, msg: str) -> str:
        return f"{msg}\n  {self.text}\n  {' ' * pos}^"

    def peek(self):
        return self.tokens[self.idx] if self.idx < len(self.tokens) else ("end", "", len(self.text))

    def next(self):
        tok = self.peek()
        self.idx += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.next()
        if kind != "op" or val != op:
            raise ConfigError(self._caret(pos, f"expected {op!r}"))

    def error(self, msg: str):
        _, _, pos = self.peek()
        raise ConfigError(self._caret(pos, msg))


def parse_expression(text: str) -> Node:
    toks = _Tokens(text)
    node = _parse_expr(toks)
    if toks.peek()[0] != "end":
        toks.error("trailing input")
    return node


def _parse_expr(toks) -> Node:
    node = _parse_term(toks)
    while True:
        kind, val, _ = toks.peek()
        if kind == "op" and val in "+-":
            toks.next()
            rhs = _parse_term(toks)
            node = Binary(val, node, rhs)
        else:
            return node


def _parse_term(toks) -> Node:
    node = _parse_unary(toks)
    while True:
        kind, val, _ = toks.peek()
        if kind == "op" and val in "*/":
            toks.next()
            rhs = _parse_unary(toks)
            node = Binary(val, node, rhs)
        else:
            return node


def _parse_unary(toks) -> Node:
    kind, val, _ = toks.peek()
    if kind == "op" and val == "-":
        toks.next()
        return Unary("-", _parse_unary(toks))
    return _parse_power(toks)


def _parse_power(toks) -> Node:
    base = _parse_atom(toks)
    kind, val, _ = toks.peek()
    if kind == "op" and val == "^":
        toks.next()
        return Binary("^", base, _parse_unary(toks))
    return base


def _parse_atom(toks) -> Node:
    kind, val, pos = toks.next()
    if kind == "num":
        try:
            return Num(float(val))
        except ValueError:
            raise ConfigError(toks._caret(pos, f"bad number {val!r}")) from None
    if kind == "name":
        if val == "i":
            return Const("i")
        if val == "pi":
            return Const("pi")
        if val in ("x", "t"):
            return Var(val)
        if val in FUNCTIONS:
            toks.expect_op("(")
            arg = _parse_expr(toks)
            toks.expect_op(")")
            return Call(val, arg)
        raise ConfigError(toks._caret(pos, f"unknown name {val!r}"))
    if kind == "op" and val == "(":
        node = _parse_expr(toks)
        toks.expect_op(")")
        return node
    raise ConfigError(toks._caret(pos, "expected a value"))


def evaluate(node: Node, x=None, t=None):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return 1j if node.name == "i" else np.pi
    if isinstance(node, Var):
        val = x if node.name == "x" else t
        if val is None:
            raise ConfigError(f"expression uses {node.name!r} but no value was supplied")
        return np.asarray(val)
    if isinstance(node, Unary):
        return -evaluate(node.arg, x, t)
    if isinstance(node, Binary):
        a = evaluate(node.left, x, t)
        b = evaluate(node.right, x, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return np.asarray(a, dtype=complex) ** b
    if isinstance(node, Call):
        return FUNCTIONS[node.fn](evaluate(node.arg, x, t))
    raise TypeError(f"unknown node {node!r}")


def free_variables(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Unary):
        return free_variables(node.arg)
    if isinstance(node, Binary):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        return free_variables(node.arg)
    return set()


class Expression:
    """Parsed expression with pure vectorized evaluation."""

    def __init__(self, text: str):
        self.text = text
        self.tree = parse_expression(text)
        self.variables = free_variables(self.tree)

    def __call__(self, x=None, t=None):
        out = evaluate(self.tree, x=x, t=t)
        shape = np.broadcast(np.asarray(x) if x is not None else 0.0,
                             np.asarray(t) if t is not None else 0.0).shape
        return np.broadcast_to(np.asarray(out, dtype=complex), shape).copy() \
            if shape else complex(out)

    def __str__(self):
        return str(self.tree)

    def constant_value(self) -> Optional[complex]:
        if self.variables:
            return None
        return complex(evaluate(self.tree))
