"""Scalar expression DSL: parsing, canonical printing, jet evaluation.

Expressions are written in chart variables ``x1 .. xn`` with the grammar
(documented in the README):

    expr   := term { ("+" | "-") term }
    term   := factor { ("*" | "/") factor }
    factor := base { "^" integer }
    base   := "-" base | atom
    atom   := number | variable | function "(" expr ")" | "(" expr ")"

Functions: sin, cos, tan, exp, log, sqrt.  The power operator takes a
literal (possibly signed) integer exponent only; fractional powers must be
spelled with exp/log.  Error positions are 1-based byte offsets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .jets import Jet

__all__ = [
    "Var",
    "Num",
    "Unary",
    "Binary",
    "Pow",
    "ExpressionError",
    "parse_expression",
    "to_text",
    "evaluate_jet",
    "UNARY_FUNCTIONS",
]

UNARY_FUNCTIONS = ("neg", "sin", "cos", "tan", "exp", "log", "sqrt")
BINARY_OPS = ("+", "-", "*", "/")


class ExpressionError(ValueError):
    """Parse or validation failure; ``offset`` is a 1-based byte position."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (offset {offset})"
        super().__init__(message)


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, as written in the source text


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


Node = object


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, text, dim):
        self.text = text
        self.dim = dim
        self.pos = 0

    def error(self, message):
        raise ExpressionError(message, offset=self.pos + 1)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            self.error(f"expected '{ch}'")
        self.pos += 1

    def parse(self):
        node = self.parse_expr()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error(f"unexpected character {self.text[self.pos]!r}")
        return node

    def parse_expr(self):
        node = self.parse_term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            node = Binary(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            node = Binary(op, node, self.parse_factor())
        return node

    def parse_factor(self):
        node = self.parse_base()
        while self.peek() == "^":
            self.pos += 1
            node = Pow(node, self.parse_integer())
        return node

    def parse_base(self):
        ch = self.peek()
        if ch == "-":
            self.pos += 1
            return Unary("neg", self.parse_base())
        return self.parse_atom()

    def parse_integer(self):
        self.skip_ws()
        start = self.pos
        if self.peek() in ("+", "-"):
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        chunk = self.text[start:self.pos]
        if not chunk or chunk in "+-":
            self.pos = start
            self.error("expected an integer exponent")
        return int(chunk)

    def parse_atom(self):
        ch = self.peek()
        if ch == "":
            self.error("unexpected end of input")
        if ch == "(":
            self.pos += 1
            node = self.parse_expr()
            self.expect(")")
            return node
        if ch.isdigit() or ch == ".":
            return self.parse_number()
        if ch.isalpha() or ch == "_":
            return self.parse_identifier()
        self.error(f"unexpected character {ch!r}")

    def parse_number(self):
        start = self.pos
        text = self.text
        n = len(text)
        while self.pos < n and text[self.pos].isdigit():
            self.pos += 1
        if self.pos < n and text[self.pos] == ".":
            self.pos += 1
            while self.pos < n and text[self.pos].isdigit():
                self.pos += 1
        if self.pos < n and text[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < n and text[self.pos] in "+-":
                self.pos += 1
            if self.pos < n and text[self.pos].isdigit():
                while self.pos < n and text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark  # not an exponent suffix, leave it
        chunk = text[start:self.pos]
        try:
            return Num(float(chunk))
        except ValueError:
            self.pos = start
            self.error(f"bad numeric literal {chunk!r}")

    def parse_identifier(self):
        start = self.pos
        text = self.text
        while self.pos < len(text) and (text[self.pos].isalnum() or text[self.pos] == "_"):
            self.pos += 1
        name = text[start:self.pos]
        if name[0] == "x" and name[1:].isdigit():
            index = int(name[1:])
            if not 1 <= index <= self.dim:
                self.pos = start
                self.error(f"variable {name} exceeds chart dimension {self.dim}")
            return Var(index)
        if name in UNARY_FUNCTIONS and name != "neg":
            if self.peek() != "(":
                self.error(f"function {name} requires parentheses")
            self.pos += 1
            arg = self.parse_expr()
            self.expect(")")
            return Unary(name, arg)
        self.pos = start
        self.error(f"unknown identifier {name!r}")


def parse_expression(text, dim):
    """Parse ``text`` into an AST over variables x1..x{dim}."""
    if dim < 1:
        raise ValueError("chart dimension must be positive")
    return _Parser(text, dim).parse()


# ---------------------------------------------------------------------------
# canonical printer
# ---------------------------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "pow": 3, "neg": 4, "atom": 5}


def _prec(node):
    if isinstance(node, (Var, Num)):
        return _PRECEDENCE["atom"]
    if isinstance(node, Pow):
        return _PRECEDENCE["pow"]
    if isinstance(node, Unary):
        return _PRECEDENCE["neg"] if node.op == "neg" else _PRECEDENCE["atom"]
    return _PRECEDENCE[node.op]


def _wrap(node, parent_prec, strict=False):
    text = to_text(node)
    p = _prec(node)
    if p < parent_prec or (strict and p == parent_prec):
        return f"({text})"
    return text


def to_text(node):
    """Canonical textual form; ``parse_expression(to_text(t), dim) == t``."""
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"-{_wrap(node.arg, _PRECEDENCE['neg'], strict=True)}"
        return f"{node.op}({to_text(node.arg)})"
    if isinstance(node, Pow):
        base = _wrap(node.base, _PRECEDENCE["pow"], strict=True)
        return f"{base}^{node.exponent}"
    if isinstance(node, Binary):
        left = _wrap(node.left, _prec(node))
        # parenthesize equal-precedence right operands so the left-associa-
        # tive reparse reproduces the tree exactly
        right = _wrap(node.right, _prec(node), strict=True)
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

_JET_FUNCS = {
    "sin": jets.sin,
    "cos": jets.cos,
    "tan": jets.tan,
    "exp": jets.exp,
    "log": jets.log,
    "sqrt": jets.sqrt,
}


def evaluate_jet(ast, point, order=3):
    """Evaluate ``ast`` at ``point`` with derivatives up to ``order``.

    ``point`` has shape (..., n); the returned :class:`Jet` carries the same
    batch shape.  Derivatives are exact to rounding (no finite differences).
    """
    pts = np.asarray(point, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1)
    n = pts.shape[-1]
    return _eval(ast, pts, n, order)


def _eval(node, pts, n, order):
    if isinstance(node, Num):
        return Jet.constant(node.value, n, order, batch_shape=pts.shape[:-1])
    if isinstance(node, Var):
        if node.index > n:
            raise ExpressionError(
                f"variable x{node.index} exceeds point dimension {n}")
        return Jet.variable(pts[..., node.index - 1], node.index - 1, n, order)
    if isinstance(node, Unary):
        arg = _eval(node.arg, pts, n, order)
        if node.op == "neg":
            return -arg
        return _JET_FUNCS[node.op](arg)
    if isinstance(node, Pow):
        return _eval(node.base, pts, n, order) ** node.exponent
    if isinstance(node, Binary):
        left = _eval(node.left, pts, n, order)
        right = _eval(node.right, pts, n, order)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left / right
    raise TypeError(f"not an expression node: {node!r}")
