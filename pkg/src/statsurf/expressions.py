"""Expression trees for model bodies.

Grammar: decimal literals, variables ``x1..xn``, binary ``+ - * / ^``,
unary minus, parentheses, and the functions ``exp``, ``ln``, ``sin``,
``cos``.  ``^`` is right associative and binds tighter than unary minus,
so ``-x1^2`` means ``-(x1^2)``.

Trees evaluate on plain points (shape ``(n,)``) or on batches (shape
``(n, B)``) and differentiate symbolically; derivative construction folds
trivial zeros and ones so repeated differentiation stays small.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class ExpressionSyntaxError(ValueError):
    """Syntax error with source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Node:
    def value(self, x):
        raise NotImplementedError

    def deriv(self, i: int) -> "Node":
        raise NotImplementedError

    def max_var(self) -> int:
        return -1

    # rendering precedence; children with lower values get parenthesized
    PREC = 100

    def text(self) -> str:
        raise NotImplementedError

    def _child(self, node: "Node", min_prec: int) -> str:
        s = node.text()
        return f"({s})" if node.PREC < min_prec else s

    def __str__(self) -> str:
        return self.text()


@dataclass(frozen=True)
class Num(Node):
    v: float

    def value(self, x):
        return self.v

    def deriv(self, i):
        return _ZERO

    def text(self):
        return repr(self.v)


@dataclass(frozen=True)
class Var(Node):
    i: int  # zero based

    def value(self, x):
        return x[self.i]

    def deriv(self, i):
        return _ONE if i == self.i else _ZERO

    def max_var(self):
        return self.i

    def text(self):
        return f"x{self.i + 1}"


@dataclass(frozen=True)
class Neg(Node):
    a: Node
    PREC = 25

    def value(self, x):
        return -self.a.value(x)

    def deriv(self, i):
        return _neg(self.a.deriv(i))

    def max_var(self):
        return self.a.max_var()

    def text(self):
        return f"-{self._child(self.a, 26)}"


@dataclass(frozen=True)
class Add(Node):
    a: Node
    b: Node
    PREC = 10

    def value(self, x):
        return self.a.value(x) + self.b.value(x)

    def deriv(self, i):
        return _add(self.a.deriv(i), self.b.deriv(i))

    def max_var(self):
        return max(self.a.max_var(), self.b.max_var())

    def text(self):
        return f"{self._child(self.a, 10)} + {self._child(self.b, 11)}"


@dataclass(frozen=True)
class Sub(Node):
    a: Node
    b: Node
    PREC = 10

    def value(self, x):
        return self.a.value(x) - self.b.value(x)

    def deriv(self, i):
        return _sub(self.a.deriv(i), self.b.deriv(i))

    def max_var(self):
        return max(self.a.max_var(), self.b.max_var())

    def text(self):
        return f"{self._child(self.a, 10)} - {self._child(self.b, 11)}"


@dataclass(frozen=True)
class Mul(Node):
    a: Node
    b: Node
    PREC = 20

    def value(self, x):
        return self.a.value(x) * self.b.value(x)

    def deriv(self, i):
        return _add(_mul(self.a.deriv(i), self.b), _mul(self.a, self.b.deriv(i)))

    def max_var(self):
        return max(self.a.max_var(), self.b.max_var())

    def text(self):
        return f"{self._child(self.a, 20)} * {self._child(self.b, 21)}"


@dataclass(frozen=True)
class Div(Node):
    a: Node
    b: Node
    PREC = 20

    def value(self, x):
        return self.a.value(x) / self.b.value(x)

    def deriv(self, i):
        da, db = self.a.deriv(i), self.b.deriv(i)
        num = _sub(_mul(da, self.b), _mul(self.a, db))
        return _div(num, Mul(self.b, self.b))

    def max_var(self):
        return max(self.a.max_var(), self.b.max_var())

    def text(self):
        return f"{self._child(self.a, 20)} / {self._child(self.b, 21)}"


@dataclass(frozen=True)
class Pow(Node):
    a: Node
    b: Node
    PREC = 30

    def value(self, x):
        return np.power(self.a.value(x), self.b.value(x))

    def deriv(self, i):
        da, db = self.a.deriv(i), self.b.deriv(i)
        if isinstance(self.b, Num):
            # c * a^(c-1) * a'; avoids ln(a) so negative bases with whole
            # exponents stay differentiable
            return _mul(_mul(Num(self.b.v), _pow(self.a, Num(self.b.v - 1.0))), da)
        term = _add(_mul(db, Call("ln", self.a)), _div(_mul(self.b, da), self.a))
        return _mul(self, term)

    def max_var(self):
        return max(self.a.max_var(), self.b.max_var())

    def text(self):
        return f"{self._child(self.a, 31)} ^ {self._child(self.b, 30)}"


_FUNCS = {"exp": np.exp, "ln": np.log, "sin": np.sin, "cos": np.cos}


@dataclass(frozen=True)
class Call(Node):
    fn: str
    a: Node

    def value(self, x):
        return _FUNCS[self.fn](self.a.value(x))

    def deriv(self, i):
        da = self.a.deriv(i)
        if self.fn == "exp":
            return _mul(self, da)
        if self.fn == "ln":
            return _div(da, self.a)
        if self.fn == "sin":
            return _mul(Call("cos", self.a), da)
        return _neg(_mul(Call("sin", self.a), da))

    def max_var(self):
        return self.a.max_var()

    def text(self):
        return f"{self.fn}({self.a.text()})"


_ZERO = Num(0.0)
_ONE = Num(1.0)


def _is_num(n: Node, v: float) -> bool:
    return isinstance(n, Num) and n.v == v


def _add(a: Node, b: Node) -> Node:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.v + b.v)
    return Add(a, b)


def _sub(a: Node, b: Node) -> Node:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return _neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.v - b.v)
    return Sub(a, b)


def _neg(a: Node) -> Node:
    if isinstance(a, Num):
        return Num(-a.v)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def _mul(a: Node, b: Node) -> Node:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return _ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.v * b.v)
    return Mul(a, b)


def _div(a: Node, b: Node) -> Node:
    if _is_num(a, 0.0):
        return _ZERO
    if _is_num(b, 1.0):
        return a
    return Div(a, b)


def _pow(a: Node, b: Node) -> Node:
    if _is_num(b, 0.0):
        return _ONE
    if _is_num(b, 1.0):
        return a
    return Pow(a, b)


_TOKEN_NUM = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_TOKEN_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_VAR_NAME = re.compile(r"x([0-9]+)$")


@dataclass(frozen=True)
class _Token:
    kind: str  # num ident op lparen rparen end
    value: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch == "\n":
            line += 1
            col = 1
            pos += 1
            continue
        if ch in " \t\r":
            pos += 1
            col += 1
            continue
        m = _TOKEN_NUM.match(text, pos)
        if m:
            tokens.append(_Token("num", m.group(), line, col))
            col += m.end() - pos
            pos = m.end()
            continue
        m = _TOKEN_IDENT.match(text, pos)
        if m:
            tokens.append(_Token("ident", m.group(), line, col))
            col += m.end() - pos
            pos = m.end()
            continue
        if ch in "+-*/^":
            tokens.append(_Token("op", ch, line, col))
        elif ch == "(":
            tokens.append(_Token("lparen", ch, line, col))
        elif ch == ")":
            tokens.append(_Token("rparen", ch, line, col))
        else:
            raise ExpressionSyntaxError(f"unexpected character {ch!r}", line, col)
        pos += 1
        col += 1
    tokens.append(_Token("end", "", line, col))
    return tokens


_BINARY_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_MINUS_BP = 25


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.advance()
        if tok.kind != kind:
            raise ExpressionSyntaxError(
                f"expected {what}, found {tok.value or 'end of input'!r}",
                tok.line,
                tok.column,
            )
        return tok

    def expression(self, rbp: int) -> Node:
        left = self.prefix(self.advance())
        while True:
            tok = self.peek()
            if tok.kind != "op":
                break
            lbp = _BINARY_LBP[tok.value]
            if lbp <= rbp:
                break
            self.advance()
            left = self.infix(tok, left)
        return left

    def prefix(self, tok: _Token) -> Node:
        if tok.kind == "num":
            return Num(float(tok.value))
        if tok.kind == "ident":
            if tok.value in _FUNCS:
                self.expect("lparen", "'(' after function name")
                arg = self.expression(0)
                self.expect("rparen", "')'")
                return Call(tok.value, arg)
            m = _VAR_NAME.match(tok.value)
            if m and int(m.group(1)) >= 1:
                return Var(int(m.group(1)) - 1)
            raise ExpressionSyntaxError(
                f"unknown identifier {tok.value!r}", tok.line, tok.column
            )
        if tok.kind == "op" and tok.value == "-":
            return Neg(self.expression(_UNARY_MINUS_BP))
        if tok.kind == "lparen":
            inner = self.expression(0)
            self.expect("rparen", "')'")
            return inner
        raise ExpressionSyntaxError(
            f"unexpected token {tok.value or 'end of input'!r}", tok.line, tok.column
        )

    def infix(self, tok: _Token, left: Node) -> Node:
        # '^' is right associative
        rbp = _BINARY_LBP[tok.value] - (1 if tok.value == "^" else 0)
        right = self.expression(rbp)
        return {"+": Add, "-": Sub, "*": Mul, "/": Div, "^": Pow}[tok.value](left, right)


def parse_expression(text: str) -> Node:
    """Parse one expression; raises ExpressionSyntaxError with line/column."""
    parser = _Parser(text)
    node = parser.expression(0)
    tok = parser.peek()
    if tok.kind != "end":
        raise ExpressionSyntaxError(
            f"unexpected trailing input {tok.value!r}", tok.line, tok.column
        )
    return node


def gradient(node: Node, n: int) -> tuple[Node, ...]:
    return tuple(node.deriv(i) for i in range(n))


def hessian(node: Node, n: int) -> tuple[tuple[Node, ...], ...]:
    grads = gradient(node, n)
    return tuple(tuple(g.deriv(k) for k in range(n)) for g in grads)
