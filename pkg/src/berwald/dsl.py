"""A small arithmetic language for Finsler functions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | factor
    factor := base ('^' ['-'] number)?
    base   := number | ident | '(' expr ')' | func '(' expr ')'
    func   := 'sqrt' | 'exp' | 'log' | 'sin' | 'cos'

Identifiers are the coordinates ``x1 x2 y1 y2`` plus declared parameter
names.  Trees are frozen dataclasses, so structural equality is ``==``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

COORDINATES = ("x1", "x2", "y1", "y2")
FUNCTION_NAMES = ("sqrt", "exp", "log", "sin", "cos")


class DSLSyntaxError(ValueError):
    """Parse failure with a 1-based line and column."""

    def __init__(self, message, line=1, column=1):
        self.line = line
        self.column = column
        self.detail = message
        super().__init__(f"{message} (line {line}, column {column})")


class UnknownIdentifierError(DSLSyntaxError):
    pass


class ArityError(DSLSyntaxError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Param, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text, line0=1, col0=1):
    toks = []
    pos, line, col = 0, line0, col0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, col))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    toks.append(_Tok("end", "", line, col))
    return toks


class _Parser:
    def __init__(self, text, params, line0, col0):
        self.toks = _tokenize(text, line0, col0)
        self.i = 0
        self.params = frozenset(params)

    @property
    def tok(self):
        return self.toks[self.i]

    def _fail(self, msg, tok=None, cls=DSLSyntaxError):
        tok = tok or self.tok
        where = "end of input" if tok.kind == "end" else repr(tok.text)
        raise cls(f"{msg} at {where}", tok.line, tok.col)

    def _eat(self, text):
        if self.tok.text != text or self.tok.kind == "end":
            self._fail(f"expected {text!r}")
        self.i += 1

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self._fail("unexpected token")
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.i += 1
            return Neg(self.unary())
        return self.factor()

    def factor(self):
        node = self.base()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            sign = 1.0
            if self.tok.kind == "op" and self.tok.text == "-":
                sign = -1.0
                self.i += 1
            if self.tok.kind != "number":
                self._fail("exponent must be a number")
            node = Pow(node, sign * float(self.tok.text))
            self.i += 1
        return node

    def base(self):
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.expr()
            self._eat(")")
            return node
        if tok.kind == "ident":
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "(":
                if tok.text not in FUNCTION_NAMES:
                    self._fail("unknown function", tok, UnknownIdentifierError)
                self.i += 1
                args = [self.expr()]
                while self.tok.kind == "op" and self.tok.text == ",":
                    self.i += 1
                    args.append(self.expr())
                self._eat(")")
                if len(args) != 1:
                    self._fail(f"{tok.text} takes 1 argument, got {len(args)}", tok, ArityError)
                return Call(tok.text, args[0])
            if tok.text in COORDINATES:
                return Var(tok.text)
            if tok.text in self.params:
                return Param(tok.text)
            if tok.text in FUNCTION_NAMES:
                self._fail(f"function {tok.text} needs an argument", tok, ArityError)
            self._fail("unknown identifier", tok, UnknownIdentifierError)
        self._fail("unexpected token")


def parse_expression(text: str, params=(), line: int = 1, column: int = 1) -> Node:
    """Parse ``text`` into a syntax tree; ``params`` names the allowed parameters."""
    return _Parser(text, params, line, column).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_text(node: Node) -> str:
    """Print a tree so that parsing the output yields an identical tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Neg):
        return f"-({to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Pow):
        e = float(node.exponent)
        e_text = repr(abs(e))
        return f"({to_text(node.base)})^{'-' if e < 0 else ''}{e_text}"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not a syntax tree node: {node!r}")


def identifiers(node: Node) -> set[str]:
    if isinstance(node, (Var, Param)):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg,)):
        return identifiers(node.operand)
    if isinstance(node, BinOp):
        return identifiers(node.left) | identifiers(node.right)
    if isinstance(node, Pow):
        return identifiers(node.base)
    if isinstance(node, Call):
        return identifiers(node.arg)
    raise TypeError(f"not a syntax tree node: {node!r}")


def substitute(node: Node, mapping: Mapping[str, Node]) -> Node:
    """Replace coordinate variables by subtrees (used for chart changes)."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, (Num, Param)):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, mapping), node.exponent)
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, mapping))
    raise TypeError(f"not a syntax tree node: {node!r}")


_FLOAT_LIB = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos}


def evaluate(node: Node, env: Mapping[str, object], functions: Mapping[str, Callable] | None = None):
    """Evaluate a tree over any number-like type.

    ``env`` maps coordinate and parameter names to values; ``functions``
    supplies the elementary functions for that type (math for floats by
    default, the jet functions for jets, mpmath for high precision).
    Integer exponents use repeated multiplication so negative bases work.
    """
    lib = _FLOAT_LIB if functions is None else functions

    def ev(n):
        if isinstance(n, Num):
            return n.value
        if isinstance(n, (Var, Param)):
            return env[n.name]
        if isinstance(n, Neg):
            return -ev(n.operand)
        if isinstance(n, BinOp):
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            return a / b
        if isinstance(n, Pow):
            e = n.exponent
            base = ev(n.base)
            if float(e).is_integer():
                return _int_power(base, int(e))
            return base**e
        if isinstance(n, Call):
            return lib[n.func](ev(n.arg))
        raise TypeError(f"not a syntax tree node: {n!r}")

    return ev(node)


def _int_power(base, n):
    if n < 0:
        return 1 / _int_power(base, -n)
    if n == 0:
        return base * 0 + 1
    out = None
    while n:
        if n & 1:
            out = base if out is None else out * base
        n >>= 1
        if n:
            base = base * base
    return out
