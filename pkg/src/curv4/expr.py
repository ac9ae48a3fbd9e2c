"""A small arithmetic language for metric components over chart coordinates.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;          (* right associative *)
    atom    = number | "pi" | variable
            | func , "(" , expr , ")"
            | "(" , expr , ")" ;
    func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "sinh" | "cosh" ;
    variable = "x1" | "x2" | "x3" | "x4" | <chart coordinate name> ;

Precedence runs ``^`` > unary minus > ``* /`` > ``+ -``; so ``-x^2`` is
``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  The parser is a Pratt parser over a
token stream; evaluation works on scalars or on numpy arrays whose last axis
holds the four coordinates.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ExprDomainError",
    "Num",
    "Const",
    "Var",
    "Neg",
    "Call",
    "Binary",
    "parse",
    "evaluate",
    "pretty",
    "free_variables",
    "FUNCTIONS",
]


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ExprDomainError(ArithmeticError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (node at offset {offset})")


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Const:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    index: int
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=0, compare=False)


Expr = Union[Num, Const, Var, Neg, Call, Binary]

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sinh": np.sinh,
    "cosh": np.cosh,
}
CONSTANTS = {"pi": math.pi}
DEFAULT_VARIABLES = ("x1", "x2", "x3", "x4")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

# binding powers
_INFIX = {"+": (10, "left"), "-": (10, "left"), "*": (20, "left"), "/": (20, "left"), "^": (40, "right")}
_PREFIX_BP = 30


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    for i, ch in enumerate(text):
        if not ch.isascii():
            raise ExprSyntaxError(f"unexpected character {ch!r}", len(text[:i].encode()), text)
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.vars = {name: k for k, name in enumerate(DEFAULT_VARIABLES)}
        for k, name in enumerate(variables):
            self.vars[name] = k

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.peek()
        if tok.text != text or tok.kind == "end":
            what = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {what}", tok.pos, self.text)
        return self.advance()

    def parse_expr(self, rbp: int = 0) -> Expr:
        left = self.nud(self.advance())
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _INFIX:
                break
            bp, assoc = _INFIX[tok.text]
            if bp <= rbp:
                break
            self.advance()
            right = self.parse_expr(bp - 1 if assoc == "right" else bp)
            left = Binary(tok.text, left, right, tok.pos)
        return left

    def nud(self, tok: _Tok) -> Expr:
        if tok.kind == "num":
            return Num(float(tok.text), tok.pos)
        if tok.kind == "name":
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return Call(tok.text, arg, tok.pos)
            if tok.text in CONSTANTS:
                return Const(tok.text, tok.pos)
            if tok.text in self.vars:
                return Var(tok.text, self.vars[tok.text], tok.pos)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.pos, self.text)
        if tok.kind == "op" and tok.text == "-":
            return Neg(self.parse_expr(_PREFIX_BP), tok.pos)
        if tok.kind == "op" and tok.text == "(":
            inner = self.parse_expr()
            self.expect(")")
            return inner
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"expected an operand, found {what}", tok.pos, self.text)


def parse(text: str, variables: Sequence[str] = ()) -> Expr:
    """Parse ``text``; ``variables`` names coordinates 1..4 in addition to x1..x4."""
    p = _Parser(text, variables)
    if p.peek().kind == "end":
        raise ExprSyntaxError("empty expression", 0, text)
    ast = p.parse_expr()
    tok = p.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.pos, text)
    return ast


def _check_finite(val, node_pos: int):
    if not np.all(np.isfinite(val)):
        raise ExprDomainError("non-finite result", node_pos)
    return val


def _eval(node: Expr, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        return x[..., node.index]
    if isinstance(node, Neg):
        return -_eval(node.arg, x)
    if isinstance(node, Call):
        a = _eval(node.arg, x)
        if node.func == "log" and np.any(np.asarray(a) <= 0):
            raise ExprDomainError("log of non-positive value", node.pos)
        if node.func == "sqrt" and np.any(np.asarray(a) < 0):
            raise ExprDomainError("sqrt of negative value", node.pos)
        with np.errstate(all="ignore"):
            return _check_finite(FUNCTIONS[node.func](a), node.pos)
    if isinstance(node, Binary):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if np.any(np.asarray(b) == 0):
                raise ExprDomainError("division by zero", node.pos)
            return a / b
        # power
        a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if np.any((a_arr < 0) & (b_arr != np.round(b_arr))):
            raise ExprDomainError("negative base with non-integer exponent", node.pos)
        if np.any((a_arr == 0) & (b_arr < 0)):
            raise ExprDomainError("division by zero", node.pos)
        with np.errstate(all="ignore"):
            return _check_finite(np.power(a_arr, b_arr), node.pos)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(ast: Expr, point) -> float | np.ndarray:
    """Evaluate at a 4-vector, or over an array whose last axis has length 4."""
    x = np.asarray(point, dtype=float)
    if x.shape[-1:] != (4,):
        raise ValueError(f"point must have trailing dimension 4, got shape {x.shape}")
    val = _eval(ast, x)
    if x.ndim == 1:
        return float(val)
    return np.broadcast_to(np.asarray(val, dtype=float), x.shape[:-1]).copy()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Expr) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def pretty(node: Expr) -> str:
    """Canonical text with the minimum parentheses the grammar needs."""
    if isinstance(node, Num):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 else text
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    if isinstance(node, Neg):
        inner = pretty(node.arg)
        return f"-({inner})" if _prec(node.arg) < 3 else f"-{inner}"
    p = _PREC[node.op]
    left, right = pretty(node.left), pretty(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < p:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left}{node.op}{right}"


def free_variables(node: Expr) -> frozenset[int]:
    """Coordinate indices (0-based) the expression depends on."""
    if isinstance(node, Var):
        return frozenset({node.index})
    if isinstance(node, (Neg, Call)):
        return free_variables(node.arg)
    if isinstance(node, Binary):
        return free_variables(node.left) | free_variables(node.right)
    return frozenset()
