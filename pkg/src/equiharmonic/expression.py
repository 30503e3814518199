"""Scalar expressions in one variable, with exact first derivatives.

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := number | 'pi' | var | func '(' expr ')' | '(' expr ')'

Functions: sin cos tan exp log sqrt abs atan.  A nonlinearity is an
expression in ``u``; a forcing term is an expression in ``x``.

Evaluation never propagates NaN/Inf: domain violations raise
:class:`DomainError` carrying the source offset of the offending node.
Derivatives use forward-mode dual numbers (value, derivative) pushed through
the tree, with ``abs'(0) = 0``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "ExpressionError",
    "ParseError",
    "UnknownIdentifierError",
    "WrongVariableError",
    "DomainError",
    "Expression",
    "parse",
    "to_source",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "atan")
VARIABLES = ("u", "x")


class ExpressionError(ValueError):
    """Base class for expression errors."""


class ParseError(ExpressionError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at offset {position}")


class UnknownIdentifierError(ParseError):
    pass


class WrongVariableError(ParseError):
    pass


class DomainError(ExpressionError, ArithmeticError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} (node at offset {position})")


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = 0


@dataclass(frozen=True)
class Pi:
    pos: int = 0


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = 0


@dataclass(frozen=True)
class Neg:
    arg: "Node"
    pos: int = 0


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    pos: int = 0


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    pos: int = 0


Node = Union[Num, Pi, Var, Neg, Call, BinOp]


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None:
            start = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ParseError(f"unexpected character {source[start]!r}", start, source)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str, variable: str):
        self.source = source
        self.variable = variable
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok):
        return ParseError(message, tok[2], self.source)

    def expect(self, text):
        tok = self.take()
        if tok[1] != text or tok[0] == "end":
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {text!r}, found {what}", tok)
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}", tok)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            tok = self.take()
            node = BinOp(tok[1], node, self.term(), tok[2])
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            tok = self.take()
            node = BinOp(tok[1], node, self.unary(), tok[2])
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary(), tok[2])
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            return BinOp("^", base, self.unary(), tok[2])
        return base

    def atom(self):
        tok = self.take()
        kind, text, pos = tok
        if kind == "num":
            return Num(float(text), pos)
        if kind == "name":
            if text == "pi":
                return Pi(pos)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg, pos)
            if text in VARIABLES:
                if text != self.variable:
                    raise WrongVariableError(
                        f"variable {text!r} not allowed here (expression must be in {self.variable!r})",
                        pos,
                        self.source,
                    )
                return Var(text, pos)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos, self.source)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise self.error(f"unexpected {what}", tok)


def to_source(node: Node) -> str:
    """Fully parenthesized source text; parses back to an equivalent tree."""
    if isinstance(node, Num):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 else text
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


# -- checked evaluation (floats or arrays, optional dual part) ---------------


def _require(ok, message, node):
    if not np.all(ok):
        raise DomainError(message, node.pos)


def _finite(val, node, what="value"):
    if not np.all(np.isfinite(val)):
        raise DomainError(f"non-finite {what}", node.pos)
    return val


def _eval_node(node: Node, x, dual: bool):
    """Return ``(value, derivative)``; derivative is None unless ``dual``."""
    if isinstance(node, Num):
        return node.value, (0.0 if dual else None)
    if isinstance(node, Pi):
        return math.pi, (0.0 if dual else None)
    if isinstance(node, Var):
        return x, (1.0 if dual else None)
    if isinstance(node, Neg):
        a, da = _eval_node(node.arg, x, dual)
        return -a, (-da if dual else None)
    if isinstance(node, Call):
        return _eval_call(node, *_eval_node(node.arg, x, dual), dual)
    a, da = _eval_node(node.left, x, dual)
    b, db = _eval_node(node.right, x, dual)
    with np.errstate(all="ignore"):
        if node.op == "+":
            return _finite(a + b, node), (da + db if dual else None)
        if node.op == "-":
            return _finite(a - b, node), (da - db if dual else None)
        if node.op == "*":
            return _finite(a * b, node), (da * b + a * db if dual else None)
        if node.op == "/":
            _require(b != 0, "division by zero", node)
            val = _finite(a / b, node)
            return val, (_finite((da - val * db) / b, node, "derivative") if dual else None)
        return _eval_pow(node, a, da, b, db, dual)


def _eval_pow(node, a, da, b, db, dual):
    integral = np.equal(np.floor(b), b)
    _require((a >= 0) | integral, "negative base with non-integer exponent", node)
    _require((a != 0) | (b >= 0), "zero to a negative power", node)
    with np.errstate(all="ignore"):
        val = _finite(np.power(a, b), node)
        if not dual:
            return val, None
        # d(a^b) = b a^(b-1) a' + a^b ln(a) b'
        der = np.where(np.equal(da, 0), 0.0, b * np.power(a, b - 1.0) * da)
        if np.any(np.not_equal(db, 0)):
            _require((a > 0) | np.equal(db, 0), "variable exponent needs a positive base", node)
            safe = np.where(a > 0, a, 1.0)
            der = der + np.where(np.equal(db, 0), 0.0, val * np.log(safe) * db)
        return val, _finite(der, node, "derivative")


def _eval_call(node, a, da, dual):
    f = node.func
    with np.errstate(all="ignore"):
        if f == "sin":
            return _finite(np.sin(a), node), (np.cos(a) * da if dual else None)
        if f == "cos":
            return _finite(np.cos(a), node), (-np.sin(a) * da if dual else None)
        if f == "tan":
            c = np.cos(a)
            _require(c != 0, "tan at a pole", node)
            return _finite(np.tan(a), node), (_finite(da / (c * c), node, "derivative") if dual else None)
        if f == "exp":
            val = _finite(np.exp(a), node)
            return val, (_finite(val * da, node, "derivative") if dual else None)
        if f == "log":
            _require(a > 0, "log of a non-positive number", node)
            return np.log(a), (da / a if dual else None)
        if f == "sqrt":
            _require(a >= 0, "sqrt of a negative number", node)
            val = np.sqrt(a)
            if not dual:
                return val, None
            _require((a > 0) | np.equal(da, 0), "sqrt not differentiable at 0", node)
            return val, np.where(np.equal(da, 0), 0.0, da / (2.0 * np.where(a > 0, val, 1.0)))
        if f == "abs":
            return np.abs(a), (np.sign(a) * da if dual else None)
        if f == "atan":
            return np.arctan(a), (da / (1.0 + a * a) if dual else None)
    raise AssertionError(f"unhandled function {f}")


# -- fast scalar path --------------------------------------------------------


def _compile(node: Node) -> Callable[[float], float]:
    """Closure-compiled float evaluator; raises Python math errors unchecked."""
    if isinstance(node, Num):
        v = node.value
        return lambda x: v
    if isinstance(node, Pi):
        return lambda x: math.pi
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Neg):
        f = _compile(node.arg)
        return lambda x: -f(x)
    if isinstance(node, Call):
        f = _compile(node.arg)
        g = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp, "log": math.log,
             "sqrt": math.sqrt, "abs": abs, "atan": math.atan}[node.func]
        return lambda x: g(f(x))
    f, g = _compile(node.left), _compile(node.right)
    if node.op == "+":
        return lambda x: f(x) + g(x)
    if node.op == "-":
        return lambda x: f(x) - g(x)
    if node.op == "*":
        return lambda x: f(x) * g(x)
    if node.op == "/":
        return lambda x: f(x) / g(x)
    return lambda x: math.pow(f(x), g(x))


class Expression:
    """A parsed expression in a single variable (``u`` or ``x``)."""

    def __init__(self, source: str, variable: str, root: Node):
        self.source = source
        self.variable = variable
        self.root = root
        self._fast = _compile(root)

    def __repr__(self):
        return f"Expression({self.source!r}, variable={self.variable!r})"

    def __str__(self):
        return to_source(self.root)

    def eval(self, value: float) -> float:
        value = float(value)
        try:
            out = self._fast(value)
        except (ValueError, ZeroDivisionError, OverflowError):
            out = None
        if out is None or not math.isfinite(out):
            # replay on the checked path to get a located DomainError
            return float(_eval_node(self.root, value, False)[0])
        return out

    __call__ = eval

    def eval_with_derivative(self, value: float) -> tuple[float, float]:
        val, der = _eval_node(self.root, float(value), True)
        return float(val), float(der)

    def eval_array(self, values) -> np.ndarray:
        x = np.asarray(values, dtype=float)
        val, _ = _eval_node(self.root, x, False)
        return np.broadcast_to(np.asarray(val, dtype=float), x.shape).copy()

    def eval_array_with_derivative(self, values) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(values, dtype=float)
        val, der = _eval_node(self.root, x, True)
        return (np.broadcast_to(np.asarray(val, dtype=float), x.shape).copy(),
                np.broadcast_to(np.asarray(der, dtype=float), x.shape).copy())


def parse(source: str, variable: str = "u") -> Expression:
    """Parse ``source`` as an expression in ``variable`` (``'u'`` or ``'x'``)."""
    if variable not in VARIABLES:
        raise ValueError(f"variable must be one of {VARIABLES}, got {variable!r}")
    return Expression(source, variable, _Parser(source, variable).parse())
