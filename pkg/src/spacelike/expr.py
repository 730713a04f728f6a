"""Analytic expressions for surface-spec files.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

so ``-u^2`` is ``-(u^2)`` and ``u^v^w`` is ``u^(v^w)``.  ``pi`` and ``e``
become literals when parsed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from . import jets
from .jets import Jet3, JetDomainError


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprDomainError(ExprError):
    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in {to_source(subexpr)}")
        self.subexpr = subexpr


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}
MAX_INT_POWER = 9

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if not m:
            stripped = len(source[pos:]) - len(source[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {source[pos + stripped]!r}", pos + stripped)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, variables: Sequence[str]):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.variables = tuple(variables)

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str):
        kind, val, off = self.take()
        if val != text or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", off)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if val not in jets.FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {val!r}", off)
                self.take()
                arg = self.expr()
                if self.peek()[1] == ",":
                    raise ExprSyntaxError(f"{val} takes exactly one argument", self.peek()[2])
                self.expect(")")
                return Call(val, arg)
            if val in self.variables:
                return Var(val)
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            if val in jets.FUNCTIONS:
                raise ExprSyntaxError(f"function {val!r} needs an argument", off)
            raise ExprSyntaxError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", off)


def parse(source: str, variables: Sequence[str] = ("u", "v")) -> Expr:
    """Parse ``source`` into an expression tree over ``variables``."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    clash = set(variables) & (set(jets.FUNCTIONS) | set(CONSTANTS))
    if clash:
        raise ExprError(f"variable names shadow reserved names: {sorted(clash)}")
    p = _Parser(source, variables)
    node = p.expr()
    kind, val, off = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {val!r}", off)
    return node


def to_source(e: Expr) -> str:
    """Fully parenthesised printout that parses back to the same tree."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables_of(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Call)):
        return variables_of(e.arg)
    return variables_of(e.left) | variables_of(e.right)


def _int_exponent(e: Expr):
    sign = 1
    while isinstance(e, Neg):
        sign, e = -sign, e.arg
    if isinstance(e, Num) and float(e.value).is_integer() and abs(e.value) <= MAX_INT_POWER:
        return sign * int(e.value)
    return None


def evaluate(e: Expr, env: Mapping[str, object]):
    """Evaluate over numbers, arrays or jets, depending on ``env``."""
    try:
        if isinstance(e, Num):
            return e.value
        if isinstance(e, Var):
            return env[e.name]
        if isinstance(e, Neg):
            return -evaluate(e.arg, env)
        if isinstance(e, Call):
            return jets.FUNCTIONS[e.func](evaluate(e.arg, env))
        left = evaluate(e.left, env)
        if e.op == "^":
            n = _int_exponent(e.right)
            if n is not None:
                if isinstance(left, Jet3):
                    return jets.pow_int(left, n)
                left = np.asarray(left, dtype=float)
                if n < 0 and np.any(left == 0):
                    raise JetDomainError("zero to a negative power")
                return left ** float(n)
            right = evaluate(e.right, env)
            if np.any(jets.value_of(left) <= 0):
                raise JetDomainError("non-integer power needs a positive base")
            return jets.exp(jets.log(left) * right)
        right = evaluate(e.right, env)
        if e.op == "+":
            return left + right
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        if e.op == "/":
            if not isinstance(right, Jet3):
                if np.any(np.abs(np.asarray(right, dtype=float)) <= jets.DIV_EPS):
                    raise JetDomainError("division by zero")
            return left / right
        raise ExprError(f"unknown operator {e.op!r}")
    except JetDomainError as exc:
        raise ExprDomainError(str(exc), e) from None


def eval_jet(e: Expr, point, variables: Sequence[str] = ("u", "v")) -> Jet3:
    """Jet of ``e`` at ``point``; the variables are seeded on the u and v axes."""
    u, v = point
    env = {variables[0]: jets.jet_var("u", u), variables[1]: jets.jet_var("v", v)}
    out = evaluate(e, env)
    if not isinstance(out, Jet3):
        out = jets.jet_const(np.broadcast_to(out, np.broadcast_shapes(np.shape(u), np.shape(v))))
    return out
