"""Scalar expressions over x1..xn: parsing, printing and (vectorised) evaluation.

Grammar, loosest to tightest binding::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := number | xK | call | '(' expr ')'
    call   := 'abs' '(' expr ')' | ('min' | 'max') '(' expr ',' expr ')'

Unary minus binds looser than '^', so ``-x1^2`` is ``-(x1^2)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ExprEvalError(ArithmeticError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)
_FUNCS = {"abs": 1, "min": 2, "max": 2}
_VAR = re.compile(r"x([1-9]\d*)$")


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        v = self.value
        if float(v).is_integer() and abs(v) < 1e15:
            return str(int(v))
        return repr(float(v))


@dataclass(frozen=True)
class Var:
    index: int  # 1-based

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return 5


def to_text(node) -> str:
    """Canonical text with the minimum parentheses the grammar needs."""
    if isinstance(node, (Num, Var)):
        return str(node)
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        return f"-{inner}" if _prec(node.arg) >= _PREC["neg"] else f"-({inner})"
    p = _PREC[node.op]
    left, right = to_text(node.left), to_text(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _PREC["neg"]:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = []
        pos = 0
        while pos < len(src):
            if src[pos:].strip() == "":
                break
            m = _TOKEN.match(src, pos)
            if m is None or m.end() == pos:
                bad = pos + len(src[pos:]) - len(src[pos:].lstrip())
                raise ExprSyntaxError(f"unexpected character {src[bad]!r}", bad)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.tokens.append(("end", "", len(src)))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprSyntaxError(f"expected {value!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+" and self.peek()[0] == "op":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(float(text))
        if kind == "name":
            self.take()
            if text in _FUNCS:
                self.take("(")
                args = [self.expr()]
                for _ in range(_FUNCS[text] - 1):
                    self.take(",")
                    args.append(self.expr())
                self.take(")")
                return Call(text, tuple(args))
            m = _VAR.match(text)
            if m is None:
                raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
            return Var(int(m.group(1)))
        if text == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", pos)


def _const_value(node):
    """Exact rational value of a constant subtree, or None."""
    if isinstance(node, Num):
        return Fraction(node.value).limit_denominator(10**9)
    if isinstance(node, Neg):
        v = _const_value(node.arg)
        return None if v is None else -v
    if isinstance(node, BinOp) and node.op in "+-*/":
        a, b = _const_value(node.left), _const_value(node.right)
        if a is None or b is None:
            return None
        if node.op == "/" and b == 0:
            return None
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b if b else None}[node.op]
    return None


def _power(base, expo, exact):
    if exact is not None and exact.denominator == 1:
        return np.power(base, float(exact))
    if np.any(np.asarray(base) < 0):
        raise ExprEvalError("fractional power of a negative base; wrap the base in abs()")
    return np.power(base, expo)


def _eval(node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.index > len(x):
            raise ExprEvalError(f"x{node.index} is out of range for a point of dimension {len(x)}")
        return x[node.index - 1]
    if isinstance(node, Neg):
        return -_eval(node.arg, x)
    if isinstance(node, Call):
        args = [_eval(a, x) for a in node.args]
        if node.name == "abs":
            return np.abs(args[0])
        return np.minimum(*args) if node.name == "min" else np.maximum(*args)
    a, b = _eval(node.left, x), _eval(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if np.any(np.asarray(b) == 0):
            raise ExprEvalError("division by zero")
        return a / b
    return _power(a, b, _const_value(node.right))


def _walk(node):
    yield node
    if isinstance(node, Neg):
        yield from _walk(node.arg)
    elif isinstance(node, BinOp):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, Call):
        for a in node.args:
            yield from _walk(a)


class ScalarExpr:
    """Parsed scalar expression. Call with a point (n,) or a batch (k, n)."""

    def __init__(self, tree, source: str | None = None):
        self.tree = tree
        self.source = source if source is not None else to_text(tree)

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 1:
            return float(_eval(self.tree, arr))
        with np.errstate(invalid="ignore"):
            out = _eval(self.tree, arr.T)
        return np.broadcast_to(np.asarray(out, dtype=float), (arr.shape[0],)).copy()

    def __str__(self):
        return to_text(self.tree)

    def __repr__(self):
        return f"ScalarExpr({str(self)!r})"

    def __eq__(self, other):
        return isinstance(other, ScalarExpr) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    @property
    def nvars(self) -> int:
        return max((n.index for n in _walk(self.tree) if isinstance(n, Var)), default=0)

    def internal_nodes(self) -> int:
        return sum(1 for n in _walk(self.tree) if isinstance(n, (Neg, BinOp, Call)))

    def claims_c1(self) -> bool:
        """Structural C^1 claim: abs/min/max only as the base of a constant power > 1."""
        safe = set()
        for n in _walk(self.tree):
            if isinstance(n, BinOp) and n.op == "^" and isinstance(n.left, Call):
                e = _const_value(n.right)
                if e is not None and e > 1:
                    safe.add(id(n.left))
        for n in _walk(self.tree):
            if isinstance(n, Call) and id(n) not in safe:
                return False
        return True


def parse_expr(src: str) -> ScalarExpr:
    if not isinstance(src, str) or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    return ScalarExpr(_Parser(src).parse(), src)
