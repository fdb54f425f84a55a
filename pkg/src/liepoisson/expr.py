"""Exact symbolic scalar fields over named coordinates.

Everything downstream (anchors, structure functions, Poisson brackets,
fundamental vector fields) is built from ``ScalarField`` values, so brackets
and Jacobi defects carry no finite-difference noise.  The expression grammar
below is the contract for spec files and CLI inputs:

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := number | ident | '(' expr ')' | func '(' expr ')'
    func   := 'sin' | 'cos' | 'exp' | 'log' | 'sqrt' | 'neg'

Only constant folding is applied (constants combine, zero and unit subtrees
collapse); there is no general simplification, and equality of fields is a
matter of evaluation, not structure.  Exponents are integers so that
differentiation is total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ScalarField",
    "parse",
    "constant",
    "coordinate",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "EvalDomainError",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "neg")


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier '{name}' (at offset {offset})")
        self.name = name
        self.offset = offset


class EvalDomainError(ExprError):
    """Raised when evaluation leaves the domain of definition."""

    def __init__(self, message: str, node: "Node"):
        super().__init__(f"{message} in subexpression '{to_string(node)}'")
        self.node = node


# ---------------------------------------------------------------------------
# AST nodes.  Frozen dataclasses give structural equality for free, which the
# print/parse round-trip tests rely on.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Bin(Node):
    op: str  # one of '+', '-', '*', '/'
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True)
class Call(Node):
    func: str  # member of FUNCTIONS
    arg: Node


_ZERO = Const(0.0)
_ONE = Const(1.0)


def _is_const(node: Node, value: float | None = None) -> bool:
    if not isinstance(node, Const):
        return False
    return value is None or node.value == value


# Smart constructors: fold constants, collapse zero/unit subtrees.  Folding a
# function of a constant is skipped when the value is outside the domain so
# the error surfaces at evaluation time instead of construction time.


def _add(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Bin("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _call("neg", b)
    return Bin("-", a, b)


def _mul(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return _ZERO
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Bin("*", a, b)


def _div(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return _ZERO
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    return Bin("/", a, b)


def _pow(a: Node, n: int) -> Node:
    if n == 0:
        return _ONE
    if n == 1:
        return a
    if isinstance(a, Const):
        try:
            return Const(float(a.value**n))
        except (ZeroDivisionError, OverflowError):
            pass
    return Pow(a, n)


def _call(func: str, arg: Node) -> Node:
    if isinstance(arg, Const):
        if func == "neg":
            return Const(-arg.value)
        try:
            return Const(getattr(math, func)(arg.value))
        except (ValueError, OverflowError):
            pass
    return Call(func, arg)


# ---------------------------------------------------------------------------
# Lexer / parser
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # NUM | IDENT | OP | END
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, nchars = 0, len(text)
    while i < nchars:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            start = i
            while i < nchars and text[i].isdigit():
                i += 1
            if i < nchars and text[i] == ".":
                i += 1
                while i < nchars and text[i].isdigit():
                    i += 1
            if i < nchars and text[i] in "eE":
                j = i + 1
                if j < nchars and text[j] in "+-":
                    j += 1
                if j < nchars and text[j].isdigit():
                    i = j
                    while i < nchars and text[i].isdigit():
                        i += 1
            tokens.append(_Token("NUM", text[start:i], start))
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < nchars and (text[i].isalnum() or text[i] == "_"):
                i += 1
            tokens.append(_Token("IDENT", text[start:i], start))
            continue
        if ch in "+-*/^()":
            tokens.append(_Token("OP", ch, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character '{ch}'", i)
    tokens.append(_Token("END", "", nchars))
    return tokens


class _Parser:
    def __init__(self, text: str, coords: tuple[str, ...]):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.coords = coords

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if tok.kind != "OP" or tok.text != op:
            raise ExprSyntaxError(f"expected '{op}'", tok.pos)
        self.advance()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "END":
            raise ExprSyntaxError(f"unexpected token '{tok.text}'", tok.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().kind == "OP" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.term()
            node = _add(node, rhs) if op == "+" else _sub(node, rhs)
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek().kind == "OP" and self.peek().text in "*/":
            op = self.advance().text
            rhs = self.factor()
            node = _mul(node, rhs) if op == "*" else _div(node, rhs)
        return node

    def factor(self) -> Node:
        node = self.base()
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "^":
            self.advance()
            node = _pow(node, self.integer())
        return node

    def integer(self) -> int:
        sign = 1
        tok = self.peek()
        if tok.kind == "OP" and tok.text in "+-":
            self.advance()
            sign = -1 if tok.text == "-" else 1
            tok = self.peek()
        if tok.kind != "NUM" or any(c in tok.text for c in ".eE"):
            raise ExprSyntaxError("integer exponent expected", tok.pos)
        self.advance()
        return sign * int(tok.text)

    def base(self) -> Node:
        tok = self.peek()
        if tok.kind == "NUM":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError("number literal out of range", tok.pos)
            return Const(value)
        if tok.kind == "IDENT":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return _call(tok.text, arg)
            if tok.text in self.coords:
                return Var(tok.text)
            raise UnknownIdentifierError(tok.text, tok.pos)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError("expected number, identifier or '('", tok.pos)


# ---------------------------------------------------------------------------
# Printing.  The printer emits text that re-parses to an equal tree; note
# that '^' only accepts atomic bases in the grammar, so non-atomic bases get
# parenthesized, and negative constants print through neg(...).
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _precedence(node: Node) -> int:
    if isinstance(node, Bin):
        return _PREC_ADD if node.op in "+-" else _PREC_MUL
    if isinstance(node, Pow):
        return _PREC_POW
    if isinstance(node, Const) and node.value < 0:
        return _PREC_ATOM  # prints as neg(...), a call
    return _PREC_ATOM


def _format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_string(node: Node) -> str:
    if isinstance(node, Const):
        if node.value < 0:
            return f"neg({_format_number(-node.value)})"
        return _format_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_string(node.arg)})"
    if isinstance(node, Pow):
        base = to_string(node.base)
        if _precedence(node.base) < _PREC_ATOM or isinstance(node.base, Pow):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Bin):
        own = _precedence(node)
        left = to_string(node.left)
        if _precedence(node.left) < own:
            left = f"({left})"
        right = to_string(node.right)
        # the grammar is left-associative, so a right subtree at the same
        # precedence level needs parentheses to round-trip structurally
        if _precedence(node.right) <= own:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# Evaluation, differentiation, compilation
# ---------------------------------------------------------------------------


def _eval_node(node: Node, values: dict[str, float]) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return values[node.name]
    if isinstance(node, Bin):
        left = _eval_node(node.left, values)
        right = _eval_node(node.right, values)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if right == 0.0:
            raise EvalDomainError("division by zero", node)
        return left / right
    if isinstance(node, Pow):
        base = _eval_node(node.base, values)
        if base == 0.0 and node.exponent < 0:
            raise EvalDomainError("zero raised to a negative power", node)
        try:
            return float(base**node.exponent)
        except OverflowError:
            raise EvalDomainError("overflow", node) from None
    if isinstance(node, Call):
        arg = _eval_node(node.arg, values)
        if node.func == "neg":
            return -arg
        if node.func == "log" and arg <= 0.0:
            raise EvalDomainError("log of a nonpositive value", node)
        if node.func == "sqrt" and arg < 0.0:
            raise EvalDomainError("sqrt of a negative value", node)
        try:
            return getattr(math, node.func)(arg)
        except (ValueError, OverflowError):
            raise EvalDomainError("domain error", node) from None
    raise TypeError(f"unknown node {node!r}")


def _diff_node(node: Node, name: str) -> Node:
    if isinstance(node, Const):
        return _ZERO
    if isinstance(node, Var):
        return _ONE if node.name == name else _ZERO
    if isinstance(node, Bin):
        da = _diff_node(node.left, name)
        db = _diff_node(node.right, name)
        if node.op == "+":
            return _add(da, db)
        if node.op == "-":
            return _sub(da, db)
        if node.op == "*":
            return _add(_mul(da, node.right), _mul(node.left, db))
        numerator = _sub(_mul(da, node.right), _mul(node.left, db))
        return _div(numerator, _pow(node.right, 2))
    if isinstance(node, Pow):
        da = _diff_node(node.base, name)
        scale = _mul(Const(float(node.exponent)), _pow(node.base, node.exponent - 1))
        return _mul(scale, da)
    if isinstance(node, Call):
        da = _diff_node(node.arg, name)
        if node.func == "neg":
            return _call("neg", da)
        if node.func == "sin":
            return _mul(_call("cos", node.arg), da)
        if node.func == "cos":
            return _call("neg", _mul(_call("sin", node.arg), da))
        if node.func == "exp":
            return _mul(_call("exp", node.arg), da)
        if node.func == "log":
            return _div(da, node.arg)
        if node.func == "sqrt":
            return _div(da, _mul(Const(2.0), _call("sqrt", node.arg)))
    raise TypeError(f"unknown node {node!r}")


def _codegen(node: Node, index: dict[str, int]) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return f"p[{index[node.name]}]"
    if isinstance(node, Bin):
        return f"({_codegen(node.left, index)}{node.op}{_codegen(node.right, index)})"
    if isinstance(node, Pow):
        return f"({_codegen(node.base, index)}**{node.exponent})"
    if isinstance(node, Call):
        if node.func == "neg":
            return f"(-{_codegen(node.arg, index)})"
        return f"math.{node.func}({_codegen(node.arg, index)})"
    raise TypeError(f"unknown node {node!r}")


class ScalarField:
    """An expression tree over a fixed tuple of coordinate names.

    Fields are immutable; arithmetic between fields over the same coordinates
    yields new fields with constants folded.
    """

    __slots__ = ("ast", "coords")

    def __init__(self, ast: Node, coords: tuple[str, ...]):
        object.__setattr__(self, "ast", ast)
        object.__setattr__(self, "coords", tuple(coords))

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    # -- evaluation ---------------------------------------------------------

    def eval(self, point) -> float:
        if len(point) != len(self.coords):
            raise ValueError(
                f"point has {len(point)} entries, expected {len(self.coords)}"
            )
        values = {name: float(v) for name, v in zip(self.coords, point)}
        return _eval_node(self.ast, values)

    __call__ = eval

    def compile(self):
        """Return a fast ``point -> float`` callable equivalent to eval()."""
        index = {name: i for i, name in enumerate(self.coords)}
        src = f"lambda p: ({_codegen(self.ast, index)})"
        return eval(src, {"math": math})  # noqa: S307 - code generated locally

    # -- calculus -----------------------------------------------------------

    def diff(self, coord: str) -> "ScalarField":
        if coord not in self.coords:
            raise ValueError(f"coordinate '{coord}' is not declared")
        return ScalarField(_diff_node(self.ast, coord), self.coords)

    # -- structure ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return _is_const(self.ast, 0.0)

    def with_coords(self, coords) -> "ScalarField":
        """Reinterpret the same expression over a coordinate superset."""
        coords = tuple(coords)
        missing = _free_vars(self.ast) - set(coords)
        if missing:
            raise ValueError(f"coordinates {sorted(missing)} missing from {coords}")
        return ScalarField(self.ast, coords)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> Node:
        if isinstance(other, ScalarField):
            if other.coords != self.coords:
                raise ValueError("mismatched coordinates")
            return other.ast
        if isinstance(other, (int, float)):
            return Const(float(other))
        return NotImplemented

    def _binary(self, other, fn, swap=False):
        node = self._coerce(other)
        if node is NotImplemented:
            return NotImplemented
        result = fn(node, self.ast) if swap else fn(self.ast, node)
        return ScalarField(result, self.coords)

    def __add__(self, other):
        return self._binary(other, _add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, _sub)

    def __rsub__(self, other):
        return self._binary(other, _sub, swap=True)

    def __mul__(self, other):
        return self._binary(other, _mul)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, _div)

    def __rtruediv__(self, other):
        return self._binary(other, _div, swap=True)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            raise TypeError("exponent must be an integer")
        return ScalarField(_pow(self.ast, exponent), self.coords)

    def __neg__(self):
        return ScalarField(_call("neg", self.ast), self.coords)

    # -- misc ---------------------------------------------------------------

    def __str__(self) -> str:
        return to_string(self.ast)

    def __repr__(self) -> str:
        return f"ScalarField({to_string(self.ast)!r}, coords={self.coords!r})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ScalarField)
            and self.coords == other.coords
            and self.ast == other.ast
        )

    def __hash__(self):
        return hash((self.ast, self.coords))


def _free_vars(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Bin):
        return _free_vars(node.left) | _free_vars(node.right)
    if isinstance(node, Pow):
        return _free_vars(node.base)
    if isinstance(node, Call):
        return _free_vars(node.arg)
    return set()


def parse(text: str, coords) -> ScalarField:
    """Parse ``text`` into a ScalarField over the declared coordinates."""
    coords = tuple(coords)
    for name in coords:
        if name in FUNCTIONS:
            raise ValueError(f"coordinate name '{name}' shadows a function")
    return ScalarField(_Parser(text, coords).parse(), coords)


def constant(value: float, coords) -> ScalarField:
    return ScalarField(Const(float(value)), tuple(coords))


def coordinate(name: str, coords) -> ScalarField:
    coords = tuple(coords)
    if name not in coords:
        raise ValueError(f"coordinate '{name}' is not declared")
    return ScalarField(Var(name), coords)
