"""Expression language for inequality components.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | atom ['^' ['-'] number]
    atom   := number | ident | func '(' args ')' | '(' expr ')'
    args   := expr (',' expr)*

Identifiers are x1..xn and z1..zm. Functions: exp, log, sqrt (one argument)
and norm (any number of arguments; a bare `x` or `z` inside norm stands for
every coordinate of that vector).

Evaluation is generic over floats and `Dual` numbers, so the same tree walk
returns values or forward-mode derivatives.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ...models.errors import DomainError, ParseError, UnknownIdentifier

UNARY_FUNCTIONS = ("exp", "log", "sqrt")
FUNCTIONS = UNARY_FUNCTIONS + ("norm",)

# exp overflows a double above this argument
_EXP_LIMIT = 709.0


# ---------- AST ----------

@dataclass(frozen=True)
class Const:
    value: float

    def to_source(self) -> str:
        return repr(float(self.value))


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "z"
    index: int  # 0-based

    @property
    def name(self) -> str:
        return f"{self.kind}{self.index + 1}"

    def to_source(self) -> str:
        return self.name


@dataclass(frozen=True)
class VectorRef:
    """Bare `x` or `z` inside norm(...)."""
    kind: str

    def to_source(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Neg:
    operand: "Node"

    def to_source(self) -> str:
        return f"(-{self.operand.to_source()})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"

    def to_source(self) -> str:
        return f"({self.left.to_source()} {self.op} {self.right.to_source()})"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float

    def to_source(self) -> str:
        return f"({self.base.to_source()} ^ {float(self.exponent)!r})"


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Node", ...]

    def to_source(self) -> str:
        return f"{self.func}({', '.join(a.to_source() for a in self.args)})"


Node = Union[Const, Var, VectorRef, Neg, BinOp, Pow, Call]


@dataclass(frozen=True)
class Expression:
    """Parsed expression together with the dimensions it was checked against."""
    root: Node
    n: Optional[int] = None
    m: Optional[int] = None

    def to_source(self) -> str:
        return self.root.to_source()

    def variables(self) -> Tuple[Var, ...]:
        found = set()
        _collect_vars(self.root, found)
        return tuple(sorted((v for v in found if isinstance(v, Var)), key=lambda v: (v.kind, v.index)))

    def references(self, kind: str) -> bool:
        """True if any coordinate of `kind`, or the bare vector inside norm, appears."""
        found = set()
        _collect_vars(self.root, found)
        return any(node.kind == kind for node in found)

    def max_index(self, kind: str) -> int:
        """Largest 1-based index of `kind` referenced, 0 if none."""
        return max((v.index + 1 for v in self.variables() if v.kind == kind), default=0)


def _collect_vars(node: Node, found: set):
    if isinstance(node, (Var, VectorRef)):
        found.add(node)
    elif isinstance(node, Neg):
        _collect_vars(node.operand, found)
    elif isinstance(node, BinOp):
        _collect_vars(node.left, found)
        _collect_vars(node.right, found)
    elif isinstance(node, Pow):
        _collect_vars(node.base, found)
    elif isinstance(node, Call):
        for arg in node.args:
            _collect_vars(arg, found)


def print_expression(expr: Union[Expression, Node]) -> str:
    return expr.to_source()


# ---------- tokenizer ----------

@dataclass(frozen=True)
class _Token:
    kind: str  # "number", "ident", "op", "end"
    text: str
    offset: int


_TOKEN_PATTERN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(src: str) -> Iterator[_Token]:
    pos = 0
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            yield _Token("end", "", len(src.encode("utf-8")))
            return
        match = _TOKEN_PATTERN.match(src, pos)
        if not match or match.end() == pos:
            raise ParseError(f"Unexpected character {src[pos]!r}", _byte_offset(src, pos),
                             ("number", "identifier", "operator"))
        kind = match.lastgroup
        start = match.start(kind)
        yield _Token(kind, match.group(kind), _byte_offset(src, start))
        pos = match.end()


def _byte_offset(src: str, char_pos: int) -> int:
    return len(src[:char_pos].encode("utf-8"))


# ---------- parser ----------

class _Parser:
    def __init__(self, src: str, n: Optional[int], m: Optional[int]):
        self._tokens = _tokenize(src)
        self._n = n
        self._m = m
        self._token = next(self._tokens)

    def parse(self) -> Node:
        node = self._expr()
        if self._token.kind != "end":
            raise ParseError(f"Unexpected token {self._token.text!r}", self._token.offset,
                             ("+", "-", "*", "/", "^", "end of input"))
        return node

    def _advance(self) -> _Token:
        current = self._token
        self._token = next(self._tokens)
        return current

    def _at(self, *ops: str) -> bool:
        return self._token.kind == "op" and self._token.text in ops

    def _expect(self, op: str):
        if not self._at(op):
            raise ParseError(f"Expected {op!r}", self._token.offset, (op,))
        self._advance()

    def _expr(self) -> Node:
        node = self._term()
        while self._at("+", "-"):
            op = self._advance().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Node:
        node = self._factor()
        while self._at("*", "/"):
            op = self._advance().text
            node = BinOp(op, node, self._factor())
        return node

    def _factor(self) -> Node:
        if self._at("-"):
            self._advance()
            return Neg(self._factor())
        node = self._atom()
        if self._at("^"):
            self._advance()
            sign = 1.0
            if self._at("-"):
                self._advance()
                sign = -1.0
            if self._token.kind != "number":
                raise ParseError("Expected a numeric exponent", self._token.offset, ("number",))
            node = Pow(node, sign * float(self._advance().text))
        return node

    def _atom(self) -> Node:
        token = self._token
        if token.kind == "number":
            self._advance()
            return Const(float(token.text))
        if token.kind == "ident":
            self._advance()
            if token.text in FUNCTIONS:
                return self._call(token)
            return self._variable(token)
        if self._at("("):
            self._advance()
            node = self._expr()
            self._expect(")")
            return node
        raise ParseError("Unexpected end of input" if token.kind == "end" else f"Unexpected token {token.text!r}",
                         token.offset, ("number", "identifier", "function", "("))

    def _call(self, token: _Token) -> Node:
        self._expect("(")
        args = [self._norm_arg() if token.text == "norm" else self._expr()]
        while self._at(","):
            if token.text != "norm":
                raise ParseError(f"{token.text} takes one argument", self._token.offset, (")",))
            self._advance()
            args.append(self._norm_arg())
        self._expect(")")
        return Call(token.text, tuple(args))

    def _norm_arg(self) -> Node:
        if self._token.kind == "ident" and self._token.text in ("x", "z"):
            token = self._advance()
            if self._at(",", ")"):
                return VectorRef(token.text)
            raise ParseError(f"Bare vector {token.text!r} must stand alone inside norm", self._token.offset,
                             (",", ")"))
        return self._expr()

    def _variable(self, token: _Token) -> Var:
        match = re.fullmatch(r"([xz])([1-9]\d*)", token.text)
        if not match:
            raise UnknownIdentifier(token.text, token.offset)
        kind, index = match.group(1), int(match.group(2))
        bound = self._n if kind == "x" else self._m
        if bound is not None and index > bound:
            raise UnknownIdentifier(token.text, token.offset)
        return Var(kind, index - 1)


def parse_expression(src: str, n: Optional[int] = None, m: Optional[int] = None) -> Expression:
    """Parse `src`; when n/m are given, x_i/z_j beyond them are unknown identifiers."""
    if not src or not src.strip():
        raise ParseError("Empty expression", 0, ("number", "identifier", "function", "("))
    return Expression(_Parser(src, n, m).parse(), n, m)


# ---------- dual numbers ----------

Tangent = Union[float, np.ndarray]


class Dual:
    """Forward-mode dual number; the tangent is a float or a gradient vector."""

    __slots__ = ("value", "tangent")

    def __init__(self, value: float, tangent: Tangent = 0.0):
        self.value = float(value)
        self.tangent = tangent

    @staticmethod
    def _coerce(other) -> "Dual":
        return other if isinstance(other, Dual) else Dual(other, 0.0)

    def __add__(self, other) -> "Dual":
        o = Dual._coerce(other)
        return Dual(self.value + o.value, self.tangent + o.tangent)

    __radd__ = __add__

    def __sub__(self, other) -> "Dual":
        o = Dual._coerce(other)
        return Dual(self.value - o.value, self.tangent - o.tangent)

    def __rsub__(self, other) -> "Dual":
        return Dual._coerce(other).__sub__(self)

    def __mul__(self, other) -> "Dual":
        o = Dual._coerce(other)
        return Dual(self.value * o.value, self.tangent * o.value + o.tangent * self.value)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Dual":
        o = Dual._coerce(other)
        if o.value == 0.0:
            raise DomainError("Division by zero")
        inv = 1.0 / o.value
        return Dual(self.value * inv, (self.tangent * o.value - o.tangent * self.value) * (inv * inv))

    def __rtruediv__(self, other) -> "Dual":
        return Dual._coerce(other).__truediv__(self)

    def __neg__(self) -> "Dual":
        return Dual(-self.value, -self.tangent)

    def __pow__(self, power: float) -> "Dual":
        value = _power(self.value, power)
        if power == 0.0:
            return Dual(value, 0.0 * self.tangent)
        if self.value == 0.0 and power < 1.0:
            raise DomainError(f"x^{power} is not differentiable at 0")
        return Dual(value, power * _power(self.value, power - 1.0) * self.tangent)

    def exp(self) -> "Dual":
        e = _exp(self.value)
        return Dual(e, e * self.tangent)

    def log(self) -> "Dual":
        return Dual(_log(self.value), self.tangent / self.value)

    def sqrt(self) -> "Dual":
        s = _sqrt(self.value)
        if s == 0.0:
            raise DomainError("sqrt is not differentiable at 0")
        return Dual(s, self.tangent * (0.5 / s))


def _exp(v: float) -> float:
    if v > _EXP_LIMIT:
        raise DomainError(f"exp overflow for argument {v:.6g}")
    return math.exp(v)


def _log(v: float) -> float:
    if v <= 0.0:
        raise DomainError(f"log of nonpositive value {v:.6g}")
    return math.log(v)


def _sqrt(v: float) -> float:
    if v < 0.0:
        raise DomainError(f"sqrt of negative value {v:.6g}")
    return math.sqrt(v)


def _power(base: float, exponent: float) -> float:
    if base < 0.0 and not float(exponent).is_integer():
        raise DomainError(f"negative base {base:.6g} with non-integer exponent {exponent}")
    if base == 0.0 and exponent < 0.0:
        raise DomainError("zero raised to a negative power")
    return base ** exponent


# ---------- evaluation ----------

def _evaluate(node: Node, x: Sequence, z: Sequence):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        values = x if node.kind == "x" else z
        if node.index >= len(values):
            raise DomainError(f"{node.name} is outside the supplied {node.kind}-vector of length {len(values)}")
        return values[node.index]
    if isinstance(node, Neg):
        return -_evaluate(node.operand, x, z)
    if isinstance(node, BinOp):
        left = _evaluate(node.left, x, z)
        right = _evaluate(node.right, x, z)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if not isinstance(left, Dual) and not isinstance(right, Dual) and right == 0.0:
            raise DomainError("Division by zero")
        return left / right
    if isinstance(node, Pow):
        base = _evaluate(node.base, x, z)
        if isinstance(base, Dual):
            return base ** node.exponent
        return _power(base, node.exponent)
    if isinstance(node, Call):
        if node.func == "norm":
            return _norm(node.args, x, z)
        arg = _evaluate(node.args[0], x, z)
        if isinstance(arg, Dual):
            return getattr(arg, node.func)()
        return {"exp": _exp, "log": _log, "sqrt": _sqrt}[node.func](arg)
    raise DomainError(f"Vector reference {node.to_source()!r} is only valid inside norm")


def _norm(args: Tuple[Node, ...], x: Sequence, z: Sequence):
    terms: List = []
    for arg in args:
        if isinstance(arg, VectorRef):
            terms.extend(x if arg.kind == "x" else z)
        else:
            terms.append(_evaluate(arg, x, z))
    total = 0.0
    for t in terms:
        total = t * t + total
    if isinstance(total, Dual):
        return total.sqrt()
    return math.sqrt(total)


def evaluate(expr: Expression, x: Sequence[float], z: Sequence[float]) -> float:
    return float(_evaluate(expr.root, [float(v) for v in x], [float(v) for v in z]))


def evaluate_gradient(expr: Expression, x: Sequence[float], z: Sequence[float]) -> Tuple[float, np.ndarray, np.ndarray]:
    """Value, ∇_x and ∇_z in one forward pass with vector tangents."""
    n, m = len(x), len(z)
    eye = np.eye(n + m)
    xs = [Dual(v, eye[i]) for i, v in enumerate(x)]
    zs = [Dual(v, eye[n + j]) for j, v in enumerate(z)]
    out = _evaluate(expr.root, xs, zs)
    if not isinstance(out, Dual):
        return float(out), np.zeros(n), np.zeros(m)
    grad = np.broadcast_to(np.asarray(out.tangent, dtype=float), (n + m,))
    return out.value, np.array(grad[:n]), np.array(grad[n:])


def evaluate_directional(expr: Expression, x: Sequence[float], z: Sequence[float],
                         dz: Sequence[float]) -> Tuple[float, float]:
    """Value and ⟨∇_z g, dz⟩ with scalar tangents."""
    xs = [float(v) for v in x]
    zs = [Dual(v, float(d)) for v, d in zip(z, dz)]
    out = _evaluate(expr.root, xs, zs)
    if not isinstance(out, Dual):
        return float(out), 0.0
    return out.value, float(out.tangent)
