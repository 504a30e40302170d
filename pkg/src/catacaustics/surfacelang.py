"""Surface definition language.

A mirror surface is written as three coordinate expressions in the chart
parameters u and v, e.g. ``[cos(u)*cos(v), cos(u)*sin(v), sin(u)]``.  The
text is parsed into an immutable expression tree and evaluated as a
second-order jet, so downstream geometry gets machine-precision derivatives.

Grammar (whitespace insignificant, numbers are decimal literals with an
optional exponent)::

    surface := "[" expr "," expr "," expr "]"
    expr    := term {("+"|"-") term}
    term    := factor {("*"|"/") factor}
    factor  := ["-"] power
    power   := atom ["^" factor]
    atom    := number | "u" | "v" | ident | ident "(" expr ")" | "(" expr ")"

An optional domain declaration may follow the surface:
``u in [a, b]; v in [c, d]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import jets
from .jets import Jet2, Jet2Vec3, JetDomainError

__all__ = [
    "Const", "Var", "Param", "Call", "Neg", "BinOp", "Node",
    "SurfaceAST", "SurfaceDefinition",
    "SurfaceLangError", "SurfaceSyntaxError", "UnknownIdentifierError",
    "ArityError", "EvalDomainError",
    "parse_surface", "parse_surface_definition", "eval_surface",
    "format_expr", "to_text", "affine_transform",
]


# --------------------------------------------------------------------------
# errors
# --------------------------------------------------------------------------

class SurfaceLangError(ValueError):
    """Base class for surface-language failures."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        if line:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class SurfaceSyntaxError(SurfaceLangError):
    """The text does not conform to the grammar."""


class UnknownIdentifierError(SurfaceLangError):
    """An identifier is neither u, v, a known function, nor a parameter."""


class ArityError(SurfaceLangError):
    """A function used without arguments, or a non-function called."""


class EvalDomainError(ArithmeticError):
    """Evaluation hit an undefined real operation; carries the offending node."""

    def __init__(self, node, message: str):
        self.node = node
        super().__init__(f"{message} in '{format_expr(node)}'")


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "u" or "v"


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / ^
    left: "Node"
    right: "Node"


Node = Union[Const, Var, Param, Call, Neg, BinOp]

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "exp", "log", "sqrt", "abs", "neg")

_FUNC_TABLE = {
    "sin": jets.sin, "cos": jets.cos, "tan": jets.tan,
    "sinh": jets.sinh, "cosh": jets.cosh,
    "exp": jets.exp, "log": jets.log, "sqrt": jets.sqrt, "abs": jets.absolute,
}


@dataclass
class SurfaceAST:
    """Three coordinate expression trees plus the parameter table."""

    x: Node
    y: Node
    z: Node
    params: dict = field(default_factory=dict)

    def components(self):
        return (self.x, self.y, self.z)


@dataclass
class SurfaceDefinition:
    """A parsed surface file: the AST and the declared (u, v) rectangle."""

    ast: SurfaceAST
    domain: Optional[tuple] = None  # (u0, u1, v0, v1)


# --------------------------------------------------------------------------
# scanner
# --------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_OPS = "[](),+-*/^;"


@dataclass(frozen=True)
class _Tok:
    kind: str  # NUMBER | IDENT | OP | EOF
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m and (ch.isdigit() or ch == "."):
            toks.append(_Tok("NUMBER", m.group(), line, col))
            col += m.end() - i
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            toks.append(_Tok("IDENT", m.group(), line, col))
            col += m.end() - i
            i = m.end()
            continue
        if ch in _OPS:
            toks.append(_Tok("OP", ch, line, col))
            col += 1
            i += 1
            continue
        raise SurfaceSyntaxError(f"unexpected character {ch!r}", line, col)
    toks.append(_Tok("EOF", "", line, col))
    return toks


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

class _Parser:
    def __init__(self, toks, params):
        self.toks = toks
        self.pos = 0
        self.params = params

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect_op(self, op: str) -> _Tok:
        t = self.peek()
        if t.kind != "OP" or t.text != op:
            got = t.text or "end of input"
            raise SurfaceSyntaxError(f"expected '{op}', got {got!r}", t.line, t.col)
        return self.next()

    def at_op(self, *ops) -> bool:
        t = self.peek()
        return t.kind == "OP" and t.text in ops

    def surface(self) -> tuple:
        self.expect_op("[")
        x = self.expr()
        self.expect_op(",")
        y = self.expr()
        self.expect_op(",")
        z = self.expr()
        self.expect_op("]")
        return x, y, z

    def expr(self) -> Node:
        node = self.term()
        while self.at_op("+", "-"):
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.at_op("*", "/"):
            op = self.next().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.at_op("-"):
            self.next()
            return Neg(self.power())
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        if self.at_op("^"):
            self.next()
            # right-associative: exponent is a full factor
            node = BinOp("^", node, self.factor())
        return node

    def atom(self) -> Node:
        t = self.peek()
        if t.kind == "NUMBER":
            self.next()
            return Const(float(t.text))
        if t.kind == "IDENT":
            self.next()
            name = t.text
            if self.at_op("("):
                self.next()
                arg = self.expr()
                self.expect_op(")")
                if name == "neg":
                    return Neg(arg)
                if name in _FUNC_TABLE:
                    return Call(name, arg)
                if name in self.params:
                    raise ArityError(f"'{name}' is a parameter, not a function", t.line, t.col)
                raise UnknownIdentifierError(f"unknown function '{name}'", t.line, t.col)
            if name in ("u", "v"):
                return Var(name)
            if name in self.params:
                return Param(name)
            if name in FUNCTIONS:
                raise ArityError(f"function '{name}' used without an argument", t.line, t.col)
            raise UnknownIdentifierError(f"unknown identifier '{name}'", t.line, t.col)
        if self.at_op("("):
            self.next()
            node = self.expr()
            self.expect_op(")")
            return node
        got = t.text or "end of input"
        raise SurfaceSyntaxError(f"expected a number, identifier or '(', got {got!r}",
                                 t.line, t.col)

    def signed_number(self) -> float:
        sign = 1.0
        if self.at_op("-"):
            self.next()
            sign = -1.0
        t = self.peek()
        if t.kind != "NUMBER":
            raise SurfaceSyntaxError(f"expected a number, got {t.text!r}", t.line, t.col)
        self.next()
        return sign * float(t.text)

    def domain_clause(self) -> tuple:
        # "u in [a, b]; v in [c, d]"
        bounds = {}
        for want in ("u", "v"):
            t = self.next()
            if t.kind != "IDENT" or t.text != want:
                raise SurfaceSyntaxError(f"expected '{want}' in domain declaration", t.line, t.col)
            t = self.next()
            if t.kind != "IDENT" or t.text != "in":
                raise SurfaceSyntaxError("expected 'in' in domain declaration", t.line, t.col)
            self.expect_op("[")
            lo = self.signed_number()
            self.expect_op(",")
            hi = self.signed_number()
            self.expect_op("]")
            if hi <= lo:
                raise SurfaceSyntaxError(f"empty {want}-interval in domain", t.line, t.col)
            bounds[want] = (lo, hi)
            if want == "u":
                self.expect_op(";")
        return (*bounds["u"], *bounds["v"])

    def expect_eof(self):
        t = self.peek()
        if t.kind != "EOF":
            raise SurfaceSyntaxError(f"unexpected trailing input {t.text!r}", t.line, t.col)


def _clean_params(params) -> dict:
    table = {}
    for name, value in (params or {}).items():
        try:
            table[str(name)] = float(value)
        except (TypeError, ValueError):
            raise SurfaceLangError(f"parameter '{name}' must be a real number, got {value!r}")
    return table


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def parse_surface(text: str, params=None) -> SurfaceAST:
    """Parse a bracketed surface expression into a SurfaceAST."""
    table = _clean_params(params)
    p = _Parser(_tokenize(text), table)
    x, y, z = p.surface()
    p.expect_eof()
    return SurfaceAST(x, y, z, table)


def parse_surface_definition(text: str, params=None) -> SurfaceDefinition:
    """Parse a surface file: expression plus optional domain declaration.

    Lines may carry ``#`` comments.
    """
    table = _clean_params(params)
    p = _Parser(_tokenize(_strip_comments(text)), table)
    x, y, z = p.surface()
    domain = None
    if p.peek().kind != "EOF":
        domain = p.domain_clause()
    p.expect_eof()
    return SurfaceDefinition(SurfaceAST(x, y, z, table), domain)


# --------------------------------------------------------------------------
# printer
# --------------------------------------------------------------------------

_PREC_SUM, _PREC_TERM, _PREC_UNARY, _PREC_POWER, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        if node.op in "+-":
            return _PREC_SUM
        if node.op in "*/":
            return _PREC_TERM
        return _PREC_POWER
    if isinstance(node, Neg):
        return _PREC_UNARY
    return _PREC_ATOM


def _fmt(node: Node, min_prec: int) -> str:
    if isinstance(node, Const):
        s = repr(float(node.value))
    elif isinstance(node, (Var, Param)):
        s = node.name
    elif isinstance(node, Call):
        s = f"{node.func}({_fmt(node.arg, _PREC_SUM)})"
    elif isinstance(node, Neg):
        s = "-" + _fmt(node.operand, _PREC_POWER)
    elif isinstance(node, BinOp):
        if node.op in "+-":
            s = f"{_fmt(node.left, _PREC_SUM)} {node.op} {_fmt(node.right, _PREC_TERM)}"
        elif node.op in "*/":
            s = f"{_fmt(node.left, _PREC_TERM)}{node.op}{_fmt(node.right, _PREC_UNARY)}"
        else:  # ^ : left operand must be an atom, exponent is a factor
            s = f"{_fmt(node.left, _PREC_ATOM)}^{_fmt(node.right, _PREC_UNARY)}"
    else:
        raise TypeError(f"not an expression node: {node!r}")
    if _prec(node) < min_prec:
        return f"({s})"
    return s


def format_expr(node: Node) -> str:
    """Render one expression tree back to surface-language text."""
    return _fmt(node, _PREC_SUM)


def to_text(ast: SurfaceAST) -> str:
    """Render a SurfaceAST so that re-parsing yields a structurally equal AST."""
    return "[" + ", ".join(format_expr(c) for c in ast.components()) + "]"


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def _eval_node(node: Node, ju: Jet2, jv: Jet2, params: dict) -> Jet2:
    if isinstance(node, Const):
        return Jet2(node.value)
    if isinstance(node, Var):
        return ju if node.name == "u" else jv
    if isinstance(node, Param):
        return Jet2(params[node.name])
    if isinstance(node, Neg):
        return -_eval_node(node.operand, ju, jv, params)
    if isinstance(node, Call):
        arg = _eval_node(node.arg, ju, jv, params)
        try:
            return _FUNC_TABLE[node.func](arg)
        except JetDomainError as e:
            raise EvalDomainError(node, str(e)) from None
    if isinstance(node, BinOp):
        left = _eval_node(node.left, ju, jv, params)
        right = _eval_node(node.right, ju, jv, params)
        try:
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if node.op == "/":
                return left / right
            return jets.power(left, right)
        except JetDomainError as e:
            raise EvalDomainError(node, str(e)) from None
    raise TypeError(f"not an expression node: {node!r}")


def eval_surface(ast: SurfaceAST, u, v) -> Jet2Vec3:
    """Evaluate a surface at (u, v) as a jet of position and partials.

    u and v may be scalars or broadcastable numpy arrays; results carry the
    broadcast shape.  Raises EvalDomainError when an undefined real operation
    or a non-finite value is hit.
    """
    ju = Jet2.var_u(u)
    jv = Jet2.var_v(v)
    out = []
    with np.errstate(all="ignore"):
        for label, tree in zip("xyz", ast.components()):
            j = _eval_node(tree, ju, jv, ast.params)
            if not all(np.all(np.isfinite(s)) for s in j.slots()):
                raise EvalDomainError(tree, f"non-finite value in {label}-component")
            out.append(j)
    return Jet2Vec3(*out)


# --------------------------------------------------------------------------
# affine transforms (scene manipulation, equivariance checks)
# --------------------------------------------------------------------------

def _scaled(coeff: float, tree: Node) -> Node:
    if coeff == 1.0:
        return tree
    if coeff == -1.0:
        return Neg(tree)
    if coeff < 0.0:
        return Neg(BinOp("*", Const(-coeff), tree))
    return BinOp("*", Const(coeff), tree)


def _const_term(value: float) -> Node:
    return Neg(Const(-value)) if value < 0.0 else Const(value)


def affine_transform(ast: SurfaceAST, linear, offset=(0.0, 0.0, 0.0)) -> SurfaceAST:
    """Return the surface r' = M r + t as a new AST sharing subtrees with ast."""
    m = np.asarray(linear, dtype=float)
    t = np.asarray(offset, dtype=float)
    if m.shape != (3, 3) or t.shape != (3,):
        raise ValueError("affine_transform expects a 3x3 matrix and a 3-vector")
    comps = ast.components()

    def row(i: int) -> Node:
        terms = [_scaled(float(m[i, j]), comps[j]) for j in range(3) if m[i, j] != 0.0]
        if t[i] != 0.0 or not terms:
            terms.append(_const_term(float(t[i])))
        node = terms[0]
        for extra in terms[1:]:
            node = BinOp("+", node, extra)
        return node

    return SurfaceAST(row(0), row(1), row(2), dict(ast.params))
