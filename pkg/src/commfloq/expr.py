"""Coefficient-function expression language.

Grammar (EBNF), whitespace between tokens is ignored::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = primary [ "^" unary ] ;          (* right-associative *)
    primary = number | "t" | "pi" | "e" | func "(" expr ")" | "(" expr ")" ;
    func    = "sin" | "cos" | "tan" | "sinh" | "cosh" | "tanh" | "exp"
            | "ln" | "sqrt" | "abs" | "erf" | "erfi" ;
    number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ]
            | "." digit { digit } [ exponent ] ;

``^`` binds tighter than unary minus, so ``-2^2`` is ``-(2^2)``. Implicit
multiplication (``2t``) is a syntax error.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import scipy.special

MAX_DEPTH = 100


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = expected
        exp = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message} at offset {offset}{exp}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class DomainError(ExprError, ArithmeticError):
    def __init__(self, message: str, node: "Node"):
        self.node = node
        super().__init__(f"{message} in '{to_source(node)}'")


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
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
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}


def _ln(x):
    if x <= 0:
        raise ValueError("ln of non-positive value")
    return math.log(x)


def _sqrt(x):
    if x < 0:
        raise ValueError("sqrt of negative value")
    return math.sqrt(x)


def _erfi(x):
    return float(scipy.special.erfi(x))


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
    "exp": math.exp, "ln": _ln, "sqrt": _sqrt, "abs": abs,
    "erf": math.erf, "erfi": _erfi,
}


# --- tokenizer -------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?![A-Za-z_]))
  | (?P<badnum>\d[\w.]*)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE | re.ASCII)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src: str, byte_offset: Callable[[int], int]) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", byte_offset(pos))
        kind = m.lastgroup
        if kind == "badnum":
            # the first offending character, e.g. the "t" in "2t"
            num = re.match(r"(?:\d+\.?\d*)(?:[eE][+-]?\d+)?", src[pos:])
            bad = pos + num.end()
            raise ExprSyntaxError("unexpected token after number", byte_offset(bad),
                                  frozenset({"operator", "')'", "end of input"}))
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


def _tree_depth(node: Node) -> int:
    deepest = 0
    stack = [(node, 1)]
    while stack:
        n, d = stack.pop()
        deepest = max(deepest, d)
        if isinstance(n, Neg):
            stack.append((n.operand, d + 1))
        elif isinstance(n, Call):
            stack.append((n.arg, d + 1))
        elif isinstance(n, BinOp):
            stack.append((n.left, d + 1))
            stack.append((n.right, d + 1))
    return deepest


# --- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src, self.byte_offset)
        self.i = 0
        self.depth = 0

    def byte_offset(self, pos: int) -> int:
        return len(self.src[:pos].encode("utf-8", "surrogatepass"))

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, expected) -> ExprSyntaxError:
        return ExprSyntaxError(message, self.byte_offset(self.tok.pos), frozenset(expected))

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            got = self.tok.text or "end of input"
            raise self.error(f"unexpected {got!r}", {repr(text)})

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}",
                             {"operator", "end of input"})
        if _tree_depth(node) > 2 * MAX_DEPTH:
            raise ExprSyntaxError("expression nested too deeply", 0)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("expression nested too deeply", set())
        try:
            if self.accept("-"):
                return Neg(self.unary())
            return self.power()
        finally:
            self.depth -= 1

    def power(self) -> Node:
        base = self.primary()
        if self.accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise self.error("numeric literal out of range", set())
            self.i += 1
            return Num(value)
        if tok.kind == "ident":
            self.i += 1
            if tok.text == "t":
                return Var()
            if tok.text in CONSTANTS:
                return Const(tok.text)
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            raise UnknownIdentifierError(
                f"unknown identifier {tok.text!r}", self.byte_offset(tok.pos),
                frozenset({"t", *CONSTANTS, *FUNCTIONS}))
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        got = tok.text or "end of input"
        raise self.error(f"unexpected {got!r}", {"number", "identifier", "'('", "'-'"})


def parse(source: str | bytes) -> Node:
    """Parse expression text into an AST.

    Raises ExprSyntaxError (with byte offset and expected-token set) or
    UnknownIdentifierError. Never raises anything else.
    """
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ExprSyntaxError("invalid UTF-8", exc.start) from None
    if not source.strip():
        raise ExprSyntaxError("empty expression", 0, frozenset({"number", "identifier"}))
    return _Parser(source).parse()


# --- evaluation ------------------------------------------------------------

def evaluate(node: Node, t: float) -> float:
    """Evaluate at time ``t`` in IEEE double; raises DomainError when undefined."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.operand, t)
    if isinstance(node, Call):
        x = evaluate(node.arg, t)
        try:
            y = FUNCTIONS[node.func](x)
        except (ValueError, OverflowError) as exc:
            raise DomainError(str(exc), node) from None
        if not math.isfinite(y):
            raise DomainError("non-finite result", node)
        return y
    a = evaluate(node.left, t)
    b = evaluate(node.right, t)
    op = node.op
    try:
        if op == "+":
            y = a + b
        elif op == "-":
            y = a - b
        elif op == "*":
            y = a * b
        elif op == "/":
            if b == 0:
                raise DomainError("division by zero", node)
            y = a / b
        else:
            y = a ** b
            if isinstance(y, complex):
                raise DomainError("negative base with fractional exponent", node)
    except ZeroDivisionError:
        raise DomainError("zero raised to a negative power", node) from None
    except OverflowError:
        raise DomainError("overflow", node) from None
    if not math.isfinite(y):
        raise DomainError("non-finite result", node)
    return y


def depends_on_t(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, Neg):
        return depends_on_t(node.operand)
    if isinstance(node, Call):
        return depends_on_t(node.arg)
    return depends_on_t(node.left) or depends_on_t(node.right)


def to_source(node: Node) -> str:
    """Fully parenthesized text that parses back to the same AST."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


@dataclass(frozen=True)
class Expression:
    """Parsed expression bundled with its source text; callable in ``t``."""

    source: str
    tree: Node

    @classmethod
    def parse(cls, source: str) -> "Expression":
        return cls(source, parse(source))

    def __call__(self, t: float) -> float:
        return evaluate(self.tree, t)

    @property
    def is_constant(self) -> bool:
        return not depends_on_t(self.tree)

    def __str__(self) -> str:
        return self.source
