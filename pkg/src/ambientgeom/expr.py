"""Recursive-descent parser and jet evaluator for field expressions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' integer)?
    base   := number | ident | func '(' expr ')' | '(' expr ')'

``integer`` may carry a leading minus sign or be parenthesised.  Functions:
sin, cos, tan, exp, log, sqrt, atan.  Identifiers must be declared up front
(coordinates, parameters, named constants).
"""

import math
import re
from dataclasses import dataclass

from .errors import DomainError, ExpressionError, UnknownIdentifierError
from .jets import Jet

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "atan")
BUILTIN_CONSTANTS = {"pi": math.pi, "e": math.e}


# -- AST ----------------------------------------------------------------------

class Node:
    __slots__ = ()

    def __str__(self):
        return unparse(self)


@dataclass(frozen=True, slots=True)
class Num(Node):
    value: float


@dataclass(frozen=True, slots=True)
class Const(Node):
    name: str
    value: float


@dataclass(frozen=True, slots=True)
class Var(Node):
    name: str


@dataclass(frozen=True, slots=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True, slots=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True, slots=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True, slots=True)
class Call(Node):
    func: str
    arg: Node


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def unparse(node, parent=0):
    if isinstance(node, Num):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 else text
    if isinstance(node, (Const, Var)):
        return node.name
    if isinstance(node, Neg):
        text = "-" + unparse(node.arg, 3)
        return f"({text})" if parent > 1 else text
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        right_p = p + 1 if node.op in "-/" else p
        text = f"{unparse(node.left, p)} {node.op} {unparse(node.right, right_p)}"
        return f"({text})" if parent > p else text
    if isinstance(node, Pow):
        return f"{unparse(node.base, 4)}^{node.exponent}" if node.exponent >= 0 else f"{unparse(node.base, 4)}^({node.exponent})"
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    raise TypeError(node)


def free_names(node):
    """Set of variable names referenced by ``node``."""
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Num, Const)):
        return set()
    if isinstance(node, (Neg, Call)):
        return free_names(node.arg)
    if isinstance(node, Pow):
        return free_names(node.base)
    return free_names(node.left) | free_names(node.right)


# small constructors that fold trivial zeros/ones; used when fields are
# assembled programmatically (rescaled and ambient metrics)

def num(x):
    return Num(float(x))


def is_zero(node):
    return isinstance(node, Num) and node.value == 0.0


def is_one(node):
    return isinstance(node, Num) and node.value == 1.0


def add(a, b):
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return BinOp("+", a, b)


def sub(a, b):
    if is_zero(b):
        return a
    if is_zero(a):
        return Neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    if is_zero(a) or is_zero(b):
        return Num(0.0)
    if is_one(a):
        return b
    if is_one(b):
        return a
    return BinOp("*", a, b)


def total(nodes):
    out = Num(0.0)
    for node in nodes:
        out = add(out, node)
    return out


# -- tokenizer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def _line_col(src, pos):
    line = src.count("\n", 0, pos) + 1
    col = pos - (src.rfind("\n", 0, pos) + 1) + 1
    return line, col


def tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            line, col = _line_col(src, pos)
            raise ExpressionError(f"unexpected character {src[pos]!r}", line, col, src)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src, names, constants):
        self.src = src
        self.tokens = tokenize(src)
        self.i = 0
        self.names = frozenset(names)
        self.constants = constants

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        line, col = _line_col(self.src, tok.pos)
        return ExpressionError(message, line, col, self.src)

    def expect(self, text):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        self.i += 1

    def parse(self):
        if self.tok.kind == "end":
            raise self.error("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.tok.text == "-":
            self.i += 1
            return Neg(self.factor())
        node = self.base()
        if self.tok.text == "^":
            self.i += 1
            node = Pow(node, self.integer())
        return node

    def integer(self):
        paren = self.tok.text == "("
        if paren:
            self.i += 1
        sign = 1
        if self.tok.text == "-":
            sign = -1
            self.i += 1
        tok = self.tok
        if tok.kind != "num" or not tok.text.isdigit():
            raise self.error("exponent must be an integer literal")
        self.i += 1
        if paren:
            self.expect(")")
        return sign * int(tok.text)

    def base(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text in self.names:
                return Var(tok.text)
            if tok.text in self.constants:
                return Const(tok.text, float(self.constants[tok.text]))
            line, col = _line_col(self.src, tok.pos)
            raise UnknownIdentifierError(tok.text, line, col, self.src)
        if tok.text == "(":
            self.i += 1
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def parse(src, names, constants=None):
    """Parse ``src`` into an AST; ``names`` are the admissible variables."""
    consts = dict(BUILTIN_CONSTANTS)
    if constants:
        consts.update(constants)
    clash = set(names) & (set(consts) | set(FUNCTIONS))
    if clash:
        raise ExpressionError(f"names shadow constants or functions: {sorted(clash)}")
    return _Parser(src, names, consts).parse()


# -- evaluation -------------------------------------------------------------------

def evaluate(node, env, nvar, order):
    """Evaluate ``node`` with jets; ``env`` maps variable names to jets.

    The result may be a plain float when ``node`` is constant.
    """
    try:
        return _eval(node, env, nvar, order)
    except DomainError as exc:
        if exc.subexpression is None:
            raise DomainError(str(exc).split(" (sample")[0], where=exc.where,
                              subexpression=unparse(node)) from None
        raise


def _eval(node, env, nvar, order):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, env, nvar, order)
    if isinstance(node, BinOp):
        a = _eval(node.left, env, nvar, order)
        b = _eval(node.right, env, nvar, order)
        op = node.op
        try:
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if not isinstance(b, Jet) and b == 0:
                raise DomainError("division by zero")
            return a / b
        except DomainError as exc:
            if exc.subexpression is None:
                raise DomainError(_strip(exc), where=exc.where,
                                  subexpression=unparse(node)) from None
            raise
    if isinstance(node, Pow):
        a = _eval(node.base, env, nvar, order)
        try:
            if isinstance(a, Jet):
                return a ** node.exponent
            if a == 0 and node.exponent < 0:
                raise DomainError("division by zero")
            return float(a) ** node.exponent
        except DomainError as exc:
            raise DomainError(_strip(exc), where=exc.where,
                              subexpression=unparse(node)) from None
    if isinstance(node, Call):
        a = _eval(node.arg, env, nvar, order)
        if not isinstance(a, Jet):
            a = Jet.constant(a, nvar, 0)
            try:
                return float(getattr(a, node.func)().value)
            except DomainError as exc:
                raise DomainError(_strip(exc), subexpression=unparse(node)) from None
        try:
            return getattr(a, node.func)()
        except DomainError as exc:
            raise DomainError(_strip(exc), where=exc.where,
                              subexpression=unparse(node)) from None
    raise TypeError(node)


def _strip(exc):
    return str(exc).split(" (sample")[0]
