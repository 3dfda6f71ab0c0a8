#!/usr/bin/env python3
# SaddleKit - Payoff Expression Language
#
# Grammar (EBNF, frozen; see docs/expression_language.md):
#
#   expr      = term { ("+" | "-") term } ;
#   term      = unary { ("*" | "/") unary } ;
#   unary     = "-" unary | power ;
#   power     = atom [ "^" unary ] ;
#   atom      = number | variable | call | "(" expr ")" | indicator ;
#   call      = function "(" expr { "," expr } ")" ;
#   indicator = "[" expr relation expr "]" ;
#   relation  = "<" | "<=" | ">" | ">=" | "==" ;
#   function  = "abs" | "exp" | "log" | "sqrt" | "min" | "max" ;
#   variable  = "x" | "a" | "b" | declared parameter ;

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from src.core.errors import (
    DivisionByZero,
    DomainError,
    EvaluationOverflow,
    ExprSyntaxError,
    UnboundVariable,
    UnknownIdentifier,
)

GAME_VARIABLES = ("x", "a", "b")
RELATIONS = ("<", "<=", ">", ">=", "==")
FUNCTION_ARITY = {
    "abs": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "sqrt": (1, 1),
    "min": (2, None),
    "max": (2, None),
}


# ----------------------------------------------------------------------
# AST


class Expr:
    """Base class of expression nodes. Nodes are immutable and hashable."""

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Call(Expr):
    func: str
    args: tuple


@dataclass(frozen=True, eq=True)
class Indicator(Expr):
    rel: str
    left: Expr
    right: Expr


# ----------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|[-+*/^()\[\],<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _byte_offset(text, index):
    return len(text[:index].encode("utf-8"))


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ExprSyntaxError(
                f"Unexpected character {text[pos]!r}",
                text,
                _byte_offset(text, pos),
                ("number", "identifier", "operator"),
            )
        kind = match.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


# ----------------------------------------------------------------------
# Parser


class _Parser:
    """Recursive-descent parser over the token list."""

    def __init__(self, text, params):
        self.text = text
        self.params = frozenset(params)
        self.tokens = _tokenize(text)
        self.index = 0

    # Token helpers

    def _peek(self):
        return self.tokens[self.index]

    def _advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _fail(self, message, token, expected):
        raise ExprSyntaxError(
            message, self.text, _byte_offset(self.text, token.offset), expected
        )

    def _expect(self, text):
        token = self._peek()
        if token.text != text or token.kind not in ("op",):
            self._fail(f"Unexpected {token.text or 'end of input'!r}", token, (text,))
        return self._advance()

    # Grammar rules

    def parse(self):
        node = self._expression()
        token = self._peek()
        if token.kind != "end":
            self._fail(
                f"Unexpected {token.text!r}", token, ("+", "-", "*", "/", "^", "end")
            )
        return node

    def _expression(self):
        node = self._term()
        while self._peek().text in ("+", "-") and self._peek().kind == "op":
            op = self._advance().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self):
        node = self._unary()
        while self._peek().text in ("*", "/") and self._peek().kind == "op":
            op = self._advance().text
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self):
        if self._peek().text == "-" and self._peek().kind == "op":
            self._advance()
            return Neg(self._unary())
        return self._power()

    def _power(self):
        base = self._atom()
        if self._peek().text == "^" and self._peek().kind == "op":
            self._advance()
            # right operand re-enters unary, so a^b^c = a^(b^c)
            return BinOp("^", base, self._unary())
        return base

    def _atom(self):
        token = self._peek()
        atom_start = ("number", "identifier", "(", "[", "-")

        if token.kind == "number":
            self._advance()
            return Num(float(token.text))

        if token.kind == "ident":
            self._advance()
            name = token.text
            if name in FUNCTION_ARITY:
                return self._call(name, token)
            if name in GAME_VARIABLES or name in self.params:
                return Var(name)
            raise UnknownIdentifier(
                f"Unknown identifier {name!r}",
                self.text,
                _byte_offset(self.text, token.offset),
                GAME_VARIABLES + tuple(sorted(self.params)),
            )

        if token.text == "(" and token.kind == "op":
            self._advance()
            node = self._expression()
            self._expect(")")
            return node

        if token.text == "[" and token.kind == "op":
            self._advance()
            left = self._expression()
            rel_token = self._peek()
            if rel_token.kind != "op" or rel_token.text not in RELATIONS:
                self._fail(
                    f"Expected a comparison, found {rel_token.text or 'end of input'!r}",
                    rel_token,
                    RELATIONS,
                )
            self._advance()
            right = self._expression()
            self._expect("]")
            return Indicator(rel_token.text, left, right)

        self._fail(
            f"Unexpected {token.text or 'end of input'!r}", token, atom_start
        )

    def _call(self, name, name_token):
        self._expect("(")
        args = [self._expression()]
        while self._peek().text == "," and self._peek().kind == "op":
            self._advance()
            args.append(self._expression())
        self._expect(")")

        low, high = FUNCTION_ARITY[name]
        if len(args) < low or (high is not None and len(args) > high):
            self._fail(
                f"Function {name} takes "
                + (f"{low} argument" if high == low else f"at least {low} arguments")
                + f", got {len(args)}",
                name_token,
                (),
            )
        return Call(name, tuple(args))


def parse(text, params=()):
    """
    Parse expression text into an AST.

    ``params`` names the declared numeric parameters that may appear besides
    the game variables x, a and b.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("Empty expression", text or "", 0, ("expression",))
    return _Parser(text, params).parse()


# ----------------------------------------------------------------------
# Pretty printing


def to_text(node):
    """Fully parenthesised text that reparses to the same AST."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_text(arg) for arg in node.args)})"
    if isinstance(node, Indicator):
        return f"[{to_text(node.left)} {node.rel} {to_text(node.right)}]"
    raise TypeError(f"Not an expression node: {node!r}")


# ----------------------------------------------------------------------
# Structural helpers


def _children(node):
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, (BinOp, Indicator)):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    return ()


def variables(node):
    """Names of the variables occurring in the expression."""
    found = set()
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, Var):
            found.add(current.name)
        stack.extend(_children(current))
    return frozenset(found)


def indicators(node):
    """All indicator sub-expressions, in left-to-right order."""
    found = []

    def walk(current):
        if isinstance(current, Indicator):
            found.append(current)
        for child in _children(current):
            walk(child)

    walk(node)
    return found


def rename(node, mapping):
    """Rename variables according to ``mapping`` (simultaneously)."""
    if isinstance(node, Var):
        return Var(mapping.get(node.name, node.name))
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(rename(node.operand, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, rename(node.left, mapping), rename(node.right, mapping))
    if isinstance(node, Indicator):
        return Indicator(
            node.rel, rename(node.left, mapping), rename(node.right, mapping)
        )
    if isinstance(node, Call):
        return Call(node.func, tuple(rename(arg, mapping) for arg in node.args))
    raise TypeError(f"Not an expression node: {node!r}")


def bind(node, values):
    """Replace variables named in ``values`` with numeric literals."""
    if isinstance(node, Var):
        if node.name in values:
            value = float(values[node.name])
            return Num(value) if value >= 0 else Neg(Num(-value))
        return node
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(bind(node.operand, values))
    if isinstance(node, BinOp):
        return BinOp(node.op, bind(node.left, values), bind(node.right, values))
    if isinstance(node, Indicator):
        return Indicator(node.rel, bind(node.left, values), bind(node.right, values))
    if isinstance(node, Call):
        return Call(node.func, tuple(bind(arg, values) for arg in node.args))
    raise TypeError(f"Not an expression node: {node!r}")


def swap_players(node):
    """c(a, b) -> c(b, a)."""
    return rename(node, {"a": "b", "b": "a"})


def negate(node):
    """-c, collapsing a double negation."""
    if isinstance(node, Neg):
        return node.operand
    return Neg(node)


# ----------------------------------------------------------------------
# Evaluation


def _overflow_sign(values):
    bad = values[~np.isfinite(values)]
    if bad.size and np.all(bad > 0):
        return 1
    if bad.size and np.all(bad < 0):
        return -1
    return 0


def _check_finite(values, what, saturate=False):
    if not saturate and not np.all(np.isfinite(values)):
        sign = _overflow_sign(np.asarray(values))
        raise EvaluationOverflow(f"Overflow in {what}", sign)
    return values


def _evaluate(node, env, saturate=False):
    if isinstance(node, Num):
        return np.float64(node.value)

    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundVariable(node.name) from None

    if isinstance(node, Neg):
        return -_evaluate(node.operand, env, saturate)

    if isinstance(node, Indicator):
        left = _evaluate(node.left, env, saturate)
        right = _evaluate(node.right, env, saturate)
        if node.rel == "<":
            hit = left < right
        elif node.rel == "<=":
            hit = left <= right
        elif node.rel == ">":
            hit = left > right
        elif node.rel == ">=":
            hit = left >= right
        else:
            hit = left == right
        return np.where(hit, 1.0, 0.0)

    if isinstance(node, BinOp):
        left = _evaluate(node.left, env, saturate)
        right = _evaluate(node.right, env, saturate)
        with np.errstate(all="ignore"):
            if node.op == "+":
                return _check_finite(left + right, "addition", saturate)
            if node.op == "-":
                return _check_finite(left - right, "subtraction", saturate)
            if node.op == "*":
                product = left * right
                if saturate:
                    # an overflowed factor times an exact zero stays zero
                    return np.where((left == 0) | (right == 0), 0.0, product)
                return _check_finite(product, "multiplication")
            if node.op == "/":
                if np.any(right == 0):
                    raise DivisionByZero("Division by zero")
                return _check_finite(left / right, "division", saturate)
            # power
            integral = np.equal(np.floor(right), right)
            if np.any((left < 0) & ~integral):
                raise DomainError("Negative base with non-integer exponent")
            if np.any((left == 0) & (right < 0)):
                raise DivisionByZero("Zero raised to a negative power")
            return _check_finite(np.power(left, right), "power", saturate)

    if isinstance(node, Call):
        args = [_evaluate(arg, env, saturate) for arg in node.args]
        with np.errstate(all="ignore"):
            if node.func == "abs":
                return np.abs(args[0])
            if node.func == "exp":
                return _check_finite(np.exp(args[0]), "exp", saturate)
            if node.func == "log":
                if np.any(args[0] <= 0):
                    raise DomainError("log of a non-positive number")
                return np.log(args[0])
            if node.func == "sqrt":
                if np.any(args[0] < 0):
                    raise DomainError("sqrt of a negative number")
                return np.sqrt(args[0])
            if node.func == "min":
                return np.minimum.reduce(np.broadcast_arrays(*args))
            if node.func == "max":
                return np.maximum.reduce(np.broadcast_arrays(*args))

    raise TypeError(f"Not an expression node: {node!r}")


def _environment(x, a, b):
    env = {}
    if x is not None:
        env["x"] = x
    if a is not None:
        env["a"] = a
    if b is not None:
        env["b"] = b
    return env


def evaluate(node, x=None, a=None, b=None):
    """Evaluate at a single point; always returns a finite float."""
    env = {
        name: np.float64(value)
        for name, value in _environment(x, a, b).items()
    }
    return float(_evaluate(node, env))


def evaluate_array(node, x=None, a=None, b=None, signed_overflow=False):
    """
    Evaluate on broadcast numpy arrays.

    The result has the broadcast shape of the inputs. Any violation anywhere in
    the batch raises. With ``signed_overflow`` a batch that overflows is
    re-evaluated with saturating arithmetic: overflowing points become +/-inf,
    and only a point whose sign cannot be determined (inf - inf) raises.
    """
    env = {
        name: np.asarray(value, dtype=float)
        for name, value in _environment(x, a, b).items()
    }
    shape = np.broadcast_shapes(*(value.shape for value in env.values())) if env else ()
    try:
        values = _evaluate(node, env)
    except EvaluationOverflow:
        if not signed_overflow:
            raise
        values = _evaluate(node, env, saturate=True)
        if np.any(np.isnan(values)):
            raise EvaluationOverflow("Overflow of undetermined sign", 0) from None
    return np.array(np.broadcast_to(values, shape), dtype=float)


def as_expr(value, params=()):
    """Accept either expression text or an already parsed AST."""
    if isinstance(value, Expr):
        return value
    return parse(value, params)
