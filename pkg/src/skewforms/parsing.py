"""Parser for the scalar-expression grammar.

Grammar (EBNF)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = { "+" | "-" } power ;
    power    = atom { "^" exponent } ;
    exponent = [ "-" ] INTEGER | "(" [ "-" ] INTEGER ")" ;
    atom     = NUMBER | NAME | call | "(" expr ")" ;
    call     = NAME "(" expr { "," expr } ")" ;

    NAME     = letter-or-underscore { letter, digit or underscore } ;
    NUMBER   = digits [ "." digits ] ;   (* exact: "0.25" parses as 1/4 *)
    INTEGER  = digits ;

Multiplication is always explicit (``2*x``, never ``2x``).  Exponents are
literal integers.  ``ln``, ``exp``, ``sin``, ``cos`` are the builtin
functions; applying any other name declares an opaque function symbol whose
argument list is its dependency list.  ``D(f(x, t), 1)`` is the formal
partial derivative of an opaque application with respect to its first
argument slot (slots are 1-based in the surface syntax).

The canonical printer :func:`skewforms.expr.to_text` emits exactly this
grammar, and parsing its output reproduces the tree.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import NamedTuple

from . import expr as ex


class ParseError(ex.ExprError):
    """Syntax or semantic error, carrying the byte offset into the input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class Token(NamedTuple):
    kind: str  # "num" | "name" | "op"
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        if not m:
            stripped = text[i:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}", n - len(stripped))
        for kind in ("num", "name", "op"):
            s = m.group(kind)
            if s is not None:
                out.append(Token(kind, s, m.start(kind)))
                break
        i = m.end()
    return out


class _Parser:
    def __init__(self, tokens: list[Token], end: int):
        self.toks = tokens
        self.i = 0
        self.end = end  # byte offset used for errors at end of input

    def peek(self) -> Token | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of input", self.end)
        self.i += 1
        return t

    def expect_op(self, op: str) -> Token:
        t = self.next()
        if t.kind != "op" or t.text != op:
            raise ParseError(f"expected {op!r}, found {t.text!r}", t.pos)
        return t

    # grammar ---------------------------------------------------------------
    def expr(self) -> ex.Expr:
        node = self.term()
        while (t := self.peek()) and t.kind == "op" and t.text in "+-":
            self.next()
            rhs = self.term()
            node = ex.add(node, rhs if t.text == "+" else ex.mul(ex.MINUS_ONE, rhs))
        return node

    def term(self) -> ex.Expr:
        node = self.unary()
        while (t := self.peek()) and t.kind == "op" and t.text in "*/":
            self.next()
            rhs = self.unary()
            if t.text == "*":
                node = ex.mul(node, rhs)
            else:
                try:
                    node = ex.mul(node, ex.pow_int(rhs, -1))
                except ZeroDivisionError:
                    raise ParseError("division by zero", t.pos) from None
        return node

    def unary(self) -> ex.Expr:
        sign = 1
        while (t := self.peek()) and t.kind == "op" and t.text in "+-":
            self.next()
            if t.text == "-":
                sign = -sign
        node = self.power()
        return node if sign == 1 else ex.mul(ex.MINUS_ONE, node)

    def power(self) -> ex.Expr:
        node = self.atom()
        while (t := self.peek()) and t.kind == "op" and t.text == "^":
            self.next()
            node = ex.pow_int(node, self.exponent())
        return node

    def exponent(self) -> int:
        t = self.next()
        parens = t.kind == "op" and t.text == "("
        if parens:
            t = self.next()
        sign = 1
        if t.kind == "op" and t.text == "-":
            sign = -1
            t = self.next()
        if t.kind != "num" or "." in t.text:
            raise ParseError("non-integer exponent", t.pos)
        if parens:
            self.expect_op(")")
        return sign * int(t.text)

    def atom(self) -> ex.Expr:
        t = self.next()
        if t.kind == "num":
            return ex.num(Fraction(t.text))
        if t.kind == "op" and t.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if t.kind == "name":
            nxt = self.peek()
            if nxt and nxt.kind == "op" and nxt.text == "(":
                return self.call(t)
            return ex.sym(t.text)
        raise ParseError(f"unexpected token {t.text!r}", t.pos)

    def call(self, name_tok: Token) -> ex.Expr:
        self.expect_op("(")
        args = [self.expr()]
        while (t := self.peek()) and t.kind == "op" and t.text == ",":
            self.next()
            args.append(self.expr())
        self.expect_op(")")
        name = name_tok.text
        if name == "D":
            return self._formal_derivative(args, name_tok.pos)
        if name in ex.FUNCTIONS:
            if len(args) != 1:
                raise ParseError(f"unknown function name: {name} takes one argument", name_tok.pos)
            return ex.apply_function(name, args[0])
        return ex.opaque(name, args)

    def _formal_derivative(self, args, pos: int) -> ex.Expr:
        if len(args) < 2:
            raise ParseError("unknown function name: D needs an application and slots", pos)
        head = args[0]
        if not isinstance(head, ex.Opq):
            raise ParseError("D applies to an opaque function application", pos)
        slots = []
        for a in args[1:]:
            if not (isinstance(a, ex.Num) and a.value.denominator == 1 and a.value >= 1):
                raise ParseError("D slots must be positive integers", pos)
            slot = int(a.value) - 1
            if slot >= len(head.args):
                raise ParseError(f"D slot {int(a.value)} out of range", pos)
            slots.append(slot)
        return ex.opaque(head.name, head.args, head.derivs + tuple(slots))


def parse_tokens(tokens: list[Token], end: int) -> ex.Expr:
    p = _Parser(tokens, end)
    node = p.expr()
    t = p.peek()
    if t is not None:
        raise ParseError(f"trailing input starting at {t.text!r}", t.pos)
    return node


def parse_expression(text: str) -> ex.Expr:
    """Parse an expression string to a normalized tree."""
    return parse_tokens(tokenize(text), len(text))
