"""Expression grammar for series and differential polynomials.

Infix grammar, whitespace-insensitive:

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := '-' factor | atom
    atom   := primary ['^' exponent]
    primary:= RATIONAL | NAME | Y-symbol | '(' expr ')'

Rational literals and exponents are written p or p/q; exponents may be
negative (t^-1, e_x^1/2).  The indeterminate Y takes derivative marks
as apostrophes (Y'') or as a parenthesized order (Y^(3)); a
parenthesized number after ^ is only legal as a derivative order on Y.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from .diffpoly import DiffPoly
from .errors import ParseError, UnboundSymbol, VdfError
from .gridseries import FieldInstance, Series


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: Fraction  # nonnegative by construction


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class DY:
    """The indeterminate Y differentiated `order` times."""

    order: int


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: Fraction


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Mul:
    factors: Tuple["Node", ...]


@dataclass(frozen=True)
class Add:
    terms: Tuple["Node", ...]


Node = Union[Lit, Sym, DY, Pow, Neg, Mul, Add]


# -- tokenizer ------------------------------------------------------------------


@dataclass
class Token:
    kind: str  # num, name, op, end
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[Token]:
    toks: List[Token] = []
    line, col = 1, 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 0
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("num", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Token("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in "+-*^()/'":
            toks.append(Token("op", ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("end", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}",
                             tok.line, tok.col)
        return tok

    def fail(self, message: str):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col)

    # grammar ------------------------------------------------------------

    def parse(self) -> Node:
        node = self.expr()
        if self.peek().kind != "end":
            self.fail(f"trailing input {self.peek().text!r}")
        return node

    def expr(self) -> Node:
        terms = [self.term()]
        while self.peek().text in ("+", "-"):
            op = self.next().text
            t = self.term()
            terms.append(Neg(t) if op == "-" else t)
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Node:
        factors = [self.factor()]
        while self.peek().text == "*":
            self.next()
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def factor(self) -> Node:
        if self.peek().text == "-":
            self.next()
            return Neg(self.factor())
        return self.atom()

    def atom(self) -> Node:
        base = self.primary()
        if self.peek().text == "^":
            if self.toks[self.pos + 1].text == "(":
                # parenthesized exponent: legal only as a derivative mark,
                # which self.primary() already consumed for Y
                self.fail("parenthesized exponent is only a derivative order on Y")
            self.next()
            return Pow(base, self.rational_exponent())
        return base

    def rational_exponent(self) -> Fraction:
        sign = 1
        if self.peek().text == "-":
            self.next()
            sign = -1
        tok = self.next()
        if tok.kind != "num":
            raise ParseError(f"expected a rational exponent, found {tok.text!r}",
                             tok.line, tok.col)
        num = int(tok.text)
        if self.peek().text == "/":
            self.next()
            den_tok = self.next()
            if den_tok.kind != "num":
                raise ParseError("expected a denominator",
                                 den_tok.line, den_tok.col)
            return Fraction(sign * num, int(den_tok.text))
        return Fraction(sign * num)

    def primary(self) -> Node:
        tok = self.next()
        if tok.kind == "num":
            num = int(tok.text)
            if self.peek().text == "/":
                self.next()
                den = self.next()
                if den.kind != "num":
                    raise ParseError("expected a denominator", den.line, den.col)
                return Lit(Fraction(num, int(den.text)))
            return Lit(Fraction(num))
        if tok.kind == "name":
            if tok.text == "Y":
                order = 0
                while self.peek().text == "'":
                    self.next()
                    order += 1
                if order == 0 and self.peek().text == "^" \
                        and self.toks[self.pos + 1].text == "(":
                    self.next()
                    self.next()
                    otok = self.next()
                    if otok.kind != "num":
                        raise ParseError("expected a derivative order",
                                         otok.line, otok.col)
                    self.expect(")")
                    order = int(otok.text)
                return DY(order)
            return Sym(tok.text)
        if tok.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.col)


def parse_expr(text: str) -> Node:
    return _Parser(text).parse()


# -- printer ---------------------------------------------------------------------


def _needs_parens_in_mul(node: Node) -> bool:
    return isinstance(node, (Add, Neg))


def _needs_parens_in_pow(node: Node) -> bool:
    return isinstance(node, (Add, Neg, Mul, Pow))


def print_expr(node: Node) -> str:
    if isinstance(node, Lit):
        return str(node.value)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, DY):
        if node.order <= 3:
            return "Y" + "'" * node.order
        return f"Y^({node.order})"
    if isinstance(node, Pow):
        base = print_expr(node.base)
        if _needs_parens_in_pow(node.base):
            base = f"({base})"
        e = node.exponent
        etext = str(e) if e >= 0 else f"-{-e}"
        return f"{base}^{etext}"
    if isinstance(node, Neg):
        inner = print_expr(node.operand)
        if isinstance(node.operand, (Add, Mul)):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Mul):
        parts = []
        for f in node.factors:
            s = print_expr(f)
            if _needs_parens_in_mul(f):
                s = f"({s})"
            parts.append(s)
        return "*".join(parts)
    if isinstance(node, Add):
        out = print_expr(node.terms[0])
        for t in node.terms[1:]:
            if isinstance(t, Neg) and not isinstance(t.operand, (Add, Mul)):
                out += f" - {print_expr(t.operand)}"
            else:
                out += f" + {print_expr(t)}"
        return out
    raise VdfError(f"unknown AST node {node!r}")


# -- lowering ---------------------------------------------------------------------


def lower_poly(node: Node, field: FieldInstance) -> DiffPoly:
    """AST to differential polynomial (series are order-0 polynomials)."""
    if isinstance(node, Lit):
        return DiffPoly.from_coeff(field, field.constant(node.value))
    if isinstance(node, Sym):
        if node.name not in field._index:
            raise UnboundSymbol(f"unknown generator {node.name!r}")
        return DiffPoly.from_coeff(field, field.gen(node.name))
    if isinstance(node, DY):
        return DiffPoly.variable(field, node.order)
    if isinstance(node, Neg):
        return -lower_poly(node.operand, field)
    if isinstance(node, Add):
        out = lower_poly(node.terms[0], field)
        for t in node.terms[1:]:
            out = out + lower_poly(t, field)
        return out
    if isinstance(node, Mul):
        out = lower_poly(node.factors[0], field)
        for f in node.factors[1:]:
            out = out * lower_poly(f, field)
        return out
    if isinstance(node, Pow):
        base = lower_poly(node.base, field)
        e = node.exponent
        if _is_constant_poly(base) and len(base.terms) == 1:
            coeff = next(iter(base.terms.values()))
            if len(coeff.terms) == 1:
                new = _monomial_pow(coeff, e)
                if new is not None:
                    return DiffPoly.from_coeff(field, new)
        if e.denominator != 1 or e < 0:
            raise ParseError(f"exponent {e} is only legal on a single monomial")
        out = DiffPoly.from_coeff(field, field.one())
        for _ in range(int(e)):
            out = out * base
        return out
    raise VdfError(f"unknown AST node {node!r}")


def _zero_index(P: DiffPoly):
    return tuple([0] * (P.order + 1))


def _is_constant_poly(P: DiffPoly) -> bool:
    return all(all(x == 0 for x in i) for i in P.terms)


def _monomial_pow(coeff: Series, e: Fraction) -> Optional[Series]:
    """Exact rational power of a single-term series, when the
    coefficient power stays rational."""
    (mono, c), = coeff.terms.items()
    if e.denominator == 1:
        return coeff.field.monomial_series(mono ** e, c ** int(e))
    if c == 1:
        return coeff.field.monomial_series(mono ** e, Fraction(1))
    return None


def lower_series(node: Node, field: FieldInstance) -> Series:
    P = lower_poly(node, field)
    if not _is_constant_poly(P):
        raise ParseError("expression contains the indeterminate Y")
    if not P.terms:
        return field.zero_series()
    return P.terms[_zero_index(P)]


def parse_poly(text: str, field: FieldInstance) -> DiffPoly:
    return lower_poly(parse_expr(text), field)


def parse_series(text: str, field: FieldInstance) -> Series:
    return lower_series(parse_expr(text), field)
