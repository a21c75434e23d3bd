"""Concrete syntax for both calculi.

Grammar, loosest binding first::

    term    := par { "+" par }                       left-associative
    par     := postfix { "||" nameset postfix }      left-associative
    postfix := unit { "/" nameset | "[" relab "]" }
    unit    := "nil" | ident | "(" term ")"
             | "rec" ident "." unit
             | "<" name "," rate ">" "." unit        (IT only)
             | name "." unit | "(" rate ")" "." unit  (OT only)

    rate    := int | decimal | int "/" int | rate-parameter
    nameset := "{" [ ident { "," ident } ] "}"
    relab   := [ ident "->" ident { "," ident "->" ident } ]

``#`` starts a comment running to the end of the line.  Rate parameters
(``<a,l>``) are looked up in the ``rates`` mapping given to the parser.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .terms import (
    TAU,
    ActPrefix,
    Choice,
    Hide,
    Nil,
    Par,
    Prefix,
    Rec,
    Relab,
    Term,
    TimePrefix,
    Var,
    is_identifier,
    is_visible,
    relabeling,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int  # byte offsets into the UTF-8 encoded input
    end: int


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan, expected: frozenset = frozenset()):
        self.message = message
        self.span = span
        self.expected = expected
        detail = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message} at bytes {span.start}-{span.end}{detail}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|\||->|[<>.,+/(){}\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num | ident | op | eof
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", _span(text, pos, pos + 1))
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), m.start(), m.end()))
        pos = m.end()
    tokens.append(Token("eof", "", len(text), len(text)))
    return tokens


def _span(text: str, start: int, end: int) -> SourceSpan:
    return SourceSpan(len(text[:start].encode()), len(text[:end].encode()))


class _Parser:
    def __init__(self, text: str, calculus: str, rates: Optional[Mapping[str, object]]):
        self.text = text
        self.calculus = calculus
        self.rates = {k: Fraction(v) for k, v in (rates or {}).items()}
        self.tokens = tokenize(text)
        self.pos = 0
        self.spans: dict[int, SourceSpan] = {}

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def error(self, message, tok=None, expected=()):
        tok = tok or self.tok
        raise ParseError(message, _span(self.text, tok.start, max(tok.end, tok.start)), frozenset(expected))

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"unexpected {found!r}", expected=(text,))
        tok = self.tok
        self.pos += 1
        return tok

    def mark(self, node: Term, start_tok: Token) -> Term:
        prev = self.tokens[self.pos - 1]
        self.spans[id(node)] = _span(self.text, start_tok.start, prev.end)
        return node

    # -- grammar
    def parse(self) -> Term:
        term = self.term()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}", expected=("+", "||", "/", "[", "end of input"))
        return term

    def term(self) -> Term:
        start = self.tok
        left = self.par()
        while self.at("+"):
            self.pos += 1
            left = self.mark(Choice(left, self.par()), start)
        return left

    def par(self) -> Term:
        start = self.tok
        left = self.postfix()
        while self.at("||"):
            self.pos += 1
            sync = self.name_set()
            left = self.mark(Par(left, self.postfix(), sync), start)
        return left

    def postfix(self) -> Term:
        start = self.tok
        node = self.unit()
        while True:
            if self.at("/"):
                self.pos += 1
                node = self.mark(Hide(node, self.name_set()), start)
            elif self.at("["):
                self.pos += 1
                node = self.mark(Relab(node, self.relab()), start)
            else:
                return node

    def unit(self) -> Term:
        tok = self.tok
        if tok.kind == "ident":
            if tok.text == "nil":
                self.pos += 1
                return self.mark(Nil(), tok)
            if tok.text == "rec":
                self.pos += 1
                var = self.variable()
                self.expect(".")
                return self.mark(Rec(var, self.unit()), tok)
            if self.calculus == "ot" and self.peek().kind == "op" and self.peek().text == ".":
                name = self.action_name()
                self.expect(".")
                return self.mark(ActPrefix(name, self.unit()), tok)
            return self.mark(Var(self.variable()), tok)
        if self.at("<"):
            if self.calculus != "it":
                self.error("'<name,rate>' prefixes belong to the integrated-time calculus")
            self.pos += 1
            name = self.action_name()
            self.expect(",")
            rate = self.rate()
            self.expect(">")
            self.expect(".")
            return self.mark(Prefix(name, rate, self.unit()), tok)
        if self.at("("):
            if self.calculus == "ot" and self._time_prefix_ahead():
                self.pos += 1
                rate = self.rate()
                self.expect(")")
                self.expect(".")
                return self.mark(TimePrefix(rate, self.unit()), tok)
            self.pos += 1
            inner = self.term()
            self.expect(")")
            return inner
        expected = {"nil", "rec", "(", "identifier"} | ({"<"} if self.calculus == "it" else set())
        self.error(f"unexpected {tok.text or 'end of input'!r}", expected=expected)

    def _time_prefix_ahead(self) -> bool:
        nxt = self.peek()
        if nxt.kind == "num":
            return True
        # "(l)." with l a rate parameter; a parenthesized variable cannot be followed by "."
        return (
            nxt.kind == "ident"
            and nxt.text not in ("nil", "rec")
            and self.peek(2).text == ")"
            and self.peek(3).text == "."
        )

    def action_name(self) -> str:
        tok = self.tok
        if tok.kind != "ident":
            self.error("expected an action name", expected=("identifier", "tau"))
        self.pos += 1
        if tok.text != TAU and not is_visible(tok.text):
            self.error(f"invalid action name {tok.text!r}", tok)
        return tok.text

    def visible_name(self) -> str:
        tok = self.tok
        name = self.action_name()
        if name == TAU:
            self.error("action visibility violated: tau is not a visible name", tok)
        return name

    def variable(self) -> str:
        tok = self.tok
        if tok.kind != "ident" or not is_identifier(tok.text):
            self.error("expected a process variable", expected=("identifier",))
        self.pos += 1
        return tok.text

    def rate(self) -> Fraction:
        tok = self.tok
        if tok.kind == "ident":
            self.pos += 1
            if tok.text not in self.rates:
                self.error(f"unknown rate parameter {tok.text!r}", tok)
            value = self.rates[tok.text]
        elif tok.kind == "num":
            self.pos += 1
            value = Fraction(tok.text)
            if self.at("/") and self.peek().kind == "num":
                if "." in tok.text or "." in self.peek().text:
                    self.error("fraction rates take integer numerator and denominator", tok)
                self.pos += 1
                den = Fraction(self.tok.text)
                self.pos += 1
                if den == 0:
                    self.error("zero denominator in rate", tok)
                value = value / den
        else:
            self.error("expected a rate", expected=("number",))
        if value <= 0:
            self.error("rate must be positive", tok)
        return value

    def name_set(self) -> frozenset:
        self.expect("{")
        names = []
        if not self.at("}"):
            names.append(self.visible_name())
            while self.at(","):
                self.pos += 1
                names.append(self.visible_name())
        self.expect("}")
        return frozenset(names)

    def relab(self) -> tuple:
        start = self.tok
        pairs = []
        if not self.at("]"):
            while True:
                src = self.visible_name()
                self.expect("->")
                pairs.append((src, self.visible_name()))
                if not self.at(","):
                    break
                self.pos += 1
        self.expect("]")
        try:
            return relabeling(pairs)
        except ValueError as exc:
            self.error(str(exc), start)


def parse_it(text: str, rates: Optional[Mapping[str, object]] = None) -> Term:
    """Parse an integrated-time term; only syntax is checked."""
    return _Parser(text, "it", rates).parse()


def parse_ot(text: str, rates: Optional[Mapping[str, object]] = None) -> Term:
    """Parse an orthogonal-time term; only syntax is checked."""
    return _Parser(text, "ot", rates).parse()


def parse(text: str, calculus: str, rates=None) -> Term:
    if calculus not in ("it", "ot"):
        raise ValueError(f"unknown calculus {calculus!r}")
    return _Parser(text, calculus, rates).parse()


def parse_with_spans(text: str, calculus: str, rates=None) -> tuple[Term, dict[int, SourceSpan]]:
    """Like :func:`parse` but also returns ``id(node) -> SourceSpan`` for every node built."""
    p = _Parser(text, calculus, rates)
    term = p.parse()
    return term, p.spans


# -- printing ---------------------------------------------------------------------

_CHOICE, _PAR, _POSTFIX, _UNIT = range(4)


def format_rate(rate: Fraction) -> str:
    return str(rate.numerator) if rate.denominator == 1 else f"{rate.numerator}/{rate.denominator}"


def _names(names) -> str:
    return "{" + ",".join(sorted(names)) + "}"


def _level(t: Term) -> int:
    if isinstance(t, Choice):
        return _CHOICE
    if isinstance(t, Par):
        return _PAR
    if isinstance(t, (Hide, Relab)):
        return _POSTFIX
    return _UNIT


def _print(t: Term, ctx: int) -> str:
    if _level(t) < ctx:
        return "(" + _print(t, _CHOICE) + ")"
    if isinstance(t, Nil):
        return "nil"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Prefix):
        return f"<{t.name},{format_rate(t.rate)}>.{_print(t.body, _UNIT)}"
    if isinstance(t, ActPrefix):
        return f"{t.name}.{_print(t.body, _UNIT)}"
    if isinstance(t, TimePrefix):
        return f"({format_rate(t.rate)}).{_print(t.body, _UNIT)}"
    if isinstance(t, Rec):
        return f"rec {t.var}.{_print(t.body, _UNIT)}"
    if isinstance(t, Choice):
        return f"{_print(t.left, _CHOICE)} + {_print(t.right, _PAR)}"
    if isinstance(t, Par):
        return f"{_print(t.left, _PAR)} ||{_names(t.sync)} {_print(t.right, _POSTFIX)}"
    if isinstance(t, Hide):
        return f"{_print(t.body, _POSTFIX)} / {_names(t.names)}"
    if isinstance(t, Relab):
        inner = ",".join(f"{s}->{d}" for s, d in t.mapping)
        return f"{_print(t.body, _POSTFIX)}[{inner}]"
    raise TypeError(f"not a term: {t!r}")


def print_term(t: Term) -> str:
    """Canonical text with the fewest parentheses the grammar allows."""
    return _print(t, _CHOICE)


print_it = print_term
print_ot = print_term
