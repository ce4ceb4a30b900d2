"""Surface syntax: tokenizer, precedence parser, command splitter, printer.

Precedence, tightest first::

    postfix  e^*  e^D  e_R  e_(R1;R2)
    juxtaposition (COMPO, left-assoc)
    *        scalar product (MULS)
    ⊗ / (x)  tensor (TSR)
    .        scaling (SCR, right-assoc), prefix -
    ·        explicit composition (COMPO)
    + -      addition
    ->       function types (right-assoc)

The raw ``ID[arg, ...]`` syntax is accepted everywhere.  A scaling dot must
be followed directly by its operand (``a.K``); a dot followed by whitespace
or end of input terminates a command.  ``(x)`` with no inner spaces is the
ASCII tensor operator, so a parenthesised variable named ``x`` must be
written ``( x )``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .terms import Term, mk, to_str

__all__ = [
    "ParseError",
    "SourceSpan",
    "Command",
    "parse",
    "parse_with_spans",
    "parse_command",
    "split_commands",
    "print_term",
]


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __post_init__(self) -> None:
        if not (0 <= self.start <= self.end):
            raise ValueError("span start must not exceed end")

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan | None = None) -> None:
        where = f" at {span}" if span is not None else ""
        super().__init__(f"{message}{where}")
        self.message = message
        self.span = span


KEYWORDS = frozenset({"fun", "idx", "Sum", "in", "with"})

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"//[^\n]*"),
    ("TENSOR", r"\(x\)|⊗"),
    ("CONST", r"0K|0B|0O|1O"),
    ("NUMBER", r"\d+(?:/\d+)?"),
    ("DB", r"\$\d+"),
    ("IDENT", r"[A-Za-z][A-Za-z0-9']*"),
    ("ARROW", r"->"),
    ("DARROW", r"=>"),
    ("DEF", r":="),
    ("CONJ", r"\^\*"),
    ("DAGGER", r"\^D|†"),
    ("CDOT", r"·"),
    ("PUNCT", r"[|<>()\[\],;:_+\-*.]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))


@dataclass
class Token:
    kind: str
    text: str
    span: SourceSpan


def _line_col(text: str, offset: int, base_line: int, base_col: int) -> tuple[int, int]:
    before = text[:offset]
    nl = before.count("\n")
    if nl == 0:
        return base_line, base_col + offset
    return base_line + nl, offset - before.rfind("\n")


def tokenize(text: str, line: int = 1, column: int = 1, offset: int = 0) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            ln, col = _line_col(text, pos, line, column)
            raise ParseError(f"unexpected character {text[pos]!r}",
                             SourceSpan(offset + pos, offset + pos + 1, ln, col))
        kind = m.lastgroup
        assert kind is not None
        if kind not in ("WS", "COMMENT"):
            ln, col = _line_col(text, pos, line, column)
            tok_text = m.group()
            if kind == "PUNCT":
                kind = tok_text
            elif kind == "IDENT" and tok_text in KEYWORDS:
                kind = tok_text
            out.append(Token(kind, tok_text, SourceSpan(offset + pos, offset + m.end(), ln, col)))
        pos = m.end()
    end = offset + len(text)
    ln, col = _line_col(text, len(text), line, column)
    out.append(Token("EOF", "", SourceSpan(end, end, ln, col)))
    return out


@dataclass
class _Node:
    head: str
    args: list[_Node] = field(default_factory=list)
    span: SourceSpan | None = None


_ATOM_START = {"IDENT", "NUMBER", "DB", "CONST", "|", "<", "(", "fun", "idx", "Sum"}


class Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.toks = tokens
        self.pos = 0

    # -- helpers --------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def take(self, kind: str | None = None) -> Token:
        t = self.tok
        if kind is not None and t.kind != kind:
            shown = t.text or "end of input"
            raise ParseError(f"expected {kind!r} but found {shown!r}", t.span)
        self.pos += 1
        return t

    def at(self, *kinds: str) -> bool:
        return self.tok.kind in kinds

    def _span(self, start: Token) -> SourceSpan:
        prev = self.toks[max(self.pos - 1, 0)]
        return SourceSpan(start.span.start, max(prev.span.end, start.span.start),
                          start.span.line, start.span.column)

    # -- grammar --------------------------------------------------------
    def expr(self) -> _Node:
        start = self.tok
        lhs = self.plus()
        if self.at("ARROW"):
            self.take()
            rhs = self.expr()
            return _Node("ARROW", [lhs, rhs], self._span(start))
        return lhs

    def plus(self) -> _Node:
        start = self.tok
        items = [self.cdot()]
        while self.at("+", "-"):
            op = self.take()
            rhs = self.cdot()
            if op.kind == "-":
                rhs = _Node("SCR", [_Node("-1", span=op.span), rhs], rhs.span)
            items.append(rhs)
        if len(items) == 1:
            return items[0]
        return _Node("ADD", items, self._span(start))

    def cdot(self) -> _Node:
        start = self.tok
        lhs = self.scale()
        while self.at("CDOT"):
            self.take()
            rhs = self.scale()
            lhs = _Node("COMPO", [lhs, rhs], self._span(start))
        return lhs

    def scale(self) -> _Node:
        start = self.tok
        if self.at("-") and not self._negative_literal():
            op = self.take()
            inner = self.scale()
            return _Node("SCR", [_Node("-1", span=op.span), inner], self._span(start))
        lhs = self.tensor()
        if self.at(".") and self._dot_is_scaling():
            self.take()
            rhs = self.scale()
            return _Node("SCR", [lhs, rhs], self._span(start))
        return lhs

    def _negative_literal(self) -> bool:
        nxt = self.peek()
        return nxt.kind == "NUMBER" and nxt.span.start == self.tok.span.end

    def _dot_is_scaling(self) -> bool:
        dot = self.tok
        nxt = self.peek()
        return nxt.kind != "EOF" and nxt.span.start == dot.span.end

    def tensor(self) -> _Node:
        start = self.tok
        lhs = self.mul()
        while self.at("TENSOR"):
            self.take()
            rhs = self.mul()
            lhs = _Node("TSR", [lhs, rhs], self._span(start))
        return lhs

    def mul(self) -> _Node:
        start = self.tok
        items = [self.juxt()]
        while self.at("*"):
            self.take()
            items.append(self.juxt())
        if len(items) == 1:
            return items[0]
        return _Node("MULS", items, self._span(start))

    def juxt(self, in_bra: bool = False) -> _Node:
        start = self.tok
        lhs = self.postfix(in_bra)
        while self.tok.kind in _ATOM_START and not (in_bra and self.at("|")):
            rhs = self.postfix(in_bra)
            lhs = _Node("COMPO", [lhs, rhs], self._span(start))
        return lhs

    def postfix(self, in_bra: bool = False) -> _Node:
        start = self.tok
        node = self.primary(in_bra)
        while True:
            if self.at("CONJ"):
                self.take()
                node = _Node("CONJ", [node], self._span(start))
            elif self.at("DAGGER"):
                self.take()
                node = _Node("ADJ", [node], self._span(start))
            elif self.at("_"):
                self.take()
                node = self.subscript(node, start)
            else:
                return node

    def subscript(self, node: _Node, start: Token) -> _Node:
        if self.at("IDENT"):
            t = self.take()
            return _Node("SUBS", [node, _Node(t.text, span=t.span)], self._span(start))
        self.take("(")
        r1 = self.reg_tuple()
        if self.at(";"):
            self.take()
            r2 = self.reg_tuple()
            self.take(")")
            return _Node("SUBS2", [node, r1, r2], self._span(start))
        self.take(")")
        return _Node("SUBS", [node, r1], self._span(start))

    def reg_tuple(self) -> _Node:
        start = self.tok
        items = [self.reg()]
        while self.at(","):
            self.take()
            items.append(self.reg())
        return _right_pairs(items, self._span(start))

    def reg(self) -> _Node:
        if self.at("("):
            self.take()
            r = self.reg_tuple()
            self.take(")")
            return r
        t = self.take("IDENT")
        return _Node(t.text, span=t.span)

    def args(self) -> list[_Node]:
        self.take("[")
        out: list[_Node] = []
        if not self.at("]"):
            out.append(self.expr())
            while self.at(","):
                self.take()
                out.append(self.expr())
        self.take("]")
        return out

    def primary(self, in_bra: bool = False) -> _Node:
        t = self.tok
        kind = t.kind
        if kind == "IDENT":
            self.take()
            name = "BOOL" if t.text == "bool" else t.text
            if self.at("[") and self.tok.span.start == t.span.end:
                return _Node(name, self.args(), self._span(t))
            return _Node(name, span=t.span)
        if kind == "NUMBER":
            self.take()
            return _Node(t.text, span=t.span)
        if kind == "-" and self._negative_literal():
            self.take()
            n = self.take("NUMBER")
            return _Node("-" + n.text, span=self._span(t))
        if kind == "DB":
            self.take()
            return _Node(t.text, span=t.span)
        if kind == "CONST":
            self.take()
            head = {"0K": "ZEROK", "0B": "ZEROB", "0O": "ZEROO", "1O": "ONEO"}[t.text]
            return _Node(head, self.args(), self._span(t))
        if kind == "|":
            self.take()
            inner = self.juxt()
            self.take(">")
            return _Node("KET", [inner], self._span(t))
        if kind == "<":
            self.take()
            inner = self.juxt(in_bra=True)
            self.take("|")
            return _Node("BRA", [inner], self._span(t))
        if kind == "(":
            self.take()
            items = [self.expr()]
            while self.at(","):
                self.take()
                items.append(self.expr())
            self.take(")")
            if len(items) == 1:
                return items[0]
            return _right_pairs(items, self._span(t))
        if kind == "fun":
            self.take()
            x = self.take("IDENT")
            self.take(":")
            ty = self.expr_no_arrow_body()
            self.take("DARROW")
            body = self.expr()
            return _Node("FUN", [_Node(x.text, span=x.span), ty, body], self._span(t))
        if kind == "idx":
            self.take()
            x = self.take("IDENT")
            self.take("DARROW")
            body = self.expr()
            return _Node("IDX", [_Node(x.text, span=x.span), body], self._span(t))
        if kind == "Sum":
            self.take()
            x = self.take("IDENT")
            self.take("in")
            s = self.plus()
            self.take(",")
            body = self.expr()
            ann = _Node("BASIS", [s.args[0]]) if s.head == "USET" and len(s.args) == 1 else _Node("HOLE")
            fun = _Node("FUN", [_Node(x.text, span=x.span), ann, body], self._span(t))
            return _Node("SUM", [s, fun], self._span(t))
        shown = t.text or "end of input"
        raise ParseError(f"unexpected {shown!r}", t.span)

    def expr_no_arrow_body(self) -> _Node:
        # a binder annotation may itself be an arrow type; "=>" ends it
        return self.expr()


def _right_pairs(items: list[_Node], span: SourceSpan | None) -> _Node:
    node = items[-1]
    for item in reversed(items[:-1]):
        node = _Node("PAIR", [item, node], span)
    return node


def _to_term(node: _Node, path: tuple[int, ...], spans: dict) -> Term:
    spans[path] = node.span
    args = []
    for k, a in enumerate(node.args):
        args.append(_to_term(a, path + (k,), spans))
    return mk(node.head, *args)


def parse_with_spans(text: str, line: int = 1, column: int = 1, offset: int = 0
                     ) -> tuple[Term, dict[tuple[int, ...], SourceSpan | None]]:
    p = Parser(tokenize(text, line, column, offset))
    node = p.expr()
    if not p.at("EOF"):
        raise ParseError(f"unexpected {p.tok.text!r} after term", p.tok.span)
    spans: dict = {}
    return _to_term(node, (), spans), spans


def parse(text: str) -> Term:
    """Parse a single term."""
    return parse_with_spans(text)[0]


# ---------------------------------------------------------------------------
# commands


@dataclass(frozen=True)
class Command:
    kind: str  # Def | Var | Check | Normalize | CheckEq
    name: str | None = None
    terms: tuple[Term, ...] = ()
    trace: bool = False
    text: str = ""
    span: SourceSpan | None = None


def split_commands(text: str) -> list[tuple[str, SourceSpan]]:
    """Split a script into ``.``-terminated command texts (comments removed)."""
    cleaned = re.sub(r"//[^\n]*", lambda m: " " * len(m.group()), text)
    out: list[tuple[str, SourceSpan]] = []
    start = 0
    depth = 0
    i = 0
    n = len(cleaned)
    while i < n:
        c = cleaned[i]
        if c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        elif c == "." and depth <= 0 and (i + 1 == n or cleaned[i + 1].isspace()):
            chunk = cleaned[start:i]
            if chunk.strip():
                lead = len(chunk) - len(chunk.lstrip())
                s = start + lead
                ln, col = _line_col(cleaned, s, 1, 1)
                out.append((chunk.strip(), SourceSpan(s, i + 1, ln, col)))
            start = i + 1
        i += 1
    rest = cleaned[start:]
    if rest.strip():
        lead = len(rest) - len(rest.lstrip())
        ln, col = _line_col(cleaned, start + lead, 1, 1)
        raise ParseError("command is missing its terminating '.'",
                         SourceSpan(start + lead, n, ln, col))
    return out


def parse_command(text: str, span: SourceSpan | None = None) -> Command:
    line = span.line if span else 1
    col = span.column if span else 1
    off = span.start if span else 0
    toks = tokenize(text, line, col, off)
    p = Parser(toks)
    head = p.take("IDENT")
    kind = head.text
    if kind == "Def":
        name = p.take("IDENT").text
        p.take("DEF")
        body = p.expr()
        _expect_end(p)
        return Command("Def", name, (_finish(body),), text=text, span=span)
    if kind == "Var":
        name = p.take("IDENT").text
        if p.at("DEF"):
            p.take()
        else:
            p.take(":")
        ty = p.expr()
        _expect_end(p)
        return Command("Var", name, (_finish(ty),), text=text, span=span)
    if kind == "Check":
        t = p.expr()
        _expect_end(p)
        return Command("Check", None, (_finish(t),), text=text, span=span)
    if kind == "Normalize":
        t = p.expr()
        trace = False
        if p.at("with"):
            p.take()
            word = p.take("IDENT")
            if word.text != "trace":
                raise ParseError("expected 'trace' after 'with'", word.span)
            trace = True
        _expect_end(p)
        return Command("Normalize", None, (_finish(t),), trace=trace, text=text, span=span)
    if kind == "CheckEq":
        t1 = p.expr()
        p.take("with")
        t2 = p.expr()
        _expect_end(p)
        return Command("CheckEq", None, (_finish(t1), _finish(t2)), text=text, span=span)
    raise ParseError(f"unknown command {kind!r}", head.span)


def _expect_end(p: Parser) -> None:
    if not p.at("EOF"):
        raise ParseError(f"unexpected {p.tok.text!r}", p.tok.span)


def _finish(node: _Node) -> Term:
    return _to_term(node, (), {})


def print_term(t: Term) -> str:
    """The ``ID[args]`` rendering; ``parse(print_term(t)) == t`` for named terms."""
    return to_str(t)
