"""Reader and writer for the ``.horn`` text format.

::

    # comment
    rel E/2.
    rel P/1.
    E(x,y) -> E(y,x).
    P(x), E(x,y) -> bot.
    -> P(x).
"""

from __future__ import annotations

import re
from typing import Iterable, List, Optional, Tuple

from .logic import (
    BOTTOM_NAME,
    Atom,
    HornClause,
    LogicError,
    Signature,
    UniversalHornSentence,
    check_clause,
)


class HornParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)|(?P<arrow>->)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<int>\d+)|(?P<punct>[(),./=])"
)


def _tokenize(text: str) -> List[Tuple[str, str, int, int]]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise HornParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append((kind if kind != "punct" else m.group(), m.group(), line, col))
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, signature: Optional[Signature] = None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.declared = dict(signature.symbols) if signature else {}

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        raise HornParseError(message, tok[2], tok[3])

    def expect(self, kind):
        tok = self.tok
        if tok[0] != kind:
            self.error(f"expected {kind!r}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def atom(self) -> Optional[Atom]:
        name_tok = self.expect("ident")
        name = name_tok[1]
        if name == BOTTOM_NAME:
            return None
        if self.tok[0] == "=":
            self.error("equality atoms are not permitted")
        self.expect("(")
        args = [self.variable()]
        while self.tok[0] == ",":
            self.i += 1
            args.append(self.variable())
        self.expect(")")
        if self.tok[0] == "=":
            self.error("equality atoms are not permitted")
        if name not in self.declared:
            self.error(f"undeclared relation symbol {name!r}", name_tok)
        if self.declared[name] != len(args):
            self.error(f"{name} has arity {self.declared[name]}, got {len(args)} arguments", name_tok)
        return Atom(name, tuple(args))

    def variable(self) -> str:
        tok = self.expect("ident")
        if not tok[1][0].islower() or tok[1] == BOTTOM_NAME:
            self.error(f"variables must be lowercase identifiers, got {tok[1]!r}", tok)
        if self.tok[0] == "=":
            self.error("equality atoms are not permitted")
        return tok[1]

    def clause(self) -> HornClause:
        premise = []
        if self.tok[0] != "arrow":
            start = self.tok
            a = self.atom()
            if a is None:
                self.error("bot may only appear as a conclusion", start)
            premise.append(a)
            while self.tok[0] == ",":
                self.i += 1
                start = self.tok
                a = self.atom()
                if a is None:
                    self.error("bot may only appear as a conclusion", start)
                premise.append(a)
        self.expect("arrow")
        concl = self.atom()
        return HornClause(frozenset(premise), concl)

    def declaration(self):
        self.expect("ident")  # 'rel'
        name_tok = self.expect("ident")
        self.expect("/")
        arity_tok = self.expect("int")
        self.expect(".")
        name, arity = name_tok[1], int(arity_tok[1])
        if name == BOTTOM_NAME:
            self.error("'bot' is reserved", name_tok)
        if name in self.declared:
            self.error(f"relation {name!r} declared twice", name_tok)
        if arity < 1:
            self.error("arity must be at least 1", arity_tok)
        self.declared[name] = arity

    def sentence(self) -> UniversalHornSentence:
        clauses = []
        while self.tok[0] != "eof":
            nxt = self.tokens[self.i + 1]
            if self.tok[0] == "ident" and self.tok[1] == "rel" and nxt[0] == "ident":
                self.declaration()
            else:
                clauses.append(self.clause())
                self.expect(".")
        try:
            return UniversalHornSentence(Signature(tuple(self.declared.items())), tuple(clauses))
        except LogicError as exc:
            raise HornParseError(str(exc)) from exc


def parse_sentence(text: str) -> UniversalHornSentence:
    return _Parser(text).sentence()


def parse_clause_text(text: str, signature: Optional[Signature] = None) -> HornClause:
    """Parse one clause; trailing ``.`` optional. Without a signature, arities are inferred."""
    if signature is None:
        inferred = {}
        for m in re.finditer(r"([A-Za-z_][A-Za-z0-9_']*)\s*\(([^)]*)\)", text):
            n = len([a for a in m.group(2).split(",")])
            if inferred.setdefault(m.group(1), n) != n:
                raise HornParseError(f"{m.group(1)} used with two arities")
        signature = Signature(tuple(inferred.items()))
    p = _Parser(text, signature)
    c = p.clause()
    if p.tok[0] == ".":
        p.i += 1
    p.expect("eof")
    check_clause(signature, c)
    return c


def format_clause(c: HornClause) -> str:
    return f"{c}."


def print_sentence(s: UniversalHornSentence, header: Iterable[str] = ()) -> str:
    lines = [f"# {h}" if h else "#" for h in header]
    lines += [f"rel {name}/{arity}." for name, arity in s.signature.symbols]
    lines += [format_clause(c) for c in s.clauses]
    return "\n".join(lines) + "\n"
