"""Compile a left-regular grammar G into a Horn sentence Φ = Φ1 ∧ Φ2 whose
finite models amalgamate exactly when G is universal, and translate between
rejected words and amalgamation counterexamples.

Relation symbols: ``I``, ``T`` (unary), ``E``, ``F`` (binary), ``Q``
(ternary), ``R<a>`` for each terminal and ``R<A>`` for each nonterminal other
than the start symbol.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .entailment import entails_clause
from .grammar import Grammar, GrammarError, accepts, derives, shortest_rejected
from .logic import Atom, HornClause, Signature, UniversalHornSentence, is_complete_clause
from .syntax import parse_sentence, print_sentence


class ReductionError(ValueError):
    pass


def rel(symbol: str) -> str:
    return f"R{symbol}"


def _e(u, v):
    return Atom("E", (u, v))


def _f(u, v):
    return Atom("F", (u, v))


def link_C(xs: Sequence[str]) -> List[Atom]:
    """C(x1,…,xk): E(x1, xi) for i = 2..k."""
    return [_e(xs[0], x) for x in xs[1:]]


def link_D(xs: Sequence[str]) -> List[Atom]:
    """D(x1,…,xk): F(x1, xi) for i = 2..k."""
    return [_f(xs[0], x) for x in xs[1:]]


def link_P(xs: Sequence[str], y1: str = "y1", y2: str = "y2") -> List[Atom]:
    return link_D([y1, *xs]) + link_C([y2, *xs])


@dataclass(frozen=True)
class ReductionOutput:
    grammar: Grammar
    sentence: UniversalHornSentence
    phi1_range: range
    phi2_range: range
    symbol_table: Dict[str, str] = field(hash=False)

    @property
    def phi1(self) -> UniversalHornSentence:
        return self.sentence.restrict(self.phi1_range)

    @property
    def phi2(self) -> UniversalHornSentence:
        return self.sentence.restrict(self.phi2_range)

    def terminal_of(self, relation: str) -> Optional[str]:
        for a in self.grammar.terminals:
            if self.symbol_table[a] == relation:
                return a
        return None

    def to_text(self) -> str:
        g = self.grammar
        header = [
            "compiled from a left-regular grammar",
            f"start {g.start}",
            "terminals " + " ".join(g.terminals),
            *(f"production {p}" for p in g.productions),
            *(f"symbol {k} {v}" for k, v in self.symbol_table.items()),
            f"phi1 {self.phi1_range.start} {self.phi1_range.stop}",
            f"phi2 {self.phi2_range.start} {self.phi2_range.stop}",
        ]
        return print_sentence(self.sentence, header)


def read_compiled(text: str) -> ReductionOutput:
    """Inverse of :meth:`ReductionOutput.to_text`, using only the embedded comment header."""
    sentence = parse_sentence(text)
    start, terminals, rules, table, ranges = "S", [], [], {}, {}
    for line in text.splitlines():
        if not line.startswith("# "):
            continue
        parts = line[2:].split()
        if not parts:
            continue
        if parts[0] == "start":
            start = parts[1]
        elif parts[0] == "terminals":
            terminals = parts[1:]
        elif parts[0] == "production":
            rules.append(" ".join(parts[1:]))
        elif parts[0] == "symbol":
            table[parts[1]] = parts[2]
        elif parts[0] in ("phi1", "phi2"):
            ranges[parts[0]] = range(int(parts[1]), int(parts[2]))
    if not terminals or "phi1" not in ranges:
        raise ReductionError("file carries no reduction header")
    g = Grammar.from_rules(rules, terminals, start)
    return ReductionOutput(g, sentence, ranges["phi1"], ranges["phi2"], table)


def compile_grammar(g: Grammar) -> ReductionOutput:
    for p in g.productions:
        if p.nonterminal == g.start:
            raise ReductionError(f"{p}: start symbol on a right-hand side")
    table = {a: rel(a) for a in g.terminals}
    table.update({n: rel(n) for n in g.nonterminals if n != g.start})
    if len(set(table.values())) != len(table) or set(table.values()) & {"I", "T", "E", "F", "Q"}:
        raise ReductionError("grammar symbols clash after renaming to relation symbols")

    symbols = [("I", 1), ("T", 1), ("E", 2), ("F", 2), ("Q", 3)]
    symbols += [(table[a], 2) for a in g.terminals]
    symbols += [(table[n], 2) for n in g.nonterminals if n != g.start]
    sig = Signature(tuple(symbols))

    I = lambda v: Atom("I", (v,))  # noqa: E731
    T = lambda v: Atom("T", (v,))  # noqa: E731
    R = lambda s, u, v: Atom(table[s], (u, v))  # noqa: E731

    phi1: List[HornClause] = []
    for p in g.productions:
        if p.nonterminal is None:
            body = [I("y"), *link_C(["y", "x1"]), R(p.terminal, "y", "x1")]
            if p.lhs == g.start:
                phi1.append(HornClause(frozenset(body + [T("x1")]), None))
            else:
                phi1.append(HornClause(frozenset(body), R(p.lhs, "y", "x1")))
        else:
            body = [I("y"), *link_C(["y", "x1", "x2"]), R(p.nonterminal, "y", "x1"), R(p.terminal, "x1", "x2")]
            if p.lhs == g.start:
                phi1.append(HornClause(frozenset(body + [T("x2")]), None))
            else:
                phi1.append(HornClause(frozenset(body), R(p.lhs, "y", "x2")))

    q = lambda x: Atom("Q", ("y1", "y2", x))  # noqa: E731
    phi2: List[HornClause] = []
    for a in g.terminals:
        phi2.append(HornClause(frozenset([I("y2"), R(a, "y2", "x1"), *link_P(["x1"])]), q("x1")))
    for a in g.terminals:
        phi2.append(HornClause(frozenset([I("y2"), q("x1"), R(a, "x1", "x2"), *link_P(["x1", "x2"])]), q("x2")))
    phi2.append(HornClause(frozenset([I("y2"), q("x1"), T("x1"), *link_P(["x1"])]), None))

    sentence = UniversalHornSentence(sig, tuple(phi1 + phi2))
    n1 = len(phi1)
    return ReductionOutput(g, sentence, range(0, n1), range(n1, n1 + len(phi2)), table)


# -- derivation and pattern checks ----------------------------------------------------------

def claim1_clause(out: ReductionOutput, nonterminal: str, word: Sequence[str]) -> HornClause:
    """The Φ1-goal stating that ``nonterminal`` derives ``word`` along a y-anchored path x1…xn."""
    if not word:
        raise GrammarError("words must be nonempty")
    t = out.symbol_table
    n = len(word)
    xs = [f"x{i}" for i in range(1, n + 1)]
    body = [Atom("I", ("y",)), Atom(t[word[0]], ("y", xs[0]))]
    body += link_C(["y", *xs])
    body += [Atom(t[word[i + 1]], (xs[i], xs[i + 1])) for i in range(n - 1)]
    g = out.grammar
    if nonterminal == g.start:
        return HornClause(frozenset(body + [Atom("T", (xs[-1],))]), None)
    return HornClause(frozenset(body), Atom(t[nonterminal], ("y", xs[-1])))


def check_claim1(out: ReductionOutput, nonterminal: str, word: Sequence[str]) -> Tuple[bool, bool]:
    """(nonterminal derives word, Φ1 entails the corresponding clause)."""
    return (
        derives(out.grammar, nonterminal, word),
        entails_clause(out.phi1, claim1_clause(out, nonterminal, word)),
    )


def claim2_signature(alphabet: Sequence[str]) -> Signature:
    return Signature((("I", 1), ("T", 1), ("E", 2), ("F", 2), *((rel(a), 2) for a in alphabet)))


def find_path_pattern(atom_set, alphabet: Sequence[str]) -> Optional[Tuple[str, tuple]]:
    """Search ``atom_set`` for I(y2) ∧ R_{a1}(y2,x1) ∧ P(x1..xn) ∧ T(xn) ∧ path of R-atoms.

    Returns (word, (y1, y2, x1, …, xn)) for the length-lexicographically
    least word, or None. Variables in the match need not be distinct.
    """
    by_sym: Dict[str, set] = {}
    for a in atom_set:
        by_sym.setdefault(a.symbol, set()).add(a.args)
    letters = {rel(a): a for a in alphabet}
    ends = {t[0] for t in by_sym.get("T", ())}
    starts = sorted(t[0] for t in by_sym.get("I", ()))
    elements = sorted({v for a in atom_set for v in a.args})
    best = None
    for y2 in starts:
        for y1 in elements:
            ok = lambda x: (y1, x) in by_sym.get("F", ()) and (y2, x) in by_sym.get("E", ())  # noqa: E731
            # BFS by length, expanding letters in order, keeping the first word per vertex
            frontier = []
            seen = set()
            for r in sorted(letters, key=letters.get):
                for (u, x) in sorted(by_sym.get(r, ())):
                    if u == y2 and ok(x) and x not in seen:
                        seen.add(x)
                        frontier.append((letters[r], (x,)))
            while frontier:
                hits = [(w, path) for w, path in frontier if path[-1] in ends]
                if hits:
                    w, path = min(hits)
                    cand = (len(w), w, (y1, y2, *path))
                    if best is None or cand < best:
                        best = cand
                    break
                nxt = []
                for w, path in sorted(frontier):
                    for r in sorted(letters, key=letters.get):
                        for (u, x) in sorted(by_sym.get(r, ())):
                            if u == path[-1] and ok(x) and x not in seen:
                                seen.add(x)
                                nxt.append((w + letters[r], path + (x,)))
                frontier = nxt
    return None if best is None else (best[1], best[2])


def check_claim2(out_or_alphabet, atom_set) -> Tuple[bool, bool]:
    """(Φ2 entails atoms ⇒ ⊥, atoms contain a path-shaped subformula)."""
    alphabet = out_or_alphabet.grammar.terminals if isinstance(out_or_alphabet, ReductionOutput) else tuple(out_or_alphabet)
    sig = claim2_signature(alphabet)
    for a in atom_set:
        if a.symbol not in sig or sig.arity(a.symbol) != len(a.args):
            raise ReductionError(f"{a} is not over I, T, E, F and the terminal relations")
    phi2 = phi2_sentence(alphabet)
    entailed = entails_clause(phi2, HornClause(frozenset(atom_set), None))
    return entailed, find_path_pattern(atom_set, alphabet) is not None


def phi2_sentence(alphabet: Sequence[str]) -> UniversalHornSentence:
    """Φ2 alone; it depends only on the alphabet."""
    g = Grammar(("S",), tuple(alphabet), (), "S")
    return compile_grammar(g).phi2


# -- word encodings ----------------------------------------------------------------

@dataclass(frozen=True)
class EncodedWordForm:
    word: str
    shared: Tuple[str, ...]
    phi: FrozenSet[Atom]
    phi1: FrozenSet[Atom]
    phi2: FrozenSet[Atom]

    @property
    def n(self) -> int:
        return len(self.word)

    @property
    def all_atoms(self) -> FrozenSet[Atom]:
        return self.phi | self.phi1 | self.phi2


def encode_word(word: Sequence[str]) -> EncodedWordForm:
    if not word:
        raise GrammarError("words must be nonempty")
    n = len(word)
    xs = tuple(f"x{i}" for i in range(1, n + 1))
    phi = [Atom("T", (xs[-1],))] + [Atom(rel(word[i + 1]), (xs[i], xs[i + 1])) for i in range(n - 1)]
    phi1 = link_D(["y1", *xs])
    phi2 = link_C(["y2", *xs]) + [Atom("I", ("y2",)), Atom(rel(word[0]), ("y2", xs[0]))]
    return EncodedWordForm("".join(word), xs, frozenset(phi), frozenset(phi1), frozenset(phi2))


def decode_atoms(out: ReductionOutput, atom_set) -> str:
    """Word read along a shortest R-path from an I-marked variable to a T-marked one."""
    letters = {out.symbol_table[a]: a for a in out.grammar.terminals}
    succ: Dict[object, List[Tuple[str, object]]] = {}
    for a in atom_set:
        if a.symbol in letters:
            succ.setdefault(a.args[0], []).append((letters[a.symbol], a.args[1]))
    starts = sorted({a.args[0] for a in atom_set if a.symbol == "I"})
    targets = {a.args[0] for a in atom_set if a.symbol == "T"}
    best = None
    for s in starts:
        # layered BFS keeping the lexicographically least word per vertex
        layer = {s: ""}
        seen = {s}
        while layer:
            nxt: Dict[object, str] = {}
            for v, w in layer.items():
                for letter, u in succ.get(v, ()):
                    if u in seen:
                        continue
                    cand = w + letter
                    if u not in nxt or cand < nxt[u]:
                        nxt[u] = cand
            hits = [w for u, w in nxt.items() if u in targets]
            if hits:
                w = min(hits)
                if best is None or (len(w), w) < (len(best), best):
                    best = w
                break
            seen |= set(nxt)
            layer = nxt
    if best is None:
        raise ReductionError("counterexample has no R-path from an I-marked to a T-marked variable")
    return best


def decode_counterexample(out: ReductionOutput, cex) -> str:
    """Rejected word carried by an amalgamation counterexample on a compiled sentence."""
    word = decode_atoms(out, cex.phi | cex.phi2)
    if accepts(out.grammar, word):
        raise ReductionError(f"decoded word {word!r} is accepted by the grammar; certificate is malformed")
    return word


# -- structural invariants -------------------------------------------------------------

def structural_violations(out: ReductionOutput) -> List[str]:
    """Every way the compiled sentence departs from the shape the hardness proof relies on."""
    problems = []
    sig = out.sentence.signature
    if sig.max_arity > 3:
        problems.append("arity above 3")
    if [n for n, a in sig.symbols if a == 3] != ["Q"]:
        problems.append("Q must be the only ternary symbol")
    if rel(out.grammar.start) in sig:
        problems.append("a relation for the start symbol was emitted")
    nonterminal_rels = {out.symbol_table[n] for n in out.grammar.nonterminals if n != out.grammar.start}
    if len(out.phi1_range) != len(out.grammar.productions):
        problems.append("Φ1 must have one clause per production")
    if len(out.phi2_range) != 2 * len(out.grammar.terminals) + 1:
        problems.append("Φ2 must have 2|Σ|+1 clauses")
    for i, c in enumerate(out.sentence.clauses):
        syms = {a.symbol for a in c.premise} | ({c.conclusion.symbol} if c.conclusion else set())
        if "I" not in {a.symbol for a in c.premise}:
            problems.append(f"clause {i} has no I-atom in its premise")
        if i in out.phi1_range:
            if not is_complete_clause(c):
                problems.append(f"Φ1 clause {i} is not complete")
            if syms & {"F", "Q"}:
                problems.append(f"Φ1 clause {i} mentions F or Q")
        else:
            if syms & nonterminal_rels:
                problems.append(f"Φ2 clause {i} mentions a nonterminal relation")
            if not _distinguished_pair(c):
                problems.append(f"Φ2 clause {i} breaks the Q/F/E argument pattern")
    return problems


def _distinguished_pair(c: HornClause) -> bool:
    """Some (z1, z2): every Q-atom is Q(z1, z2, _), every F-atom F(z1, _), every E-atom E(z2, _).

    (In the emitted clauses the distinguished variables sit in the first
    argument of F and E, since D and C put their anchor first.)
    """
    all_atoms = list(c.premise) + ([c.conclusion] if c.conclusion else [])
    vs = c.variables
    for z1 in vs:
        for z2 in vs:
            if all(
                (a.symbol != "Q" or a.args[:2] == (z1, z2))
                and (a.symbol != "F" or a.args[0] == z1)
                and (a.symbol != "E" or a.args[0] == z2)
                for a in all_atoms
            ):
                return True
    return False


# -- end-to-end agreement -------------------------------------------------------------------

@dataclass(frozen=True)
class CrossCheckReport:
    word_bound: int
    ap_bounds: Tuple[int, int]
    rejected: Optional[str]
    decoded: Optional[str]
    counterexample: object = field(default=None, compare=False)

    @property
    def agree(self) -> bool:
        return self.rejected == self.decoded

    def to_dict(self) -> dict:
        return {
            "wordBound": self.word_bound,
            "apBounds": list(self.ap_bounds),
            "shortestRejected": self.rejected,
            "decodedCounterexample": self.decoded,
            "agree": self.agree,
            "counterexample": None if self.counterexample is None else self.counterexample.to_dict(),
        }


def default_ap_bounds(word_bound: int) -> Tuple[int, int]:
    return word_bound, 3 * word_bound + 2


def cross_check(g: Grammar, word_bound: int, ap_bounds: Optional[Tuple[int, int]] = None) -> CrossCheckReport:
    """Compare the shortest rejected word with the least amalgamation counterexample of the compiled sentence.

    The counterexample search unfolds clauses without merging variables:
    every counterexample contains the path encoding of a rejected word no
    longer than its shared part, and that encoding is reached by unfolding.
    """
    from .amalgamation import find_ap_counterexample

    if word_bound < 1:
        raise ReductionError("word bound must be positive")
    need = default_ap_bounds(word_bound)
    ap_bounds = need if ap_bounds is None else tuple(ap_bounds)
    if ap_bounds[0] < need[0] or ap_bounds[1] < need[1]:
        raise ReductionError(f"ap bounds {ap_bounds} do not cover word encodings up to length {word_bound}; need {need}")
    out = compile_grammar(g)
    rejected = shortest_rejected(g, word_bound)
    cex = find_ap_counterexample(out.sentence, ap_bounds[0], ap_bounds[1], identify=False)
    decoded = None if cex is None else decode_counterexample(out, cex)
    return CrossCheckReport(word_bound, ap_bounds, rejected, decoded, cex)
