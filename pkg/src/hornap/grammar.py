"""Regular expressions and left-regular grammars.

Grammars have productions ``A -> a`` and ``A -> B a`` only, and the start
symbol never occurs on a right-hand side. Languages are taken over nonempty
words: universality means every word in Σ⁺ is derivable.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple


class GrammarError(ValueError):
    pass


# -- regex AST -----------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    symbol: str


@dataclass(frozen=True)
class Concat:
    left: "Regex"
    right: "Regex"


@dataclass(frozen=True)
class Alt:
    left: "Regex"
    right: "Regex"


@dataclass(frozen=True)
class Star:
    inner: "Regex"


@dataclass(frozen=True)
class Plus:
    inner: "Regex"


Regex = object  # any of the node classes above


def regex_size(r) -> int:
    if isinstance(r, Lit):
        return 1
    if isinstance(r, (Star, Plus)):
        return 1 + regex_size(r.inner)
    return 1 + regex_size(r.left) + regex_size(r.right)


def regex_literals(r) -> FrozenSet[str]:
    if isinstance(r, Lit):
        return frozenset({r.symbol})
    if isinstance(r, (Star, Plus)):
        return regex_literals(r.inner)
    return regex_literals(r.left) | regex_literals(r.right)


def format_regex(r) -> str:
    if isinstance(r, Lit):
        return r.symbol
    if isinstance(r, Star):
        return f"({format_regex(r.inner)})*"
    if isinstance(r, Plus):
        return f"({format_regex(r.inner)})+"
    if isinstance(r, Concat):
        return f"{_wrap_alt(r.left)}{_wrap_alt(r.right)}"
    return f"({format_regex(r.left)}|{format_regex(r.right)})"


def _wrap_alt(r) -> str:
    return format_regex(r)


def parse_regex(text: str):
    """Literals are single alphanumeric characters; ``|``, ``*``, ``+``, parentheses."""
    toks = [c for c in text if not c.isspace()]
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def alternation():
        nonlocal pos
        node = concatenation()
        while peek() == "|":
            pos += 1
            node = Alt(node, concatenation())
        return node

    def concatenation():
        node = None
        while peek() is not None and peek() not in "|)":
            item = postfix()
            node = item if node is None else Concat(node, item)
        if node is None:
            raise GrammarError(f"empty expression at position {pos} in {text!r}")
        return node

    def postfix():
        nonlocal pos
        node = primary()
        while peek() in ("*", "+"):
            node = Star(node) if peek() == "*" else Plus(node)
            pos += 1
        return node

    def primary():
        nonlocal pos
        c = peek()
        if c is None:
            raise GrammarError(f"unexpected end of regex {text!r}")
        if c == "(":
            pos += 1
            node = alternation()
            if peek() != ")":
                raise GrammarError(f"missing ')' in {text!r}")
            pos += 1
            return node
        if c.isalnum():
            pos += 1
            return Lit(c)
        raise GrammarError(f"unexpected {c!r} at position {pos} in {text!r}")

    node = alternation()
    if pos != len(toks):
        raise GrammarError(f"unexpected {toks[pos]!r} at position {pos} in {text!r}")
    return node


def regex_matches(r, word: str) -> bool:
    """Direct backtracking matcher, used as an oracle against grammar membership."""
    return len(word) in _match_ends(r, word, 0) if word else False


def _match_ends(r, w: str, i: int) -> FrozenSet[int]:
    if isinstance(r, Lit):
        return frozenset({i + 1}) if i < len(w) and w[i] == r.symbol else frozenset()
    if isinstance(r, Concat):
        return frozenset(k for j in _match_ends(r.left, w, i) for k in _match_ends(r.right, w, j))
    if isinstance(r, Alt):
        return _match_ends(r.left, w, i) | _match_ends(r.right, w, i)
    reached = {i} if isinstance(r, Star) else set()
    frontier = {i}
    while frontier:
        nxt = set()
        for j in frontier:
            for k in _match_ends(r.inner, w, j):
                if k not in reached:
                    reached.add(k)
                    nxt.add(k)
        frontier = nxt
    return frozenset(reached)


# -- grammars -------------------------------------------------------------------

@dataclass(frozen=True)
class Production:
    lhs: str
    terminal: str
    nonterminal: Optional[str] = None  # B in A -> B a

    def __str__(self):
        rhs = self.terminal if self.nonterminal is None else f"{self.nonterminal} {self.terminal}"
        return f"{self.lhs} -> {rhs}"


@dataclass(frozen=True)
class Grammar:
    nonterminals: Tuple[str, ...]
    terminals: Tuple[str, ...]
    productions: Tuple[Production, ...]
    start: str = "S"

    def __post_init__(self):
        N, T = set(self.nonterminals), set(self.terminals)
        if self.start not in N:
            raise GrammarError(f"start symbol {self.start} is not a nonterminal")
        if N & T:
            raise GrammarError(f"symbols used as terminal and nonterminal: {sorted(N & T)}")
        if not T:
            raise GrammarError("empty alphabet")
        for p in self.productions:
            if p.lhs not in N:
                raise GrammarError(f"{p}: unknown nonterminal {p.lhs}")
            if p.terminal not in T:
                raise GrammarError(f"{p}: unknown terminal {p.terminal}")
            if p.nonterminal is not None:
                if p.nonterminal not in N:
                    raise GrammarError(f"{p}: unknown nonterminal {p.nonterminal}")
                if p.nonterminal == self.start:
                    raise GrammarError(f"{p}: the start symbol may not occur on a right-hand side")

    @classmethod
    def from_rules(cls, rules: Iterable[str], terminals: Iterable[str], start: str = "S") -> "Grammar":
        """``Grammar.from_rules(["S -> B a", "B -> a"], "ab")``."""
        prods = [_parse_production(r) for r in rules]
        nts = [start]
        for p in prods:
            for n in (p.lhs, p.nonterminal):
                if n is not None and n not in nts:
                    nts.append(n)
        return cls(tuple(nts), tuple(terminals), tuple(prods), start)

    @cached_property
    def _terminal_rules(self) -> Dict[str, FrozenSet[str]]:
        out: Dict[str, set] = {}
        for p in self.productions:
            if p.nonterminal is None:
                out.setdefault(p.terminal, set()).add(p.lhs)
        return {k: frozenset(v) for k, v in out.items()}

    @cached_property
    def _chain_rules(self) -> Dict[Tuple[str, str], FrozenSet[str]]:
        out: Dict[tuple, set] = {}
        for p in self.productions:
            if p.nonterminal is not None:
                out.setdefault((p.nonterminal, p.terminal), set()).add(p.lhs)
        return {k: frozenset(v) for k, v in out.items()}

    def first(self, a: str) -> FrozenSet[str]:
        """Nonterminals deriving the one-letter word ``a``."""
        return self._terminal_rules.get(a, frozenset())

    def step(self, current: FrozenSet[str], a: str) -> FrozenSet[str]:
        """Nonterminals deriving ``u a`` given the set deriving ``u``."""
        out = set()
        for b in current:
            out |= self._chain_rules.get((b, a), frozenset())
        return frozenset(out)

    def deriving(self, word: Sequence[str]) -> FrozenSet[str]:
        if not word:
            raise GrammarError("words must be nonempty")
        cur = self.first(word[0])
        for a in word[1:]:
            cur = self.step(cur, a)
        return cur

    @property
    def size(self) -> int:
        return len(self.productions) + len(self.nonterminals) + len(self.terminals)

    def __str__(self):
        return format_grammar(self)


def _parse_production(text: str) -> Production:
    lhs, arrow, rhs = text.partition("->")
    if not arrow:
        raise GrammarError(f"production {text!r} lacks '->'")
    parts = rhs.split()
    if len(parts) == 1:
        return Production(lhs.strip(), parts[0])
    if len(parts) == 2:
        return Production(lhs.strip(), parts[1], parts[0])
    raise GrammarError(f"production {text!r} is neither 'A -> a' nor 'A -> B a'")


def parse_grammar(text: str) -> Grammar:
    """Read the ``.grm`` format: ``start S``, ``terminals a b``, then one production per line."""
    start, terminals, rules = "S", None, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()
        if head[0] == "start":
            if len(head) != 2:
                raise GrammarError(f"line {lineno}: expected 'start NAME'")
            start = head[1]
        elif head[0] == "terminals":
            terminals = head[1:]
        else:
            try:
                rules.append(_parse_production(line))
            except GrammarError as exc:
                raise GrammarError(f"line {lineno}: {exc}") from None
    if terminals is None:
        terminals = sorted({p.terminal for p in rules})
    nts = [start]
    for p in rules:
        for n in (p.lhs, p.nonterminal):
            if n is not None and n not in nts:
                nts.append(n)
    return Grammar(tuple(nts), tuple(terminals), tuple(rules), start)


def format_grammar(g: Grammar) -> str:
    lines = [f"start {g.start}", "terminals " + " ".join(g.terminals)]
    lines += [str(p) for p in g.productions]
    return "\n".join(lines) + "\n"


def derives(g: Grammar, nonterminal: str, word: Sequence[str]) -> bool:
    """``nonterminal →* word`` by the left-to-right subset recurrence."""
    if nonterminal not in g.nonterminals:
        raise GrammarError(f"unknown nonterminal {nonterminal!r}")
    return nonterminal in g.deriving(word)


def accepts(g: Grammar, word: Sequence[str]) -> bool:
    return derives(g, g.start, word)


def words(alphabet: Sequence[str], max_len: int, min_len: int = 1) -> Iterator[str]:
    """All words in length-lexicographic order."""
    for n in range(min_len, max_len + 1):
        for letters in itertools.product(sorted(alphabet), repeat=n):
            yield "".join(letters)


def shortest_rejected(g: Grammar, max_len: int) -> Optional[str]:
    """Length-lexicographically least nonempty word of length <= max_len outside L(g).

    Breadth-first over the sets of nonterminals deriving each prefix; a set
    reached before by a smaller word is not expanded again.
    """
    if max_len < 1:
        raise GrammarError("max_len must be at least 1")
    alphabet = sorted(g.terminals)
    seen = set()
    frontier: List[Tuple[str, FrozenSet[str]]] = []
    for a in alphabet:
        state = g.first(a)
        if g.start not in state:
            return a
        if state not in seen:
            seen.add(state)
            frontier.append((a, state))
    for _ in range(max_len - 1):
        nxt = []
        for w, state in frontier:
            for a in alphabet:
                s2 = g.step(state, a)
                if g.start not in s2:
                    return w + a
                if s2 not in seen:
                    seen.add(s2)
                    nxt.append((w + a, s2))
        frontier = nxt
        if not frontier:
            break
    return None


# -- regex to grammar ---------------------------------------------------------------

class _NFA:
    def __init__(self):
        self.n = 0
        self.eps: Dict[int, set] = {}
        self.delta: Dict[int, list] = {}

    def state(self) -> int:
        s = self.n
        self.n += 1
        self.eps[s] = set()
        self.delta[s] = []
        return s

    def build(self, r) -> Tuple[int, int]:
        """Thompson construction: returns (entry, exit)."""
        if isinstance(r, Lit):
            i, f = self.state(), self.state()
            self.delta[i].append((r.symbol, f))
            return i, f
        if isinstance(r, Concat):
            i1, f1 = self.build(r.left)
            i2, f2 = self.build(r.right)
            self.eps[f1].add(i2)
            return i1, f2
        if isinstance(r, Alt):
            i, f = self.state(), self.state()
            for part in (r.left, r.right):
                pi, pf = self.build(part)
                self.eps[i].add(pi)
                self.eps[pf].add(f)
            return i, f
        i, f = self.state(), self.state()
        pi, pf = self.build(r.inner)
        self.eps[i].add(pi)
        self.eps[pf].add(f)
        self.eps[pf].add(pi)
        if isinstance(r, Star):
            self.eps[i].add(f)
        return i, f

    def closure(self, states: Iterable[int]) -> FrozenSet[int]:
        out = set(states)
        stack = list(out)
        while stack:
            s = stack.pop()
            for t in self.eps[s]:
                if t not in out:
                    out.add(t)
                    stack.append(t)
        return frozenset(out)


def regex_to_grammar(r, alphabet: Sequence[str], start: str = "S") -> Grammar:
    """Left-regular grammar for L(r) ∩ Σ⁺ with the start symbol absent from right-hand sides.

    Thompson NFA, ε-elimination, then one nonterminal per NFA state ``q``
    deriving exactly the nonempty words that lead from the initial states to ``q``.
    """
    alphabet = tuple(alphabet)
    stray = regex_literals(r) - set(alphabet)
    if stray:
        raise GrammarError(f"literals outside the alphabet: {sorted(stray)}")
    nfa = _NFA()
    entry, exit_ = nfa.build(r)
    initial = nfa.closure([entry])
    # transitions of the ε-free automaton: p -a-> q' for q' in closure(q)
    moves: Dict[int, List[Tuple[str, FrozenSet[int]]]] = {
        p: [(a, nfa.closure([q])) for a, q in nfa.delta[p]] for p in range(nfa.n)
    }

    # keep states reachable by a nonempty word, numbered in BFS order
    order: List[int] = []
    seen = set()
    queue = deque(sorted({q for p in initial for _, qs in moves[p] for q in qs}))
    while queue:
        q = queue.popleft()
        if q in seen:
            continue
        seen.add(q)
        order.append(q)
        for _, qs in moves[q]:
            queue.extend(sorted(qs - seen))
    name = {q: f"Q{i}" for i, q in enumerate(order)}
    if start in name.values() or start in alphabet:
        raise GrammarError(f"start symbol {start!r} collides with a generated symbol")

    prods: List[Production] = []
    for p in sorted(set(initial) | set(order)):
        for a, qs in moves[p]:
            for q in sorted(qs):
                if p in initial:
                    prods.append(Production(name[q], a))
                if p in name:
                    prods.append(Production(name[q], a, name[p]))
            if exit_ in qs:
                if p in initial:
                    prods.append(Production(start, a))
                if p in name:
                    prods.append(Production(start, a, name[p]))
    unique = list(dict.fromkeys(prods))
    return Grammar((start,) + tuple(name[q] for q in order), alphabet, tuple(unique), start)


def trim(g: Grammar) -> Grammar:
    """Drop productions mentioning nonterminals that derive nothing."""
    productive = set()
    changed = True
    while changed:
        changed = False
        for p in g.productions:
            if p.lhs not in productive and (p.nonterminal is None or p.nonterminal in productive):
                productive.add(p.lhs)
                changed = True
    prods = tuple(p for p in g.productions if p.lhs in productive and (p.nonterminal is None or p.nonterminal in productive))
    nts = tuple(n for n in g.nonterminals if n in productive or n == g.start)
    return Grammar(nts, g.terminals, prods, g.start)


# -- hard instances ----------------------------------------------------------------

def first_primes(k: int) -> List[int]:
    primes: List[int] = []
    n = 2
    while len(primes) < k:
        if all(n % p for p in primes):
            primes.append(n)
        n += 1
    return primes


def hard_instance(k: int) -> Grammar:
    """Unary grammar whose shortest rejected word has length p1·…·pk (first k primes).

    It accepts ``a^n`` whenever n is not divisible by at least one of the
    primes, via one counter cycle per prime. Size is linear in p1+…+pk while
    the first gap is at their product (Chinese remaindering).
    """
    if k < 1:
        raise GrammarError("k must be at least 1")
    prods: List[Production] = []
    nts = ["S"]
    for p in first_primes(k):
        names = [f"M{p}r{r}" for r in range(p)]
        nts += names
        prods.append(Production(names[1 % p], "a"))
        for r in range(p):
            prods.append(Production(names[(r + 1) % p], "a", names[r]))
        prods.append(Production("S", "a"))
        for r in range(p):
            if (r + 1) % p:
                prods.append(Production("S", "a", names[r]))
    unique = tuple(dict.fromkeys(prods))
    return Grammar(tuple(nts), ("a",), unique, "S")
