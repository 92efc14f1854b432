import itertools
import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hornap.grammar import (
    Alt,
    Concat,
    Grammar,
    GrammarError,
    Lit,
    Plus,
    Production,
    Star,
    accepts,
    derives,
    format_grammar,
    format_regex,
    hard_instance,
    parse_grammar,
    parse_regex,
    regex_matches,
    regex_size,
    regex_to_grammar,
    shortest_rejected,
    words,
)

from conftest import UNIVERSAL_RULES

RHS = ["a", "b", "A a", "A b", "B a", "B b"]
ALL_RULES = [f"{lhs} -> {r}" for lhs in "SAB" for r in RHS]


def language_by_expansion(g, nonterminal, max_len):
    """Words derivable from ``nonterminal`` by expanding sentential forms (rightmost-first)."""
    out = set()
    forms = [((nonterminal,), ())]  # (pending nonterminal prefix, terminal suffix)
    while forms:
        nxt = []
        for head, tail in forms:
            (n,) = head
            for p in g.productions:
                if p.lhs != n:
                    continue
                suffix = (p.terminal,) + tail
                if len(suffix) > max_len:
                    continue
                if p.nonterminal is None:
                    out.add("".join(suffix))
                else:
                    nxt.append(((p.nonterminal,), suffix))
        forms = nxt
    return out


def test_from_rules_rejects_start_on_rhs():
    with pytest.raises(GrammarError):
        Grammar.from_rules(["S -> S a"], ["a"])


def test_parse_and_format_round_trip():
    g = Grammar.from_rules(UNIVERSAL_RULES, ["a", "b"])
    assert parse_grammar(format_grammar(g)) == g


def test_derives_examples(s_ba, only_a):
    assert derives(s_ba, "S", "aa")
    assert derives(s_ba, "B", "a")
    assert not derives(s_ba, "S", "a")
    assert not accepts(only_a, "b")
    with pytest.raises(GrammarError):
        derives(s_ba, "Z", "a")


def test_derives_exhaustive_small_grammars():
    ws = list(words("ab", 4))
    count = 0
    for k in range(1, 5):
        for rules in itertools.combinations(ALL_RULES, k):
            g = Grammar.from_rules(rules, ["a", "b"])
            for n in g.nonterminals:
                lang = language_by_expansion(g, n, 4)
                for w in ws:
                    assert derives(g, n, w) == (w in lang), (rules, n, w)
            count += 1
    assert count > 3000


class TestShortestRejected:
    def test_universal(self, universal_grammar):
        assert shortest_rejected(universal_grammar, 6) is None
        assert all(accepts(universal_grammar, w) for w in words("ab", 6))
        assert len(list(words("ab", 6))) == 126

    def test_only_a(self, only_a):
        assert shortest_rejected(only_a, 3) == "b"

    def test_matches_enumeration(self):
        rng = random.Random(3)
        for _ in range(300):
            rules = rng.sample(ALL_RULES, rng.randint(1, 6))
            g = Grammar.from_rules(rules, ["a", "b"])
            want = next((w for w in words("ab", 5) if not accepts(g, w)), None)
            assert shortest_rejected(g, 5) == want

    def test_monotone_in_bound(self):
        rng = random.Random(5)
        for _ in range(200):
            g = Grammar.from_rules(rng.sample(ALL_RULES, rng.randint(1, 8)), ["a", "b"])
            w = shortest_rejected(g, 6)
            if w is not None:
                for m in range(len(w), 9):
                    assert shortest_rejected(g, m) == w
                if len(w) > 1:
                    assert shortest_rejected(g, len(w) - 1) is None


@pytest.mark.parametrize("k,length,check", [(1, 2, 6), (2, 6, 12), (3, 30, 40)])
def test_hard_instances(k, length, check):
    g = hard_instance(k)
    assert all(p.nonterminal != g.start for p in g.productions)
    for n in range(1, check + 1):
        assert accepts(g, "a" * n) == any(n % p for p in (2, 3, 5)[:k])
    assert shortest_rejected(g, check) == "a" * length


def test_hard_instance_size_grows_linearly():
    sizes = [hard_instance(k).size for k in (1, 2, 3)]
    assert sizes[2] - sizes[1] < 30 and sizes[0] < sizes[1] < sizes[2]


# -- regexes ----------------------------------------------------------------------

def test_regex_examples():
    g = regex_to_grammar(parse_regex("a"), ["a"])
    assert [w for w in words("a", 4) if accepts(g, w)] == ["a"]
    g = regex_to_grammar(parse_regex("(a|b)(a|b)*"), ["a", "b"])
    assert shortest_rejected(g, 6) is None
    g = regex_to_grammar(parse_regex("a"), ["a", "b"])
    assert not accepts(g, "b")


def test_regex_literal_outside_alphabet():
    with pytest.raises(GrammarError):
        regex_to_grammar(parse_regex("c"), ["a", "b"])


def random_regex(rng, budget):
    if budget <= 1:
        return Lit(rng.choice("ab"))
    kind = rng.choice(["lit", "cat", "alt", "star", "plus"])
    if kind == "lit":
        return Lit(rng.choice("ab"))
    if kind in ("star", "plus"):
        inner = random_regex(rng, budget - 1)
        return Star(inner) if kind == "star" else Plus(inner)
    left = rng.randint(1, budget - 2) if budget > 2 else 1
    l, r = random_regex(rng, left), random_regex(rng, max(1, budget - 1 - left))
    return Concat(l, r) if kind == "cat" else Alt(l, r)


def _to_re(r):
    if isinstance(r, Lit):
        return r.symbol
    if isinstance(r, Concat):
        return f"(?:{_to_re(r.left)})(?:{_to_re(r.right)})"
    if isinstance(r, Alt):
        return f"(?:{_to_re(r.left)}|{_to_re(r.right)})"
    op = "*" if isinstance(r, Star) else "+"
    return f"(?:{_to_re(r.inner)}){op}"


def test_fifty_random_regexes():
    rng = random.Random(11)
    for _ in range(50):
        r = random_regex(rng, rng.randint(1, 8))
        while regex_size(r) > 8:
            r = random_regex(rng, rng.randint(1, 8))
        g = regex_to_grammar(r, ["a", "b"])
        assert all(p.nonterminal != g.start for p in g.productions)
        pattern = re.compile(_to_re(r))
        for w in words("ab", 5):
            want = pattern.fullmatch(w) is not None
            assert regex_matches(r, w) == want
            assert accepts(g, w) == want, (format_regex(r), w)


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_regex_print_parse_round_trip(rnd):
    r = random_regex(rnd, rnd.randint(1, 8))
    back = parse_regex(format_regex(r))
    # concatenation and alternation are printed flat, so compare languages
    assert all(regex_matches(back, w) == regex_matches(r, w) for w in words("ab", 5))
    assert format_regex(back) == format_regex(r)


def test_production_str():
    assert str(Production("S", "a", "B")) == "S -> B a"
