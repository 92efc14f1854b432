import itertools
import random

import pytest

from hornap.grammar import Grammar
from hornap.logic import Atom, HornClause, Signature, UniversalHornSentence, is_complete_clause

UNIVERSAL_RULES = ["S -> a", "S -> b", "S -> A a", "S -> A b", "A -> a", "A -> b", "A -> A a", "A -> A b"]


@pytest.fixture
def universal_grammar():
    return Grammar.from_rules(UNIVERSAL_RULES, ["a", "b"])


@pytest.fixture
def only_a():
    return Grammar.from_rules(["S -> a"], ["a", "b"])


@pytest.fixture
def s_ba():
    return Grammar.from_rules(["S -> B a", "B -> a"], ["a", "b"])


def random_sentence(rng: random.Random, n_symbols=2, max_arity=2, max_clauses=3, max_vars=3, complete=False, arities=None):
    """Small random Horn sentence; with ``complete`` every clause is made complete.

    ``arities`` fixes the signature (one symbol per entry) instead of drawing it.
    """
    if arities is None:
        arities = [rng.randint(1, max_arity) for _ in range(rng.randint(1, n_symbols))]
    symbols = tuple((f"R{i}", k) for i, k in enumerate(arities))
    sig = Signature(symbols)
    clauses = []
    for _ in range(rng.randint(1, max_clauses)):
        while True:
            vs = [f"v{i}" for i in range(rng.randint(1, max_vars))]
            premise = set()
            for _ in range(rng.randint(0, 3)):
                name, ar = rng.choice(symbols)
                premise.add(Atom(name, tuple(rng.choice(vs) for _ in range(ar))))
            if rng.random() < 0.25:
                concl = None
            else:
                name, ar = rng.choice(symbols)
                concl = Atom(name, tuple(rng.choice(vs) for _ in range(ar)))
            c = HornClause(frozenset(premise), concl)
            if not complete or is_complete_clause(c):
                break
        clauses.append(c)
    return UniversalHornSentence(sig, tuple(clauses))


def all_structures(signature, domain):
    cells = [Atom(n, t) for n, a in signature.symbols for t in itertools.product(domain, repeat=a)]
    for bits in itertools.product((False, True), repeat=len(cells)):
        yield frozenset(c for c, b in zip(cells, bits) if b)


def holds_everywhere(sentence, domain, facts):
    """Plain evaluation of every clause under every assignment (test-side oracle)."""
    for c in sentence.clauses:
        vs = c.variables
        for vals in itertools.product(domain, repeat=len(vs)):
            env = dict(zip(vs, vals))
            if all(a.rename(env) in facts for a in c.premise):
                if c.conclusion is None or c.conclusion.rename(env) not in facts:
                    return False
    return True


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
