"""Acceptance criteria, one test each.

Each test records a ``PASS``/``FAIL`` line (with timing and counts); the
lines are printed at the end of the pytest run by the hook in conftest.py,
and also when this file is run directly with ``python3 tests/test_acceptance.py``.
"""

import itertools
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import UNIVERSAL_RULES, holds_everywhere, random_sentence  # noqa: E402

from hornap.amalgamation import (  # noqa: E402
    brute_force_ap,
    find_ap_counterexample,
    free_amalgam,
    iter_one_point_triples,
    verify_counterexample,
)
from hornap.entailment import (  # noqa: E402
    countermodel,
    entails_clause,
    extract_sld_certificate,
    is_countermodel,
    verify_certificate,
)
from hornap.grammar import Grammar, hard_instance, shortest_rejected, words  # noqa: E402
from hornap.logic import Atom, HornClause, is_complete_clause  # noqa: E402
from hornap.reduction import (  # noqa: E402
    check_claim1,
    check_claim2,
    compile_grammar,
    cross_check,
    encode_word,
    structural_violations,
)
from hornap.syntax import parse_sentence  # noqa: E402

RESULTS = []


def record(number, title, ok, detail, seconds):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail}; {seconds:.1f} s)"
    RESULTS.append(line)
    print(line, flush=True)
    return ok


# -- 1. certificates and countermodels ------------------------------------------------------

def _goal(rng, s):
    vs = [f"u{i}" for i in range(rng.randint(1, 3))]
    syms = s.signature.symbols
    prem = frozenset(
        Atom(n, tuple(rng.choice(vs) for _ in range(k))) for n, k in (rng.choice(syms) for _ in range(rng.randint(0, 3)))
    )
    used = sorted({v for a in prem for v in a.args}) or vs[:1]
    if rng.random() < 0.3:
        return HornClause(prem, None)
    n, k = rng.choice(syms)
    return HornClause(prem, Atom(n, tuple(rng.choice(used) for _ in range(k))))


def criterion_1():
    t0 = time.perf_counter()
    rng = random.Random(1)
    bad, entailed, total = [], 0, 0
    for _ in range(200):
        s = random_sentence(rng, n_symbols=2, max_arity=2, max_clauses=3, max_vars=3)
        for _ in range(5):
            goal = _goal(rng, s)
            total += 1
            if entails_clause(s, goal):
                entailed += 1
                if not verify_certificate(s, goal, extract_sld_certificate(s, goal)):
                    bad.append((s, goal))
            else:
                m = countermodel(s, goal)
                if m is None or not is_countermodel(s, goal, m) or not holds_everywhere(s, m.domain, m.facts):
                    bad.append((s, goal))
    dt = time.perf_counter() - t0
    ok = not bad and total == 1000 and dt < 60
    return record(1, "certificates verify / countermodels refute", ok,
                  f"{total - len(bad)}/{total} agree, {entailed} entailed, limit 60 s", dt)


# -- 2. complete clauses amalgamate freely ------------------------------------------------

def criterion_2():
    t0 = time.perf_counter()
    rng = random.Random(2)
    failures, triples = 0, 0
    for _ in range(100):
        # at most one binary symbol keeps the size-3 triple space enumerable
        s = random_sentence(rng, complete=True, arities=rng.choice([(1,), (2,), (1, 1), (1, 2), (2, 1)]))
        assert all(is_complete_clause(c) for c in s.clauses)
        if brute_force_ap(s, 3) is not None:
            failures += 1
        for t in iter_one_point_triples(s, 3):
            triples += 1
            C, _, _ = free_amalgam(t.A, t.B1, t.B2, t.e1, t.e2)
            if not holds_everywhere(s, C.domain, C.facts):
                failures += 1
    dt = time.perf_counter() - t0
    return record(2, "complete-clause sentences: no failing triple, free amalgams are models", failures == 0,
                  f"100 sentences, {triples} triples, {failures} failures", dt)


# -- 3. one-point characterization on a catalog --------------------------------------------

CATALOG = {
    # amalgamation holds
    "symmetric": "rel E/2.\nE(x,y) -> E(y,x).",
    "irreflexive symmetric": "rel E/2.\nE(x,y) -> E(y,x).\nE(x,x) -> bot.",
    "transitive": "rel E/2.\nE(x,y), E(y,z) -> E(x,z).",
    "loop at source": "rel E/2.\nE(x,y) -> E(x,x).",
    "target loops": "rel E/2.\nE(x,y) -> E(y,y).",
    "reflexive 2-cycles": "rel E/2.\nE(x,y), E(y,x) -> E(x,x).",
    "unary chain": "rel P/1. rel Q/1. rel R/1.\nP(x) -> Q(x).\nQ(x) -> R(x).",
    "disjoint unaries": "rel P/1. rel Q/1.\nP(x), Q(x) -> bot.",
    "loopless": "rel E/2.\nE(x,x) -> bot.",
    "antisymmetric": "rel E/2.\nE(x,y), E(y,x) -> bot.",
    "no edges": "rel E/2.\nE(x,y) -> bot.",
    "at most one loop": "rel E/2.\nE(x,x), E(y,y) -> bot.",
    # x = y makes P empty
    "at most one P": "rel P/1.\nP(x), P(y) -> bot.",
    # amalgamation fails
    "no 2-paths": "rel E/2.\nE(x,y), E(y,z) -> bot.",
    "euclidean": "rel E/2.\nE(x,y), E(x,z) -> E(y,z).",
    "P and Q exclusive": "rel P/1. rel Q/1.\nP(x), Q(y) -> bot.",
    "Q spreads R to P": "rel P/1. rel Q/1. rel R/1.\nP(x), Q(y) -> R(x).",
    "P spreads over Q": "rel P/1. rel Q/1.\nP(x), Q(y) -> P(y).",
    "P forces all Q": "rel P/1. rel Q/1.\nP(x) -> Q(y).",
    "P excludes edges": "rel E/2. rel P/1.\nP(x), E(y,z) -> bot.",
}


def criterion_3():
    t0 = time.perf_counter()
    agree, failing, lines = 0, 0, []
    for name, text in CATALOG.items():
        s = parse_sentence(text)
        semantic = brute_force_ap(s, 4) is not None
        cex = find_ap_counterexample(s, 3, 10)
        syntactic = cex is not None
        if cex is not None and not verify_counterexample(s, cex):
            syntactic = None
        failing += semantic
        if semantic == syntactic:
            agree += 1
        else:
            lines.append(f"{name}: oracle {semantic}, search {syntactic}")
    dt = time.perf_counter() - t0
    ok = agree == len(CATALOG) and failing >= 5 and dt < 600
    detail = f"{agree}/{len(CATALOG)} agree, {failing} without AP, limit 600 s"
    if lines:
        detail += "; " + "; ".join(lines)
    return record(3, "brute_force_ap(4) vs find_ap_counterexample(3, 10)", ok, detail, dt)


# -- 4. derivations ---------------------------------------------------------------------------

def all_small_grammar_rules():
    nts = ["S", "A", "B", "C"]
    rhs = ["a", "b"] + [f"{n} {t}" for n in nts[1:] for t in "ab"]
    return [f"{lhs} -> {r}" for lhs in nts for r in rhs]


def criterion_4():
    t0 = time.perf_counter()
    rules = all_small_grammar_rules()
    space = [c for k in range(1, 5) for c in itertools.combinations(rules, k)]
    sample = random.Random(4).sample(space, 500) if len(space) > 500 else space
    checks, bad = 0, []
    for combo in sample:
        out = compile_grammar(Grammar.from_rules(combo, ["a", "b"]))
        for n in out.grammar.nonterminals:
            for w in words("ab", 4):
                d, e = check_claim1(out, n, w)
                checks += 1
                if d != e:
                    bad.append((combo, n, w))
    dt = time.perf_counter() - t0
    return record(4, "derivation/entailment agreement on compiled grammars", not bad,
                  f"{len(sample)} of {len(space)} grammars, {checks - len(bad)}/{checks} agree", dt)


# -- 5. path patterns ---------------------------------------------------------------------------

def criterion_5():
    t0 = time.perf_counter()
    total, bad, positive = 0, 0, 0
    for w in words("ab", 4):
        ent, pat = check_claim2("ab", encode_word(w).all_atoms)
        total += 1
        bad += not (ent and pat)
    rng = random.Random(5)
    sig = [("I", 1), ("T", 1), ("E", 2), ("F", 2), ("Ra", 2), ("Rb", 2)]
    for _ in range(200):
        vs = [f"v{i}" for i in range(rng.randint(1, 5))]
        chosen = {Atom(n, tuple(rng.choice(vs) for _ in range(k))) for n, k in (rng.choice(sig) for _ in range(rng.randint(1, 24)))}
        ent, pat = check_claim2("ab", chosen)
        total += 1
        positive += ent
        bad += ent != pat
    dt = time.perf_counter() - t0
    return record(5, "bottom entailment/path pattern agreement", bad == 0,
                  f"{total - bad}/{total} agree, {positive} random sets entail bottom", dt)


# -- 6, 7, 8. end-to-end reduction -----------------------------------------------------------

def suite():
    return {
        "universal": (Grammar.from_rules(UNIVERSAL_RULES, ["a", "b"]), 6),
        "S->a": (Grammar.from_rules(["S -> a"], ["a", "b"]), 6),
        "S->Ba,B->a": (Grammar.from_rules(["S -> B a", "B -> a"], ["a", "b"]), 6),
        "hard_instance(1)": (hard_instance(1), 6),
        "hard_instance(2)": (hard_instance(2), 8),
    }


def criterion_6():
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, (g, wb) in suite().items():
        r = cross_check(g, wb)
        good = r.agree and r.rejected == shortest_rejected(g, wb)
        if r.counterexample is not None:
            good = good and bool(verify_counterexample(compile_grammar(g).sentence, r.counterexample))
        ok &= good
        parts.append(f"{name}: {r.rejected or 'none'}/{r.decoded or 'none'}")
    dt = time.perf_counter() - t0
    ok &= dt < 900
    return record(6, "cross_check agreement on the grammar suite", ok, ", ".join(parts) + ", limit 900 s", dt)


def criterion_7():
    t0 = time.perf_counter()
    cases = {
        1: Grammar.from_rules(["S -> a"], ["a", "b"]),
        2: Grammar.from_rules(["S -> a", "S -> b"], ["a", "b"]),
        3: Grammar.from_rules(["S -> a", "S -> b", "S -> A a", "S -> A b", "A -> a", "A -> b"], ["a", "b"]),
        6: hard_instance(2),
    }
    parts, ok = [], True
    for length, g in cases.items():
        w = shortest_rejected(g, length)
        r = cross_check(g, length)
        n = None if r.counterexample is None else len(r.counterexample.shared)
        good = w is not None and len(w) == length and n == length and r.decoded == w
        ok &= good
        parts.append(f"|w|={length}: n={n}")
    dt = time.perf_counter() - t0
    return record(7, "minimal counterexample path length equals shortest rejected length", ok, ", ".join(parts), dt)


def criterion_8():
    t0 = time.perf_counter()
    grammars = [g for g, _ in suite().values()]
    grammars += [Grammar.from_rules(["S -> a", "S -> b"], ["a", "b"]), hard_instance(3)]
    problems = []
    for g in grammars:
        problems += structural_violations(compile_grammar(g))
    dt = time.perf_counter() - t0
    return record(8, "structural invariants of compiled sentences", not problems,
                  f"{len(grammars)} grammars, {len(problems)} violations", dt)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_criterion(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
