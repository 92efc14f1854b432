"""Amalgamation for classes Mod(Φ) of finite models of a universal Horn sentence.

Two independent routes:

* syntactic: subsumption between conjunctions, decided by saturation, and a
  bounded search for a one-point counterexample (φ, φ1, φ2, χ);
* semantic: enumerate small models and search every candidate amalgam by
  direct clause evaluation (:func:`brute_force_ap`), never touching the
  saturation engine.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from .entailment import (
    DeductionCertificate,
    Verdict,
    extract_sld_certificate,
    is_countermodel,
    saturate,
    verify_certificate,
)
from .logic import (
    Atom,
    FiniteStructure,
    HornClause,
    Signature,
    StructureMap,
    UniversalHornSentence,
    canonical_form,
    canonical_key,
    is_complete_clause,
    satisfies,
    variables_of,
)


class AmalgamationError(ValueError):
    pass


# -- subsumption -------------------------------------------------------------------

@dataclass(frozen=True)
class SubsumptionReport:
    holds: bool
    violations: Tuple[Optional[Atom], ...] = ()  # None stands for bottom

    def __bool__(self):
        return self.holds


def check_subsumption(
    sentence: UniversalHornSentence,
    phi: Iterable[Atom],
    psi_extra: Iterable[Atom],
    shared: Sequence,
    extra: Sequence,
) -> SubsumptionReport:
    """Does φ(x̄) subsume φ(x̄) ∧ ψ(x̄,ȳ) with respect to the sentence?

    Every consequence over x̄ (including bottom) of the larger conjunction
    must already follow from φ alone.
    """
    phi, psi_extra = frozenset(phi), frozenset(psi_extra)
    shared, extra = tuple(shared), tuple(extra)
    if set(shared) & set(extra):
        raise AmalgamationError("shared and extra variables overlap")
    if not variables_of(phi) <= set(shared):
        raise AmalgamationError("φ may only use shared variables")
    if not variables_of(psi_extra) <= set(shared) | set(extra):
        raise AmalgamationError("ψ uses undeclared variables")
    s_phi = saturate(sentence, phi, shared)
    if s_phi.inconsistent:
        return SubsumptionReport(True)
    s_psi = saturate(sentence, phi | psi_extra, shared + extra)
    if s_psi.inconsistent:
        return SubsumptionReport(False, (None,))
    missing = sorted(s_psi.restrict(shared) - s_phi.atoms)
    return SubsumptionReport(not missing, tuple(missing))


# -- counterexample certificates ----------------------------------------------------------

@dataclass(frozen=True)
class APCounterexample:
    """Witness that one-point amalgamation fails.

    φ ∧ φ1 ∧ φ2 ⇒ χ follows from the sentence, φ ∧ φ1 ⇒ χ does not (the
    countermodel shows it), and both φ ∧ φi are subsumed by φ.
    """

    shared: Tuple[str, ...]
    phi: FrozenSet[Atom]
    phi1: FrozenSet[Atom]
    phi2: FrozenSet[Atom]
    chi: Optional[Atom]
    certificate: DeductionCertificate = field(compare=False)
    countermodel: FiniteStructure = field(compare=False)
    y1: str = "y1"
    y2: str = "y2"
    reports: Tuple[SubsumptionReport, ...] = field(default=(), compare=False)

    @property
    def goal(self) -> HornClause:
        return HornClause(self.phi | self.phi1 | self.phi2, self.chi)

    @property
    def weak_goal(self) -> HornClause:
        return HornClause(self.phi | self.phi1, self.chi)

    @property
    def n_atoms(self) -> int:
        return len(self.phi) + len(self.phi1) + len(self.phi2)

    def to_dict(self) -> dict:
        cm = self.countermodel
        return {
            "shared": list(self.shared),
            "y1": self.y1,
            "y2": self.y2,
            "phi": [str(a) for a in sorted(self.phi)],
            "phi1": [str(a) for a in sorted(self.phi1)],
            "phi2": [str(a) for a in sorted(self.phi2)],
            "chi": "bot" if self.chi is None else str(self.chi),
            "entailment": self.certificate.to_dict(),
            "countermodel": {"domain": list(cm.domain), "facts": [str(a) for a in sorted(cm.facts)]},
            "subsumption": [
                {"extension": name, "holds": r.holds, "violations": ["bot" if v is None else str(v) for v in r.violations]}
                for name, r in zip(("phi1", "phi2"), self.reports)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict, signature: Signature) -> "APCounterexample":
        from .logic import atom as parse_atom

        atoms_of = lambda xs: frozenset(parse_atom(x) for x in xs)  # noqa: E731
        cm = d["countermodel"]
        model = FiniteStructure(signature, tuple(cm["domain"]), atoms_of(cm["facts"]))
        reports = tuple(
            SubsumptionReport(bool(r["holds"]), tuple(None if v == "bot" else parse_atom(v) for v in r["violations"]))
            for r in d.get("subsumption", [])
        )
        return cls(
            tuple(d["shared"]),
            atoms_of(d["phi"]),
            atoms_of(d["phi1"]),
            atoms_of(d["phi2"]),
            None if d["chi"] == "bot" else parse_atom(d["chi"]),
            DeductionCertificate.from_dict(d["entailment"]),
            model,
            d.get("y1", "y1"),
            d.get("y2", "y2"),
            reports,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def verify_counterexample(sentence: UniversalHornSentence, cex: APCounterexample) -> Verdict:
    """Re-check all evidence attached to ``cex``; no search."""
    shared = set(cex.shared)
    if cex.y1 in shared or cex.y2 in shared or cex.y1 == cex.y2:
        return Verdict(False, "y1, y2 must be distinct and not shared")
    if not variables_of(cex.phi) <= shared:
        return Verdict(False, "φ uses a non-shared variable")
    if not variables_of(cex.phi1) <= shared | {cex.y1}:
        return Verdict(False, "φ1 may only use shared variables and y1")
    if not variables_of(cex.phi2) <= shared | {cex.y2}:
        return Verdict(False, "φ2 may only use shared variables and y2")
    if cex.chi is not None and not set(cex.chi.args) <= shared | {cex.y1}:
        return Verdict(False, "χ may only use shared variables and y1")
    v = verify_certificate(sentence, cex.goal, cex.certificate)
    if not v:
        return Verdict(False, f"entailment certificate rejected: {v.reason}", v.step)
    if not is_countermodel(sentence, cex.weak_goal, cex.countermodel):
        return Verdict(False, "countermodel does not refute φ ∧ φ1 ⇒ χ")
    for i, (extra, y) in enumerate(((cex.phi1, cex.y1), (cex.phi2, cex.y2))):
        rep = check_subsumption(sentence, cex.phi, extra, cex.shared, (y,))
        if not rep:
            return Verdict(False, f"φ ∧ φ{i + 1} is not subsumed by φ: {rep.violations}")
        if len(cex.reports) > i and cex.reports[i] != rep:
            return Verdict(False, f"recorded subsumption report for φ{i + 1} does not match")
    return Verdict(True)


def item3_counterexample(
    sentence: UniversalHornSentence,
    shared: Sequence[str],
    phi: Iterable[Atom],
    phi1: Iterable[Atom],
    phi2: Iterable[Atom],
    y1: str = "y1",
    y2: str = "y2",
) -> Optional[APCounterexample]:
    """Counterexample built from the triple if it violates the one-point condition, else None.

    The triple is also tried with the roles of (φ1, y1) and (φ2, y2) swapped.
    Bottom is preferred as χ.
    """
    shared = tuple(shared)
    phi, phi1, phi2 = frozenset(phi), frozenset(phi1), frozenset(phi2)
    if not (check_subsumption(sentence, phi, phi1, shared, (y1,)) and check_subsumption(sentence, phi, phi2, shared, (y2,))):
        return None
    best = None
    for a, ya, b, yb in ((phi1, y1, phi2, y2), (phi2, y2, phi1, y1)):
        rep = check_subsumption(sentence, phi | a, b, shared + (ya,), (yb,))
        if rep:
            continue
        chi = rep.violations[0]
        cex = _package(sentence, shared, phi, a, b, chi, ya, yb)
        if chi is None:
            return cex
        best = best or cex
    return best


def _package(sentence, shared, phi, phi1, phi2, chi, y1, y2) -> APCounterexample:
    goal = HornClause(phi | phi1 | phi2, chi)
    cert = extract_sld_certificate(sentence, goal)
    b1 = saturate(sentence, phi | phi1, tuple(shared) + (y1,))
    if b1.inconsistent:
        raise AmalgamationError("φ ∧ φ1 is unsatisfiable; not a counterexample")
    reports = (
        check_subsumption(sentence, phi, phi1, shared, (y1,)),
        check_subsumption(sentence, phi, phi2, shared, (y2,)),
    )
    model = b1.to_structure(sentence.signature)
    return APCounterexample(tuple(shared), phi, phi1, phi2, chi, cert, model, y1, y2, reports)


# -- bounded counterexample search ------------------------------------------------------

def all_clauses_complete(sentence: UniversalHornSentence) -> bool:
    return all(is_complete_clause(c) for c in sentence.clauses)


def _mgu(alpha: Atom, beta: Atom, keep: set) -> Optional[dict]:
    """Unifier of two variable-only atoms, preferring representatives from ``keep``."""
    if alpha.symbol != beta.symbol or len(alpha.args) != len(beta.args):
        return None
    parent: dict = {}

    def find(v):
        while parent.get(v, v) != v:
            v = parent[v]
        return v

    for u, v in zip(alpha.args, beta.args):
        ru, rv = find(u), find(v)
        if ru == rv:
            continue
        # keep-variables win; among equals, the smaller name
        pick = min((ru, rv), key=lambda z: (z not in keep, z))
        other = rv if pick == ru else ru
        parent[other] = pick
    return {v: find(v) for v in set(alpha.args) | set(beta.args)}


def _resolvents(premise: FrozenSet[Atom], sentence: UniversalHornSentence) -> Iterator[FrozenSet[Atom]]:
    keep = set(variables_of(premise))
    for a in sorted(premise):
        for ci, c in enumerate(sentence.clauses):
            if c.conclusion is None or c.conclusion.symbol != a.symbol:
                continue
            fresh = {v: f"_r{ci}_{v}" for v in c.variables}
            concl = c.conclusion.rename(fresh)
            theta = _mgu(a, concl, keep)
            if theta is None:
                continue
            sub = lambda v: theta.get(v, v)  # noqa: E731
            rest = {Atom(b.symbol, tuple(sub(v) for v in b.args)) for b in premise if b != a}
            side = {Atom(b.symbol, tuple(sub(fresh[v]) for v in b.args)) for b in c.premise}
            yield frozenset(rest | side)


def _identifications(premise: FrozenSet[Atom]) -> Iterator[FrozenSet[Atom]]:
    vs = sorted(variables_of(premise))
    for u, v in itertools.combinations(vs, 2):
        yield frozenset(Atom(a.symbol, tuple(u if x == v else x for x in a.args)) for a in premise)


def derived_premises(
    sentence: UniversalHornSentence,
    max_vars: int,
    max_atoms: int,
    identify: bool = True,
) -> List[FrozenSet[Atom]]:
    """Canonical premises of clauses derivable from the sentence by SLD resolution.

    Breadth-first from the clauses themselves; each step resolves one
    premise atom or (with ``identify``) merges two variables. Premises with
    more than ``max_atoms`` atoms or ``max_vars`` variables are not expanded.
    """
    seen = set()
    raw = set()
    out: List[FrozenSet[Atom]] = []
    frontier = []
    for c in sentence.clauses:
        if c.premise:
            frontier.append(c.premise)
    while frontier:
        nxt = []
        for p in frontier:
            if p in raw or len(p) > max_atoms or len(variables_of(p)) > max_vars:
                continue
            raw.add(p)
            canon, _ = canonical_form(p)
            if canon in seen:
                continue
            seen.add(canon)
            out.append(canon)
            nxt.extend(_resolvents(canon, sentence))
            if identify:
                nxt.extend(_identifications(canon))
        frontier = nxt
    return out


def _adjacent_pairs(premise: Iterable[Atom]) -> set:
    pairs = set()
    for a in premise:
        for u, v in itertools.permutations(set(a.args), 2):
            pairs.add((u, v))
    return pairs


def _cofiring_pairs(closure) -> set:
    """Ordered pairs of elements assigned together by some firing of the closure.

    A role split (y1, y2) can only give a counterexample if the closure of
    the whole seed uses a clause instance touching both points: otherwise every
    consequence stays on one side.
    """
    pairs = set()
    for f in closure.trace:
        pairs.update(itertools.permutations({v for _, v in f.assignment}, 2))
    return pairs


def _candidate_from_seed(sentence, seed: FrozenSet[Atom], y1, y2, whole):
    """Close the role split of ``seed`` into a triple meeting both subsumption conditions.

    φ is the least set over x̄ containing the seed's x̄-atoms such that
    neither φ ∧ φ1 nor φ ∧ φ2 adds anything over x̄. ``whole`` is the
    closure of the seed over all its variables, which is also the closure of
    the glued triple. Returns (x̄, φ, φ1, φ2, χ) when the triple violates the
    one-point condition on the y1 side, else None.
    """
    shared = tuple(sorted(variables_of(seed) - {y1, y2}))
    side1 = shared + (y1,)
    phi0 = frozenset(a for a in seed if y1 not in a.args and y2 not in a.args)
    part1 = frozenset(a for a in seed if y1 in a.args)
    part2 = frozenset(a for a in seed if y2 in a.args)
    target = None if whole.inconsistent else whole.restrict(side1)
    base = saturate(sentence, phi0, shared, record=False)
    a = base
    while True:
        if a.inconsistent:
            return None
        b1 = saturate(sentence, a.atoms | part1, side1, record=False)
        if b1.inconsistent or (target is not None and target <= b1.atoms):
            return None
        b2 = saturate(sentence, a.atoms | part2, shared + (y2,), record=False)
        if b2.inconsistent:
            return None
        grown = a.atoms | b1.restrict(shared) | b2.restrict(shared)
        if grown == a.atoms:
            break
        a = saturate(sentence, grown, shared, record=False)
    chi = None if target is None else min(target - b1.atoms)
    return shared, phi0 | (a.atoms - base.atoms), part1, part2, chi


def _rename_candidate(shared, phi, phi1, phi2, chi, y1, y2):
    """Readable names x1.., y1, y2 in canonical order, plus a sort key."""
    markers = {Atom("@y1", (y1,)), Atom("@y2", (y2,))}
    if chi is not None:
        markers.add(Atom("@chi:" + chi.symbol, chi.args))
    else:
        markers.add(Atom("@bot", (y1,)))
    body = phi | phi1 | phi2 | markers
    canon, sub = canonical_form(body, extra_variables=shared)
    order = sorted(shared, key=lambda v: sub(v))
    names = {v: f"x{i}" for i, v in enumerate(order, start=1)}
    names[y1], names[y2] = "y1", "y2"
    ren = lambda s: frozenset(a.rename(names) for a in s)  # noqa: E731
    key = tuple(sorted(canon))
    return (
        tuple(names[v] for v in order),
        ren(phi),
        ren(phi1),
        ren(phi2),
        None if chi is None else chi.rename(names),
    ), key


def _fresh_variable(taken) -> str:
    i = 0
    while f"w{i}" in taken:
        i += 1
    return f"w{i}"


def find_ap_counterexample(
    sentence: UniversalHornSentence,
    max_shared_vars: int,
    max_atoms: int,
    identify: bool = True,
) -> Optional[APCounterexample]:
    """Least one-point amalgamation counterexample within the bounds, or None.

    Order: fewest shared variables, then fewest atoms in φ, φ1, φ2, then the
    smaller φ1, then the canonical form. ``None`` only means nothing was
    found up to the bounds, except for sentences of complete clauses, where
    amalgamation is free and no counterexample exists at all.

    Seeds are premises of clauses obtained by unfolding the sentence; with
    ``identify`` they are also closed under merging two variables, which is
    needed in general but multiplies the search space.
    """
    if max_shared_vars < 1 or max_atoms < 1:
        raise AmalgamationError("bounds must be positive")
    if all_clauses_complete(sentence):
        return None
    # a clause whose head has variables missing from its premise reaches
    # points the seed never mentions, so give each seed one isolated point
    loose = any(
        c.conclusion is not None and not set(c.conclusion.args) <= variables_of(c.premise)
        for c in sentence.clauses
    )
    seeds = derived_premises(sentence, max_shared_vars + 2, max_atoms, identify)
    seeds.sort(key=lambda p: (len(variables_of(p)) + loose, len(p)))
    best = None
    for seed in seeds:
        vs = sorted(variables_of(seed))
        if loose:
            vs.append(_fresh_variable(vs))
        if len(vs) - 2 > max_shared_vars:
            continue
        if best is not None and best[0][:2] < (len(vs) - 2, len(seed)):
            break
        adjacent = _adjacent_pairs(seed)
        whole = saturate(sentence, seed, vs)
        cofiring = _cofiring_pairs(whole)
        for y1, y2 in itertools.permutations(vs, 2):
            if (y1, y2) in adjacent or (y1, y2) not in cofiring:
                continue
            found = _candidate_from_seed(sentence, seed, y1, y2, whole)
            if found is None:
                continue
            shared, phi, phi1, phi2, chi = found
            size = len(phi) + len(phi1) + len(phi2)
            if size > max_atoms:
                continue
            named, key = _rename_candidate(shared, phi, phi1, phi2, chi, y1, y2)
            rank = (len(shared), size, len(phi1), key)
            if best is None or rank < best[0]:
                best = (rank, named)
    if best is None:
        return None
    shared, phi, phi1, phi2, chi = best[1]
    return _package(sentence, shared, phi, phi1, phi2, chi, "y1", "y2")


# -- amalgams -------------------------------------------------------------------------

@dataclass(frozen=True)
class AmalgamResult:
    amalgam: Optional[FiniteStructure] = None
    f1: Optional[StructureMap] = None
    f2: Optional[StructureMap] = None
    counterexample: Optional[APCounterexample] = None

    @property
    def refuted(self) -> bool:
        return self.counterexample is not None


def _check_embedding(e: StructureMap, name: str):
    if not e.is_embedding():
        raise AmalgamationError(f"{name} is not an embedding")


def free_amalgam(A: FiniteStructure, B1: FiniteStructure, B2: FiniteStructure, e1: StructureMap, e2: StructureMap):
    """Glue B1 and B2 along A; relations are exactly the union of the two images.

    Returns (C, f1, f2). C's domain is 0..n-1: A first, then the rest of B1,
    then the rest of B2. Membership of C in any class is not checked.
    """
    for e, src, tgt, name in ((e1, A, B1, "e1"), (e2, A, B2, "e2")):
        if e.source != src or e.target != tgt:
            raise AmalgamationError(f"{name} does not go from A to its B")
        _check_embedding(e, name)
    label: Dict[Tuple[int, object], int] = {}
    for i, a in enumerate(A.domain):
        label[(1, e1(a))] = i
        label[(2, e2(a))] = i
    n = len(A.domain)
    for side, B in ((1, B1), (2, B2)):
        for b in B.domain:
            if (side, b) not in label:
                label[(side, b)] = n
                n += 1
    m1 = {b: label[(1, b)] for b in B1.domain}
    m2 = {b: label[(2, b)] for b in B2.domain}
    facts = {f.rename(m1) for f in B1.facts} | {f.rename(m2) for f in B2.facts}
    C = FiniteStructure(A.signature.union(B1.signature).union(B2.signature), tuple(range(n)), frozenset(facts))
    f1, f2 = StructureMap.of(B1, C, m1), StructureMap.of(B2, C, m2)
    return C, f1, f2


def _one_point_setup(sentence, A, B1, B2, e1, e2):
    for X, name in ((A, "A"), (B1, "B1"), (B2, "B2")):
        if not satisfies(X, sentence):
            raise AmalgamationError(f"{name} is not a model of the sentence")
    for e, src, tgt, name in ((e1, A, B1, "e1"), (e2, A, B2, "e2")):
        if e.source != src or e.target != tgt:
            raise AmalgamationError(f"{name} does not go from A to its B")
        _check_embedding(e, name)
    if len(B1) != len(A) + 1 or len(B2) != len(A) + 1:
        raise AmalgamationError("B1 and B2 must each have exactly one element more than A")


def one_point_amalgam(
    sentence: UniversalHornSentence,
    A: FiniteStructure,
    B1: FiniteStructure,
    B2: FiniteStructure,
    e1: StructureMap,
    e2: StructureMap,
) -> AmalgamResult:
    """Strong amalgam of a one-point triple by saturating the glued diagrams, or a refutation."""
    _one_point_setup(sentence, A, B1, B2, e1, e2)
    n = len(A)
    xs = [f"x{i}" for i in range(1, n + 1)]
    to_var1 = {e1(a): x for a, x in zip(A.domain, xs)}
    to_var2 = {e2(a): x for a, x in zip(A.domain, xs)}
    (b1,) = [b for b in B1.domain if b not in to_var1]
    (b2,) = [b for b in B2.domain if b not in to_var2]
    to_var1[b1], to_var2[b2] = "y1", "y2"
    phi = frozenset(f.rename(dict(zip(A.domain, xs))) for f in A.facts)
    d1 = frozenset(f.rename(to_var1) for f in B1.facts)
    d2 = frozenset(f.rename(to_var2) for f in B2.facts)
    phi1 = frozenset(a for a in d1 if "y1" in a.args)
    phi2 = frozenset(a for a in d2 if "y2" in a.args)
    domain = tuple(xs) + ("y1", "y2")
    closed = saturate(sentence, d1 | d2, domain)
    new1 = closed.restrict(xs + ["y1"]) - d1
    new2 = closed.restrict(xs + ["y2"]) - d2
    if closed.inconsistent or new1 or new2:
        cex = item3_counterexample(sentence, tuple(xs), phi, phi1, phi2)
        if cex is None:
            raise AmalgamationError("saturation refuted the triple but no counterexample verified")
        return AmalgamResult(counterexample=cex)
    label = {v: i for i, v in enumerate(domain)}
    C = FiniteStructure(sentence.signature, tuple(range(len(domain))), frozenset(a.rename(label) for a in closed.atoms))
    f1 = StructureMap.of(B1, C, {b: label[v] for b, v in to_var1.items()})
    f2 = StructureMap.of(B2, C, {b: label[v] for b, v in to_var2.items()})
    assert satisfies(C, sentence), "saturated glue is not a model"
    assert f1.is_embedding() and f2.is_embedding(), "amalgam maps are not embeddings"
    assert all(f1(e1(a)) == f2(e2(a)) for a in A.domain), "amalgam does not commute over A"
    assert f1.image() & f2.image() == frozenset(f1(e1(a)) for a in A.domain), "amalgam is not strong"
    return AmalgamResult(C, f1, f2)


# -- semantic oracle ------------------------------------------------------------------

def _tuples(signature: Signature, domain: Sequence) -> List[Atom]:
    return [Atom(name, t) for name, ar in signature.symbols for t in itertools.product(domain, repeat=ar)]


def enumerate_models(sentence: UniversalHornSentence, size: int) -> Iterator[FiniteStructure]:
    """Every model on {1..size}, ordered by the bitmask of facts over the tuple list."""
    if size < 0:
        raise AmalgamationError("size must be non-negative")
    domain = tuple(range(1, size + 1))
    cells = _tuples(sentence.signature, domain)
    for bits in itertools.product((False, True), repeat=len(cells)):
        facts = frozenset(c for c, b in zip(cells, bits) if b)
        s = FiniteStructure(sentence.signature, domain, facts)
        if satisfies(s, sentence):
            yield s


class _GroundCheck:
    """Clause instances of a sentence whose assignment meets every element of ``required``."""

    def __init__(self, sentence: UniversalHornSentence, domain: Sequence, required: Sequence):
        self.instances = []
        req = set(required)
        for c in sentence.clauses:
            vs = c.variables
            for values in itertools.product(domain, repeat=len(vs)):
                if not req <= set(values):
                    continue
                env = dict(zip(vs, values))
                prem = tuple(a.rename(env) for a in c.premise)
                concl = None if c.conclusion is None else c.conclusion.rename(env)
                self.instances.append((prem, concl))

    def violated(self, facts) -> bool:
        for prem, concl in self.instances:
            if all(p in facts for p in prem) and (concl is None or concl not in facts):
                return True
        return False


def one_point_extensions(sentence: UniversalHornSentence, A: FiniteStructure, new) -> Iterator[FiniteStructure]:
    """Every model on A's domain plus ``new`` whose restriction to A is A."""
    domain = tuple(A.domain) + (new,)
    cells = [c for c in _tuples(sentence.signature, domain) if new in c.args]
    check = _GroundCheck(sentence, domain, (new,))
    for bits in itertools.product((False, True), repeat=len(cells)):
        facts = A.facts | frozenset(c for c, b in zip(cells, bits) if b)
        if not check.violated(facts):
            yield FiniteStructure(sentence.signature, domain, facts)


def models_up_to_iso(sentence: UniversalHornSentence, size: int) -> List[FiniteStructure]:
    reps = {}
    for m in enumerate_models(sentence, size):
        key = canonical_key(m.facts, extra_variables=m.domain)
        reps.setdefault(key, m)
    return list(reps.values())


@lru_cache(maxsize=64)
def _mixed_problem(sentence: UniversalHornSentence, n: int):
    """Free cells and bucketed clause instances for amalgams of |A| = n kept apart.

    Cells are the tuples meeting both new points n and n+1; each instance is
    filed under the last free cell it mentions (-1 if it mentions none), so
    the depth-first search can test it as soon as it is fully decided.
    """
    domain = tuple(range(n + 2))
    free = [c for c in _tuples(sentence.signature, domain) if n in c.args and n + 1 in c.args]
    position = {c: i for i, c in enumerate(free)}
    buckets: Dict[int, list] = {}
    for prem, concl in _GroundCheck(sentence, domain, (n, n + 1)).instances:
        mentioned = list(prem) + ([concl] if concl is not None else [])
        k = max((position[a] for a in mentioned if a in position), default=-1)
        buckets.setdefault(k, []).append((prem, concl))
    return domain, free, buckets


def _backtrack_amalgam(buckets: Dict[int, list], fixed: frozenset, free: List[Atom]) -> Optional[frozenset]:
    """Any choice of the free facts that, with ``fixed``, falsifies no bucketed instance."""

    def falsified(inst, facts):
        prem, concl = inst
        return all(p in facts for p in prem) and (concl is None or concl not in facts)

    facts = set(fixed)
    if any(falsified(i, facts) for i in buckets.get(-1, ())):
        return None

    def go(k):
        if k == len(free):
            return frozenset(facts)
        for val in (False, True):
            if val:
                facts.add(free[k])
            if not any(falsified(i, facts) for i in buckets.get(k, ())):
                res = go(k + 1)
                if res is not None:
                    return res
            if val:
                facts.discard(free[k])
        return None

    return go(0)


def find_amalgam(sentence: UniversalHornSentence, A, B1, B2, e1, e2):
    """Exhaustive search for an amalgam of a one-point triple by direct evaluation.

    Candidates: C on |A|+1 elements (the two new points identified) and on
    |A|+2 elements (kept apart). Every amalgam restricts to one of these, since
    Mod(Φ) is closed under substructures. Returns (C, f1, f2) or None.
    """
    n = len(A)
    base = tuple(range(n))
    in1 = {e1(a): i for i, a in enumerate(A.domain)}
    in2 = {e2(a): i for i, a in enumerate(A.domain)}
    (b1,) = [b for b in B1.domain if b not in in1]
    (b2,) = [b for b in B2.domain if b not in in2]

    # identified: C has domain base + {n}; both B's must agree on it
    m1 = {**in1, b1: n}
    m2 = {**in2, b2: n}
    f1_facts = frozenset(f.rename(m1) for f in B1.facts)
    f2_facts = frozenset(f.rename(m2) for f in B2.facts)
    if f1_facts == f2_facts:
        C = FiniteStructure(sentence.signature, base + (n,), f1_facts)
        return C, StructureMap.of(B1, C, m1), StructureMap.of(B2, C, m2)

    # apart: C has domain base + {n, n+1}; only tuples meeting both new points are free
    m2 = {**in2, b2: n + 1}
    fixed = f1_facts | frozenset(f.rename(m2) for f in B2.facts)
    domain, free, buckets = _mixed_problem(sentence, n)
    facts = _backtrack_amalgam(buckets, fixed, free)
    if facts is None:
        return None
    C = FiniteStructure(sentence.signature, domain, facts)
    return C, StructureMap.of(B1, C, m1), StructureMap.of(B2, C, m2)


@dataclass(frozen=True)
class FailingTriple:
    A: FiniteStructure
    B1: FiniteStructure
    B2: FiniteStructure
    e1: StructureMap
    e2: StructureMap


def iter_one_point_triples(sentence: UniversalHornSentence, max_size: int) -> Iterator[FailingTriple]:
    """All one-point triples with |A| < max_size: A up to isomorphism, unordered {B1, B2}."""
    for size in range(0, max_size):
        for A in models_up_to_iso(sentence, size):
            new = size + 1
            exts = list(one_point_extensions(sentence, A, new))
            ident = {a: a for a in A.domain}
            for i, B1 in enumerate(exts):
                for B2 in exts[i:]:
                    yield FailingTriple(A, B1, B2, StructureMap.of(A, B1, ident), StructureMap.of(A, B2, ident))


def brute_force_ap(sentence: UniversalHornSentence, max_size: int) -> Optional[FailingTriple]:
    """First one-point triple (|B| <= max_size) without an amalgam, by exhaustive search."""
    if max_size < 1:
        raise AmalgamationError("max_size must be at least 1")
    for t in iter_one_point_triples(sentence, max_size):
        if find_amalgam(sentence, t.A, t.B1, t.B2, t.e1, t.e2) is None:
            return t
    return None


def triple_from_counterexample(sentence: UniversalHornSentence, cex: APCounterexample) -> FailingTriple:
    """The models A ⊆ B1, B2 read off a counterexample: closures of φ, φ ∧ φ1 and φ ∧ φ2."""
    shared = tuple(cex.shared)
    parts = (
        (cex.phi, shared),
        (cex.phi | cex.phi1, shared + (cex.y1,)),
        (cex.phi | cex.phi2, shared + (cex.y2,)),
    )
    A, B1, B2 = (saturate(sentence, atoms, dom, record=False).to_structure(sentence.signature) for atoms, dom in parts)
    ident = {v: v for v in shared}
    return FailingTriple(A, B1, B2, StructureMap.of(A, B1, ident), StructureMap.of(A, B2, ident))
