"""Forward-chaining saturation and SLD-deduction certificates.

Entailment ``Φ ⊨ goal`` is decided on the semantic side: the goal's variables
form a fixed domain, its premise is closed under the clauses of Φ, and the
goal holds iff the closure contains the conclusion or is inconsistent.
SLD certificates are read backwards off the saturation trace and can be
checked by :func:`verify_certificate` without any search.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .logic import (
    Atom,
    FiniteStructure,
    HornClause,
    Substitution,
    SubstitutionError,
    UniversalHornSentence,
    apply_substitution,
    is_tautology,
    is_weakening,
    violated_assignment,
)


class NotEntailed(ValueError):
    pass


@dataclass(frozen=True)
class Firing:
    clause_index: int
    assignment: Tuple[tuple, ...]
    premise: Tuple[Atom, ...]
    conclusion: Optional[Atom]


@dataclass(frozen=True)
class CanonicalStructure:
    domain: tuple
    atoms: FrozenSet[Atom]
    inconsistent: bool
    trace: Tuple[Firing, ...] = field(default=(), repr=False, compare=False)

    def __contains__(self, a: Atom) -> bool:
        return a in self.atoms

    def restrict(self, elements: Iterable) -> FrozenSet[Atom]:
        keep = set(elements)
        return frozenset(a for a in self.atoms if set(a.args) <= keep)

    def to_structure(self, signature) -> FiniteStructure:
        return FiniteStructure(signature, self.domain, self.atoms)

    def producers(self) -> Dict[Optional[Atom], Firing]:
        """First firing that produced each derived atom (``None`` keys the bottom firing)."""
        out = {}
        for f in self.trace:
            out.setdefault(f.conclusion, f)
        return out


@lru_cache(maxsize=None)
def _plan(c: HornClause):
    """Join order for the premise: greedily prefer atoms whose variables are already bound."""
    remaining = list(c.sorted_premise)
    bound: set = set()
    order = []
    while remaining:
        best = max(remaining, key=lambda a: (len(set(a.args) & bound), -len(set(a.args) - bound)))
        remaining.remove(best)
        order.append(best)
        bound |= set(best.args)
    free = tuple(v for v in c.variables if v not in bound)
    return tuple(order), free


def _matches(c: HornClause, index: Dict[str, list], domain: Sequence, seen: Optional[Dict[str, int]] = None):
    """Assignments satisfying the premise of ``c`` over the atom index.

    With ``seen`` (per-symbol index lengths at the previous visit), only
    assignments using at least one newer atom are produced, each once.
    """
    order, free = _plan(c)
    env: dict = {}

    def rows(k, pivot):
        tuples = index.get(order[k].symbol, ())
        if pivot is None:
            return tuples
        cut = seen.get(order[k].symbol, 0)
        if k < pivot:
            return tuples[:cut]
        if k == pivot:
            return tuples[cut:]
        return tuples

    def walk(k, pivot):
        if k == len(order):
            yield from _free(0)
            return
        a = order[k]
        for tup in rows(k, pivot):
            added = []
            ok = True
            for var, val in zip(a.args, tup):
                cur = env.get(var, _MISSING)
                if cur is _MISSING:
                    env[var] = val
                    added.append(var)
                elif cur != val:
                    ok = False
                    break
            if ok:
                yield from walk(k + 1, pivot)
            for var in added:
                del env[var]

    def _free(k):
        if k == len(free):
            yield dict(env)
            return
        for d in domain:
            env[free[k]] = d
            yield from _free(k + 1)
        env.pop(free[k], None)

    if seen is None:
        yield from walk(0, None)
    else:
        for pivot in range(len(order)):
            if len(index.get(order[pivot].symbol, ())) > seen.get(order[pivot].symbol, 0):
                yield from walk(0, pivot)


_MISSING = object()


def saturate(
    sentence: UniversalHornSentence,
    start: Iterable[Atom],
    domain: Sequence,
    record: bool = True,
) -> CanonicalStructure:
    """Least set of atoms over ``domain`` containing ``start`` and closed under ``sentence``.

    Rounds visit clauses in index order; within a clause, new instances are
    applied in lexicographic order of their assignment (by domain position).
    Stops at the first bottom. ``record=False`` skips building the trace.
    """
    domain = tuple(domain)
    pos = {d: i for i, d in enumerate(domain)}
    current = set(start)
    for a in current:
        for v in a.args:
            if v not in pos:
                raise ValueError(f"start atom {a} uses {v!r}, which is outside the domain")
    index: Dict[str, list] = {}
    for a in sorted(current):
        index.setdefault(a.symbol, []).append(a.args)
    trace: List[Firing] = []

    seen: List[Optional[Dict[str, int]]] = [None] * len(sentence.clauses)
    changed = True
    while changed:
        changed = False
        for ci, c in enumerate(sentence.clauses):
            found = []
            previous = seen[ci]
            seen[ci] = {k: len(v) for k, v in index.items()}
            for env in _matches(c, index, domain, previous):
                concl = None if c.conclusion is None else c.conclusion.rename(env)
                if concl is not None and concl in current:
                    continue
                found.append((tuple(pos[env[v]] for v in c.variables), env, concl))
            found.sort(key=lambda t: t[0])
            for _, env, concl in found:
                if concl is not None and concl in current:
                    continue
                if record:
                    trace.append(
                        Firing(
                            ci,
                            tuple((v, env[v]) for v in c.variables),
                            tuple(sorted(a.rename(env) for a in c.premise)),
                            concl,
                        )
                    )
                if concl is None:
                    return CanonicalStructure(domain, frozenset(current), True, tuple(trace))
                current.add(concl)
                index.setdefault(concl.symbol, []).append(concl.args)
                changed = True
    return CanonicalStructure(domain, frozenset(current), False, tuple(trace))


def closure_for(sentence: UniversalHornSentence, goal: HornClause) -> CanonicalStructure:
    return saturate(sentence, goal.premise, goal.variables)


def entails_clause(sentence: UniversalHornSentence, goal: HornClause) -> bool:
    if is_tautology(goal):
        return True
    s = closure_for(sentence, goal)
    return s.inconsistent or (goal.conclusion is not None and goal.conclusion in s.atoms)


def countermodel(sentence: UniversalHornSentence, goal: HornClause) -> Optional[FiniteStructure]:
    """The canonical structure of the goal's premise when it refutes the goal, else None."""
    if is_tautology(goal):
        return None
    s = closure_for(sentence, goal)
    if s.inconsistent or (goal.conclusion is not None and goal.conclusion in s.atoms):
        return None
    return s.to_structure(sentence.signature)


def is_countermodel(sentence: UniversalHornSentence, goal: HornClause, structure: FiniteStructure) -> bool:
    """Check, by plain evaluation, that ``structure`` with the identity assignment refutes ``goal``."""
    if not set(goal.variables) <= set(structure.domain):
        return False
    if not goal.premise <= structure.facts:
        return False
    if goal.conclusion is not None and goal.conclusion in structure.facts:
        return False
    return all(violated_assignment(structure, c) is None for c in sentence.clauses)


# -- certificates ------------------------------------------------------------

TAUTOLOGY = "tautology"
WEAKENING = "weakening-of-derivation"


@dataclass(frozen=True)
class Step:
    premise_position: int
    side_clause_index: int
    substitution: Substitution


@dataclass(frozen=True)
class SLDDerivation:
    initial_clause_index: int
    initial_substitution: Substitution
    steps: Tuple[Step, ...] = ()

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class DeductionCertificate:
    kind: str
    derivation: Optional[SLDDerivation] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.derivation is not None:
            d["initialClauseIndex"] = self.derivation.initial_clause_index
            d["initialSubstitution"] = dict(self.derivation.initial_substitution.pairs)
            d["steps"] = [
                {
                    "premisePosition": s.premise_position,
                    "sideClauseIndex": s.side_clause_index,
                    "substitution": dict(s.substitution.pairs),
                }
                for s in self.derivation.steps
            ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DeductionCertificate":
        if d["kind"] == TAUTOLOGY:
            return cls(TAUTOLOGY)
        steps = tuple(
            Step(int(s["premisePosition"]), int(s["sideClauseIndex"]), Substitution.of(s["substitution"]))
            for s in d.get("steps", [])
        )
        deriv = SLDDerivation(int(d["initialClauseIndex"]), Substitution.of(d["initialSubstitution"]), steps)
        return cls(d["kind"], deriv)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def extract_sld_certificate(sentence: UniversalHornSentence, goal: HornClause) -> DeductionCertificate:
    if is_tautology(goal):
        return DeductionCertificate(TAUTOLOGY)
    s = closure_for(sentence, goal)
    if s.inconsistent:
        target = s.trace[-1]
    elif goal.conclusion is not None and goal.conclusion in s.atoms:
        target = s.producers()[goal.conclusion]
    else:
        raise NotEntailed(f"the sentence does not entail {goal}")

    producers = s.producers()
    premise = set(target.premise)
    steps = []
    while True:
        ordered = sorted(premise)
        pending = [a for a in ordered if a not in goal.premise]
        if not pending:
            break
        chosen = pending[0]
        side = producers[chosen]
        steps.append(Step(ordered.index(chosen), side.clause_index, Substitution(side.assignment)))
        premise.discard(chosen)
        premise.update(side.premise)
    deriv = SLDDerivation(target.clause_index, Substitution(target.assignment), tuple(steps))
    return DeductionCertificate(WEAKENING, deriv)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str = ""
    step: Optional[int] = None

    def __bool__(self):
        return self.ok


def replay(sentence: UniversalHornSentence, deriv: SLDDerivation) -> HornClause:
    """Final clause of a derivation; raises ValueError with the failing step index."""
    clauses = sentence.clauses
    if not 0 <= deriv.initial_clause_index < len(clauses):
        raise _StepError(0, "initial clause index out of range")
    try:
        current = apply_substitution(clauses[deriv.initial_clause_index], deriv.initial_substitution)
    except SubstitutionError as exc:
        raise _StepError(0, str(exc)) from None
    for i, step in enumerate(deriv.steps, start=1):
        ordered = current.sorted_premise
        if not 0 <= step.premise_position < len(ordered):
            raise _StepError(i, "premise position out of range")
        if not 0 <= step.side_clause_index < len(clauses):
            raise _StepError(i, "side clause index out of range")
        try:
            side = apply_substitution(clauses[step.side_clause_index], step.substitution)
        except SubstitutionError as exc:
            raise _StepError(i, str(exc)) from None
        selected = ordered[step.premise_position]
        if side.conclusion != selected:
            raise _StepError(i, f"side clause concludes {side.conclusion}, selected atom is {selected}")
        current = HornClause((current.premise - {selected}) | side.premise, current.conclusion)
    return current


class _StepError(ValueError):
    def __init__(self, step, message):
        self.step = step
        super().__init__(message)


def verify_certificate(sentence: UniversalHornSentence, goal: HornClause, cert: DeductionCertificate) -> Verdict:
    if cert.kind == TAUTOLOGY:
        return Verdict(True) if is_tautology(goal) else Verdict(False, "goal is not a tautology")
    if cert.kind != WEAKENING or cert.derivation is None:
        return Verdict(False, f"unknown certificate kind {cert.kind!r}")
    try:
        final = replay(sentence, cert.derivation)
    except _StepError as exc:
        return Verdict(False, f"step {exc.step}: {exc}", exc.step)
    if not is_weakening(goal, final):
        return Verdict(False, f"goal is not a weakening of the derived clause {final}")
    return Verdict(True)
