"""Signatures, atoms, Horn clauses, finite structures and maps between them.

Everything here is immutable. Variables are plain strings; structure elements
are any hashable, mutually comparable values (ints in practice).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

Var = Hashable

BOTTOM_NAME = "bot"
EQUALITY_NAMES = frozenset({"=", "eq", "Eq", "EQ"})


class LogicError(ValueError):
    """Malformed logical object (arity mismatch, equality atom, ...)."""


class SubstitutionError(LogicError):
    pass


@dataclass(frozen=True)
class Signature:
    symbols: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        seen = set()
        for name, arity in self.symbols:
            if name in seen:
                raise LogicError(f"duplicate relation symbol {name!r}")
            if name in EQUALITY_NAMES:
                raise LogicError("equality is not a relation symbol")
            if not isinstance(arity, int) or arity < 1:
                raise LogicError(f"symbol {name!r} needs arity >= 1, got {arity!r}")
            seen.add(name)

    @classmethod
    def of(cls, **arities: int) -> "Signature":
        return cls(tuple(arities.items()))

    @cached_property
    def arities(self) -> Dict[str, int]:
        return dict(self.symbols)

    def arity(self, name: str) -> int:
        try:
            return self.arities[name]
        except KeyError:
            raise LogicError(f"unknown relation symbol {name!r}") from None

    def __contains__(self, name) -> bool:
        return name in self.arities

    def union(self, other: "Signature") -> "Signature":
        merged = dict(self.symbols)
        for name, arity in other.symbols:
            if merged.get(name, arity) != arity:
                raise LogicError(f"symbol {name!r} declared with two arities")
            merged[name] = arity
        return Signature(tuple(merged.items()))

    @property
    def max_arity(self) -> int:
        return max((a for _, a in self.symbols), default=0)


@dataclass(frozen=True, order=True)
class Atom:
    symbol: str
    args: tuple

    def __post_init__(self):
        if self.symbol in EQUALITY_NAMES:
            raise LogicError("equality atoms are not permitted")
        if not self.args:
            raise LogicError(f"atom {self.symbol} needs at least one argument")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def variables(self) -> FrozenSet[Var]:
        return frozenset(self.args)

    def rename(self, mapping: Mapping) -> "Atom":
        return Atom(self.symbol, tuple(mapping[a] for a in self.args))

    def __str__(self):
        return f"{self.symbol}({','.join(str(a) for a in self.args)})"

    __repr__ = __str__


def atom(text: str) -> Atom:
    """Shorthand used mostly in tests: ``atom("E(x,y)")``."""
    name, _, rest = text.strip().partition("(")
    args = tuple(a.strip() for a in rest.rstrip(")").split(","))
    return Atom(name.strip(), args)


def atoms(*texts: str) -> FrozenSet[Atom]:
    return frozenset(atom(t) for t in texts)


def variables_of(items: Iterable[Atom]) -> FrozenSet[Var]:
    out = set()
    for a in items:
        out.update(a.args)
    return frozenset(out)


def sort_atoms(items: Iterable[Atom]):
    return sorted(items)


@dataclass(frozen=True)
class HornClause:
    """``premise => conclusion``; a conclusion of ``None`` is bottom."""

    premise: FrozenSet[Atom]
    conclusion: Optional[Atom] = None

    def __post_init__(self):
        if not isinstance(self.premise, frozenset):
            object.__setattr__(self, "premise", frozenset(self.premise))

    @property
    def is_goal(self) -> bool:
        return self.conclusion is None

    @cached_property
    def variables(self) -> Tuple[Var, ...]:
        vs = set(variables_of(self.premise))
        if self.conclusion is not None:
            vs.update(self.conclusion.args)
        return tuple(sorted(vs))

    @cached_property
    def sorted_premise(self) -> Tuple[Atom, ...]:
        return tuple(sorted(self.premise))

    def __str__(self):
        lhs = ", ".join(str(a) for a in self.sorted_premise)
        rhs = BOTTOM_NAME if self.conclusion is None else str(self.conclusion)
        return f"{lhs} -> {rhs}" if lhs else f"-> {rhs}"

    __repr__ = __str__


def clause(text: str) -> HornClause:
    """Parse ``"P(x), R(x,y) -> Q(x)"`` without a signature (tests/CLI helper)."""
    from .syntax import parse_clause_text

    return parse_clause_text(text)


@dataclass(frozen=True)
class UniversalHornSentence:
    signature: Signature
    clauses: Tuple[HornClause, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        for c in self.clauses:
            check_clause(self.signature, c)

    def restrict(self, indices: Iterable[int]) -> "UniversalHornSentence":
        return UniversalHornSentence(self.signature, tuple(self.clauses[i] for i in indices))

    def __len__(self):
        return len(self.clauses)

    @property
    def size(self) -> int:
        """Number of atom occurrences, a crude description length."""
        return sum(len(c.premise) + 1 for c in self.clauses)


def check_atom(signature: Signature, a: Atom) -> None:
    arity = signature.arity(a.symbol)
    if arity != len(a.args):
        raise LogicError(f"{a}: {a.symbol} has arity {arity}, got {len(a.args)} arguments")


def check_clause(signature: Signature, c: HornClause) -> None:
    for a in c.premise:
        check_atom(signature, a)
    if c.conclusion is not None:
        check_atom(signature, c.conclusion)


# -- substitutions -----------------------------------------------------------

@dataclass(frozen=True)
class Substitution:
    pairs: Tuple[Tuple[Var, Var], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping) -> "Substitution":
        return cls(tuple(sorted(mapping.items(), key=lambda kv: str(kv[0]))))

    @cached_property
    def mapping(self) -> Dict[Var, Var]:
        return dict(self.pairs)

    def __call__(self, v: Var) -> Var:
        try:
            return self.mapping[v]
        except KeyError:
            raise SubstitutionError(f"substitution is undefined on variable {v}") from None

    def is_injective(self) -> bool:
        return len(set(self.mapping.values())) == len(self.mapping)


def apply_substitution(c: HornClause, s: Substitution) -> HornClause:
    """Rename every variable of ``c`` through ``s``; duplicate premise atoms collapse."""
    premise = frozenset(Atom(a.symbol, tuple(s(v) for v in a.args)) for a in c.premise)
    concl = None if c.conclusion is None else Atom(c.conclusion.symbol, tuple(s(v) for v in c.conclusion.args))
    return HornClause(premise, concl)


def is_weakening(phi: HornClause, psi: HornClause) -> bool:
    """True iff every disjunct of ``psi`` is a disjunct of ``phi``.

    A bottom conclusion contributes no positive disjunct, so ``P -> Q`` is a
    weakening of ``P -> bot`` but not the other way round.
    """
    if not psi.premise <= phi.premise:
        return False
    return psi.conclusion is None or psi.conclusion == phi.conclusion


def is_tautology(c: HornClause) -> bool:
    return c.conclusion is not None and c.conclusion in c.premise


def cooccurrence_graph(c: HornClause) -> Dict[Var, set]:
    graph = {v: set() for v in c.variables}
    for a in c.premise:
        for u, v in itertools.combinations(set(a.args), 2):
            graph[u].add(v)
            graph[v].add(u)
    return graph


def is_complete_clause(c: HornClause) -> bool:
    graph = cooccurrence_graph(c)
    n = len(graph)
    return all(len(nbrs) == n - 1 for nbrs in graph.values())


# -- canonical labelling ------------------------------------------------------

def _rank(keys: Dict[Var, object]) -> Dict[Var, int]:
    order = {k: i for i, k in enumerate(sorted(set(keys.values())))}
    return {v: order[k] for v, k in keys.items()}


def _refine(colour: Dict[Var, int], occurrences: Dict[Var, list]) -> Dict[Var, int]:
    while True:
        keys = {}
        for v, occ in occurrences.items():
            keys[v] = (colour[v], tuple(sorted((sym, pos, tuple(colour[a] for a in args)) for sym, pos, args in occ)))
        new = _rank(keys)
        if len(set(new.values())) == len(set(colour.values())):
            return new
        colour = new


def canonical_form(
    items: Iterable[Atom],
    pinned: Sequence[Var] = (),
    extra_variables: Iterable[Var] = (),
    prefix: str = "v",
) -> Tuple[FrozenSet[Atom], Substitution]:
    """Relabel variables so that isomorphic atom sets get identical forms.

    ``pinned`` variables keep their relative order and are numbered first, so
    two sets are identified only by bijections fixing them pointwise.
    Colour refinement plus individualisation; exact, exponential only on
    highly symmetric inputs.
    """
    items = frozenset(items)
    pinned = list(pinned)
    vs = set(variables_of(items)) | set(extra_variables) | set(pinned)
    if not vs:
        return items, Substitution()
    occurrences = {v: [] for v in vs}
    for a in items:
        for pos, v in enumerate(a.args):
            occurrences[v].append((a.symbol, pos, a.args))
    pin_index = {v: i for i, v in enumerate(pinned)}
    colour = _rank({v: (pin_index.get(v, len(pinned)),) for v in vs})
    colour = _refine(colour, occurrences)
    ordered_atoms = sorted(items)

    best_key = None
    best_labels = None

    def search(col):
        nonlocal best_key, best_labels
        cells: Dict[int, list] = {}
        for v, c in col.items():
            cells.setdefault(c, []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = c
                break
        if target is None:
            key = tuple(sorted((a.symbol, tuple(col[x] for x in a.args)) for a in ordered_atoms))
            if best_key is None or key < best_key:
                best_key, best_labels = key, dict(col)
            return
        for v in sorted(cells[target], key=repr):
            trial = {u: (c, 0 if u == v else 1) for u, c in col.items()}
            search(_refine(_rank(trial), occurrences))

    search(colour)
    width = len(str(len(vs) - 1))
    names = {v: f"{prefix}{best_labels[v]:0{width}d}" for v in vs}
    canon = frozenset(a.rename(names) for a in items)
    return canon, Substitution.of(names)


def canonical_key(items: Iterable[Atom], pinned: Sequence[Var] = (), extra_variables: Iterable[Var] = ()) -> tuple:
    canon, _ = canonical_form(items, pinned, extra_variables)
    return tuple(sorted(canon))


# -- finite structures ---------------------------------------------------------

@dataclass(frozen=True)
class FiniteStructure:
    signature: Signature
    domain: tuple
    facts: FrozenSet[Atom] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "facts", frozenset(self.facts))
        if len(set(self.domain)) != len(self.domain):
            raise LogicError("structure domain has repeated elements")
        dom = set(self.domain)
        for f in self.facts:
            check_atom(self.signature, f)
            if not set(f.args) <= dom:
                raise LogicError(f"fact {f} leaves the domain")

    @classmethod
    def from_relations(cls, signature: Signature, domain, relations: Mapping[str, Iterable[tuple]]):
        facts = {Atom(name, tuple(t)) for name, ts in relations.items() for t in ts}
        return cls(signature, tuple(domain), frozenset(facts))

    @cached_property
    def relations(self) -> Dict[str, FrozenSet[tuple]]:
        rel = {name: set() for name, _ in self.signature.symbols}
        for f in self.facts:
            rel[f.symbol].add(f.args)
        return {k: frozenset(v) for k, v in rel.items()}

    def __len__(self):
        return len(self.domain)

    def holds(self, a: Atom) -> bool:
        return a in self.facts

    def substructure(self, elements: Iterable) -> "FiniteStructure":
        keep = set(elements)
        dom = tuple(e for e in self.domain if e in keep)
        return FiniteStructure(self.signature, dom, frozenset(f for f in self.facts if set(f.args) <= keep))

    def relabel(self, mapping: Mapping) -> "FiniteStructure":
        return FiniteStructure(
            self.signature, tuple(mapping[e] for e in self.domain), frozenset(f.rename(mapping) for f in self.facts)
        )

    def __str__(self):
        body = ", ".join(str(f) for f in sorted(self.facts))
        return f"<{{{', '.join(map(str, self.domain))}}}; {body}>"


def violated_assignment(structure: FiniteStructure, c: HornClause) -> Optional[dict]:
    """First assignment (in product order) falsifying ``c`` in ``structure``, if any.

    Plain evaluation over every assignment of the clause's variables; this is
    deliberately independent of the saturation engine.
    """
    vs = c.variables
    for values in itertools.product(structure.domain, repeat=len(vs)):
        env = dict(zip(vs, values))
        if all(a.rename(env) in structure.facts for a in c.premise):
            if c.conclusion is None or c.conclusion.rename(env) not in structure.facts:
                return env
    return None


def satisfies(structure: FiniteStructure, sentence: UniversalHornSentence) -> bool:
    return all(violated_assignment(structure, c) is None for c in sentence.clauses)


@dataclass(frozen=True)
class StructureMap:
    source: FiniteStructure
    target: FiniteStructure
    pairs: Tuple[tuple, ...]

    @classmethod
    def of(cls, source, target, mapping: Mapping) -> "StructureMap":
        return cls(source, target, tuple((e, mapping[e]) for e in source.domain))

    @cached_property
    def mapping(self) -> dict:
        return dict(self.pairs)

    def __call__(self, e):
        return self.mapping[e]

    def is_total(self) -> bool:
        tgt = set(self.target.domain)
        return set(self.mapping) == set(self.source.domain) and all(v in tgt for v in self.mapping.values())

    def is_homomorphism(self) -> bool:
        if not self.is_total():
            return False
        return all(f.rename(self.mapping) in self.target.facts for f in self.source.facts)

    def is_embedding(self) -> bool:
        if not self.is_homomorphism():
            return False
        if len(set(self.mapping.values())) != len(self.mapping):
            return False
        inverse = {v: k for k, v in self.mapping.items()}
        for f in self.target.facts:
            if all(a in inverse for a in f.args) and f.rename(inverse) not in self.source.facts:
                return False
        return True

    def compose(self, inner: "StructureMap") -> "StructureMap":
        """``self ∘ inner``."""
        return StructureMap.of(inner.source, self.target, {e: self.mapping[inner.mapping[e]] for e in inner.source.domain})

    def image(self) -> frozenset:
        return frozenset(self.mapping.values())
