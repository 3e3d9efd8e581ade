"""Monotonic concept hierarchies with subsumption, equivalence, and disjointness.

One graph holds two hierarchies that never mix: data categories under the
Data root and recipient roles under the Recipient root. Declarations only
ever add facts. Nothing is removed or renamed, so any subsumption answer
that was once provable stays provable, and caches only need flushing when
an existing concept gains edges.

Reasoning model: a concept's ancestors are everything reachable from it
over parent edges plus equivalence edges (walked in both directions).
Subsumption is reachability; two concepts are declared-or-inherited
disjoint when some recorded disjoint pair sits above both sides; a concept
is unsatisfiable when one recorded pair sits entirely above it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import chain, combinations
from typing import Iterable, Iterator, Sequence

from .errors import ConsistencyError, KindMismatchError, UnknownConceptError


class ConceptKind(Enum):
    DATA = "data"
    RECIPIENT = "recipient"


DATA_ROOT = "Data"
RECIPIENT_ROOT = "Recipient"

_ROOT_NAMES = {ConceptKind.DATA: DATA_ROOT, ConceptKind.RECIPIENT: RECIPIENT_ROOT}


@dataclass(frozen=True)
class Concept:
    id: int
    name: str
    kind: ConceptKind


class ConceptGraph:
    """Append-only store of concept declarations with cached reachability."""

    def __init__(self):
        self._concepts: list[Concept] = []
        self._by_name: dict[str, int] = {}
        self._parents: dict[int, set[int]] = {}
        self._equiv: dict[int, set[int]] = {}
        self._disjoint: set[tuple[int, int]] = set()
        self._reach: dict[int, frozenset[int]] = {}
        self._roots: dict[ConceptKind, int] = {}
        for kind in ConceptKind:
            self._roots[kind] = self._add(_ROOT_NAMES[kind], kind)

    # -- introspection -------------------------------------------------

    def __len__(self) -> int:
        return len(self._concepts)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def concepts(self) -> Iterator[Concept]:
        return iter(self._concepts)

    def root(self, kind: ConceptKind) -> int:
        return self._roots[kind]

    def lookup(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownConceptError(name) from None

    def concept(self, cid: int) -> Concept:
        if not 0 <= cid < len(self._concepts):
            raise UnknownConceptError(cid)
        return self._concepts[cid]

    def name_of(self, cid: int) -> str:
        return self.concept(cid).name

    def kind_of(self, cid: int) -> ConceptKind:
        return self.concept(cid).kind

    def resolve(self, ref: int | str, kind: ConceptKind | None = None) -> int:
        """Map a name or id to an id, optionally insisting on a kind."""
        cid = self.lookup(ref) if isinstance(ref, str) else self.concept(ref).id
        if kind is not None and self.kind_of(cid) is not kind:
            raise KindMismatchError(
                f"{self.name_of(cid)!r} is a {self.kind_of(cid).value} concept, "
                f"expected {kind.value}"
            )
        return cid

    # -- declarations ----------------------------------------------------

    def _add(self, name: str, kind: ConceptKind) -> int:
        cid = len(self._concepts)
        self._concepts.append(Concept(cid, name, kind))
        self._by_name[name] = cid
        self._parents[cid] = set()
        self._equiv[cid] = set()
        return cid

    def declare_concept(self, name: str, kind: ConceptKind,
                        parents: Sequence[str] = ()) -> int:
        """Declare a concept under the given parents (kind's root if none).

        Redeclaring an existing name adds any new parents to it; nothing is
        ever replaced.
        """
        parent_ids = []
        for pname in parents:
            pid = self._by_name.get(pname)
            if pid is None:
                raise UnknownConceptError(pname)
            if self.kind_of(pid) is not kind:
                raise KindMismatchError(
                    f"parent {pname!r} is a {self.kind_of(pid).value} concept, "
                    f"cannot place a {kind.value} concept under it"
                )
            parent_ids.append(pid)

        existing = self._by_name.get(name)
        if existing is not None:
            if self.kind_of(existing) is not kind:
                raise KindMismatchError(
                    f"{name!r} already declared as a {self.kind_of(existing).value} concept"
                )
            fresh = [p for p in parent_ids if p != existing and p not in self._parents[existing]]
            if fresh:
                self._parents[existing].update(fresh)
                self._reach.clear()
            return existing

        cid = self._add(name, kind)
        self._parents[cid].update(parent_ids or {self._roots[kind]})
        # A fresh concept has no children yet, so no cached set can be stale.
        return cid

    def declare_equivalent(self, a: str, b: str, protected: Iterable[int] = ()) -> None:
        """Record that two same-kind concepts denote the same category.

        The declaration is rejected when it would turn any protected concept
        (one that recorded history relies on) from satisfiable to
        unsatisfiable.
        """
        aid, bid = self.lookup(a), self.lookup(b)
        if self.kind_of(aid) is not self.kind_of(bid):
            raise KindMismatchError(f"cannot equate {a!r} with {b!r}: different kinds")
        if aid in self.ancestors(bid) and bid in self.ancestors(aid):
            return  # already mutually subsumed, nothing new to record
        guarded = [p for p in protected if not self.is_unsatisfiable(p)]
        self._equiv[aid].add(bid)
        self._equiv[bid].add(aid)
        self._reach.clear()
        broken = [p for p in guarded if self.is_unsatisfiable(p)]
        if broken:
            self._equiv[aid].discard(bid)
            self._equiv[bid].discard(aid)
            self._reach.clear()
            names = ", ".join(sorted(self.name_of(p) for p in broken))
            raise ConsistencyError(
                f"equating {a!r} with {b!r} would contradict recorded events on: {names}"
            )

    def declare_disjoint(self, names: Sequence[str]) -> None:
        """Record pairwise disjointness over two or more same-kind concepts."""
        if len(names) < 2:
            raise ValueError("disjointness needs at least two concepts")
        ids = [self.lookup(n) for n in names]
        kinds = {self.kind_of(i) for i in ids}
        if len(kinds) > 1:
            raise KindMismatchError("disjointness cannot mix data and recipient concepts")
        pairs = []
        for (na, ia), (nb, ib) in combinations(zip(names, ids), 2):
            related = ia in self.ancestors(ib) or ib in self.ancestors(ia)
            if related and not (self.is_unsatisfiable(ia) or self.is_unsatisfiable(ib)):
                raise ConsistencyError(
                    f"cannot declare {na!r} disjoint from {nb!r}: "
                    "they are related by subsumption"
                )
            pairs.append((ia, ib) if ia <= ib else (ib, ia))
        self._disjoint.update(pairs)  # recorded only once all pairs check out

    # -- reasoning -------------------------------------------------------

    def ancestors(self, cid: int) -> frozenset[int]:
        """Every concept reachable from cid, itself included."""
        cached = self._reach.get(cid)
        if cached is not None:
            return cached
        self.concept(cid)  # validate
        seen = {cid}
        frontier = [cid]
        while frontier:
            node = frontier.pop()
            for nxt in chain(self._parents[node], self._equiv[node]):
                if nxt in seen:
                    continue
                hit = self._reach.get(nxt)
                if hit is not None:
                    seen |= hit  # cached sets are complete, no need to expand
                else:
                    seen.add(nxt)
                    frontier.append(nxt)
        result = frozenset(seen)
        self._reach[cid] = result
        return result

    def subsumes(self, general: int, specific: int) -> bool:
        """True when everything classified under specific also falls under general."""
        if self.kind_of(general) is not self.kind_of(specific):
            raise KindMismatchError("subsumption never crosses data/recipient kinds")
        return general in self.ancestors(specific)

    def equivalent(self, a: int, b: int) -> bool:
        return self.subsumes(a, b) and self.subsumes(b, a)

    def is_unsatisfiable(self, cid: int) -> bool:
        """True when cid sits below both sides of some disjoint pair."""
        anc = self.ancestors(cid)
        return any(p in anc and q in anc for p, q in self._disjoint)

    def are_disjoint(self, a: int, b: int) -> bool:
        """True when no individual can fall under both concepts."""
        if self.kind_of(a) is not self.kind_of(b):
            raise KindMismatchError("disjointness never crosses data/recipient kinds")
        if self.is_unsatisfiable(a) or self.is_unsatisfiable(b):
            return True
        anc_a, anc_b = self.ancestors(a), self.ancestors(b)
        return any(
            (p in anc_a and q in anc_b) or (p in anc_b and q in anc_a)
            for p, q in self._disjoint
        )
