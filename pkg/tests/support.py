"""Shared helpers for the test suite.

The replay helper is the bridge for differential tests: it takes an
oracle FiniteScenario (plain name/step tuples) and drives the real
engine through it, declaration order preserved, returning the engine's
verdict for every query. The oracle side answers the same queries from
its own naive code path; the two must agree.
"""

from __future__ import annotations

import random

from consentry.chronology import StepInterval
from consentry.core import ActionType, AuthzQuery, Ledger, Mode
from consentry.errors import ConsistencyError
from consentry.ontology import ConceptGraph, ConceptKind
from consentry.oracle import FiniteScenario

_MODES = {"guaranteed": Mode.GUARANTEED, "possible": Mode.POSSIBLE}
_ACTIONS = {"collect": ActionType.COLLECT, "access": ActionType.ACCESS}


def build_ledger(scenario: FiniteScenario) -> Ledger:
    """Apply a scenario's static declarations to a fresh ledger."""
    ledger = Ledger()
    for name, parent in scenario.data_facts.concepts:
        ledger.declare_data(name, parent)
    for name, parent in scenario.recipient_facts.concepts:
        ledger.declare_recipient(name, parent)
    for facts in (scenario.data_facts, scenario.recipient_facts):
        for a, b in facts.equivalences:
            ledger.declare_equivalent(a, b)
        for a, b in facts.disjoint_pairs:
            ledger.declare_disjoint(a, b)
    for subject in scenario.subjects:
        ledger.declare_subject(subject)
    return ledger


def engine_verdicts(scenario: FiniteScenario) -> list[bool]:
    """Replay the scenario through the engine, answering every query."""
    ledger = build_ledger(scenario)
    verdicts: dict[int, bool] = {}
    granted: dict[int, int] = {}  # scenario consent index -> ledger consent id
    for now in range(1, scenario.horizon + 1):
        for idx, consent in enumerate(scenario.consents):
            if consent.granted_at == now:
                granted[idx] = ledger.grant(
                    consent.data, consent.subject, consent.recipient,
                    retroactive=consent.grant_retroactive)
        for idx, consent in enumerate(scenario.consents):
            if consent.withdrawn_at == now:
                ledger.withdraw(granted[idx],
                                retroactive=consent.withdraw_retroactive)
        for q_idx, query in enumerate(scenario.queries):
            if query.at != now:
                continue
            authz = AuthzQuery(
                action=_ACTIONS[query.action],
                data_concept=ledger.ontology.lookup(query.data),
                subject=query.subject,
                recipient_concept=ledger.ontology.lookup(query.recipient),
                collected_interval=StepInterval(query.start, query.end),
                access_at=query.at,
                mode=_MODES[query.mode],
            )
            verdicts[q_idx] = ledger.check(authz).authorized
        if now < scenario.horizon:
            ledger.advance()
    return [verdicts[i] for i in range(len(scenario.queries))]


def random_graph(rng: random.Random, max_concepts: int = 50):
    """Build a random data-concept graph alongside naive fact lists.

    Returns (graph, names, edges, equivalences, disjoint_pairs) where the
    fact lists describe exactly the declarations the graph accepted.
    """
    graph = ConceptGraph()
    names: list[str] = []
    edges: list[tuple[str, str]] = []
    equivalences: list[tuple[str, str]] = []
    disjoints: list[tuple[str, str]] = []
    count = rng.randint(2, max_concepts)
    for i in range(count):
        name = f"C{i}"
        pool = ["Data"] + names
        parents = rng.sample(pool, k=min(len(pool), rng.choice((1, 1, 1, 2))))
        graph.declare_concept(name, ConceptKind.DATA, parents)
        names.append(name)
        edges.extend((name, p) for p in parents)
    # Monotone refinements: a few existing concepts gain an extra parent.
    for _ in range(rng.randint(0, 3)):
        child = rng.choice(names)
        parent = rng.choice(["Data"] + names)
        if parent == child:
            continue
        graph.declare_concept(child, ConceptKind.DATA, [parent])
        edges.append((child, parent))
    for _ in range(rng.randint(0, 4)):
        a, b = rng.sample(names, 2)
        graph.declare_equivalent(a, b)
        equivalences.append((a, b))
    for _ in range(rng.randint(0, 6)):
        a, b = rng.sample(names, 2)
        try:
            graph.declare_disjoint((a, b))
        except ConsistencyError:
            continue
        disjoints.append((a, b))
    return graph, names, edges, equivalences, disjoints


def naive_reachability(names: list[str], edges: list[tuple[str, str]],
                       equivalences: list[tuple[str, str]]) -> dict[str, set[str]]:
    """Transitive closure over parent and (bidirectional) equivalence edges."""
    adjacency: dict[str, set[str]] = {n: {n} for n in names + ["Data"]}
    for child, parent in edges:
        adjacency[child].add(parent)
    for a, b in equivalences:
        adjacency[a].add(b)
        adjacency[b].add(a)
    closure: dict[str, set[str]] = {}
    for start in adjacency:
        seen = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for nxt in adjacency[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        closure[start] = seen
    return closure
