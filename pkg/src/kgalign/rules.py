"""Cross-KG horn rules whose head is sameAs.

Mined rules have the canonical two-hop body
(x, r1-d1, w), (w, sameAs, z), (z, r2-d2, y) => (x, sameAs, y)
with r1 a KG A relation, r2 a KG B relation, and each atom optionally
inverted. Support counts distinct training pairs (x, y) whose body holds
using only training alignments for the middle atom; confidence divides by
the number of distinct cross-KG pairs the body generates.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .store import (FORWARD, INVERSE, KG_A, KG_B, Alignment,
                    KnowledgeGraphStore)

logger = logging.getLogger(__name__)

__all__ = [
    "HornRule", "AlignmentContext", "mine_rules", "evaluate_rule_body",
    "fired_targets", "fired_sources", "write_rules", "read_rules", "rules_hash",
]

_FLIP = {FORWARD: INVERSE, INVERSE: FORWARD}


@dataclass(frozen=True)
class HornRule:
    r1: int          # global relation index on the KG A side
    d1: str          # FORWARD | INVERSE
    r2: int          # global relation index on the KG B side
    d2: str
    support: int
    confidence: float


class AlignmentContext:
    """sameAs pairs a rule body may traverse, tagged with their provenance.

    Evaluation-time contexts must be built from training alignments only;
    the label and pair set exist so tests can assert that no validation or
    test pair leaks in.
    """

    def __init__(self, pairs_global: Iterable[tuple[int, int]], label: str = "train"):
        a_to_b: dict[int, list[int]] = {}
        b_to_a: dict[int, list[int]] = {}
        pair_list = []
        for a, b in pairs_global:
            a, b = int(a), int(b)
            pair_list.append((a, b))
            a_to_b.setdefault(a, []).append(b)
            b_to_a.setdefault(b, []).append(a)
        self.pairs = frozenset(pair_list)
        self.label = label
        self._a_to_b = {k: np.unique(np.array(v, dtype=np.int64)) for k, v in a_to_b.items()}
        self._b_to_a = {k: np.unique(np.array(v, dtype=np.int64)) for k, v in b_to_a.items()}
        self._empty = np.zeros(0, dtype=np.int64)

    @classmethod
    def from_alignments(cls, store: KnowledgeGraphStore,
                        alignments: Sequence[Alignment], label: str = "train"):
        return cls(((store.global_entity(al.a), store.global_entity(al.b))
                    for al in alignments), label=label)

    def partners_of_a(self, a_global: int) -> np.ndarray:
        return self._a_to_b.get(a_global, self._empty)

    def partners_of_b(self, b_global: int) -> np.ndarray:
        return self._b_to_a.get(b_global, self._empty)

    def __len__(self) -> int:
        return len(self.pairs)


def _union_neighbors(store: KnowledgeGraphStore, sources: np.ndarray,
                     relation: int, direction: str) -> np.ndarray:
    if len(sources) == 0:
        return sources
    parts = [store.neighbors(int(s), relation, direction) for s in sources]
    parts = [p for p in parts if len(p)]
    if not parts:
        return np.zeros(0, dtype=np.int64)
    if len(parts) == 1:
        return np.unique(parts[0])
    return np.unique(np.concatenate(parts))


def fired_targets(store: KnowledgeGraphStore, rule: HornRule, h_global: int,
                  context: AlignmentContext) -> np.ndarray:
    """All y (global, KG B) for which the rule body holds on (h, y)."""
    w = store.neighbors(h_global, rule.r1, rule.d1)
    if len(w) == 0:
        return w
    z_parts = [context.partners_of_a(int(e)) for e in w]
    z_parts = [p for p in z_parts if len(p)]
    if not z_parts:
        return np.zeros(0, dtype=np.int64)
    z = np.unique(np.concatenate(z_parts)) if len(z_parts) > 1 else z_parts[0]
    return _union_neighbors(store, z, rule.r2, rule.d2)


def fired_sources(store: KnowledgeGraphStore, rule: HornRule, t_global: int,
                  context: AlignmentContext) -> np.ndarray:
    """All x (global, KG A) for which the rule body holds on (x, t)."""
    z = store.neighbors(t_global, rule.r2, _FLIP[rule.d2])
    if len(z) == 0:
        return z
    w_parts = [context.partners_of_b(int(e)) for e in z]
    w_parts = [p for p in w_parts if len(p)]
    if not w_parts:
        return np.zeros(0, dtype=np.int64)
    w = np.unique(np.concatenate(w_parts)) if len(w_parts) > 1 else w_parts[0]
    return _union_neighbors(store, w, rule.r1, _FLIP[rule.d1])


def evaluate_rule_body(store: KnowledgeGraphStore, rule: HornRule,
                       h_global: int, t_global: int,
                       context: AlignmentContext) -> int:
    """1 iff exists w, z with (h, r1-d1, w), (w, z) in context, (z, r2-d2, t)."""
    targets = fired_targets(store, rule, h_global, context)
    if len(targets) == 0:
        return 0
    pos = np.searchsorted(targets, t_global)
    return int(pos < len(targets) and targets[pos] == t_global)


def _candidate_shapes(store: KnowledgeGraphStore,
                      context: AlignmentContext) -> set[tuple[int, str, int, str]]:
    combos: set[tuple[int, str, int, str]] = set()
    for w, z in context.pairs:
        # (x, r1-d1, w) exists for some x  <=>  w is target of r1 under d1
        r1_opts = [(int(r), FORWARD) for r in store.incident_relations(w, INVERSE)]
        r1_opts += [(int(r), INVERSE) for r in store.incident_relations(w, FORWARD)]
        if not r1_opts:
            continue
        r2_opts = [(int(r), FORWARD) for r in store.incident_relations(z, FORWARD)]
        r2_opts += [(int(r), INVERSE) for r in store.incident_relations(z, INVERSE)]
        for r1, d1 in r1_opts:
            for r2, d2 in r2_opts:
                combos.add((r1, d1, r2, d2))
    return combos


def mine_rules(store: KnowledgeGraphStore, train_alignments: Sequence[Alignment],
               min_support: int = 2, min_confidence: float = 0.1) -> list[HornRule]:
    """Enumerate canonical-shape rules above the support/confidence thresholds.

    Deterministic output order: confidence desc, support desc, then the
    lexicographic (r1-IRI, d1, r2-IRI, d2) key.
    """
    if not train_alignments:
        logger.warning("mine_rules called with no training alignments; no rules mined")
        return []
    context = AlignmentContext.from_alignments(store, train_alignments, label="train")

    # x domain per (r1, d1): entities with a nonempty first atom
    frozen = store.frozen
    sources_fwd: dict[int, np.ndarray] = {}
    sources_inv: dict[int, np.ndarray] = {}
    triples = frozen.triples
    if len(triples):
        for rel in np.unique(triples[:, 1]):
            mask = triples[:, 1] == rel
            sources_fwd[int(rel)] = np.unique(triples[mask, 0])
            sources_inv[int(rel)] = np.unique(triples[mask, 2])

    rules = []
    for r1, d1, r2, d2 in _candidate_shapes(store, context):
        probe = HornRule(r1, d1, r2, d2, 0, 0.0)
        xs = (sources_fwd if d1 == FORWARD else sources_inv).get(r1, ())
        support = 0
        body_pairs = 0
        for x in xs:
            targets = fired_targets(store, probe, int(x), context)
            if len(targets) == 0:
                continue
            body_pairs += len(targets)
            partners = context.partners_of_a(int(x))
            if len(partners):
                support += len(np.intersect1d(targets, partners, assume_unique=True))
        if support < min_support or body_pairs == 0:
            continue
        confidence = support / body_pairs
        if confidence < min_confidence:
            continue
        rules.append(HornRule(r1, d1, r2, d2, support, confidence))

    def sort_key(rule: HornRule):
        return (-rule.confidence, -rule.support,
                store.relation_iri_global(rule.r1), rule.d1,
                store.relation_iri_global(rule.r2), rule.d2)

    rules.sort(key=sort_key)
    return rules


def rule_line(store: KnowledgeGraphStore, rule: HornRule) -> str:
    return "\t".join([
        repr(rule.confidence), str(rule.support),
        store.relation_iri_global(rule.r1), rule.d1,
        store.relation_iri_global(rule.r2), rule.d2,
    ])


def write_rules(store: KnowledgeGraphStore, rules: Sequence[HornRule],
                path: str | Path) -> None:
    lines = [rule_line(store, r) for r in rules]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_rules(store: KnowledgeGraphStore, path: str | Path) -> list[HornRule]:
    """Load rules (possibly mined externally) back onto this store's ids."""
    rules = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ValueError(f"rule file line {lineno}: expected 6 tab-separated fields")
        conf, support, r1_iri, d1, r2_iri, d2 = parts
        if d1 not in (FORWARD, INVERSE) or d2 not in (FORWARD, INVERSE):
            raise ValueError(f"rule file line {lineno}: bad direction {d1!r}/{d2!r}")
        rel1 = store.find_relation(KG_A, r1_iri)
        rel2 = store.find_relation(KG_B, r2_iri)
        if rel1 is None or rel2 is None:
            raise ValueError(f"rule file line {lineno}: unknown relation IRI")
        rules.append(HornRule(store.global_relation(rel1), d1,
                              store.global_relation(rel2), d2,
                              int(support), float(conf)))
    return rules


def rules_hash(store: KnowledgeGraphStore, rules: Sequence[HornRule]) -> str:
    """Stable digest of the rule list, recorded in model snapshots."""
    payload = "\n".join(
        "\t".join([store.relation_iri_global(r.r1), r.d1,
                   store.relation_iri_global(r.r2), r.d2])
        for r in rules)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
