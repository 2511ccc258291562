import logging

import numpy as np
import pytest

from kgalign.ntriples import parse_ntriples_text
from kgalign.rules import (AlignmentContext, HornRule, evaluate_rule_body,
                           fired_sources, fired_targets, mine_rules, read_rules,
                           rules_hash, write_rules)
from kgalign.store import FORWARD, INVERSE, KG_A, KG_B, KnowledgeGraphStore


def build_store(triples_a, triples_b, alignments):
    """Toy store from (head, rel, tail) IRI triples and (a, b) IRI pairs."""
    store = KnowledgeGraphStore()
    text_a = "".join(f"<{h}> <{r}> <{t}> .\n" for h, r, t in triples_a)
    text_b = "".join(f"<{h}> <{r}> <{t}> .\n" for h, r, t in triples_b)
    store.ingest_relational(parse_ntriples_text(text_a), KG_A)
    store.ingest_relational(parse_ntriples_text(text_b), KG_B)
    sameas = "".join(f"<{a}> <sameAs> <{b}> .\n" for a, b in alignments)
    store.ingest_alignments(parse_ntriples_text(sameas))
    return store


def global_of(store, kg, iri):
    return store.global_entity(store.find_entity(kg, iri))


# -- brute-force oracle (independent of the miner's adjacency machinery) ------

def oracle_body_holds(store, r1, d1, r2, d2, x, y, pairs):
    """Direct scan over raw triples: exists w, z joining x to y."""
    trip_a = {(h, r, t) for h, r, t in store.frozen.triples if r < store.n_relations(KG_A)}
    trip_b = {(h, r, t) for h, r, t in store.frozen.triples if r >= store.n_relations(KG_A)}
    for w, z in pairs:
        first = (x, r1, w) in trip_a if d1 == FORWARD else (w, r1, x) in trip_a
        if not first:
            continue
        second = (z, r2, y) in trip_b if d2 == FORWARD else (y, r2, z) in trip_b
        if second:
            return True
    return False


def oracle_mine(store, pairs, min_support, min_confidence):
    n_a = store.n_entities(KG_A)
    r_a = store.n_relations(KG_A)
    xs = range(n_a)
    ys = range(n_a, n_a + store.n_entities(KG_B))
    pair_set = set(pairs)
    found = {}
    for r1 in range(r_a):
        for r2 in range(r_a, r_a + store.n_relations(KG_B)):
            for d1 in (FORWARD, INVERSE):
                for d2 in (FORWARD, INVERSE):
                    body = [(x, y) for x in xs for y in ys
                            if oracle_body_holds(store, r1, d1, r2, d2, x, y, pairs)]
                    support = sum((x, y) in pair_set for x, y in body)
                    if support < min_support or not body:
                        continue
                    confidence = support / len(body)
                    if confidence < min_confidence:
                        continue
                    found[(r1, d1, r2, d2)] = (support, confidence)
    return found


def random_toy(seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(rng.integers(6, 14))
    rels = int(rng.integers(1, 4))
    ents_a = [f"a{i}" for i in range(n)]
    ents_b = [f"b{i}" for i in range(n)]
    def random_triples(ents):
        count = int(rng.integers(n, 3 * n))
        out = set()
        for _ in range(count):
            h, t = rng.integers(0, n, size=2)
            if h != t:
                out.add((ents[h], f"r{int(rng.integers(0, rels))}", ents[t]))
        return sorted(out)
    aligned = [(f"a{i}", f"b{i}") for i in range(n) if rng.random() < 0.7]
    return build_store(random_triples(ents_a), random_triples(ents_b), aligned)


# -- spec toy example -----------------------------------------------------------

FAMILY_A = [("a1", "fatherOf", "a2"), ("a3", "fatherOf", "a4")]
FAMILY_B = [("b1", "childOf", "b2"), ("b3", "childOf", "b4")]
FAMILY_ALIGN = [("a1", "b1"), ("a2", "b2"), ("a3", "b3"), ("a4", "b4")]


def test_mirrored_family_rule():
    store = build_store(FAMILY_A, FAMILY_B, FAMILY_ALIGN)
    train = store.alignments()
    rules = mine_rules(store, train, min_support=2, min_confidence=0.0)
    father = store.global_relation(store.find_relation(KG_A, "fatherOf"))
    child = store.global_relation(store.find_relation(KG_B, "childOf"))
    wanted = [r for r in rules if (r.r1, r.d1, r.r2, r.d2)
              == (father, FORWARD, child, INVERSE)]
    assert len(wanted) == 1
    assert wanted[0].support == 2
    assert wanted[0].confidence == 1.0


def test_rule_body_binary_evaluation():
    store = build_store(FAMILY_A, FAMILY_B, FAMILY_ALIGN)
    context = AlignmentContext.from_alignments(store, store.alignments())
    father = store.global_relation(store.find_relation(KG_A, "fatherOf"))
    child = store.global_relation(store.find_relation(KG_B, "childOf"))
    rule = HornRule(father, FORWARD, child, INVERSE, 2, 1.0)
    a3, b3 = global_of(store, KG_A, "a3"), global_of(store, KG_B, "b3")
    a2, b2 = global_of(store, KG_A, "a2"), global_of(store, KG_B, "b2")
    assert evaluate_rule_body(store, rule, a3, b3, context) == 1
    # a2 has no outgoing fatherOf edge
    assert evaluate_rule_body(store, rule, a2, b2, context) == 0
    empty = AlignmentContext([], label="empty")
    assert evaluate_rule_body(store, rule, a3, b3, empty) == 0


def test_fired_sources_matches_targets():
    store = random_toy(3)
    context = AlignmentContext.from_alignments(store, store.alignments())
    rules = mine_rules(store, store.alignments(), min_support=1, min_confidence=0.0)
    n_a = store.n_entities(KG_A)
    for rule in rules[:6]:
        for y in range(n_a, n_a + store.n_entities(KG_B)):
            sources = set(fired_sources(store, rule, y, context).tolist())
            expected = {x for x in range(n_a)
                        if y in fired_targets(store, rule, x, context)}
            assert sources == expected


def test_min_support_threshold_drops_singletons():
    # only one mirrored family: pattern holds for exactly one alignment pair
    store = build_store(FAMILY_A[:1], FAMILY_B[:1], FAMILY_ALIGN[:2])
    rules = mine_rules(store, store.alignments(), min_support=2, min_confidence=0.0)
    assert rules == []
    rules1 = mine_rules(store, store.alignments(), min_support=1, min_confidence=0.0)
    assert any(r.support == 1 for r in rules1)


def test_no_cross_patterns_gives_empty_output():
    store = build_store([("a1", "r", "a2")], [("b1", "s", "b2")], [("a1", "b2")])
    # alignment (a1, b2): no (x, r1, w),(w=a1...) pattern completes into KG B
    assert mine_rules(store, store.alignments(), min_support=1) == []


def test_empty_training_alignments_warns(caplog):
    store = build_store(FAMILY_A, FAMILY_B, FAMILY_ALIGN)
    with caplog.at_level(logging.WARNING):
        assert mine_rules(store, []) == []
    assert any("no training alignments" in r.message for r in caplog.records)


@pytest.mark.parametrize("seed", range(8))
def test_oracle_equivalence_random_toys(seed):
    store = random_toy(seed)
    train = store.alignments()
    if not train:
        return
    mined = mine_rules(store, train, min_support=1, min_confidence=0.0)
    pairs = [tuple(p) for p in store.alignment_pairs_global()]
    expected = oracle_mine(store, pairs, 1, 0.0)
    got = {(r.r1, r.d1, r.r2, r.d2): (r.support, r.confidence) for r in mined}
    assert got == expected


def test_threshold_monotonicity():
    store = random_toy(11)
    train = store.alignments()
    base = {(r.r1, r.d1, r.r2, r.d2) for r in mine_rules(store, train, 1, 0.0)}
    for ms, mc in ((2, 0.0), (1, 0.3), (3, 0.5)):
        filtered = {(r.r1, r.d1, r.r2, r.d2) for r in mine_rules(store, train, ms, mc)}
        assert filtered <= base


def test_deterministic_order():
    store = random_toy(5)
    train = store.alignments()
    assert mine_rules(store, train, 1, 0.0) == mine_rules(store, train, 1, 0.0)
    rules = mine_rules(store, train, 1, 0.0)
    confs = [r.confidence for r in rules]
    assert confs == sorted(confs, reverse=True)


def test_rule_file_round_trip(tmp_path):
    store = build_store(FAMILY_A, FAMILY_B, FAMILY_ALIGN)
    rules = mine_rules(store, store.alignments(), min_support=1, min_confidence=0.0)
    path = tmp_path / "rules.tsv"
    write_rules(store, rules, path)
    loaded = read_rules(store, path)
    assert loaded == rules
    assert rules_hash(store, loaded) == rules_hash(store, rules)


def test_context_records_provenance():
    store = build_store(FAMILY_A, FAMILY_B, FAMILY_ALIGN)
    train = store.alignments()[:2]
    context = AlignmentContext.from_alignments(store, train, label="train")
    assert context.label == "train"
    assert context.pairs == {(store.global_entity(al.a), store.global_entity(al.b))
                             for al in train}
