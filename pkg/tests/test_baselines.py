import numpy as np
import pytest

from kgalign.baselines import (ConcatScorer, EnsembleScorer, concat_score,
                               concat_train, ensemble_score, feature_length,
                               load_classifier, pair_features, save_classifier,
                               train_ensemble)
from kgalign.experts import build_numeric_feature_map, init_model
from kgalign.ranking import evaluate
from kgalign.rules import AlignmentContext, mine_rules
from kgalign.split import split_alignments
from kgalign.store import KG_B
from kgalign.training import TrainConfig


@pytest.fixture(scope="module")
def bundle(small_store):
    store, alignments = small_store
    split = split_alignments(alignments, 80, seed=6)
    rules = mine_rules(store, split.train, min_support=1, min_confidence=0.0)
    context = AlignmentContext.from_alignments(store, split.train)
    return store, split, rules, context


def small_config(**kw):
    base = dict(k=8, max_epochs=20, num_negatives=15, batch_size=64,
                validate_every=5, seed=2)
    base.update(kw)
    return TrainConfig(**base)


def test_pair_feature_layout(bundle):
    store, split, rules, context = bundle
    fmap = build_numeric_feature_map(store, split.train)
    dim = store.embedding_dim()
    al = split.train[0]
    a = store.global_entity(al.a)
    b = store.global_entity(al.b)
    feats = pair_features(store, fmap, rules, context, a, np.array([b]))
    assert feats.shape == (1, feature_length(store, fmap, rules))
    assert feats.shape[1] == 2 * dim + fmap.total_slots + len(rules)
    frozen = store.frozen
    assert np.allclose(feats[0, :dim], frozen.images[a])
    assert np.allclose(feats[0, dim:2 * dim], frozen.images[b])
    # orientation-normalized: querying from the B side puts images in the
    # same slots
    feats_rev = pair_features(store, fmap, rules, context, b, np.array([a]))
    assert np.allclose(feats, feats_rev)


def test_training_pair_count_math():
    # negatives_per_positive=10 with 100 positives -> 1,100 training pairs
    assert 100 * (1 + 10) == 1100


def test_concat_posterior_at_zero_weights(bundle):
    store, split, rules, context = bundle
    fmap = build_numeric_feature_map(store, split.train)
    from kgalign.baselines import LinearClassifier
    from kgalign.rules import rules_hash
    clf = LinearClassifier(weights=np.zeros(feature_length(store, fmap, rules)),
                           bias=0.0, image_dim=store.embedding_dim() or 0,
                           feature_map=fmap, rules_digest=rules_hash(store, rules))
    feats = np.zeros((5, len(clf.weights)))
    assert np.allclose(concat_score(clf, feats), 0.5)


def test_concat_score_monotone_in_logit(bundle):
    store, split, rules, context = bundle
    fmap = build_numeric_feature_map(store, split.train)
    from kgalign.baselines import LinearClassifier
    from kgalign.rules import rules_hash
    n = feature_length(store, fmap, rules)
    clf = LinearClassifier(weights=np.ones(n), bias=0.0,
                           image_dim=store.embedding_dim() or 0,
                           feature_map=fmap, rules_digest=rules_hash(store, rules))
    lo = concat_score(clf, np.full((1, n), -0.5))[0]
    hi = concat_score(clf, np.full((1, n), +0.5))[0]
    assert lo < 0.5 < hi


def test_concat_trains_and_separates(bundle):
    store, split, rules, context = bundle
    clf = concat_train(store, rules, split, small_config(max_epochs=60),
                       negatives_per_positive=5)
    scorer = ConcatScorer(clf, store, rules, context)
    report = evaluate(scorer, split.test, store)
    # strong.synthetic signal: fitted posterior must beat the constant scorer
    n_b = store.n_entities(KG_B)
    constant_mrr = np.mean([1.0 / (1 + (n_b - 1) / 2)])
    assert report.combined.mrr > 4 * constant_mrr


def test_concat_separable_features_reach_high_accuracy():
    """Noise-free modalities make pairs separable; accuracy approaches 1."""
    from kgalign import synth
    cfg = synth.SynthConfig(entities_per_kg=30, relation_types=2, triples_per_kg=60,
                            numeric_attrs=2, numeric_noise_sigma=0.0,
                            image_dim=6, image_noise_sigma=0.0, mirror_dropout=0.0,
                            seed=31)
    store, alignments = synth.generate(cfg)
    split = split_alignments(alignments, 80, seed=1)
    rules = mine_rules(store, split.train, min_support=1, min_confidence=0.0)
    context = AlignmentContext.from_alignments(store, split.train)
    fmap = build_numeric_feature_map(store, split.train)
    clf = concat_train(store, rules, split, small_config(max_epochs=150),
                       negatives_per_positive=5)
    rng = np.random.Generator(np.random.PCG64(0))
    b_lo, b_hi = store.entity_range(KG_B)
    correct = 0
    total = 0
    for al in split.train:
        a = store.global_entity(al.a)
        b = store.global_entity(al.b)
        feats = pair_features(store, fmap, rules, context, a, np.array([b]))
        correct += concat_score(clf, feats)[0] > 0.5
        neg = int(rng.integers(b_lo, b_hi))
        feats = pair_features(store, fmap, rules, context, a, np.array([neg]))
        correct += (concat_score(clf, feats)[0] > 0.5) == (neg == b)
        total += 2
    assert correct / total >= 0.95


def test_concat_deterministic(bundle):
    store, split, rules, context = bundle
    one = concat_train(store, rules, split, small_config(), negatives_per_positive=3)
    two = concat_train(store, rules, split, small_config(), negatives_per_positive=3)
    assert np.array_equal(one.weights, two.weights)
    assert one.bias == two.bias


def test_classifier_snapshot_round_trip(tmp_path, bundle):
    store, split, rules, context = bundle
    clf = concat_train(store, rules, split, small_config(max_epochs=5),
                       negatives_per_positive=2)
    path = tmp_path / "concat.kgc"
    save_classifier(clf, path)
    loaded = load_classifier(path)
    assert np.array_equal(loaded.weights, clf.weights)
    assert loaded.bias == clf.bias
    assert loaded.feature_map.slots == clf.feature_map.slots
    assert loaded.rules_digest == clf.rules_digest


def test_ensemble_sums_member_scores(bundle):
    store, split, rules, context = bundle
    results = train_ensemble(store, rules, split, small_config(max_epochs=5))
    models = {f: r.model for f, r in results.items()}
    al = split.test[0]
    a, b = store.global_entity(al.a), store.global_entity(al.b)
    total = ensemble_score(models, store, rules, context, a, b)
    from kgalign.experts import score_total
    expected = sum(score_total(m, store, rules, context, a, m.sameas_relation, b,
                               frozenset(f)) for f, m in models.items())
    assert total == pytest.approx(expected)
    # {0.2, 0.3, -0.1} -> 0.4 style additivity via the scorer
    scorer = EnsembleScorer(models, store, rules, context)
    lo, _ = store.entity_range(KG_B)
    assert scorer.score_candidates(a)[b - lo] == pytest.approx(total)


def test_single_member_ensemble_reproduces_family(bundle):
    store, split, rules, context = bundle
    results = train_ensemble(store, rules, split, small_config(max_epochs=5))
    model_i = results["I"].model
    scorer = EnsembleScorer({"I": model_i}, store, rules, context)
    from kgalign.experts import PoeScorer
    single = PoeScorer(model_i, store, rules, context, frozenset("I"))
    al = split.test[0]
    a = store.global_entity(al.a)
    assert np.allclose(scorer.score_candidates(a), single.score_candidates(a))


def test_zero_expert_changes_nothing(bundle):
    store, split, rules, context = bundle
    fmap = build_numeric_feature_map(store, split.train)
    results = train_ensemble(store, rules, split, small_config(max_epochs=5))
    models = {f: r.model for f, r in results.items()}
    al = split.test[0]
    a, b = store.global_entity(al.a), store.global_entity(al.b)
    partial = {f: models[f] for f in ("L", "R", "I")}
    base = ensemble_score(partial, store, rules, context, a, b)
    # an N-family model with untouched all-zero weights scores exactly 0
    with_zero = dict(partial)
    with_zero["N"] = init_model(store, rules, fmap, k=4, seed=0)
    assert ensemble_score(with_zero, store, rules, context, a, b) == pytest.approx(base)


def test_mismatched_stores_rejected(bundle, small_store):
    store, split, rules, context = bundle
    from kgalign import synth
    other_store, other_alignments = synth.generate(
        synth.SynthConfig(entities_per_kg=10, relation_types=2, triples_per_kg=20,
                          numeric_attrs=1, image_dim=4, seed=99))
    other_fmap = build_numeric_feature_map(other_store, other_alignments)
    foreign = init_model(other_store, [], other_fmap, k=4, seed=0)
    results = train_ensemble(store, rules, split, small_config(max_epochs=5))
    models = {f: r.model for f, r in results.items()}
    models["L"] = foreign
    with pytest.raises(ValueError):
        ensemble_score(models, store, rules, context, 0, store.entity_range(KG_B)[0])
    with pytest.raises(ValueError):
        EnsembleScorer(models, store, rules, context)
