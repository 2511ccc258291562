import math

import numpy as np
import pytest

from kgalign import synth
from kgalign.experts import (build_numeric_feature_map, init_model, score_total)
from kgalign.rules import AlignmentContext, mine_rules
from kgalign.split import split_alignments
from kgalign.store import KG_A, KG_B, KnowledgeGraphStore
from kgalign.ntriples import parse_ntriples_text
from kgalign.training import (NonFiniteLossError, TrainConfig, batch_loss,
                              negative_sample, train)

TINY = synth.SynthConfig(entities_per_kg=20, relation_types=2, triples_per_kg=30,
                         aligned_fraction=1.0, mirror_dropout=0.2, numeric_attrs=2,
                         numeric_noise_sigma=0.1, image_dim=4, image_noise_sigma=0.1,
                         seed=77)


@pytest.fixture(scope="module")
def tiny_bundle():
    store, alignments = synth.generate(TINY)
    split = split_alignments(alignments, 80, seed=1)
    rules = mine_rules(store, split.train, min_support=1, min_confidence=0.0)
    fmap = build_numeric_feature_map(store, split.train)
    context = AlignmentContext.from_alignments(store, split.train)
    model = init_model(store, rules, fmap, k=4, seed=9)
    return store, split, rules, fmap, context, model


def make_batch(store, split, rules, model, n_neg, rng, n_sameas=8, n_rel=8):
    sameas = model.sameas_relation
    rows = [(store.global_entity(al.a), sameas, store.global_entity(al.b))
            for al in split.train[:n_sameas]]
    rows += [tuple(map(int, t)) for t in store.frozen.triples[:n_rel]]
    triples = np.array(rows, dtype=np.int64)
    cands = np.stack([negative_sample(t, store, n_neg, rng)[:, 2] for t in triples])
    return triples[:, 0], triples[:, 1], cands


# -- negative sampling ------------------------------------------------------------

def test_candidate_set_size(tiny_bundle, rng):
    store, split, rules, fmap, context, model = tiny_bundle
    triple = (store.global_entity(split.train[0].a), model.sameas_relation,
              store.global_entity(split.train[0].b))
    out = negative_sample(triple, store, 500, rng)
    assert out.shape == (501, 3)
    assert tuple(out[0]) == triple
    # corrupted tails stay in the tail's KG under the default pool
    lo, hi = store.entity_range(KG_B)
    assert np.all((out[:, 2] >= lo) & (out[:, 2] < hi))
    assert np.all(out[:, 0] == triple[0]) and np.all(out[:, 1] == triple[1])


def test_zero_negatives_gives_zero_loss(tiny_bundle, rng):
    store, split, rules, fmap, context, model = tiny_bundle
    heads, rels, cands = make_batch(store, split, rules, model, 0, rng)
    loss, grads = batch_loss(model, store, rules, context, heads, rels, cands)
    assert loss == 0.0
    assert all(np.all(g == 0) for g in grads.values())


def test_singleton_pool_uniform_loss():
    # KG B with one entity: every candidate equals the true tail
    store = KnowledgeGraphStore()
    store.ingest_relational(parse_ntriples_text("<a0> <r> <a1> .\n<a1> <r> <a0> ."), KG_A)
    store.ingest_relational(parse_ntriples_text("<b0> <s> <b0> ."), KG_B)
    store.ingest_alignments(parse_ntriples_text("<a0> <same> <b0> ."))
    fmap = build_numeric_feature_map(store, store.alignments())
    model = init_model(store, [], fmap, k=3, seed=0)
    context = AlignmentContext.from_alignments(store, store.alignments())
    rng = np.random.Generator(np.random.PCG64(0))
    a0 = store.global_entity(store.find_entity(KG_A, "a0"))
    b0 = store.global_entity(store.find_entity(KG_B, "b0"))
    n = 500
    cands = negative_sample((a0, model.sameas_relation, b0), store, n, rng)[:, 2]
    loss, _ = batch_loss(model, store, [], context,
                         np.array([a0]), np.array([model.sameas_relation]),
                         cands[None, :])
    assert loss == pytest.approx(math.log(n + 1))


def test_empty_pool_is_an_error(tiny_bundle, rng):
    store, split, rules, fmap, context, model = tiny_bundle
    empty = KnowledgeGraphStore()
    empty.ingest_relational(parse_ntriples_text("<a0> <r> <a1> ."), KG_A)
    n_a = empty.n_entities(KG_A)
    with pytest.raises(ValueError):
        negative_sample((0, 1, n_a), empty, 5, rng)  # tail in empty KG B


def test_negative_sampling_deterministic(tiny_bundle):
    store, split, rules, fmap, context, model = tiny_bundle
    triple = (0, model.sameas_relation, store.entity_range(KG_B)[0])
    one = negative_sample(triple, store, 20, np.random.Generator(np.random.PCG64(5)))
    two = negative_sample(triple, store, 20, np.random.Generator(np.random.PCG64(5)))
    assert np.array_equal(one, two)


# -- loss arithmetic ----------------------------------------------------------------

def crafted_model(store, fmap, pos_score):
    """k=1 model whose latent scores are fully controlled by entity values."""
    model = init_model(store, [], fmap, k=1, seed=0)
    model.params["ent"][:] = 0.0
    model.params["rel"][:] = 0.0
    return model


def test_softmax_two_candidate_example(tiny_bundle):
    store, split, rules, fmap, context, _ = tiny_bundle
    model = crafted_model(store, fmap, math.log(3))
    sameas = model.sameas_relation
    h = store.global_entity(split.train[0].a)
    pos = store.global_entity(split.train[0].b)
    lo, hi = store.entity_range(KG_B)
    neg = pos + 1 if pos + 1 < hi else pos - 1
    model.params["ent"][h, 0] = 1.0
    model.params["rel"][sameas, 0] = 1.0
    model.params["ent"][pos, 0] = math.log(3)
    model.params["ent"][neg, 0] = 0.0
    cands = np.array([[pos, neg]])
    loss, _ = batch_loss(model, store, [], context, np.array([h]),
                         np.array([sameas]), cands, frozenset("L"))
    assert loss == pytest.approx(-math.log(0.75))


def test_equal_scores_loss_ln2(tiny_bundle):
    store, split, rules, fmap, context, _ = tiny_bundle
    model = crafted_model(store, fmap, 0.0)
    sameas = model.sameas_relation
    h = store.global_entity(split.train[0].a)
    pos = store.global_entity(split.train[0].b)
    neg = pos + 1 if pos + 1 < store.entity_range(KG_B)[1] else pos - 1
    loss, _ = batch_loss(model, store, [], context, np.array([h]),
                         np.array([sameas]), np.array([[pos, neg]]), frozenset("L"))
    assert loss == pytest.approx(math.log(2))


def test_loss_matches_independent_softmax(tiny_bundle, rng):
    """Oracle: recompute the loss from scalar score_total + plain softmax."""
    store, split, rules, fmap, context, model = tiny_bundle
    heads, rels, cands = make_batch(store, split, rules, model, 5, rng)
    loss, _ = batch_loss(model, store, rules, context, heads, rels, cands)
    expected_rows = []
    for i in range(len(heads)):
        scores = np.array([
            score_total(model, store, rules, context, int(heads[i]), int(rels[i]),
                        int(t)) for t in cands[i]])
        probs = np.exp(scores - scores.max())
        probs /= probs.sum()
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        expected_rows.append(-math.log(probs[0]))
    assert loss == pytest.approx(float(np.mean(expected_rows)), abs=1e-10)


def test_rank_invariance_under_constant_shift(tiny_bundle, rng):
    store, split, rules, fmap, context, model = tiny_bundle
    heads, rels, cands = make_batch(store, split, rules, model, 6, rng)
    loss0, grads0 = batch_loss(model, store, rules, context, heads, rels, cands)
    model.params["num_bias"][:] += 123.0
    model.params["rule_bias"][:] -= 7.5
    loss1, grads1 = batch_loss(model, store, rules, context, heads, rels, cands)
    model.params["num_bias"][:] -= 123.0
    model.params["rule_bias"][:] += 7.5
    assert abs(loss1 - loss0) < 1e-9
    for name in grads0:
        assert np.allclose(grads0[name], grads1[name], atol=1e-9)


def test_bias_gradients_are_exactly_zero(tiny_bundle, rng):
    store, split, rules, fmap, context, model = tiny_bundle
    heads, rels, cands = make_batch(store, split, rules, model, 4, rng)
    _, grads = batch_loss(model, store, rules, context, heads, rels, cands)
    assert np.all(grads["rule_bias"] == 0.0)
    assert np.all(grads["num_bias"] == 0.0)


def test_non_finite_loss_names_the_triple(tiny_bundle, rng):
    store, split, rules, fmap, context, model = tiny_bundle
    heads, rels, cands = make_batch(store, split, rules, model, 4, rng)
    old = model.params["ent"].copy()
    model.params["ent"][int(heads[0])] = np.inf
    try:
        with pytest.raises(NonFiniteLossError) as err:
            batch_loss(model, store, rules, context, heads, rels, cands)
        assert err.value.triple[0] == int(heads[0])
    finally:
        model.params["ent"][:] = old


# -- gradient oracle -----------------------------------------------------------------

def test_gradients_match_central_finite_differences(tiny_bundle):
    store, split, rules, fmap, context, model = tiny_bundle
    rng = np.random.Generator(np.random.PCG64(4))
    # give linear experts nonzero weights so their branches are exercised
    model.params["rule_w"][:] = rng.normal(0, 0.3, size=model.params["rule_w"].shape)
    model.params["num_w"][:] = rng.normal(0, 0.3, size=model.params["num_w"].shape)
    heads, rels, cands = make_batch(store, split, rules, model, 3, rng)

    def loss_only():
        return batch_loss(model, store, rules, context, heads, rels, cands)[0]

    _, grads = batch_loss(model, store, rules, context, heads, rels, cands)
    step = 1e-5
    names = sorted(model.params)
    flat = [(name, idx) for name in names
            for idx in np.ndindex(model.params[name].shape)]
    picked = [flat[i] for i in rng.choice(len(flat), size=100, replace=False)]
    worst = 0.0
    for name, idx in picked:
        arr = model.params[name]
        orig = arr[idx]
        arr[idx] = orig + step
        up = loss_only()
        arr[idx] = orig - step
        down = loss_only()
        arr[idx] = orig
        fd = (up - down) / (2 * step)
        analytic = grads[name][idx]
        rel_err = abs(analytic - fd) / max(1e-6, abs(analytic) + abs(fd))
        worst = max(worst, rel_err)
    assert worst <= 1e-4


# -- training loop ---------------------------------------------------------------------

def small_config(**kw):
    base = dict(k=8, max_epochs=10, num_negatives=10, batch_size=32,
                validate_every=5, seed=3)
    base.update(kw)
    return TrainConfig(**base)


def test_visual_only_training_is_immediate(tiny_bundle):
    store, split, rules, fmap, context, _ = tiny_bundle
    result = train(store, rules, split, small_config(active_experts=frozenset("I")))
    assert result.epochs_run == 0
    assert len(result.history) == 1
    assert result.history[0].epoch == 0


def test_training_log_is_deterministic(tiny_bundle):
    store, split, rules, fmap, context, _ = tiny_bundle
    config = small_config(deterministic=True)
    one = train(store, rules, split, config)
    two = train(store, rules, split, config)
    assert one.log_lines == two.log_lines
    for name in one.model.params:
        assert np.array_equal(one.model.params[name], two.model.params[name])


def test_epoch_and_validation_bounds(tiny_bundle):
    store, split, rules, fmap, context, _ = tiny_bundle
    result = train(store, rules, split, small_config(max_epochs=10, validate_every=5))
    assert result.epochs_run <= 10
    assert len(result.history) <= 2


def test_best_snapshot_dominates_later_validations(small_store):
    store, alignments = small_store
    split = split_alignments(alignments, 80, seed=2)
    rules = mine_rules(store, split.train, min_support=1, min_confidence=0.0)
    config = TrainConfig(k=8, max_epochs=30, num_negatives=20, batch_size=64,
                         validate_every=5, seed=1)
    result = train(store, rules, split, config)
    mrrs = [p.mrr for p in result.history]
    assert result.best_mrr == pytest.approx(max(mrrs))
    best_at = [p.epoch for p in result.history if p.mrr == result.best_mrr][0]
    for point in result.history:
        if point.epoch > best_at:
            assert point.mrr <= result.best_mrr
    if result.stopped_early:
        assert result.history[-1].mrr < max(mrrs[:-1])


def test_divergence_aborts_with_last_snapshot(tiny_bundle, monkeypatch):
    store, split, rules, fmap, context, _ = tiny_bundle
    from kgalign import training as training_mod
    from kgalign.optim import Adam

    real_step = Adam.step
    calls = {"n": 0}

    def poisoned_step(self, grads):
        real_step(self, grads)
        calls["n"] += 1
        if calls["n"] >= 3:
            self.params["ent"][0, 0] = np.inf

    monkeypatch.setattr(Adam, "step", poisoned_step)
    with pytest.raises(training_mod.TrainingDiverged) as err:
        train(store, rules, split, small_config(max_epochs=10, validate_every=5))
    # the exception carries the last finite snapshot
    assert all(np.all(np.isfinite(arr)) for arr in err.value.last_model.params.values())


def test_log_line_format(tiny_bundle):
    store, split, rules, fmap, context, _ = tiny_bundle
    result = train(store, rules, split, small_config())
    for line in result.log_lines:
        epoch, loss, mrr = line.split("\t")
        int(epoch)
        float(loss)
        float(mrr)
