"""Concat and Ensemble comparison methods.

Concat trains a logistic regression on the concatenated modality features
of an entity pair (image vectors of both sides, numeric RBF slots, rule
indicators); its posterior is used directly as a ranking score. Ensemble
trains each expert family as its own single-expert PoE run and sums the
resulting scores at query time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import binio
from .experts import (LATENT, NUMERICAL, RELATIONAL, VISUAL, NumericFeatureMap,
                      PoeModel, PoeScorer, _numeric_slot_matrix,
                      build_numeric_feature_map, score_total)
from .optim import Adam
from .rules import AlignmentContext, HornRule, fired_sources, fired_targets, rules_hash
from .split import AlignmentSplit
from .store import KG_A, KG_B, KnowledgeGraphStore
from .training import TrainConfig, TrainResult, train

CONCAT_KIND = "concat-model"
CONCAT_VERSION = 1

ENSEMBLE_FAMILIES = (LATENT, RELATIONAL, NUMERICAL, VISUAL)

__all__ = ["LinearClassifier", "concat_train", "concat_score", "ConcatScorer",
           "train_ensemble", "ensemble_score", "EnsembleScorer",
           "save_classifier", "load_classifier", "pair_features", "feature_length"]


@dataclass
class LinearClassifier:
    weights: np.ndarray
    bias: float
    image_dim: int
    feature_map: NumericFeatureMap
    rules_digest: str


def feature_length(store: KnowledgeGraphStore, fmap: NumericFeatureMap,
                   rules: Sequence[HornRule]) -> int:
    dim = store.embedding_dim() or 0
    return 2 * dim + fmap.total_slots + len(rules)


def pair_features(store: KnowledgeGraphStore, fmap: NumericFeatureMap,
                  rules: Sequence[HornRule], context: AlignmentContext,
                  fixed_global: int, other_globals: np.ndarray) -> np.ndarray:
    """Feature rows for (fixed, other) pairs, orientation-normalized to (A, B).

    Layout: [image_A | image_B | numeric slots | rule indicators]; missing
    modalities are zero-filled.
    """
    other_globals = np.asarray(other_globals, dtype=np.int64)
    frozen = store.frozen
    dim = store.embedding_dim() or 0
    sameas = store.sameas_relation
    fixed_is_a = store.kg_of_global(fixed_global) == KG_A
    n = len(other_globals)
    out = np.zeros((n, feature_length(store, fmap, rules)))

    if dim:
        fixed_img = frozen.images[fixed_global]
        other_img = frozen.images[other_globals]
        a_block, b_block = (0, dim) if fixed_is_a else (dim, 0)
        out[:, a_block:a_block + dim] = fixed_img
        out[:, b_block:b_block + dim] = other_img

    psi = _numeric_slot_matrix(store, fmap, sameas, fixed_global, fixed_is_a,
                               other_globals)
    out[:, 2 * dim:2 * dim + psi.shape[1]] = psi

    base = 2 * dim + fmap.total_slots
    positions = {int(g): j for j, g in enumerate(other_globals)}
    for k, rule in enumerate(rules):
        fired = (fired_targets(store, rule, fixed_global, context) if fixed_is_a
                 else fired_sources(store, rule, fixed_global, context))
        for g in fired:
            j = positions.get(int(g))
            if j is not None:
                out[j, base + k] = 1.0
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def concat_train(store: KnowledgeGraphStore, rules: Sequence[HornRule],
                 split: AlignmentSplit, config: TrainConfig,
                 negatives_per_positive: int = 10) -> LinearClassifier:
    """Logistic regression on pair features, same optimizer settings as the trainer."""
    if not split.train:
        raise ValueError("training alignment set is empty")
    context = AlignmentContext.from_alignments(store, split.train, label="train")
    fmap = build_numeric_feature_map(store, split.train)
    # fixed stream tag keeps concat negatives decoupled from trainer draws
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=(config.seed, 0xC0C47))))

    b_lo, b_hi = store.entity_range(KG_B)
    heads = []
    tails = []
    labels = []
    for al in split.train:
        a = store.global_entity(al.a)
        b = store.global_entity(al.b)
        heads.append(a)
        tails.append(b)
        labels.append(1.0)
        for t_neg in rng.integers(b_lo, b_hi, size=negatives_per_positive):
            heads.append(a)
            tails.append(int(t_neg))
            labels.append(0.0)
    heads = np.array(heads, dtype=np.int64)
    tails = np.array(tails, dtype=np.int64)
    labels = np.array(labels)

    # features grouped by head so the numeric/rule helpers vectorize per block
    order = np.argsort(heads, kind="stable")
    features = np.empty((len(heads), feature_length(store, fmap, rules)))
    i = 0
    while i < len(order):
        j = i
        h = heads[order[i]]
        while j < len(order) and heads[order[j]] == h:
            j += 1
        rows = order[i:j]
        features[rows] = pair_features(store, fmap, rules, context, int(h), tails[rows])
        i = j

    params = {"w": np.zeros(features.shape[1]), "b": np.zeros(1)}
    adam = Adam(params, learning_rate=config.learning_rate)
    n = len(labels)
    for epoch in range(1, config.max_epochs + 1):
        erng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(entropy=(config.seed, 1, epoch))))
        perm = erng.permutation(n)
        for start in range(0, n, config.batch_size):
            rows = perm[start:start + config.batch_size]
            x = features[rows]
            y = labels[rows]
            z = x @ params["w"] + params["b"][0]
            prob = _sigmoid(z)
            residual = (prob - y) / len(rows)
            loss_terms = np.where(y > 0.5, np.log(np.maximum(prob, 1e-300)),
                                  np.log(np.maximum(1.0 - prob, 1e-300)))
            if not np.all(np.isfinite(loss_terms)):
                raise RuntimeError(f"concat training diverged at epoch {epoch}")
            adam.step({"w": x.T @ residual, "b": np.array([residual.sum()])})
    return LinearClassifier(weights=params["w"], bias=float(params["b"][0]),
                            image_dim=store.embedding_dim() or 0,
                            feature_map=fmap, rules_digest=rules_hash(store, rules))


def concat_score(classifier: LinearClassifier, features: np.ndarray) -> np.ndarray:
    """Posterior probability that the paired entities are the same."""
    return _sigmoid(features @ classifier.weights + classifier.bias)


class ConcatScorer:
    def __init__(self, classifier: LinearClassifier, store: KnowledgeGraphStore,
                 rules: Sequence[HornRule], context: AlignmentContext):
        if rules and rules_hash(store, rules) != classifier.rules_digest:
            raise ValueError("rule list does not match the classifier's rules digest")
        self.classifier = classifier
        self.store = store
        self.rules = list(rules)
        self.context = context

    def score_candidates(self, query_global: int) -> np.ndarray:
        other_kg = KG_B if self.store.kg_of_global(query_global) == KG_A else KG_A
        lo, hi = self.store.entity_range(other_kg)
        feats = pair_features(self.store, self.classifier.feature_map, self.rules,
                              self.context, query_global,
                              np.arange(lo, hi, dtype=np.int64))
        return concat_score(self.classifier, feats)


def save_classifier(classifier: LinearClassifier, path: str | Path) -> None:
    meta = {
        "bias": classifier.bias,
        "image_dim": classifier.image_dim,
        "feature_map": classifier.feature_map.to_meta(),
        "rules_digest": classifier.rules_digest,
    }
    binio.write_snapshot(path, CONCAT_KIND, CONCAT_VERSION, meta,
                         {"weights": classifier.weights})


def load_classifier(path: str | Path) -> LinearClassifier:
    header, arrays = binio.read_snapshot(path, kind=CONCAT_KIND)
    meta = header["meta"]
    return LinearClassifier(weights=arrays["weights"], bias=meta["bias"],
                            image_dim=meta["image_dim"],
                            feature_map=NumericFeatureMap.from_meta(meta["feature_map"]),
                            rules_digest=meta["rules_digest"])


def train_ensemble(store: KnowledgeGraphStore, rules: Sequence[HornRule],
                   split: AlignmentSplit, config: TrainConfig) -> dict[str, TrainResult]:
    """One independent single-expert PoE run per family (I is parameter-free)."""
    return {family: train(store, rules, split,
                          replace(config, active_experts=frozenset((family,))))
            for family in ENSEMBLE_FAMILIES}


def _check_same_store(models: Sequence[PoeModel]) -> None:
    shapes = {(m.n_entities, m.n_entities_a, m.n_relations, m.sameas_relation)
              for m in models}
    if len(shapes) > 1:
        raise ValueError("ensemble members were trained against different stores")


def ensemble_score(models: dict[str, PoeModel], store: KnowledgeGraphStore,
                   rules: Sequence[HornRule], context: AlignmentContext,
                   h, t) -> float:
    """Sum of the independently trained experts' scores for (h, sameAs, t)."""
    _check_same_store(list(models.values()))
    total = 0.0
    for family, model in models.items():
        total += score_total(model, store, rules, context, h,
                             model.sameas_relation, t, frozenset((family,)))
    return total


class EnsembleScorer:
    def __init__(self, models: dict[str, PoeModel], store: KnowledgeGraphStore,
                 rules: Sequence[HornRule], context: AlignmentContext):
        _check_same_store(list(models.values()))
        self.scorers = [PoeScorer(model, store, rules, context, frozenset((family,)))
                        for family, model in models.items()]

    def score_candidates(self, query_global: int) -> np.ndarray:
        total = self.scorers[0].score_candidates(query_global)
        for scorer in self.scorers[1:]:
            total = total + scorer.score_candidates(query_global)
        return total
