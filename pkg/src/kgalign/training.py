"""Negative-sampled cross-entropy training of the product-of-experts model.

Each training triple is scored against N uniformly corrupted tails; the
positive's softmax probability drives the loss. Gradients are analytic
(checked against finite differences in the test suite) and applied with
Adam. Validation MRR governs zero-patience early stopping; the best
snapshot is returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .experts import (ALL_EXPERTS, LATENT, NUMERICAL, RELATIONAL, VISUAL,
                      NumericFeatureMap, PoeModel, PoeScorer,
                      _numeric_slot_matrix, build_numeric_feature_map,
                      init_model)
from .optim import Adam
from .ranking import evaluate
from .rules import AlignmentContext, HornRule, fired_targets
from .split import AlignmentSplit
from .store import KnowledgeGraphStore

__all__ = ["TrainConfig", "TrainResult", "ValidationPoint", "negative_sample",
           "batch_loss", "train", "NonFiniteLossError", "TrainingDiverged"]

POOL_TAIL_KG = "kg"    # corrupt within the true tail's KG (evaluation-matched)
POOL_ALL = "all"       # corrupt from the union of both KGs' entities


class NonFiniteLossError(RuntimeError):
    def __init__(self, message: str, triple: tuple[int, int, int]):
        super().__init__(message)
        self.triple = triple


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, last_model: PoeModel):
        super().__init__(message)
        self.last_model = last_model


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 512
    max_epochs: int = 100
    num_negatives: int = 500
    validate_every: int = 5
    active_experts: frozenset[str] = ALL_EXPERTS
    seed: int = 0
    k: int = 100
    negative_pool: str = POOL_TAIL_KG
    deterministic: bool = False
    per_relation_numeric: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        for name in ("batch_size", "max_epochs", "num_negatives", "validate_every", "k"):
            if getattr(self, name) < (0 if name == "num_negatives" else 1):
                raise ValueError(f"{name} must be positive")
        if self.negative_pool not in (POOL_TAIL_KG, POOL_ALL):
            raise ValueError(f"negative_pool must be '{POOL_TAIL_KG}' or '{POOL_ALL}'")
        if not self.active_experts or not self.active_experts <= ALL_EXPERTS:
            raise ValueError("active_experts must be a non-empty subset of {L,R,N,I}")


@dataclass
class ValidationPoint:
    epoch: int
    mean_loss: float
    mrr: float


@dataclass
class TrainResult:
    model: PoeModel
    history: list[ValidationPoint] = field(default_factory=list)
    best_epoch: int = 0
    best_mrr: float = float("nan")
    stopped_early: bool = False
    epochs_run: int = 0

    @property
    def log_lines(self) -> list[str]:
        return [f"{p.epoch}\t{p.mean_loss!r}\t{p.mrr!r}" for p in self.history]


def _corruption_ranges(store: KnowledgeGraphStore, tails: np.ndarray,
                       pool: str) -> tuple[np.ndarray, np.ndarray]:
    if pool == POOL_ALL:
        lo = np.zeros(len(tails), dtype=np.int64)
        hi = np.full(len(tails), store.total_entities, dtype=np.int64)
    else:
        n_a = store.n_entities("A")
        in_b = tails >= n_a
        lo = np.where(in_b, n_a, 0).astype(np.int64)
        hi = np.where(in_b, store.total_entities, n_a).astype(np.int64)
    if np.any(hi <= lo):
        raise ValueError("negative-sampling corruption pool is empty")
    return lo, hi


def _sample_candidate_tails(store: KnowledgeGraphStore, triples: np.ndarray,
                            n_negatives: int, rng: np.random.Generator,
                            pool: str) -> np.ndarray:
    """(B, N+1) candidate tails, column 0 the true tail."""
    tails = triples[:, 2]
    cands = np.empty((len(triples), n_negatives + 1), dtype=np.int64)
    cands[:, 0] = tails
    if n_negatives:
        lo, hi = _corruption_ranges(store, tails, pool)
        cands[:, 1:] = rng.integers(lo[:, None], hi[:, None],
                                    size=(len(triples), n_negatives))
    return cands


def negative_sample(triple: Sequence[int], store: KnowledgeGraphStore,
                    n_negatives: int, rng: np.random.Generator,
                    pool: str = POOL_TAIL_KG) -> np.ndarray:
    """Candidate set for one triple: (N+1, 3) array, row 0 the positive.

    Tails are drawn uniformly with replacement; duplicates of the true tail
    are permitted (they score identically, so the loss is unaffected).
    """
    arr = np.asarray(triple, dtype=np.int64).reshape(1, 3)
    tails = _sample_candidate_tails(store, arr, n_negatives, rng, pool)[0]
    out = np.empty((n_negatives + 1, 3), dtype=np.int64)
    out[:, 0] = arr[0, 0]
    out[:, 1] = arr[0, 1]
    out[:, 2] = tails
    return out


def batch_loss(model: PoeModel, store: KnowledgeGraphStore,
               rules: Sequence[HornRule], context: AlignmentContext,
               heads: np.ndarray, rels: np.ndarray, cands: np.ndarray,
               active_experts: frozenset[str] | None = None,
               fired_cache: dict | None = None):
    """Mean negative log softmax-probability of the positives, plus gradients.

    cands holds each row's candidate tails with the positive in column 0.
    Gradients cover every parameter tensor; biases shared by a whole row
    cancel in the softmax and correctly come out zero.
    """
    active = active_experts if active_experts is not None else model.active_experts
    p = model.params
    B, C = cands.shape
    sameas = model.sameas_relation
    fmap = model.feature_map

    flat_h = np.repeat(heads, C)
    flat_r = np.repeat(rels, C)
    flat_t = cands.ravel()
    scores = np.zeros((B, C))

    if LATENT in active:
        scores += kernels.trilinear_forward(p["ent"], p["rel"],
                                            flat_h, flat_r, flat_t).reshape(B, C)

    sameas_rows = np.nonzero(rels == sameas)[0]
    if VISUAL in active and len(sameas_rows):
        images = store.frozen.images
        if images.shape[1]:
            sub_h = np.repeat(heads[sameas_rows], C)
            sub_t = cands[sameas_rows].ravel()
            scores[sameas_rows] += kernels.rows_dot(images, sub_h,
                                                    images, sub_t).reshape(-1, C)

    num_cache: list[tuple[int, int, np.ndarray]] = []
    if NUMERICAL in active:
        scores += p["num_bias"][rels][:, None]
        for i in range(B):
            ri = int(rels[i])
            if fmap.slots.get(ri):
                psi = _numeric_slot_matrix(store, fmap, ri, int(heads[i]), True, cands[i])
                w = p["num_w"][model.num_weight_slice(ri)]
                scores[i] += psi @ w
                num_cache.append((i, ri, psi))

    rule_cache: list[tuple[int, list[tuple[int, np.ndarray]]]] = []
    if RELATIONAL in active:
        scores += p["rule_bias"][rels][:, None]
        if rules:
            if fired_cache is None:
                fired_cache = {}
            for i in sameas_rows:
                h = int(heads[i])
                per_head = fired_cache.get(h)
                if per_head is None:
                    per_head = [fired_targets(store, rule, h, context) for rule in rules]
                    fired_cache[h] = per_head
                entries = []
                for k, fired in enumerate(per_head):
                    if len(fired):
                        positions = np.nonzero(np.isin(cands[i], fired))[0]
                        if len(positions):
                            entries.append((k, positions))
                if entries:
                    for k, positions in entries:
                        scores[i, positions] += p["rule_w"][k]
                    rule_cache.append((i, entries))

    # numerically stable softmax; positives sit in column 0. Non-finite
    # scores surface as a diagnostic below, not as numpy warnings.
    with np.errstate(invalid="ignore"):
        shifted = scores - scores.max(axis=1, keepdims=True)
        ex = np.exp(shifted)
        total = ex.sum(axis=1)
        log_prob_pos = shifted[:, 0] - np.log(total)
        losses = -log_prob_pos
    if not np.all(np.isfinite(losses)):
        bad = int(np.nonzero(~np.isfinite(losses))[0][0])
        triple = (int(heads[bad]), int(rels[bad]), int(cands[bad, 0]))
        raise NonFiniteLossError(
            f"non-finite loss for triple (h={triple[0]}, r={triple[1]}, t={triple[2]})",
            triple)
    loss = float(losses.mean())

    g = ex / total[:, None]
    g[:, 0] -= 1.0
    g /= B

    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    if LATENT in active:
        kernels.trilinear_backward(p["ent"], p["rel"], flat_h, flat_r, flat_t,
                                   g.ravel(), grads["ent"], grads["rel"])
    for i, ri, psi in num_cache:
        grads["num_w"][model.num_weight_slice(ri)] += psi.T @ g[i]
    for i, entries in rule_cache:
        for k, positions in entries:
            grads["rule_w"][k] += g[i, positions].sum()
    return loss, grads


def _training_triples(store: KnowledgeGraphStore, split: AlignmentSplit,
                      active: frozenset[str]) -> np.ndarray:
    sameas = store.sameas_relation
    rows = [(store.global_entity(al.a), sameas, store.global_entity(al.b))
            for al in split.train]
    pool = np.array(rows, dtype=np.int64).reshape(-1, 3)
    # relational triples only carry latent-expert signal (their R/N experts
    # are bias-only), so they join the pool only when L is active
    if LATENT in active and len(store.frozen.triples):
        pool = np.concatenate([pool, store.frozen.triples])
    return pool


def train(store: KnowledgeGraphStore, rules: Sequence[HornRule],
          split: AlignmentSplit, config: TrainConfig,
          feature_map: NumericFeatureMap | None = None) -> TrainResult:
    """Fit a PoeModel on the split's training alignments plus both KGs' triples."""
    if not split.train:
        raise ValueError("training alignment set is empty")
    active = config.active_experts
    if feature_map is None:
        feature_map = build_numeric_feature_map(store, split.train,
                                                per_relation=config.per_relation_numeric)
    model = init_model(store, rules, feature_map, k=config.k, seed=config.seed,
                       active_experts=active)
    context = AlignmentContext.from_alignments(store, split.train, label="train")
    scorer = PoeScorer(model, store, rules, context, active)

    def validate() -> float:
        if not split.valid:
            return float("nan")
        return evaluate(scorer, split.valid, store, hits_ns=(1, 10)).combined.mrr

    result = TrainResult(model=model)
    trainable = bool(active & {LATENT, RELATIONAL, NUMERICAL})
    if not trainable:
        # nothing to fit (e.g. visual-only): validation is immediate
        mrr = validate()
        result.history.append(ValidationPoint(0, float("nan"), mrr))
        result.best_epoch, result.best_mrr = 0, mrr
        return result

    pool = _training_triples(store, split, active)
    adam = Adam(model.params, learning_rate=config.learning_rate)
    fired_cache: dict = {}

    best_params = model.copy_params()
    best_mrr = -np.inf
    prev_mrr = -np.inf
    best_epoch = 0

    for epoch in range(1, config.max_epochs + 1):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(entropy=(config.seed, epoch))))
        perm = rng.permutation(len(pool))
        epoch_loss = 0.0
        for start in range(0, len(pool), config.batch_size):
            batch = pool[perm[start:start + config.batch_size]]
            cands = _sample_candidate_tails(store, batch, config.num_negatives,
                                            rng, config.negative_pool)
            try:
                loss, grads = batch_loss(model, store, rules, context,
                                         batch[:, 0], batch[:, 1], cands,
                                         active, fired_cache)
            except NonFiniteLossError as exc:
                model.params = best_params
                raise TrainingDiverged(
                    f"training diverged during epoch {epoch}: {exc}", model) from exc
            adam.step(grads)
            epoch_loss += loss * len(batch)
        epoch_loss /= len(pool)
        result.epochs_run = epoch

        if epoch % config.validate_every == 0 or epoch == config.max_epochs:
            if not all(np.all(np.isfinite(arr)) for arr in model.params.values()):
                model.params = best_params
                raise TrainingDiverged(
                    f"non-finite parameters after epoch {epoch}", model)
            mrr = validate()
            result.history.append(ValidationPoint(epoch, epoch_loss, mrr))
            if np.isnan(mrr):
                continue
            if mrr > best_mrr:
                best_mrr = mrr
                best_epoch = epoch
                best_params = model.copy_params()
            if mrr < prev_mrr:
                result.stopped_early = True
                break
            prev_mrr = mrr

    model.params = best_params
    result.best_epoch = best_epoch
    result.best_mrr = best_mrr if best_mrr != -np.inf else float("nan")
    return result
