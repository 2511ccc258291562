"""Per-(relation, feature-type) expert scores in log space.

Experts multiply; all scoring here returns log f, so the product-of-experts
score of a triple is the sum of the active experts' values:

  L  diagonal trilinear product  <e_h, w_r, e_t>
  R  weighted sum of fired rule bodies plus a per-relation bias
  N  weighted Gaussian-RBF features on paired numeric attributes plus bias
  I  dot product of unit image embeddings (sameAs only), 0 when missing
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import binio, kernels
from .rules import AlignmentContext, HornRule, fired_sources, fired_targets, rules_hash
from .store import KG_A, KG_B, Alignment, EntityId, KnowledgeGraphStore, RelationId

MODEL_KIND = "poe-model"
MODEL_VERSION = 1

LATENT, RELATIONAL, NUMERICAL, VISUAL = "L", "R", "N", "I"
ALL_EXPERTS = frozenset((LATENT, RELATIONAL, NUMERICAL, VISUAL))

__all__ = [
    "PoeModel", "NumericSlot", "NumericFeatureMap", "init_model",
    "build_numeric_feature_map", "parse_experts", "experts_suffix",
    "score_latent", "score_relational", "score_numerical", "score_visual",
    "score_total", "PoeScorer", "save_model", "load_model",
    "LATENT", "RELATIONAL", "NUMERICAL", "VISUAL", "ALL_EXPERTS",
]


def parse_experts(suffix: str) -> frozenset[str]:
    """'lrni' (any order/case) -> active-expert set."""
    letters = set(suffix.strip().lower())
    if not letters or not letters <= {"l", "r", "n", "i"}:
        raise ValueError(f"expert suffix must be a non-empty subset of 'lrni', got {suffix!r}")
    return frozenset(c.upper() for c in letters)


def experts_suffix(active: frozenset[str]) -> str:
    return "".join(c.lower() for c in "LRNI" if c in active)


@dataclass(frozen=True)
class NumericSlot:
    attr_head: int
    attr_tail: int
    sigma: float


@dataclass
class NumericFeatureMap:
    """Per-relation RBF slots; slot weights live in one flat vector."""
    slots: dict[int, list[NumericSlot]] = field(default_factory=dict)

    def offsets(self) -> dict[int, int]:
        out = {}
        total = 0
        for rel in sorted(self.slots):
            out[rel] = total
            total += len(self.slots[rel])
        return out

    @property
    def total_slots(self) -> int:
        return sum(len(v) for v in self.slots.values())

    def to_meta(self) -> list:
        return [[rel, [[s.attr_head, s.attr_tail, s.sigma] for s in slots]]
                for rel, slots in sorted(self.slots.items())]

    @classmethod
    def from_meta(cls, meta: list) -> "NumericFeatureMap":
        return cls({int(rel): [NumericSlot(int(a), int(b), float(s)) for a, b, s in slots]
                    for rel, slots in meta})


def build_numeric_feature_map(store: KnowledgeGraphStore,
                              train_alignments: Sequence[Alignment],
                              per_relation: bool = False) -> NumericFeatureMap:
    """Freeze RBF slots before training.

    sameAs slots come from the store's cross-KG attribute pairing; each
    sigma is the std of value differences over training alignments, floored
    at 1e-6 (1.0 when no aligned pair exhibits both attributes). With
    per_relation=True, within-KG relations get self-paired attribute slots
    for general link prediction.
    """
    frozen = store.frozen
    num_a = frozen.numeric[KG_A]
    num_b = frozen.numeric[KG_B]
    a_idx = np.array([al.a.index for al in train_alignments], dtype=np.int64)
    b_idx = np.array([al.b.index for al in train_alignments], dtype=np.int64)

    def sigma_of(diffs: np.ndarray) -> float:
        if diffs.size == 0:
            return 1.0
        return max(float(np.std(diffs)), 1e-6)

    sameas_slots = []
    for attr_a, attr_b in store.attr_pairs:
        if len(a_idx):
            va = num_a[a_idx, attr_a]
            vb = num_b[b_idx, attr_b]
            ok = np.isfinite(va) & np.isfinite(vb)
            sigma = sigma_of((va - vb)[ok])
        else:
            sigma = 1.0
        sameas_slots.append(NumericSlot(attr_a, attr_b, sigma))
    fmap = NumericFeatureMap({store.sameas_relation: sameas_slots})

    if per_relation:
        triples = frozen.triples
        for rel in np.unique(triples[:, 1]) if len(triples) else ():
            rel = int(rel)
            kg = store.relation_of_global(rel).kg
            mat = frozen.numeric[kg]
            lo, _ = store.entity_range(kg)
            mask = triples[:, 1] == rel
            h_local = triples[mask, 0] - lo
            t_local = triples[mask, 2] - lo
            slots = []
            for attr in range(store.n_attributes(kg)):
                vh = mat[h_local, attr]
                vt = mat[t_local, attr]
                ok = np.isfinite(vh) & np.isfinite(vt)
                if not ok.any():
                    continue
                slots.append(NumericSlot(attr, attr, sigma_of((vh - vt)[ok])))
            if slots:
                fmap.slots[rel] = slots
    return fmap


@dataclass
class PoeModel:
    k: int
    n_entities: int
    n_entities_a: int
    n_relations: int
    sameas_relation: int
    params: dict[str, np.ndarray]
    feature_map: NumericFeatureMap
    rules_digest: str
    seed: int
    active_experts: frozenset[str] = ALL_EXPERTS

    def global_entity(self, e) -> int:
        if isinstance(e, EntityId):
            return e.index if e.kg == KG_A else self.n_entities_a + e.index
        return int(e)

    def global_relation(self, r) -> int:
        if isinstance(r, RelationId):
            raise TypeError("pass relation indexes through the store for RelationId")
        return int(r)

    def num_weight_slice(self, relation: int) -> slice:
        offsets = self.feature_map.offsets()
        if relation not in offsets:
            return slice(0, 0)
        start = offsets[relation]
        return slice(start, start + len(self.feature_map.slots[relation]))

    def copy_params(self) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.params.items()}


def init_model(store: KnowledgeGraphStore, rules: Sequence[HornRule],
               feature_map: NumericFeatureMap, k: int = 100, seed: int = 0,
               active_experts: frozenset[str] = ALL_EXPERTS) -> PoeModel:
    """Uniform [-6/sqrt(k), 6/sqrt(k)] embeddings; linear experts start neutral."""
    rng = np.random.Generator(np.random.PCG64(seed))
    bound = 6.0 / math.sqrt(k)
    n_ent = store.total_entities
    n_rel = store.total_relations
    params = {
        "ent": rng.uniform(-bound, bound, size=(n_ent, k)),
        "rel": rng.uniform(-bound, bound, size=(n_rel, k)),
        "rule_w": np.zeros(len(rules)),
        "rule_bias": np.zeros(n_rel),
        "num_w": np.zeros(feature_map.total_slots),
        "num_bias": np.zeros(n_rel),
    }
    return PoeModel(
        k=k, n_entities=n_ent, n_entities_a=store.n_entities(KG_A),
        n_relations=n_rel, sameas_relation=store.sameas_relation,
        params=params, feature_map=feature_map,
        rules_digest=rules_hash(store, rules), seed=seed,
        active_experts=frozenset(active_experts),
    )


# -- scalar scoring (one triple at a time) -----------------------------------

def score_latent(model: PoeModel, h, r, t) -> float:
    hi, ri, ti = model.global_entity(h), int(r), model.global_entity(t)
    p = model.params
    return float(np.dot(p["ent"][hi] * p["rel"][ri], p["ent"][ti]))


def score_relational(model: PoeModel, store: KnowledgeGraphStore,
                     rules: Sequence[HornRule], h, r, t,
                     alignment_context: AlignmentContext) -> float:
    ri = int(r)
    score = float(model.params["rule_bias"][ri])
    if ri != model.sameas_relation:
        return score
    hi, ti = model.global_entity(h), model.global_entity(t)
    # rule bodies live on canonical (KG A, KG B) pairs; sameAs is symmetric
    if store.kg_of_global(hi) == KG_B and store.kg_of_global(ti) == KG_A:
        hi, ti = ti, hi
    if store.kg_of_global(hi) != KG_A or store.kg_of_global(ti) != KG_B:
        return score
    weights = model.params["rule_w"]
    for k, rule in enumerate(rules):
        targets = fired_targets(store, rule, hi, alignment_context)
        if len(targets):
            pos = np.searchsorted(targets, ti)
            if pos < len(targets) and targets[pos] == ti:
                score += float(weights[k])
    return score


def _numeric_slot_matrix(store: KnowledgeGraphStore, fmap: NumericFeatureMap,
                         relation: int, fixed_global: int, fixed_is_head: bool,
                         other_globals: np.ndarray) -> np.ndarray:
    """RBF slot values, shape (len(other), n_slots); 0 where a value is missing.

    sameAs slots pair a KG A attribute with a KG B one, so the fixed entity's
    role follows its KG and candidates outside the opposite KG contribute 0.
    Within-KG relation slots keep both sides in the fixed entity's KG.
    """
    slots = fmap.slots.get(relation, [])
    out = np.zeros((len(other_globals), len(slots)))
    if not slots or len(other_globals) == 0:
        return out
    frozen = store.frozen
    fixed_kg = store.kg_of_global(fixed_global)
    if relation == store.sameas_relation:
        fixed_is_head = fixed_kg == KG_A
        other_kg = KG_B if fixed_kg == KG_A else KG_A
    else:
        other_kg = fixed_kg
    fixed_lo, _ = store.entity_range(fixed_kg)
    other_lo, other_hi = store.entity_range(other_kg)
    in_range = (other_globals >= other_lo) & (other_globals < other_hi)
    if not in_range.any():
        return out
    other_local = other_globals[in_range] - other_lo
    rows = np.nonzero(in_range)[0]
    fixed_local = fixed_global - fixed_lo
    for j, slot in enumerate(slots):
        attr_fixed = slot.attr_head if fixed_is_head else slot.attr_tail
        attr_other = slot.attr_tail if fixed_is_head else slot.attr_head
        v_fixed = frozen.numeric[fixed_kg][fixed_local, attr_fixed]
        if not np.isfinite(v_fixed):
            continue
        v_other = frozen.numeric[other_kg][other_local, attr_other]
        ok = np.isfinite(v_other)
        if not ok.any():
            continue
        diff = v_other[ok] - v_fixed
        out[rows[ok], j] = np.exp(-(diff * diff) / (2.0 * slot.sigma * slot.sigma))
    return out


def score_numerical(model: PoeModel, store: KnowledgeGraphStore, h, r, t) -> float:
    ri = int(r)
    bias = float(model.params["num_bias"][ri])
    slots = model.feature_map.slots.get(ri)
    if not slots:
        return bias
    hi, ti = model.global_entity(h), model.global_entity(t)
    psi = _numeric_slot_matrix(store, model.feature_map, ri, hi, True,
                               np.array([ti], dtype=np.int64))[0]
    w = model.params["num_w"][model.num_weight_slice(ri)]
    return bias + float(np.dot(w, psi))


def score_visual(model: PoeModel, store: KnowledgeGraphStore, h, r, t) -> float:
    """log f: dot of unit image vectors for sameAs, else 0 (f = 1)."""
    ri = int(r)
    if ri != model.sameas_relation:
        return 0.0
    frozen = store.frozen
    hi, ti = model.global_entity(h), model.global_entity(t)
    if not (frozen.image_mask[hi] and frozen.image_mask[ti]):
        return 0.0
    return float(np.dot(frozen.images[hi], frozen.images[ti]))


def score_total(model: PoeModel, store: KnowledgeGraphStore,
                rules: Sequence[HornRule], alignment_context: AlignmentContext,
                h, r, t, active_experts: frozenset[str] | None = None) -> float:
    active = active_experts if active_experts is not None else model.active_experts
    if not active:
        raise ValueError("active expert set must be non-empty")
    total = 0.0
    if LATENT in active:
        total += score_latent(model, h, r, t)
    if RELATIONAL in active:
        total += score_relational(model, store, rules, h, r, t, alignment_context)
    if NUMERICAL in active:
        total += score_numerical(model, store, h, r, t)
    if VISUAL in active:
        total += score_visual(model, store, h, r, t)
    return total


# -- batched scoring ----------------------------------------------------------

class PoeScorer:
    """Read-only candidate scorer over a frozen (model, store, rules) bundle."""

    def __init__(self, model: PoeModel, store: KnowledgeGraphStore,
                 rules: Sequence[HornRule], alignment_context: AlignmentContext,
                 active_experts: frozenset[str] | None = None):
        self.model = model
        self.store = store
        self.rules = list(rules)
        self.context = alignment_context
        self.active = (active_experts if active_experts is not None
                       else model.active_experts)
        if not self.active:
            raise ValueError("active expert set must be non-empty")
        if RELATIONAL in self.active:
            # also catches a forgotten rule file: the empty list has its own digest
            digest = rules_hash(store, self.rules)
            if digest != model.rules_digest:
                raise ValueError("rule list does not match the model's rules digest")

    def score_candidates(self, query_global: int) -> np.ndarray:
        """Scores of (query, sameAs, c) over every opposite-KG entity c."""
        store = self.store
        model = self.model
        p = model.params
        query_kg = store.kg_of_global(query_global)
        other_kg = KG_B if query_kg == KG_A else KG_A
        lo, hi = store.entity_range(other_kg)
        cands = np.arange(lo, hi, dtype=np.int64)
        scores = np.zeros(len(cands))
        sameas = model.sameas_relation

        if LATENT in self.active:
            scores += p["ent"][lo:hi] @ (p["ent"][query_global] * p["rel"][sameas])
        if VISUAL in self.active:
            frozen = store.frozen
            if frozen.image_mask[query_global] and frozen.images.shape[1]:
                scores += frozen.images[lo:hi] @ frozen.images[query_global]
        if NUMERICAL in self.active:
            fixed_is_head = query_kg == KG_A
            psi = _numeric_slot_matrix(store, model.feature_map, sameas,
                                       query_global, fixed_is_head, cands)
            w = p["num_w"][model.num_weight_slice(sameas)]
            if len(w):
                scores += psi @ w
            scores += p["num_bias"][sameas]
        if RELATIONAL in self.active:
            scores += p["rule_bias"][sameas]
            for k, rule in enumerate(self.rules):
                if query_kg == KG_A:
                    fired = fired_targets(store, rule, query_global, self.context)
                else:
                    fired = fired_sources(store, rule, query_global, self.context)
                if len(fired):
                    scores[fired - lo] += p["rule_w"][k]
        return scores

    def score_pairs(self, h_globals: np.ndarray, t_globals: np.ndarray) -> np.ndarray:
        """Element-wise sameAs scores for canonical (h in A, t in B) pairs."""
        h_globals = np.asarray(h_globals, dtype=np.int64)
        t_globals = np.asarray(t_globals, dtype=np.int64)
        n_a = self.store.n_entities(KG_A)
        if len(h_globals) and (h_globals.max() >= n_a or (len(t_globals) and t_globals.min() < n_a)):
            raise ValueError("score_pairs expects canonical (KG A head, KG B tail) pairs")
        model = self.model
        p = model.params
        store = self.store
        sameas = model.sameas_relation
        scores = np.zeros(len(h_globals))
        if LATENT in self.active:
            rels = np.full(len(h_globals), sameas, dtype=np.int64)
            scores += kernels.trilinear_forward(p["ent"], p["rel"], h_globals, rels, t_globals)
        if VISUAL in self.active:
            frozen = store.frozen
            if frozen.images.shape[1]:
                scores += kernels.rows_dot(frozen.images, h_globals, frozen.images, t_globals)
        if NUMERICAL in self.active:
            w = p["num_w"][model.num_weight_slice(sameas)]
            for i, (h, t) in enumerate(zip(h_globals, t_globals)):
                psi = _numeric_slot_matrix(store, model.feature_map, sameas, int(h), True,
                                           np.array([t], dtype=np.int64))[0]
                scores[i] += float(np.dot(w, psi)) if len(w) else 0.0
            scores += p["num_bias"][sameas]
        if RELATIONAL in self.active:
            scores += p["rule_bias"][sameas]
            fired_cache: dict[int, list[np.ndarray]] = {}
            for i, (h, t) in enumerate(zip(h_globals, t_globals)):
                h = int(h)
                if h not in fired_cache:
                    fired_cache[h] = [fired_targets(store, rule, h, self.context)
                                      for rule in self.rules]
                for k, fired in enumerate(fired_cache[h]):
                    if len(fired):
                        pos = np.searchsorted(fired, t)
                        if pos < len(fired) and fired[pos] == t:
                            scores[i] += p["rule_w"][k]
        return scores


# -- persistence ---------------------------------------------------------------

def save_model(model: PoeModel, path: str | Path) -> None:
    meta = {
        "k": model.k,
        "n_entities": model.n_entities,
        "n_entities_a": model.n_entities_a,
        "n_relations": model.n_relations,
        "sameas_relation": model.sameas_relation,
        "feature_map": model.feature_map.to_meta(),
        "rules_digest": model.rules_digest,
        "seed": model.seed,
        "active_experts": experts_suffix(model.active_experts),
    }
    binio.write_snapshot(path, MODEL_KIND, MODEL_VERSION, meta, model.params)


def load_model(path: str | Path) -> PoeModel:
    header, arrays = binio.read_snapshot(path, kind=MODEL_KIND)
    meta = header["meta"]
    return PoeModel(
        k=meta["k"], n_entities=meta["n_entities"], n_entities_a=meta["n_entities_a"],
        n_relations=meta["n_relations"], sameas_relation=meta["sameas_relation"],
        params=arrays, feature_map=NumericFeatureMap.from_meta(meta["feature_map"]),
        rules_digest=meta["rules_digest"], seed=meta["seed"],
        active_experts=parse_experts(meta["active_experts"]),
    )
