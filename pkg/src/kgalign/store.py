"""Two-graph store: interned entities/relations, triples, modalities, alignments.

Ingestion is single-writer; freezing builds the numpy adjacency and modality
indexes that training and evaluation read concurrently. Global indexing puts
KG A entities first, then KG B; relations likewise, with the single cross
``sameAs`` relation last.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from . import binio
from .ntriples import IRI, LITERAL, RdfStatement

KG_A = "A"
KG_B = "B"
CROSS = "cross"
FORWARD = "forward"
INVERSE = "inverse"

SAMEAS_IRI = "http://www.w3.org/2002/07/owl#sameAs"

STORE_KIND = "kg-store"
STORE_VERSION = 1

__all__ = [
    "EntityId", "RelationId", "Triple", "Alignment", "NumericAttribute",
    "ImageEmbedding", "KnowledgeGraphStore", "IngestError",
    "parse_numeric_literal", "KG_A", "KG_B", "CROSS", "FORWARD", "INVERSE",
    "SAMEAS_IRI",
]


class IngestError(ValueError):
    pass


class EntityId(NamedTuple):
    index: int
    kg: str


class RelationId(NamedTuple):
    index: int
    kg: str


class Triple(NamedTuple):
    head: EntityId
    relation: RelationId
    tail: EntityId


class Alignment(NamedTuple):
    a: EntityId
    b: EntityId


class NumericAttribute(NamedTuple):
    entity: EntityId
    attribute: int
    value: float


class ImageEmbedding(NamedTuple):
    entity: EntityId
    vector: np.ndarray


_DATE_RE = re.compile(r"^([+-]?\d+)-([0-9?#]{1,2})-([0-9?#]{1,2})(?:T.*)?$")


def _date_component(raw: str) -> int:
    # missing components ("??", "##") count as 1
    return int(raw) if raw.isdigit() else 1


def parse_numeric_literal(text: str) -> float | None:
    """Lexical form -> finite float, with dates folded to fractional years.

    A date Y-M-D maps to Y + (M-1)/12 + (D-1)/365.25 so dates and plain
    scalars share one numeric feature space. Returns None when the form is
    not numeric (or not finite).
    """
    s = text.strip()
    m = _DATE_RE.match(s)
    if m:
        year = int(m.group(1))
        month = _date_component(m.group(2))
        day = _date_component(m.group(3))
        return year + (month - 1) / 12.0 + (day - 1) / 365.25
    try:
        value = float(s)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


class _Interner:
    """Dense index <-> symbol bijection, insertion ordered."""

    def __init__(self, symbols: Iterable[str] = ()):  # pragma: no branch
        self.symbols: list[str] = []
        self.index: dict[str, int] = {}
        for s in symbols:
            self.intern(s)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.index

    def intern(self, symbol: str) -> int:
        idx = self.index.get(symbol)
        if idx is None:
            idx = len(self.symbols)
            self.index[symbol] = idx
            self.symbols.append(symbol)
        return idx

    def lookup(self, symbol: str) -> int | None:
        return self.index.get(symbol)

    def symbol(self, idx: int) -> str:
        return self.symbols[idx]


@dataclass
class _CsrAdjacency:
    """Neighbors of every global entity, sorted by (entity, relation, other)."""
    indptr: np.ndarray
    rel: np.ndarray
    other: np.ndarray

    def neighbors(self, entity: int, relation: int) -> np.ndarray:
        lo, hi = self.indptr[entity], self.indptr[entity + 1]
        rels = self.rel[lo:hi]
        a = lo + np.searchsorted(rels, relation, side="left")
        b = lo + np.searchsorted(rels, relation, side="right")
        return self.other[a:b]

    def incident_relations(self, entity: int) -> np.ndarray:
        lo, hi = self.indptr[entity], self.indptr[entity + 1]
        rels = self.rel[lo:hi]
        if len(rels) == 0:
            return rels
        keep = np.empty(len(rels), dtype=bool)
        keep[0] = True
        np.not_equal(rels[1:], rels[:-1], out=keep[1:])
        return rels[keep]


def _build_csr(n_entities: int, key: np.ndarray, rel: np.ndarray,
               other: np.ndarray) -> _CsrAdjacency:
    order = np.lexsort((other, rel, key))
    key, rel, other = key[order], rel[order], other[order]
    indptr = np.zeros(n_entities + 1, dtype=np.int64)
    np.add.at(indptr, key + 1, 1)
    np.cumsum(indptr, out=indptr)
    return _CsrAdjacency(indptr, np.ascontiguousarray(rel), np.ascontiguousarray(other))


@dataclass
class _FrozenIndex:
    triples: np.ndarray          # (n, 3) int64 global (head, relation, tail)
    out_adj: _CsrAdjacency       # head -> (relation, tail)
    in_adj: _CsrAdjacency        # tail -> (relation, head)
    numeric: dict[str, np.ndarray]       # kg -> (n_ent, n_attr) with NaN gaps
    images: np.ndarray           # (n_ent_total, D) zero rows where absent
    image_mask: np.ndarray       # (n_ent_total,) bool
    alignments: np.ndarray       # (m, 2) int64 global, canonical A -> B


@dataclass
class KnowledgeGraphStore:
    kg_names: dict[str, str] = field(default_factory=lambda: {KG_A: "A", KG_B: "B"})
    sameas_iri: str = SAMEAS_IRI

    def __post_init__(self):
        self._entities = {KG_A: _Interner(), KG_B: _Interner()}
        self._relations = {KG_A: _Interner(), KG_B: _Interner()}
        self._attributes = {KG_A: _Interner(), KG_B: _Interner()}
        self._triples: dict[str, list[tuple[int, int, int]]] = {KG_A: [], KG_B: []}
        self._triple_set: dict[str, set[tuple[int, int, int]]] = {KG_A: set(), KG_B: set()}
        self._numeric: dict[str, dict[tuple[int, int], float]] = {KG_A: {}, KG_B: {}}
        self._embeddings: dict[str, dict[int, np.ndarray]] = {KG_A: {}, KG_B: {}}
        self._embedding_dim: dict[str, int | None] = {KG_A: None, KG_B: None}
        self._alignments: list[tuple[int, int]] = []
        self._alignment_set: set[tuple[int, int]] = set()
        self.attr_pairs: list[tuple[int, int]] = []
        self.skip_counts: dict[str, int] = {}
        self._frozen: _FrozenIndex | None = None

    # -- interning ---------------------------------------------------------

    def n_entities(self, kg: str) -> int:
        return len(self._entities[kg])

    def n_relations(self, kg: str) -> int:
        return len(self._relations[kg])

    def n_attributes(self, kg: str) -> int:
        return len(self._attributes[kg])

    @property
    def total_entities(self) -> int:
        return self.n_entities(KG_A) + self.n_entities(KG_B)

    @property
    def total_relations(self) -> int:
        # both KGs' relations plus the single cross sameAs relation
        return self.n_relations(KG_A) + self.n_relations(KG_B) + 1

    @property
    def sameas_relation(self) -> int:
        return self.n_relations(KG_A) + self.n_relations(KG_B)

    def entity_iri(self, entity: EntityId) -> str:
        return self._entities[entity.kg].symbol(entity.index)

    def relation_iri(self, relation: RelationId) -> str:
        if relation.kg == CROSS:
            return self.sameas_iri
        return self._relations[relation.kg].symbol(relation.index)

    def attribute_iri(self, kg: str, index: int) -> str:
        return self._attributes[kg].symbol(index)

    def find_entity(self, kg: str, iri: str) -> EntityId | None:
        idx = self._entities[kg].lookup(iri)
        return None if idx is None else EntityId(idx, kg)

    def find_relation(self, kg: str, iri: str) -> RelationId | None:
        idx = self._relations[kg].lookup(iri)
        return None if idx is None else RelationId(idx, kg)

    # -- global indexing ----------------------------------------------------

    def global_entity(self, entity: EntityId) -> int:
        if entity.kg == KG_A:
            return entity.index
        return self.n_entities(KG_A) + entity.index

    def entity_of_global(self, idx: int) -> EntityId:
        n_a = self.n_entities(KG_A)
        if idx < n_a:
            return EntityId(idx, KG_A)
        return EntityId(idx - n_a, KG_B)

    def kg_of_global(self, idx: int) -> str:
        return KG_A if idx < self.n_entities(KG_A) else KG_B

    def global_relation(self, relation: RelationId) -> int:
        if relation.kg == CROSS:
            return self.sameas_relation
        if relation.kg == KG_A:
            return relation.index
        return self.n_relations(KG_A) + relation.index

    def relation_of_global(self, idx: int) -> RelationId:
        r_a = self.n_relations(KG_A)
        r_b = self.n_relations(KG_B)
        if idx < r_a:
            return RelationId(idx, KG_A)
        if idx < r_a + r_b:
            return RelationId(idx - r_a, KG_B)
        return RelationId(0, CROSS)

    def relation_iri_global(self, idx: int) -> str:
        return self.relation_iri(self.relation_of_global(idx))

    def entity_range(self, kg: str) -> tuple[int, int]:
        """Half-open global index range of one KG's entities."""
        n_a = self.n_entities(KG_A)
        return (0, n_a) if kg == KG_A else (n_a, n_a + self.n_entities(KG_B))

    # -- ingestion ----------------------------------------------------------

    def _skip(self, key: str) -> None:
        self.skip_counts[key] = self.skip_counts.get(key, 0) + 1
        self._frozen = None

    def ingest_relational(self, statements: Iterable[RdfStatement], kg: str,
                          strict: bool = False) -> None:
        """Intern entities/relations and add deduplicated IRI->IRI triples."""
        self._frozen = None
        ents = self._entities[kg]
        rels = self._relations[kg]
        triples = self._triples[kg]
        seen = self._triple_set[kg]
        for st in statements:
            if st.object.kind != IRI or st.subject.kind != IRI:
                if strict:
                    raise IngestError(
                        f"relational triple with non-IRI term: {st.subject.value} "
                        f"{st.predicate.value} {st.object.value!r}")
                self._skip(f"relational_{kg}_non_iri")
                continue
            h = ents.intern(st.subject.value)
            r = rels.intern(st.predicate.value)
            t = ents.intern(st.object.value)
            key = (h, r, t)
            if key not in seen:
                seen.add(key)
                triples.append(key)

    def ingest_numeric(self, statements: Iterable[RdfStatement], kg: str,
                       strict: bool = False) -> None:
        """Store one finite value per (entity, attribute); first wins."""
        self._frozen = None
        ents = self._entities[kg]
        attrs = self._attributes[kg]
        values = self._numeric[kg]
        for st in statements:
            if st.object.kind != LITERAL:
                if strict:
                    raise IngestError(f"numeric triple object is not a literal: {st.object.value}")
                self._skip(f"numeric_{kg}_non_literal")
                continue
            ent_idx = ents.lookup(st.subject.value)
            if ent_idx is None:
                if strict:
                    raise IngestError(f"numeric triple for unknown entity: {st.subject.value}")
                self._skip(f"numeric_{kg}_unknown_entity")
                continue
            value = parse_numeric_literal(st.object.value)
            if value is None:
                if strict:
                    raise IngestError(
                        f"unparseable numeric literal {st.object.value!r} for {st.subject.value}")
                self._skip(f"numeric_{kg}_unparseable")
                continue
            attr_idx = attrs.intern(st.predicate.value)
            key = (ent_idx, attr_idx)
            if key in values:
                self._skip(f"numeric_{kg}_duplicate")
            else:
                values[key] = value

    def ingest_embeddings(self, source: str | Path | Iterable[str], kg: str,
                          strict: bool = False) -> None:
        """Load an MMKE/1 file; vectors are L2-normalized on load."""
        self._frozen = None
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as fh:
                self._ingest_embedding_lines(fh, kg, strict)
        else:
            self._ingest_embedding_lines(source, kg, strict)

    def _ingest_embedding_lines(self, lines: Iterable[str], kg: str, strict: bool) -> None:
        ents = self._entities[kg]
        table = self._embeddings[kg]
        it = iter(lines)
        try:
            header = next(it).strip()
        except StopIteration:
            raise IngestError("empty embedding file, expected 'MMKE 1 <D>' header") from None
        parts = header.split()
        if len(parts) != 3 or parts[0] != "MMKE" or parts[1] != "1":
            raise IngestError(f"bad embedding header {header!r}, expected 'MMKE 1 <D>'")
        dim = int(parts[2])
        if dim <= 0:
            raise IngestError(f"bad embedding dimension {dim}")
        if self._embedding_dim[kg] is not None and self._embedding_dim[kg] != dim:
            raise IngestError(
                f"embedding dimension mismatch: {dim} vs previously loaded {self._embedding_dim[kg]}")
        self._embedding_dim[kg] = dim
        for lineno, line in enumerate(it, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            iri_text, _, rest = line.partition("\t")
            try:
                vec = np.array(rest.split(), dtype=np.float64)
            except ValueError:
                raise IngestError(f"bad embedding row at line {lineno}: {line[:60]!r}") from None
            if vec.shape[0] != dim:
                raise IngestError(
                    f"embedding row at line {lineno} has dimension {vec.shape[0]}, expected {dim}")
            ent_idx = ents.lookup(iri_text)
            if ent_idx is None:
                if strict:
                    raise IngestError(f"embedding for unknown entity: {iri_text}")
                self._skip(f"embeddings_{kg}_unknown_entity")
                continue
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                if strict:
                    raise IngestError(f"zero embedding vector for {iri_text}")
                self._skip(f"embeddings_{kg}_zero_vector")
                continue
            if ent_idx in table:
                self._skip(f"embeddings_{kg}_duplicate")
                continue
            table[ent_idx] = vec / norm

    def ingest_alignments(self, statements: Iterable[RdfStatement],
                          strict: bool = False) -> None:
        """Add cross-KG pairs, canonically oriented A -> B and deduplicated.

        The whole file is treated as alignments regardless of its predicate
        IRI; the first predicate seen is recorded as the store's sameAs IRI.
        """
        self._frozen = None
        recorded_predicate = False
        for st in statements:
            if st.object.kind != IRI:
                if strict:
                    raise IngestError(f"alignment object is not an IRI: {st.object.value!r}")
                self._skip("alignments_non_iri")
                continue
            if not recorded_predicate:
                self.sameas_iri = st.predicate.value
                recorded_predicate = True
            s_a = self._entities[KG_A].lookup(st.subject.value)
            s_b = self._entities[KG_B].lookup(st.subject.value)
            o_a = self._entities[KG_A].lookup(st.object.value)
            o_b = self._entities[KG_B].lookup(st.object.value)
            if s_a is not None and o_b is not None:
                pair = (s_a, o_b)
            elif s_b is not None and o_a is not None:
                pair = (o_a, s_b)
            else:
                if strict:
                    raise IngestError(
                        f"alignment references entities absent from the relational graphs: "
                        f"{st.subject.value} / {st.object.value}")
                self._skip("alignments_unknown_entity")
                continue
            if pair in self._alignment_set:
                self._skip("alignments_duplicate")
            else:
                self._alignment_set.add(pair)
                self._alignments.append(pair)

    def load_attr_map(self, source: str | Path | Iterable[str], strict: bool = False) -> None:
        """Cross-KG numeric attribute pairing: lines '<attrA-IRI>\\t<attrB-IRI>'."""
        self._frozen = None
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        else:
            lines = list(source)
        seen = set(self.attr_pairs)
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                if strict:
                    raise IngestError(f"bad attribute-map line: {line!r}")
                self._skip("attr_map_malformed")
                continue
            a = self._attributes[KG_A].lookup(parts[0])
            b = self._attributes[KG_B].lookup(parts[1])
            if a is None or b is None:
                if strict:
                    raise IngestError(f"attribute-map line names unknown attribute: {line!r}")
                self._skip("attr_map_unknown_attr")
                continue
            if (a, b) not in seen:
                seen.add((a, b))
                self.attr_pairs.append((a, b))

    # -- views --------------------------------------------------------------

    def alignments(self) -> list[Alignment]:
        return [Alignment(EntityId(a, KG_A), EntityId(b, KG_B)) for a, b in self._alignments]

    def alignment_pairs_global(self) -> np.ndarray:
        n_a = self.n_entities(KG_A)
        if not self._alignments:
            return np.zeros((0, 2), dtype=np.int64)
        arr = np.array(self._alignments, dtype=np.int64)
        arr[:, 1] += n_a
        return arr

    def triples(self, kg: str) -> list[Triple]:
        return [Triple(EntityId(h, kg), RelationId(r, kg), EntityId(t, kg))
                for h, r, t in self._triples[kg]]

    def n_triples(self, kg: str) -> int:
        return len(self._triples[kg])

    def numeric_value(self, entity: EntityId, attr_index: int) -> float | None:
        return self._numeric[entity.kg].get((entity.index, attr_index))

    def numeric_attributes(self, kg: str) -> list[NumericAttribute]:
        return [NumericAttribute(EntityId(e, kg), a, v)
                for (e, a), v in sorted(self._numeric[kg].items())]

    def has_embedding(self, entity: EntityId) -> bool:
        return entity.index in self._embeddings[entity.kg]

    def image_embedding(self, entity: EntityId) -> ImageEmbedding | None:
        vec = self._embeddings[entity.kg].get(entity.index)
        return None if vec is None else ImageEmbedding(entity, vec)

    def embedding_dim(self) -> int | None:
        dims = [d for d in self._embedding_dim.values() if d is not None]
        if not dims:
            return None
        if len(dims) == 2 and dims[0] != dims[1]:
            raise IngestError(f"embedding dimensions differ across KGs: {dims}")
        return dims[0]

    # -- frozen numpy index ---------------------------------------------------

    @property
    def frozen(self) -> _FrozenIndex:
        if self._frozen is None:
            self._frozen = self._build_frozen()
        return self._frozen

    def _build_frozen(self) -> _FrozenIndex:
        n_a = self.n_entities(KG_A)
        n_total = self.total_entities
        r_a = self.n_relations(KG_A)

        rows = []
        for h, r, t in self._triples[KG_A]:
            rows.append((h, r, t))
        for h, r, t in self._triples[KG_B]:
            rows.append((h + n_a, r + r_a, t + n_a))
        triples = (np.array(rows, dtype=np.int64) if rows
                   else np.zeros((0, 3), dtype=np.int64))

        out_adj = _build_csr(n_total, triples[:, 0], triples[:, 1], triples[:, 2])
        in_adj = _build_csr(n_total, triples[:, 2], triples[:, 1], triples[:, 0])

        numeric = {}
        for kg in (KG_A, KG_B):
            mat = np.full((self.n_entities(kg), self.n_attributes(kg)), np.nan)
            for (e, a), v in self._numeric[kg].items():
                mat[e, a] = v
            numeric[kg] = mat

        dim = self.embedding_dim() or 0
        images = np.zeros((n_total, dim), dtype=np.float64)
        mask = np.zeros(n_total, dtype=bool)
        for kg, offset in ((KG_A, 0), (KG_B, n_a)):
            for e, vec in self._embeddings[kg].items():
                images[offset + e] = vec
                mask[offset + e] = True

        return _FrozenIndex(triples, out_adj, in_adj, numeric, images, mask,
                            self.alignment_pairs_global())

    def neighbors(self, entity_global: int, relation_global: int, direction: str) -> np.ndarray:
        """N_{r,forward}(e) = {t : (e,r,t)}; N_{r,inverse}(e) = {s : (s,r,e)}."""
        frozen = self.frozen
        adj = frozen.out_adj if direction == FORWARD else frozen.in_adj
        return adj.neighbors(entity_global, relation_global)

    def incident_relations(self, entity_global: int, direction: str) -> np.ndarray:
        """Relations r with nonempty N_{r,direction}(entity)."""
        frozen = self.frozen
        adj = frozen.out_adj if direction == FORWARD else frozen.in_adj
        return adj.incident_relations(entity_global)

    # -- statistics -----------------------------------------------------------

    def stats(self) -> dict:
        """Ingestion counts plus frequency-sorted entity/relation histograms."""
        report: dict = {"kg": {}, "alignments": len(self._alignments),
                        "skipped": dict(sorted(self.skip_counts.items()))}
        for kg in (KG_A, KG_B):
            ent_freq: dict[int, int] = {}
            rel_freq: dict[int, int] = {}
            for h, r, t in self._triples[kg]:
                ent_freq[h] = ent_freq.get(h, 0) + 1
                ent_freq[t] = ent_freq.get(t, 0) + 1
                rel_freq[r] = rel_freq.get(r, 0) + 1
            ents = self._entities[kg]
            rels = self._relations[kg]
            report["kg"][kg] = {
                "name": self.kg_names.get(kg, kg),
                "entities": len(ents),
                "relations": len(rels),
                "triples": len(self._triples[kg]),
                "numeric_literals": len(self._numeric[kg]),
                "images": len(self._embeddings[kg]),
                "entity_freq": sorted(((ents.symbol(e), c) for e, c in ent_freq.items()),
                                      key=lambda item: (-item[1], item[0])),
                "relation_freq": sorted(((rels.symbol(r), c) for r, c in rel_freq.items()),
                                        key=lambda item: (-item[1], item[0])),
            }
        return report

    # -- persistence ------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        numeric_arrays = {}
        for kg in (KG_A, KG_B):
            items = sorted(self._numeric[kg].items())
            keys = np.array([k for k, _ in items], dtype=np.int64).reshape(-1, 2)
            vals = np.array([v for _, v in items], dtype=np.float64)
            numeric_arrays[f"numeric_keys_{kg}"] = keys
            numeric_arrays[f"numeric_vals_{kg}"] = vals

        emb_arrays = {}
        for kg in (KG_A, KG_B):
            dim = self._embedding_dim[kg] or 0
            items = sorted(self._embeddings[kg].items())
            idx = np.array([k for k, _ in items], dtype=np.int64)
            mat = (np.stack([v for _, v in items]) if items
                   else np.zeros((0, dim), dtype=np.float64))
            emb_arrays[f"emb_idx_{kg}"] = idx
            emb_arrays[f"emb_mat_{kg}"] = mat

        arrays = {
            "triples_A": np.array(self._triples[KG_A], dtype=np.int64).reshape(-1, 3),
            "triples_B": np.array(self._triples[KG_B], dtype=np.int64).reshape(-1, 3),
            "alignments": np.array(self._alignments, dtype=np.int64).reshape(-1, 2),
            "attr_pairs": np.array(self.attr_pairs, dtype=np.int64).reshape(-1, 2),
            **numeric_arrays,
            **emb_arrays,
        }
        meta = {
            "kg_names": self.kg_names,
            "sameas_iri": self.sameas_iri,
            "entities": {kg: self._entities[kg].symbols for kg in (KG_A, KG_B)},
            "relations": {kg: self._relations[kg].symbols for kg in (KG_A, KG_B)},
            "attributes": {kg: self._attributes[kg].symbols for kg in (KG_A, KG_B)},
            "embedding_dim": self._embedding_dim,
            "skip_counts": self.skip_counts,
        }
        binio.write_snapshot(path, STORE_KIND, STORE_VERSION, meta, arrays)

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeGraphStore":
        header, arrays = binio.read_snapshot(path, kind=STORE_KIND)
        meta = header["meta"]
        store = cls(kg_names=meta["kg_names"], sameas_iri=meta["sameas_iri"])
        for kg in (KG_A, KG_B):
            store._entities[kg] = _Interner(meta["entities"][kg])
            store._relations[kg] = _Interner(meta["relations"][kg])
            store._attributes[kg] = _Interner(meta["attributes"][kg])
            store._triples[kg] = [tuple(row) for row in arrays[f"triples_{kg}"].tolist()]
            store._triple_set[kg] = set(store._triples[kg])
            keys = arrays[f"numeric_keys_{kg}"]
            vals = arrays[f"numeric_vals_{kg}"]
            store._numeric[kg] = {tuple(k): float(v) for k, v in zip(keys.tolist(), vals.tolist())}
            dim = meta["embedding_dim"][kg]
            store._embedding_dim[kg] = dim
            idx = arrays[f"emb_idx_{kg}"]
            mat = arrays[f"emb_mat_{kg}"]
            store._embeddings[kg] = {int(i): mat[j] for j, i in enumerate(idx.tolist())}
        store._alignments = [tuple(row) for row in arrays["alignments"].tolist()]
        store._alignment_set = set(store._alignments)
        store.attr_pairs = [tuple(row) for row in arrays["attr_pairs"].tolist()]
        store.skip_counts = dict(meta["skip_counts"])
        return store
