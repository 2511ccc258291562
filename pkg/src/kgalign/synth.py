"""Paired synthetic multi-modal KGs with planted alignments.

KG A gets a coverage chain plus random triples; aligned entities mirror
structure into KG B through paired relations (each mirrored edge survives
with probability 1 - mirror_dropout), share latent numeric values observed
with per-side Gaussian noise, and share a latent unit image vector perturbed
then re-normalized. Everything is emitted in the exact external formats so
synthetic runs exercise the full ingestion path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ntriples import parse_ntriples_text
from .store import SAMEAS_IRI, Alignment, KG_A, KG_B, KnowledgeGraphStore

XSD_DOUBLE = "http://www.w3.org/2001/XMLSchema#double"

__all__ = ["SynthConfig", "SynthFiles", "build_files", "generate", "emit"]


@dataclass
class SynthConfig:
    entities_per_kg: int = 200
    relation_types: int = 4
    triples_per_kg: int = 600
    aligned_fraction: float = 1.0
    mirror_dropout: float = 0.2
    numeric_attrs: int = 3
    numeric_noise_sigma: float = 0.05
    image_dim: int = 16
    image_noise_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.entities_per_kg < 2:
            raise ValueError("entities_per_kg must be at least 2")
        for name in ("relation_types", "triples_per_kg", "numeric_attrs", "image_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.aligned_fraction <= 1.0:
            raise ValueError("aligned_fraction must be in (0, 1]")
        if not 0.0 <= self.mirror_dropout < 1.0:
            raise ValueError("mirror_dropout must be in [0, 1)")
        if self.numeric_noise_sigma < 0 or self.image_noise_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")
        if self.triples_per_kg < self.entities_per_kg:
            raise ValueError("triples_per_kg must cover the entity chain "
                             "(need at least entities_per_kg)")
        capacity = self.relation_types * self.entities_per_kg * (self.entities_per_kg - 1)
        if self.triples_per_kg > capacity:
            raise ValueError(
                f"triples_per_kg={self.triples_per_kg} exceeds the "
                f"{capacity} distinct (head, relation, tail) combinations")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in (
            "entities_per_kg", "relation_types", "triples_per_kg", "aligned_fraction",
            "mirror_dropout", "numeric_attrs", "numeric_noise_sigma", "image_dim",
            "image_noise_sigma", "seed")}


def _ent_iri(kg: str, i: int) -> str:
    host = "kga" if kg == KG_A else "kgb"
    return f"http://{host}.example/e{i:05d}"


def _rel_iri(kg: str, j: int) -> str:
    host = "kga" if kg == KG_A else "kgb"
    return f"http://{host}.example/rel/r{j}"


def _attr_iri(kg: str, j: int) -> str:
    host = "kga" if kg == KG_A else "kgb"
    return f"http://{host}.example/attr/a{j}"


@dataclass
class SynthFiles:
    relational: dict[str, str]
    numeric: dict[str, str]
    embeddings: dict[str, str]
    sameas: str
    attr_map: str
    counts: dict[str, int] = field(default_factory=dict)


def _normalize_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return mat / norms


def build_files(config: SynthConfig) -> SynthFiles:
    """Deterministic emission: identical config+seed gives identical bytes."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n = config.entities_per_kg
    n_aligned = int(round(config.aligned_fraction * n))

    # KG A: coverage chain on relation r0, then distinct random extras
    triples_a = [(i, 0, (i + 1) % n) for i in range(n)]
    seen = set(triples_a)
    while len(triples_a) < config.triples_per_kg:
        h = int(rng.integers(0, n))
        t = int(rng.integers(0, n))
        r = int(rng.integers(0, config.relation_types))
        if h == t or (h, r, t) in seen:
            continue
        seen.add((h, r, t))
        triples_a.append((h, r, t))

    # KG B: coverage chain over a permuted entity order (so the chain itself
    # carries no alignment signal) plus mirrored aligned-endpoint triples
    perm = rng.permutation(n)
    triples_b = [(int(perm[i]), 0, int(perm[(i + 1) % n])) for i in range(n)]
    seen_b = set(triples_b)
    for h, r, t in triples_a:
        if h < n_aligned and t < n_aligned and rng.random() >= config.mirror_dropout:
            if (h, r, t) not in seen_b:
                seen_b.add((h, r, t))
                triples_b.append((h, r, t))

    def relational_text(kg: str, rows: list[tuple[int, int, int]]) -> str:
        return "".join(f"<{_ent_iri(kg, h)}> <{_rel_iri(kg, r)}> <{_ent_iri(kg, t)}> .\n"
                       for h, r, t in rows)

    # shared latent numeric values for aligned entities, independent otherwise
    lat_a = rng.normal(size=(n, config.numeric_attrs))
    lat_b = rng.normal(size=(n, config.numeric_attrs))
    lat_b[:n_aligned] = lat_a[:n_aligned]
    val_a = lat_a + rng.normal(0.0, 1.0, size=lat_a.shape) * config.numeric_noise_sigma
    val_b = lat_b + rng.normal(0.0, 1.0, size=lat_b.shape) * config.numeric_noise_sigma

    def numeric_text(kg: str, values: np.ndarray) -> str:
        lines = []
        for i in range(n):
            for j in range(config.numeric_attrs):
                lines.append(f"<{_ent_iri(kg, i)}> <{_attr_iri(kg, j)}> "
                             f"\"{float(values[i, j])!r}\"^^<{XSD_DOUBLE}> .\n")
        return "".join(lines)

    # shared latent unit image vectors, perturbed per side then re-normalized
    img_lat_a = rng.normal(size=(n, config.image_dim))
    img_lat_b = rng.normal(size=(n, config.image_dim))
    img_lat_b[:n_aligned] = img_lat_a[:n_aligned]
    img_a = _normalize_rows(img_lat_a + rng.normal(0.0, 1.0, size=img_lat_a.shape)
                            * config.image_noise_sigma)
    img_b = _normalize_rows(img_lat_b + rng.normal(0.0, 1.0, size=img_lat_b.shape)
                            * config.image_noise_sigma)

    def embedding_text(kg: str, mat: np.ndarray) -> str:
        lines = [f"MMKE 1 {config.image_dim}\n"]
        for i in range(n):
            vec = " ".join(repr(float(x)) for x in mat[i])
            lines.append(f"{_ent_iri(kg, i)}\t{vec}\n")
        return "".join(lines)

    sameas = "".join(
        f"<{_ent_iri(KG_A, i)}> <{SAMEAS_IRI}> <{_ent_iri(KG_B, i)}> .\n"
        for i in range(n_aligned))
    attr_map = "".join(f"{_attr_iri(KG_A, j)}\t{_attr_iri(KG_B, j)}\n"
                       for j in range(config.numeric_attrs))

    return SynthFiles(
        relational={KG_A: relational_text(KG_A, triples_a),
                    KG_B: relational_text(KG_B, triples_b)},
        numeric={KG_A: numeric_text(KG_A, val_a), KG_B: numeric_text(KG_B, val_b)},
        embeddings={KG_A: embedding_text(KG_A, img_a),
                    KG_B: embedding_text(KG_B, img_b)},
        sameas=sameas,
        attr_map=attr_map,
        counts={
            "entities_A": n, "entities_B": n,
            "relations_A": config.relation_types, "relations_B": config.relation_types,
            "triples_A": len(triples_a), "triples_B": len(triples_b),
            "numeric_A": n * config.numeric_attrs, "numeric_B": n * config.numeric_attrs,
            "images_A": n, "images_B": n,
            "alignments": n_aligned,
        },
    )


def ingest_files(files: SynthFiles, names: tuple[str, str] = ("SynthA", "SynthB"),
                 ) -> KnowledgeGraphStore:
    store = KnowledgeGraphStore(kg_names={KG_A: names[0], KG_B: names[1]})
    for kg in (KG_A, KG_B):
        store.ingest_relational(parse_ntriples_text(files.relational[kg]), kg, strict=True)
        store.ingest_numeric(parse_ntriples_text(files.numeric[kg]), kg, strict=True)
        store.ingest_embeddings(files.embeddings[kg].splitlines(), kg, strict=True)
    store.ingest_alignments(parse_ntriples_text(files.sameas), strict=True)
    store.load_attr_map(files.attr_map.splitlines(), strict=True)
    return store


def generate(config: SynthConfig) -> tuple[KnowledgeGraphStore, list[Alignment]]:
    """Build the paired store through the regular ingestion path."""
    store = ingest_files(build_files(config))
    return store, store.alignments()


def emit(config: SynthConfig, outdir: str | Path) -> dict:
    """Write N-Triples + MMKE/1 files plus a manifest; returns the manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = build_files(config)
    (outdir / "kga_relational.nt").write_text(files.relational[KG_A], encoding="utf-8")
    (outdir / "kgb_relational.nt").write_text(files.relational[KG_B], encoding="utf-8")
    (outdir / "kga_numeric.nt").write_text(files.numeric[KG_A], encoding="utf-8")
    (outdir / "kgb_numeric.nt").write_text(files.numeric[KG_B], encoding="utf-8")
    (outdir / "kga_images.mmke").write_text(files.embeddings[KG_A], encoding="utf-8")
    (outdir / "kgb_images.mmke").write_text(files.embeddings[KG_B], encoding="utf-8")
    (outdir / "sameas.nt").write_text(files.sameas, encoding="utf-8")
    (outdir / "attr_map.tsv").write_text(files.attr_map, encoding="utf-8")
    manifest = {"config": config.to_dict(), "counts": files.counts}
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest
