"""Seeded train/valid/test splits of the alignment set.

|train| = floor(P/100 * n); the remainder is halved, validation taking the
odd extra element. Selection is a PCG64-seeded permutation, so the same
(alignments, P, seed) always reproduces the same membership.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .ntriples import RdfStatement, iri, parse_ntriples, serialize_ntriples
from .store import Alignment, KG_A, KG_B, KnowledgeGraphStore

GENERATOR_NAME = "pcg64"
SIDECAR_NAME = "split.json"

__all__ = ["AlignmentSplit", "split_alignments", "write_split", "read_split"]


@dataclass
class AlignmentSplit:
    train: list[Alignment]
    valid: list[Alignment]
    test: list[Alignment]
    p_percent: float
    seed: int
    generator: str = GENERATOR_NAME

    def subsets(self) -> dict[str, list[Alignment]]:
        return {"train": self.train, "valid": self.valid, "test": self.test}


def train_size(n: int, p_percent: float) -> int:
    # exact integer arithmetic for integral percentages; floor either way
    if float(p_percent).is_integer():
        return int(p_percent) * n // 100
    return math.floor(p_percent / 100.0 * n)


def split_alignments(alignments: Sequence[Alignment], p_percent: float,
                     seed: int) -> AlignmentSplit:
    if not 0 < p_percent < 100:
        raise ValueError(f"p_percent must be in (0, 100), got {p_percent}")
    if not alignments:
        raise ValueError("cannot split an empty alignment set")
    ordered = sorted(alignments, key=lambda al: (al.a.index, al.b.index))
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(len(ordered))
    n_train = train_size(len(ordered), p_percent)
    remainder = len(ordered) - n_train
    n_valid = (remainder + 1) // 2
    picked = [ordered[i] for i in perm]
    return AlignmentSplit(
        train=picked[:n_train],
        valid=picked[n_train:n_train + n_valid],
        test=picked[n_train + n_valid:],
        p_percent=float(p_percent),
        seed=int(seed),
    )


def _alignment_statements(store: KnowledgeGraphStore,
                          alignments: Sequence[Alignment]) -> list[RdfStatement]:
    pred = iri(store.sameas_iri)
    rows = sorted((store.entity_iri(al.a), store.entity_iri(al.b)) for al in alignments)
    return [RdfStatement(iri(a), pred, iri(b)) for a, b in rows]


def write_split(split: AlignmentSplit, store: KnowledgeGraphStore,
                outdir: str | Path) -> None:
    """Three N-Triples files plus a JSON header sidecar."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, subset in split.subsets().items():
        text = serialize_ntriples(_alignment_statements(store, subset))
        (outdir / f"{name}.nt").write_text(text, encoding="utf-8")
    sidecar = {
        "p_percent": split.p_percent,
        "seed": split.seed,
        "generator": split.generator,
        "counts": {name: len(subset) for name, subset in split.subsets().items()},
    }
    (outdir / SIDECAR_NAME).write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_split(store: KnowledgeGraphStore, indir: str | Path) -> AlignmentSplit:
    indir = Path(indir)
    sidecar = json.loads((indir / SIDECAR_NAME).read_text(encoding="utf-8"))
    subsets: dict[str, list[Alignment]] = {}
    for name in ("train", "valid", "test"):
        alignments = []
        with open(indir / f"{name}.nt", "r", encoding="utf-8") as fh:
            for st in parse_ntriples(fh):
                a = store.find_entity(KG_A, st.subject.value)
                b = store.find_entity(KG_B, st.object.value)
                if a is None or b is None:
                    raise ValueError(
                        f"{name}.nt references entities unknown to the store: "
                        f"{st.subject.value} / {st.object.value}")
                alignments.append(Alignment(a, b))
        subsets[name] = alignments
    found = {name: len(v) for name, v in subsets.items()}
    if found != sidecar["counts"]:
        raise ValueError(f"split sidecar counts {sidecar['counts']} != files {found}")
    return AlignmentSplit(subsets["train"], subsets["valid"], subsets["test"],
                          p_percent=sidecar["p_percent"], seed=sidecar["seed"],
                          generator=sidecar["generator"])
