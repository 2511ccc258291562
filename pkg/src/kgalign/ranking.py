"""Unfiltered ranking evaluation for sameAs completion queries.

Every test alignment produces two queries: (a, sameAs, ?) ranked against
all KG B entities and (?, sameAs, b) against all KG A entities. Nothing is
filtered from the candidate pools; ties share the mean of their positions
(a constant scorer cannot rank well by luck).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .store import Alignment, KG_A, KnowledgeGraphStore

__all__ = ["DirectionMetrics", "RankingReport", "rank_from_scores", "rank_query",
           "metrics_from_ranks", "evaluate", "report_csv", "report_table",
           "paper_style_row"]

TAIL = "tail"   # (a, sameAs, ?) over KG B
HEAD = "head"   # (?, sameAs, b) over KG A


def rank_from_scores(scores: np.ndarray, true_index: int) -> float:
    """rank = 1 + #{strictly better} + #{ties other than the true answer}/2."""
    true_score = scores[true_index]
    greater = int(np.count_nonzero(scores > true_score))
    ties = int(np.count_nonzero(scores == true_score)) - 1
    return 1.0 + greater + ties / 2.0


def rank_query(scorer, query_global: int, true_global: int,
               store: KnowledgeGraphStore) -> float:
    """Rank of the true entity among all opposite-KG candidates."""
    scores = scorer.score_candidates(query_global)
    other_kg = "B" if store.kg_of_global(query_global) == KG_A else "A"
    lo, hi = store.entity_range(other_kg)
    if not lo <= true_global < hi:
        raise ValueError(f"true entity {true_global} is outside the candidate pool")
    return rank_from_scores(scores, true_global - lo)


@dataclass
class DirectionMetrics:
    mean_rank: float
    mrr: float
    hits_at: dict[int, float]
    query_count: int


@dataclass
class RankingReport:
    tail: DirectionMetrics
    head: DirectionMetrics
    combined: DirectionMetrics        # micro average over all 2*|test| queries
    combined_macro: DirectionMetrics  # mean of the two per-direction values
    hits_ns: tuple[int, ...]

    def direction(self, name: str) -> DirectionMetrics:
        return {"tail": self.tail, "head": self.head, "combined": self.combined,
                "combined_macro": self.combined_macro}[name]


def metrics_from_ranks(ranks: Sequence[float], hits_ns: Sequence[int]) -> DirectionMetrics:
    arr = np.asarray(ranks, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot compute metrics over zero queries")
    return DirectionMetrics(
        mean_rank=float(arr.mean()),
        mrr=float((1.0 / arr).mean()),
        hits_at={n: float((arr <= n).mean()) for n in hits_ns},
        query_count=int(arr.size),
    )


def _macro(tail: DirectionMetrics, head: DirectionMetrics,
           hits_ns: Sequence[int]) -> DirectionMetrics:
    return DirectionMetrics(
        mean_rank=(tail.mean_rank + head.mean_rank) / 2.0,
        mrr=(tail.mrr + head.mrr) / 2.0,
        hits_at={n: (tail.hits_at[n] + head.hits_at[n]) / 2.0 for n in hits_ns},
        query_count=tail.query_count + head.query_count,
    )


def evaluate(scorer, test_alignments: Sequence[Alignment], store: KnowledgeGraphStore,
             hits_ns: Sequence[int] = (1, 10)) -> RankingReport:
    if not test_alignments:
        raise ValueError("cannot evaluate an empty test set")
    context = getattr(scorer, "context", None)
    if context is not None and hasattr(context, "pairs"):
        # leakage guard: the relational expert must not consult evaluated pairs
        leaked = sum((store.global_entity(al.a), store.global_entity(al.b))
                     in context.pairs for al in test_alignments)
        if leaked:
            raise ValueError(
                f"{leaked} evaluated alignments are present in the scorer's "
                f"alignment context ({context.label!r}); evaluation must use "
                f"a training-only context")
    hits_ns = tuple(hits_ns)
    tail_ranks = []
    head_ranks = []
    for al in test_alignments:
        a = store.global_entity(al.a)
        b = store.global_entity(al.b)
        tail_ranks.append(rank_query(scorer, a, b, store))
        head_ranks.append(rank_query(scorer, b, a, store))
    tail = metrics_from_ranks(tail_ranks, hits_ns)
    head = metrics_from_ranks(head_ranks, hits_ns)
    combined = metrics_from_ranks(tail_ranks + head_ranks, hits_ns)
    return RankingReport(tail, head, combined, _macro(tail, head, hits_ns), hits_ns)


def report_csv(report: RankingReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["direction", "metric", "value"])
    for name in (TAIL, HEAD, "combined"):
        m = report.direction(name)
        writer.writerow([name, "mean_rank", repr(m.mean_rank)])
        writer.writerow([name, "mrr", repr(m.mrr)])
        for n in report.hits_ns:
            writer.writerow([name, f"hits@{n}", repr(m.hits_at[n])])
    return buf.getvalue()


def report_table(report: RankingReport) -> str:
    headers = ["direction", "MR", "MRR"] + [f"Hits@{n}" for n in report.hits_ns] + ["queries"]
    rows = []
    for name in (TAIL, HEAD, "combined", "combined_macro"):
        m = report.direction(name)
        rows.append([name, f"{m.mean_rank:.2f}", f"{m.mrr:.4f}"]
                    + [f"{m.hits_at[n]:.4f}" for n in report.hits_ns]
                    + [str(m.query_count)])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def paper_style_row(report: RankingReport, label: str = "combined") -> str:
    """MRR / Hits@1 / Hits@10 as percentage points (x100)."""
    m = report.direction(label)
    hits = [m.hits_at.get(n) for n in (1, 10)]
    cells = [f"{m.mrr * 100:.1f}"] + [f"{h * 100:.1f}" if h is not None else "-" for h in hits]
    return "\t".join(cells)
