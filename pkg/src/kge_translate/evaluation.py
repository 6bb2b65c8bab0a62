"""Link-prediction ranking protocol: rank every entity as a replacement.

For each test triple, one endpoint is removed and every entity of the
dictionary is scored as its replacement; the rank of the correct entity in
the ascending score order is recorded. This is done for both endpoints and
summarized as mean rank, median rank and hits@10. Ranking is raw: other
true triples among the candidates are not discounted.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import (
    Dissimilarity,
    EmbeddingModel,
    dissimilarity,
    dissimilarity_unstructured,
)


class CorruptSide(enum.Enum):
    HEAD = "head"
    TAIL = "tail"


@dataclass(frozen=True)
class RankingMetrics:
    """Aggregated ranks for one corruption side (or both pooled)."""

    side: str
    mean_rank: float
    median_rank: float
    hits_at_10: float
    count: int


Scorer = str | Callable[[EmbeddingModel, Sequence[int]], float]


def _uses_label(scorer: Scorer) -> bool:
    if scorer == "translate" or scorer is dissimilarity:
        return True
    if scorer == "unstructured" or scorer is dissimilarity_unstructured:
        return False
    raise ValueError(f"unknown scorer {scorer!r}; expected 'translate' or 'unstructured'")


def candidate_scores(
    model: EmbeddingModel,
    triple: Sequence[int],
    side: CorruptSide,
    scorer: Scorer = "translate",
) -> np.ndarray:
    """Scores of all entities substituted into one endpoint of a triple.

    Returns an array of length ``num_entities`` whose entry e is the
    dissimilarity of the triple with entity e replacing the given side.
    """
    use_label = _uses_label(scorer)
    head, label, tail = triple
    model.check_ids(head, label, tail)
    entity_emb = model.entity_emb
    if side is CorruptSide.TAIL:
        base = entity_emb[head] + model.relation_emb[label] if use_label else entity_emb[head]
        residuals = base[None, :] - entity_emb
    else:
        base = model.relation_emb[label] - entity_emb[tail] if use_label else -entity_emb[tail]
        residuals = entity_emb + base[None, :]
    kind = model.dissim
    if kind is Dissimilarity.L1:
        np.abs(residuals, out=residuals)
        return residuals.sum(axis=1)
    squared = np.einsum("ij,ij->i", residuals, residuals)
    if kind is Dissimilarity.L2:
        return np.sqrt(squared)
    return squared


def rank_entity(
    model: EmbeddingModel,
    triple: Sequence[int],
    side: CorruptSide,
    scorer: Scorer = "translate",
) -> int:
    """Rank of the correct entity among all candidate replacements.

    The rank is 1 plus the number of candidates scoring strictly lower than
    the correct entity, so equal-scored candidates never push it down.
    """
    scores = candidate_scores(model, triple, side, scorer)
    true_id = triple[0] if side is CorruptSide.HEAD else triple[2]
    return 1 + int(np.count_nonzero(scores < scores[true_id]))


def collect_ranks(
    model: EmbeddingModel,
    triples: Sequence[Sequence[int]],
    scorer: Scorer = "translate",
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Head-side and tail-side ranks for every triple, in input order.

    ``threads`` > 1 splits the triples across a thread pool; each rank lands
    in its fixed position, so the result is identical to a sequential run.
    """
    count = len(triples)
    head_ranks = np.empty(count, dtype=np.int64)
    tail_ranks = np.empty(count, dtype=np.int64)

    def fill(start: int, stop: int) -> None:
        for i in range(start, stop):
            head_ranks[i] = rank_entity(model, triples[i], CorruptSide.HEAD, scorer)
            tail_ranks[i] = rank_entity(model, triples[i], CorruptSide.TAIL, scorer)

    if threads <= 1 or count < 2:
        fill(0, count)
    else:
        workers = min(threads, count)
        bounds = np.linspace(0, count, workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fill, bounds[w], bounds[w + 1]) for w in range(workers)]
            for future in futures:
                future.result()
    return head_ranks, tail_ranks


def _summarize(ranks: np.ndarray, side: str) -> RankingMetrics:
    return RankingMetrics(
        side=side,
        mean_rank=float(ranks.mean()),
        median_rank=float(np.median(ranks)),
        hits_at_10=float((ranks <= 10).mean()),
        count=int(ranks.size),
    )


def metrics_from_ranks(
    head_ranks: np.ndarray, tail_ranks: np.ndarray
) -> tuple[RankingMetrics, RankingMetrics, RankingMetrics]:
    """Summarize per-side ranks; combined pools both rank multisets."""
    combined = np.concatenate([np.asarray(head_ranks), np.asarray(tail_ranks)])
    return (
        _summarize(np.asarray(head_ranks), "head"),
        _summarize(np.asarray(tail_ranks), "tail"),
        _summarize(combined, "combined"),
    )


def evaluate(
    model: EmbeddingModel,
    triples: Sequence[Sequence[int]],
    scorer: Scorer = "translate",
    threads: int = 1,
) -> tuple[RankingMetrics, RankingMetrics, RankingMetrics]:
    """Run the ranking protocol on both sides of every triple.

    Returns (head, tail, combined) metrics; combined aggregates the two rank
    multisets rather than averaging the per-side summaries.
    """
    if not len(triples):
        raise ValueError("cannot evaluate an empty triple list")
    head_ranks, tail_ranks = collect_ranks(model, triples, scorer, threads)
    return metrics_from_ranks(head_ranks, tail_ranks)


def predict_top_k(
    model: EmbeddingModel,
    head: int,
    label: int,
    n: int,
    scorer: Scorer = "translate",
) -> list[tuple[int, float]]:
    """The n best-scoring tail entities for (head, label, ?), ascending.

    Ties are broken by ascending entity id; n is truncated to the number of
    entities.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    scores = candidate_scores(model, (head, label, 0), CorruptSide.TAIL, scorer)
    order = np.argsort(scores, kind="stable")[: min(n, model.num_entities)]
    return [(int(entity), float(scores[entity])) for entity in order]


def format_report(
    head: RankingMetrics, tail: RankingMetrics, combined: RankingMetrics
) -> list[str]:
    """Fixed-format, grep-friendly report lines, one per side."""
    return [
        f"side={m.side} mean={m.mean_rank:.3f} median={m.median_rank:.1f} "
        f"hits10={100.0 * m.hits_at_10:.1f}% n={m.count}"
        for m in (head, tail, combined)
    ]
