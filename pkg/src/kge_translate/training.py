"""Margin-ranking SGD over corrupted triples with validation model selection.

Each training triple is visited once per epoch in a fresh shuffle, paired
with one corrupted triple (head or tail replaced by a random other entity),
and pushed through a single hinge step: the positive score must beat the
negative score by at least the margin or the involved embeddings move.
Entity rows touched by a step are re-projected to the unit sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .evaluation import evaluate
from .kb_data import KnowledgeBase, Triple
from .model import (
    Dissimilarity,
    EmbeddingModel,
    dissimilarity,
    init_model,
    project_entities,
    reduce_residual,
    residual_subgradient,
)


@dataclass(frozen=True)
class Hyperparams:
    """Training settings; defaults match the CLI's large-graph defaults."""

    k: int = 50
    margin: float = 1.0
    learning_rate: float = 0.01
    max_epochs: int = 1000
    eval_every: int = 25
    seed: int = 0
    dissim: Dissimilarity = Dissimilarity.L1
    valid_sample: int | None = 1000

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not (1 <= self.eval_every <= self.max_epochs):
            raise ValueError("eval_every must be in [1, max_epochs]")
        if self.valid_sample is not None and self.valid_sample < 1:
            raise ValueError("valid_sample must be positive or None")


@dataclass
class TrainReport:
    """Loss and validation history of one training run."""

    epoch_losses: list[float] = field(default_factory=list)
    evaluations: list[tuple[int, float]] = field(default_factory=list)
    best_epoch: int = 0
    best_valid_mean_rank: float = math.inf
    triples_visited: int = 0


def sample_negative(pos: Triple, num_entities: int, rng: np.random.Generator) -> Triple:
    """Corrupt one endpoint of a positive triple.

    Head or tail is chosen with probability 1/2 each; the replacement is
    uniform over all entities except the one replaced, so the corrupted
    triple always differs from the positive one. The label never changes.
    """
    if num_entities < 2:
        raise ValueError("need at least 2 entities to sample a corruption")
    head, label, tail = pos
    if rng.integers(2) == 0:
        replacement = int(rng.integers(num_entities - 1))
        if replacement >= head:
            replacement += 1
        return Triple(replacement, label, tail)
    replacement = int(rng.integers(num_entities - 1))
    if replacement >= tail:
        replacement += 1
    return Triple(head, label, replacement)


def hinge_loss(
    model: EmbeddingModel, pos: Sequence[int], neg: Sequence[int], margin: float
) -> float:
    """Positive part of margin + d(pos) - d(neg)."""
    if margin <= 0:
        raise ValueError("margin must be > 0")
    return max(0.0, margin + dissimilarity(model, pos) - dissimilarity(model, neg))


def hinge_gradients(
    model: EmbeddingModel, pos: Sequence[int], neg: Sequence[int], margin: float
) -> tuple[float, dict[int, np.ndarray], dict[int, np.ndarray]]:
    """Hinge value plus subgradients per involved entity and relation row.

    Returns ``(loss, entity_grads, relation_grads)`` where the dicts map row
    ids to accumulated gradient vectors. Both dicts are empty when the margin
    is satisfied (zero loss, nothing to update). Rows shared between the
    positive and negative triple get one combined entry.
    """
    head, label, tail = pos
    neg_head, neg_label, neg_tail = neg
    if neg_label != label:
        raise ValueError("positive and negative triples must share the label")
    model.check_ids(head, label, tail)
    model.check_ids(neg_head, neg_label, neg_tail)
    entity_emb = model.entity_emb
    relation_vec = model.relation_emb[label]
    residual_pos = entity_emb[head] + relation_vec - entity_emb[tail]
    residual_neg = entity_emb[neg_head] + relation_vec - entity_emb[neg_tail]
    kind = model.dissim
    loss = margin + reduce_residual(residual_pos, kind) - reduce_residual(residual_neg, kind)
    if loss <= 0.0:
        return 0.0, {}, {}
    grad_pos = residual_subgradient(residual_pos, kind)
    grad_neg = residual_subgradient(residual_neg, kind)
    entity_grads: dict[int, np.ndarray] = {head: grad_pos.copy()}
    for row, grad, sign in ((tail, grad_pos, -1.0), (neg_head, grad_neg, -1.0), (neg_tail, grad_neg, 1.0)):
        existing = entity_grads.get(row)
        if existing is None:
            entity_grads[row] = sign * grad
        else:
            existing += sign * grad
    return loss, entity_grads, {label: grad_pos - grad_neg}


def sgd_step(
    model: EmbeddingModel,
    pos: Sequence[int],
    neg: Sequence[int],
    margin: float,
    learning_rate: float,
) -> tuple[float, bool]:
    """One stochastic subgradient step on a (positive, corrupted) pair.

    Returns ``(loss, violated)``. When the margin is already satisfied the
    model is left untouched; otherwise the involved rows move against their
    subgradients and the touched entity rows are re-projected to unit norm.
    """
    loss, entity_grads, relation_grads = hinge_gradients(model, pos, neg, margin)
    if not entity_grads:
        return 0.0, False
    entity_emb = model.entity_emb
    for row, grad in entity_grads.items():
        entity_emb[row] -= learning_rate * grad
    relation_emb = model.relation_emb
    for row, grad in relation_grads.items():
        relation_emb[row] -= learning_rate * grad
    project_entities(model, entity_grads.keys())
    return loss, True


def train_epoch(
    model: EmbeddingModel,
    train: Sequence[Triple],
    hp: Hyperparams,
    rng: np.random.Generator,
) -> float:
    """Visit every training triple once in a fresh shuffle; return mean loss."""
    if not len(train):
        raise ValueError("training split is empty")
    num_entities = model.num_entities
    margin = hp.margin
    learning_rate = hp.learning_rate
    total = 0.0
    for index in rng.permutation(len(train)):
        pos = train[index]
        neg = sample_negative(pos, num_entities, rng)
        loss, _ = sgd_step(model, pos, neg, margin, learning_rate)
        total += loss
    return total / len(train)


def _default_evaluator(model: EmbeddingModel, triples: Sequence[Triple]) -> float:
    _, _, combined = evaluate(model, triples)
    return combined.mean_rank


def train(
    kb: KnowledgeBase,
    hp: Hyperparams,
    evaluator: Callable[[EmbeddingModel, Sequence[Triple]], float] | None = None,
    progress: Callable[[str], None] | None = None,
) -> tuple[EmbeddingModel, TrainReport]:
    """Run SGD for up to ``hp.max_epochs`` epochs with periodic validation.

    Every ``hp.eval_every`` epochs the validation mean rank is computed (over
    a fixed subsample of ``hp.valid_sample`` triples when set) and the model
    is snapshotted whenever that rank strictly improves. The best snapshot is
    returned frozen, together with the full report; the final-epoch model is
    never returned unconditionally.
    """
    if evaluator is None:
        evaluator = _default_evaluator
    rng = np.random.default_rng(hp.seed)
    model = init_model(kb.num_entities, kb.num_relations, hp.k, rng, dissim=hp.dissim)

    valid_triples: Sequence[Triple] = kb.valid
    if hp.valid_sample is not None and hp.valid_sample < len(kb.valid):
        chosen = rng.choice(len(kb.valid), size=hp.valid_sample, replace=False)
        valid_triples = [kb.valid[i] for i in chosen]

    report = TrainReport()
    best_model: EmbeddingModel | None = None
    for epoch in range(1, hp.max_epochs + 1):
        mean_loss = train_epoch(model, kb.train, hp, rng)
        report.epoch_losses.append(mean_loss)
        report.triples_visited += len(kb.train)
        if progress is not None:
            progress(f"epoch={epoch} mean_loss={mean_loss:.6f}")
        if epoch % hp.eval_every == 0:
            mean_rank = evaluator(model, valid_triples)
            report.evaluations.append((epoch, mean_rank))
            improved = mean_rank < report.best_valid_mean_rank
            if improved:
                report.best_valid_mean_rank = mean_rank
                report.best_epoch = epoch
                best_model = model.copy()
            if progress is not None:
                progress(
                    f"epoch={epoch} valid_mean_rank={mean_rank:.3f} "
                    f"best={'true' if improved else 'false'}"
                )
    assert best_model is not None  # eval_every <= max_epochs guarantees one evaluation
    return best_model.freeze(), report
