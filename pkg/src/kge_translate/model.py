"""Embedding tables and dissimilarity scoring for the translation model.

A triple (head, label, tail) is scored by the dissimilarity between
``head + label`` and ``tail``; lower scores mean more plausible facts.
Entity rows are kept on the unit sphere, relation rows are unconstrained.
"""

from __future__ import annotations

import enum
import math
import os
from typing import Iterable, Sequence

import numpy as np

from .kb_data import Dictionary

# Below this L2 norm a row is treated as collapsed and replaced during
# projection instead of dividing by a value that underflows.
_MIN_NORM = 1e-150

_FORMAT_MAGIC = "kge-translate/1"


class ModelFormatError(ValueError):
    """A model file that cannot be parsed against the documented format."""


class Dissimilarity(enum.Enum):
    """Closed set of supported dissimilarity functions."""

    L1 = "l1"
    L2 = "l2"
    L2_SQUARED = "l2sq"

    @classmethod
    def from_token(cls, token: str) -> "Dissimilarity":
        for member in cls:
            if member.value == token:
                return member
        raise ValueError(f"unknown dissimilarity {token!r}; expected one of l1, l2, l2sq")

    @property
    def token(self) -> str:
        return self.value


def reduce_residual(residual: np.ndarray, kind: Dissimilarity) -> float:
    """Collapse a residual vector to its scalar dissimilarity value."""
    if kind is Dissimilarity.L1:
        return float(np.abs(residual).sum())
    squared = float(residual @ residual)
    if kind is Dissimilarity.L2:
        return math.sqrt(squared)
    return squared


def residual_subgradient(residual: np.ndarray, kind: Dissimilarity) -> np.ndarray:
    """Subgradient of the dissimilarity with respect to its residual vector.

    For L1 the componentwise sign is used with sign(0) = 0; for L2 the zero
    vector is returned at the (non-differentiable) origin.
    """
    if kind is Dissimilarity.L1:
        return np.sign(residual)
    if kind is Dissimilarity.L2:
        norm = math.sqrt(float(residual @ residual))
        if norm < _MIN_NORM:
            return np.zeros_like(residual)
        return residual / norm
    return 2.0 * residual


class EmbeddingModel:
    """Entity and relation embedding tables plus their dissimilarity kind.

    A model is either under exclusive mutation (training) or frozen and shared
    read-only. ``freeze`` makes the underlying arrays immutable, so any later
    write attempt raises.
    """

    def __init__(
        self,
        entity_emb: np.ndarray,
        relation_emb: np.ndarray,
        dissim: Dissimilarity = Dissimilarity.L1,
        rescue_seed: int = 0,
    ):
        self.entity_emb = np.ascontiguousarray(entity_emb, dtype=np.float64)
        self.relation_emb = np.ascontiguousarray(relation_emb, dtype=np.float64)
        if self.entity_emb.ndim != 2 or self.relation_emb.ndim != 2:
            raise ValueError("embedding tables must be 2-dimensional")
        if self.entity_emb.shape[1] != self.relation_emb.shape[1]:
            raise ValueError("entity and relation tables must share one dimension")
        self.dissim = dissim
        self.zero_norm_rescues = 0
        self._rescue_seed = rescue_seed
        self._rescue_rng = np.random.default_rng(rescue_seed)

    @property
    def num_entities(self) -> int:
        return self.entity_emb.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relation_emb.shape[0]

    @property
    def k(self) -> int:
        return self.entity_emb.shape[1]

    @property
    def frozen(self) -> bool:
        return not self.entity_emb.flags.writeable

    def freeze(self) -> "EmbeddingModel":
        """Make the embedding tables read-only and return self."""
        self.entity_emb.flags.writeable = False
        self.relation_emb.flags.writeable = False
        return self

    def copy(self) -> "EmbeddingModel":
        """Deep, writable copy (used for best-model snapshots)."""
        duplicate = EmbeddingModel(
            self.entity_emb.copy(),
            self.relation_emb.copy(),
            self.dissim,
            rescue_seed=self._rescue_seed,
        )
        duplicate.zero_norm_rescues = self.zero_norm_rescues
        return duplicate

    def check_ids(self, head: int, label: int, tail: int) -> None:
        if not (0 <= head < self.num_entities and 0 <= tail < self.num_entities):
            raise ValueError(f"entity id out of range: ({head}, {label}, {tail})")
        if not (0 <= label < self.num_relations):
            raise ValueError(f"relation id out of range: ({head}, {label}, {tail})")


def init_model(
    num_entities: int,
    num_relations: int,
    k: int,
    seed: int | np.random.Generator,
    dissim: Dissimilarity = Dissimilarity.L1,
) -> EmbeddingModel:
    """Create a model with uniform entries in [-6/sqrt(k), 6/sqrt(k)].

    Entity rows are projected to unit norm after drawing; relation rows are
    left as drawn. Deterministic for a fixed integer seed.
    """
    if num_entities < 1 or num_relations < 1 or k < 1:
        raise ValueError("num_entities, num_relations and k must all be >= 1")
    rng = np.random.default_rng(seed)
    bound = 6.0 / math.sqrt(k)
    entity_emb = rng.uniform(-bound, bound, size=(num_entities, k))
    relation_emb = rng.uniform(-bound, bound, size=(num_relations, k))
    rescue_seed = int(rng.integers(0, 2**63))
    model = EmbeddingModel(entity_emb, relation_emb, dissim, rescue_seed=rescue_seed)
    project_entities(model)
    return model


def _rescue_row(model: EmbeddingModel, index: int) -> None:
    while True:
        row = model._rescue_rng.standard_normal(model.k)
        norm = math.sqrt(float(row @ row))
        if norm >= _MIN_NORM:
            break
    model.entity_emb[index] = row / norm
    model.zero_norm_rescues += 1


def project_entities(model: EmbeddingModel, touched: Iterable[int] | None = None) -> None:
    """Normalize entity rows to unit L2 norm.

    With ``touched`` given, only those rows are normalized; otherwise the
    whole table is. Rows with vanishing norm are replaced by a random unit
    vector drawn from the model's own seeded stream, and counted in
    ``zero_norm_rescues``.
    """
    entity_emb = model.entity_emb
    if touched is None:
        norms = np.linalg.norm(entity_emb, axis=1)
        collapsed = norms < _MIN_NORM
        norms[collapsed] = 1.0
        entity_emb /= norms[:, None]
        for index in np.nonzero(collapsed)[0]:
            _rescue_row(model, int(index))
        return
    for index in sorted(set(touched)):
        row = entity_emb[index]
        norm = math.sqrt(float(row @ row))
        if norm < _MIN_NORM:
            _rescue_row(model, index)
        else:
            row /= norm


def dissimilarity(model: EmbeddingModel, triple: Sequence[int]) -> float:
    """Dissimilarity between head + label and tail for one triple."""
    head, label, tail = triple
    model.check_ids(head, label, tail)
    residual = model.entity_emb[head] + model.relation_emb[label]
    residual -= model.entity_emb[tail]
    return reduce_residual(residual, model.dissim)


def dissimilarity_unstructured(model: EmbeddingModel, triple: Sequence[int]) -> float:
    """Label-blind baseline score: the translation model with a zero label.

    On unit-norm entity rows with the squared L2 kind this ranks candidates
    exactly like the descending dot product between head and tail.
    """
    head, label, tail = triple
    model.check_ids(head, label, tail)
    residual = model.entity_emb[head] - model.entity_emb[tail]
    return reduce_residual(residual, model.dissim)


def _format_row(row: np.ndarray) -> str:
    # 17 significant digits make the decimal round trip exact for float64.
    return " ".join("%.17g" % value for value in row)


def save_model(
    model: EmbeddingModel,
    entities: Dictionary,
    relations: Dictionary,
    path: str | os.PathLike,
) -> None:
    """Write the model and its dictionaries to the versioned text format."""
    if len(entities) != model.num_entities:
        raise ValueError(
            f"entity dictionary size {len(entities)} != table rows {model.num_entities}"
        )
    if len(relations) != model.num_relations:
        raise ValueError(
            f"relation dictionary size {len(relations)} != table rows {model.num_relations}"
        )
    if not np.isfinite(model.entity_emb).all() or not np.isfinite(model.relation_emb).all():
        raise ValueError("refusing to save non-finite embedding values")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{_FORMAT_MAGIC}\n")
        handle.write(
            f"k={model.k} dissim={model.dissim.token} "
            f"entities={model.num_entities} relations={model.num_relations}\n"
        )
        handle.write("[entities]\n")
        for name in entities.id_to_name:
            handle.write(name + "\n")
        handle.write("[relations]\n")
        for name in relations.id_to_name:
            handle.write(name + "\n")
        handle.write("[entity_embeddings]\n")
        for row in model.entity_emb:
            handle.write(_format_row(row) + "\n")
        handle.write("[relation_embeddings]\n")
        for row in model.relation_emb:
            handle.write(_format_row(row) + "\n")


class _LineReader:
    def __init__(self, lines: list[str], path: str):
        self.lines = lines
        self.path = path
        self.pos = 0

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise ModelFormatError(f"{self.path}: truncated file, expected {what}")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect(self, literal: str) -> None:
        line = self.next(f"{literal!r}")
        if line != literal:
            raise ModelFormatError(f"{self.path}: expected {literal!r}, found {line!r}")

    def done(self) -> None:
        for line in self.lines[self.pos :]:
            if line.strip():
                raise ModelFormatError(f"{self.path}: trailing data after embeddings")


def _parse_header(line: str, path: str) -> tuple[int, Dissimilarity, int, int]:
    fields = line.split(" ")
    keys = ("k", "dissim", "entities", "relations")
    if len(fields) != 4 or any(not f.startswith(key + "=") for f, key in zip(fields, keys)):
        raise ModelFormatError(f"{path}: malformed header line {line!r}")
    values = [field.split("=", 1)[1] for field in fields]
    try:
        k = int(values[0])
        num_entities = int(values[2])
        num_relations = int(values[3])
        kind = Dissimilarity.from_token(values[1])
    except ValueError as exc:
        raise ModelFormatError(f"{path}: malformed header line {line!r}") from exc
    if k < 1 or num_entities < 1 or num_relations < 1:
        raise ModelFormatError(f"{path}: non-positive size in header {line!r}")
    return k, kind, num_entities, num_relations


def _read_rows(reader: _LineReader, count: int, k: int, section: str) -> np.ndarray:
    table = np.empty((count, k), dtype=np.float64)
    for i in range(count):
        parts = reader.next(f"{section} row {i}").split(" ")
        if len(parts) != k:
            raise ModelFormatError(
                f"{reader.path}: {section} row {i} has {len(parts)} values, expected {k}"
            )
        try:
            table[i] = [float(part) for part in parts]
        except ValueError as exc:
            raise ModelFormatError(f"{reader.path}: bad float in {section} row {i}") from exc
    return table


def load_model(path: str | os.PathLike) -> tuple[EmbeddingModel, Dictionary, Dictionary]:
    """Load a saved model; the returned model is frozen (read-only tables)."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        lines = [line.rstrip("\r\n") for line in handle]
    reader = _LineReader(lines, str(path))
    magic = reader.next("format magic")
    if magic != _FORMAT_MAGIC:
        if magic.startswith("kge-translate/"):
            raise ModelFormatError(
                f"{path}: unsupported format version {magic!r}, expected {_FORMAT_MAGIC!r}"
            )
        raise ModelFormatError(f"{path}: not a kge-translate model file")
    k, kind, num_entities, num_relations = _parse_header(reader.next("header"), str(path))
    reader.expect("[entities]")
    entities = Dictionary(reader.next(f"entity name {i}") for i in range(num_entities))
    if len(entities) != num_entities:
        raise ModelFormatError(f"{path}: duplicate entity names")
    reader.expect("[relations]")
    relations = Dictionary(reader.next(f"relation name {i}") for i in range(num_relations))
    if len(relations) != num_relations:
        raise ModelFormatError(f"{path}: duplicate relation names")
    reader.expect("[entity_embeddings]")
    entity_emb = _read_rows(reader, num_entities, k, "entity embedding")
    reader.expect("[relation_embeddings]")
    relation_emb = _read_rows(reader, num_relations, k, "relation embedding")
    reader.done()
    if not np.isfinite(entity_emb).all() or not np.isfinite(relation_emb).all():
        raise ModelFormatError(f"{path}: non-finite embedding values")
    model = EmbeddingModel(entity_emb, relation_emb, kind)
    return model.freeze(), entities, relations
