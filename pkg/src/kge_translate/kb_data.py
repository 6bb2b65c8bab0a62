"""Triple files, entity/relation dictionaries and train/valid/test splits.

Triple files are UTF-8 text with LF line endings, one fact per line as
``head<TAB>label<TAB>tail``, no header. Blank lines are ignored. Dictionaries
are always built from the training split; validation and test triples must
only use entities and relations that appear in training.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence


class ParseError(ValueError):
    """A triple record that does not have exactly three non-empty fields."""


class ClosureError(ValueError):
    """An entity or relation name missing from the training dictionaries."""


class Triple(NamedTuple):
    head: int
    label: int
    tail: int


class Dictionary:
    """Bijection between names and dense integer ids assigned in first-appearance order."""

    def __init__(self, names: Iterable[str] = ()):
        self.name_to_id: dict[str, int] = {}
        self.id_to_name: list[str] = []
        for name in names:
            self.intern(name)

    def intern(self, name: str) -> int:
        """Return the id of ``name``, assigning the next free id if unseen."""
        existing = self.name_to_id.get(name)
        if existing is not None:
            return existing
        new_id = len(self.id_to_name)
        self.name_to_id[name] = new_id
        self.id_to_name.append(name)
        return new_id

    def id_of(self, name: str) -> int:
        return self.name_to_id[name]

    def name_of(self, idx: int) -> str:
        return self.id_to_name[idx]

    def __contains__(self, name: str) -> bool:
        return name in self.name_to_id

    def __len__(self) -> int:
        return len(self.id_to_name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dictionary):
            return NotImplemented
        return self.id_to_name == other.id_to_name


RawTriple = tuple[str, str, str]


def _check_record(record: Sequence[str], where: str) -> RawTriple:
    if len(record) != 3:
        raise ParseError(f"{where}: expected 3 tab-separated fields, got {len(record)}")
    head, label, tail = record
    if not head or not label or not tail:
        raise ParseError(f"{where}: empty field in triple record")
    return head, label, tail


def read_triple_file(path: str | os.PathLike) -> list[RawTriple]:
    """Read raw (head, label, tail) string records from a tab-separated file."""
    records: list[RawTriple] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            records.append(_check_record(line.split("\t"), f"{path}:{lineno}"))
    return records


def write_triples(
    path: str | os.PathLike,
    triples: Sequence[Triple],
    entities: Dictionary,
    relations: Dictionary,
) -> None:
    """Serialize id triples back to the tab-separated file format."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for head, label, tail in triples:
            handle.write(
                f"{entities.name_of(head)}\t{relations.name_of(label)}\t{entities.name_of(tail)}\n"
            )


def build_dictionaries(
    train_records: Sequence[Sequence[str]],
) -> tuple[Dictionary, Dictionary]:
    """Build entity and relation dictionaries from raw training records.

    Ids are assigned in first-appearance order, scanning each record as
    head, label, tail.
    """
    entities = Dictionary()
    relations = Dictionary()
    for index, record in enumerate(train_records, start=1):
        head, label, tail = _check_record(record, f"record {index}")
        entities.intern(head)
        relations.intern(label)
        entities.intern(tail)
    return entities, relations


def parse_triples(
    records: Sequence[Sequence[str]],
    entities: Dictionary,
    relations: Dictionary,
    split: str = "input",
) -> list[Triple]:
    """Map raw string records to id triples, preserving order.

    Raises ClosureError when a name is missing from the dictionaries, which
    for non-training splits means the training set does not cover it.
    """
    triples: list[Triple] = []
    for index, record in enumerate(records, start=1):
        head, label, tail = _check_record(record, f"{split} record {index}")
        try:
            head_id = entities.id_of(head)
        except KeyError:
            raise ClosureError(f"unknown entity {head!r} in {split} split") from None
        try:
            label_id = relations.id_of(label)
        except KeyError:
            raise ClosureError(f"unknown relation {label!r} in {split} split") from None
        try:
            tail_id = entities.id_of(tail)
        except KeyError:
            raise ClosureError(f"unknown entity {tail!r} in {split} split") from None
        triples.append(Triple(head_id, label_id, tail_id))
    return triples


@dataclass
class KnowledgeBase:
    """Dictionaries plus train/valid/test triple lists sharing one id space."""

    entities: Dictionary
    relations: Dictionary
    train: list[Triple]
    valid: list[Triple]
    test: list[Triple]

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_relations(self) -> int:
        return len(self.relations)

    @property
    def counts(self) -> dict[str, int]:
        return {"train": len(self.train), "valid": len(self.valid), "test": len(self.test)}

    def check_closure(self) -> None:
        """Verify that every id in valid/test is within the dictionary ranges."""
        num_entities = self.num_entities
        num_relations = self.num_relations
        for split_name, triples in (("valid", self.valid), ("test", self.test)):
            for head, label, tail in triples:
                if not (0 <= head < num_entities and 0 <= tail < num_entities):
                    raise ClosureError(f"entity id out of range in {split_name} split")
                if not (0 <= label < num_relations):
                    raise ClosureError(f"relation id out of range in {split_name} split")


def load_dataset(
    train_path: str | os.PathLike,
    valid_path: str | os.PathLike,
    test_path: str | os.PathLike,
) -> KnowledgeBase:
    """Load a train/valid/test dataset, building dictionaries from training.

    All three splits must be nonempty, and valid/test may only mention names
    that occur in training.
    """
    train_records = read_triple_file(train_path)
    valid_records = read_triple_file(valid_path)
    test_records = read_triple_file(test_path)
    entities, relations = build_dictionaries(train_records)
    kb = KnowledgeBase(
        entities=entities,
        relations=relations,
        train=parse_triples(train_records, entities, relations, split="train"),
        valid=parse_triples(valid_records, entities, relations, split="valid"),
        test=parse_triples(test_records, entities, relations, split="test"),
    )
    for split_name, size in kb.counts.items():
        if size == 0:
            raise ValueError(f"{split_name} split is empty")
    return kb
