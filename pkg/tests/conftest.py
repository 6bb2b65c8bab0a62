import os

import numpy as np
import pytest

from kge_translate.model import Dissimilarity, EmbeddingModel


@pytest.fixture
def toy_model():
    """Hand-sized k=2 model with known rows, L1 dissimilarity."""
    entity_emb = np.array([[1.0, 0.0], [0.0, 1.0], [3.0, 4.0]])
    relation_emb = np.array([[-1.0, 1.0], [0.0, 0.0]])
    return EmbeddingModel(entity_emb, relation_emb, Dissimilarity.L1)


def make_model(entity_rows, relation_rows, kind=Dissimilarity.L1):
    return EmbeddingModel(
        np.asarray(entity_rows, dtype=float),
        np.asarray(relation_rows, dtype=float),
        kind,
    )


def resolve_dataset(env_var):
    """Train/valid/test paths from a directory named by env_var, or skip.

    The published dumps name their splits inconsistently, so any .txt/.tsv
    file whose name contains the split word is accepted.
    """
    root = os.environ.get(env_var)
    if not root:
        pytest.skip(f"{env_var} not set; dataset files unavailable")
    names = sorted(os.listdir(root))
    paths = []
    for split in ("train", "valid", "test"):
        matches = [
            os.path.join(root, name)
            for name in names
            if split in name.lower() and name.lower().endswith((".txt", ".tsv"))
        ]
        if not matches:
            pytest.skip(f"no {split} file under {root}")
        paths.append(matches[0])
    return tuple(paths)
