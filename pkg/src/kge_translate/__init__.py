"""Translation-based knowledge-base embeddings.

Entities and relation labels are learned as k-dimensional vectors so that
head + label lands near tail for true triples. Training minimizes a margin
ranking loss between each training triple and a randomly corrupted one;
evaluation ranks every entity as a candidate replacement for each endpoint.
"""

__version__ = "0.1.0"

from .evaluation import (
    CorruptSide,
    RankingMetrics,
    evaluate,
    format_report,
    predict_top_k,
    rank_entity,
)
from .kb_data import (
    ClosureError,
    Dictionary,
    KnowledgeBase,
    ParseError,
    Triple,
    load_dataset,
)
from .model import (
    Dissimilarity,
    EmbeddingModel,
    ModelFormatError,
    dissimilarity,
    dissimilarity_unstructured,
    init_model,
    load_model,
    project_entities,
    save_model,
)
from .training import Hyperparams, TrainReport, hinge_loss, sample_negative, sgd_step, train

__all__ = [
    "ClosureError",
    "CorruptSide",
    "Dictionary",
    "Dissimilarity",
    "EmbeddingModel",
    "Hyperparams",
    "KnowledgeBase",
    "ModelFormatError",
    "ParseError",
    "RankingMetrics",
    "TrainReport",
    "Triple",
    "dissimilarity",
    "dissimilarity_unstructured",
    "evaluate",
    "format_report",
    "hinge_loss",
    "init_model",
    "load_dataset",
    "load_model",
    "predict_top_k",
    "project_entities",
    "rank_entity",
    "sample_negative",
    "save_model",
    "sgd_step",
    "train",
]
