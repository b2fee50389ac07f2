"""Order-aware word vectors.

A compact GloVe-style pipeline: corpus cleaning and vocabulary building,
sparse co-occurrence counting (distance-damped or per signed offset),
AdaGrad log-bilinear training, composition of per-offset embeddings into a
single order-aware vector, and evaluation on analogy and synonym-rank
tasks.
"""

__version__ = "0.1.0"

from .composer import (
    ComposedEmbeddings,
    PositionalEmbeddings,
    compose,
    direct_concat,
    reduced_concat,
    train_positional,
    weighted_concat,
)
from .cooccur import (
    CoocMatrix,
    PositionalCoocSet,
    count_baseline,
    count_positional,
    merge,
    verify_decomposition,
)
from .corpus import (
    EncodedCorpus,
    Vocabulary,
    build_vocabulary,
    clean_text,
    encode,
    iter_documents,
    load_corpus,
    tokenize,
)
from .evaluator import (
    AnalogyQuestion,
    EvalReport,
    SynonymDataset,
    compare_reports,
    eval_analogy,
    eval_similarity,
    extract_synonyms,
    nearest,
    relative_improvement,
    solve_analogy,
)
from .trainer import (
    EmbeddingMatrix,
    GloveModel,
    TrainConfig,
    TrainingDiverged,
    emit_vectors,
    load_embeddings,
    loss_and_grad,
    save_embeddings,
    train,
    weight_fn,
)

__all__ = [
    "__version__",
    "AnalogyQuestion",
    "ComposedEmbeddings",
    "CoocMatrix",
    "EmbeddingMatrix",
    "EncodedCorpus",
    "EvalReport",
    "GloveModel",
    "PositionalCoocSet",
    "PositionalEmbeddings",
    "SynonymDataset",
    "TrainConfig",
    "TrainingDiverged",
    "build_vocabulary",
    "clean_text",
    "compare_reports",
    "compose",
    "count_baseline",
    "count_positional",
    "direct_concat",
    "emit_vectors",
    "encode",
    "eval_analogy",
    "eval_similarity",
    "extract_synonyms",
    "iter_documents",
    "load_corpus",
    "load_embeddings",
    "loss_and_grad",
    "merge",
    "nearest",
    "reduced_concat",
    "relative_improvement",
    "save_embeddings",
    "solve_analogy",
    "tokenize",
    "train",
    "train_positional",
    "verify_decomposition",
    "weight_fn",
    "weighted_concat",
]
