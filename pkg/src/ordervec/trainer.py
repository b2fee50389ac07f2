"""Weighted least-squares log-bilinear embedding trainer.

Fits pivot vectors, context vectors and two bias terms to the nonzero
entries of a co-occurrence matrix: for entry (i, j) the model wants
``w_i . w~_j + b_i + b~_j`` close to ``ln X_ij``, with squared error damped
by a weight that caps at 1 for frequent pairs. Optimization is AdaGrad over
a per-epoch reshuffle of the records.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _kernels
from .cooccur import CoocMatrix
from .corpus import Vocabulary
from .rng import derive_seed, random_uniform


class TrainingDiverged(RuntimeError):
    """Raised when too many updates in one epoch produced non-finite values."""


# Fraction of updates in an epoch allowed to be skipped for non-finiteness
# before training aborts.
_MAX_SKIP_FRACTION = 0.01


@dataclass
class TrainConfig:
    dim: int = 100
    x_max: float = 100.0
    alpha: float = 0.75
    eta: float = 0.05
    epochs: int = 15
    seed: int = 1
    workers: int = 1

    def validated(self) -> "TrainConfig":
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.x_max <= 0:
            raise ValueError(f"x_max must be > 0, got {self.x_max}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.eta <= 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        return self

    def with_(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs)


@dataclass
class GloveModel:
    """Trainable parameters plus their AdaGrad accumulators."""

    pivot: np.ndarray          # V x k
    context: np.ndarray        # V x k
    pivot_bias: np.ndarray     # V
    context_bias: np.ndarray   # V
    grad_sq_pivot: np.ndarray = field(repr=False, default=None)
    grad_sq_context: np.ndarray = field(repr=False, default=None)
    grad_sq_pivot_bias: np.ndarray = field(repr=False, default=None)
    grad_sq_context_bias: np.ndarray = field(repr=False, default=None)

    @property
    def vocab_size(self) -> int:
        return self.pivot.shape[0]

    @property
    def dim(self) -> int:
        return self.pivot.shape[1]


@dataclass
class EmbeddingMatrix:
    """Final per-word vectors, row r belonging to vocabulary id r."""

    vocab: Vocabulary
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def row(self, word: str) -> np.ndarray:
        return self.vectors[self.vocab.id(word)]


def weight_fn(x: float, x_max: float = 100.0, alpha: float = 0.75) -> float:
    """Loss weight for one co-occurrence value: (x/x_max)**alpha capped at 1.

    Zero or negative entries must never reach the trainer.
    """
    if x <= 0:
        raise ValueError(f"co-occurrence value must be > 0, got {x}")
    if x >= x_max:
        return 1.0
    return (x / x_max) ** alpha


def _weights(values: np.ndarray, x_max: float, alpha: float) -> np.ndarray:
    return np.minimum((values / x_max) ** alpha, 1.0)


def loss_and_grad(
    model: GloveModel,
    record: tuple[int, int, float],
    x_max: float = 100.0,
    alpha: float = 0.75,
):
    """Loss term and exact analytic gradients for one nonzero record.

    Returns (loss, grad_pivot_row, grad_context_row, grad_pivot_bias,
    grad_context_bias). The loss term is f(x) * (w_i . w~_j + b_i + b~_j -
    ln x)**2 and the gradients are its partial derivatives at the current
    parameters.
    """
    i, j, x = record
    f = weight_fn(x, x_max, alpha)
    wi = model.pivot[i]
    wj = model.context[j]
    diff = float(wi @ wj) + model.pivot_bias[i] + model.context_bias[j] - np.log(x)
    loss = f * diff * diff
    if not np.isfinite(loss):
        raise ValueError(f"non-finite loss term for record ({i}, {j}, {x})")
    fdiff = 2.0 * f * diff
    return loss, fdiff * wj, fdiff * wi, fdiff, fdiff


def init_model(vocab_size: int, config: TrainConfig) -> GloveModel:
    """Fresh model with every parameter uniform in [-0.5/k, +0.5/k].

    Draw order (pivot rows, context rows, pivot biases, context biases) is
    part of the reproducibility contract; accumulators start at 1 so the
    first step of each parameter moves by at most eta * gradient.
    """
    k = config.dim
    v = vocab_size
    draws = random_uniform(config.seed, 2 * v * k + 2 * v)
    params = (draws - 0.5) / k
    pivot = params[: v * k].reshape(v, k).copy()
    context = params[v * k : 2 * v * k].reshape(v, k).copy()
    pivot_bias = params[2 * v * k : 2 * v * k + v].copy()
    context_bias = params[2 * v * k + v :].copy()
    return GloveModel(
        pivot, context, pivot_bias, context_bias,
        np.ones((v, k)), np.ones((v, k)), np.ones(v), np.ones(v),
    )


def train(matrix: CoocMatrix, config: TrainConfig) -> tuple[GloveModel, list[float]]:
    """Fit a model to the nonzero entries of ``matrix``.

    Each epoch reshuffles the records with a seed derived from
    (config.seed, epoch) and applies one AdaGrad update per record. With
    workers=1 the whole run is bit-reproducible for a given seed; with more
    workers the epoch is split across threads that update shared parameters
    without locks, which is faster but not reproducible.

    Returns the model and the mean loss per epoch. Raises TrainingDiverged
    if more than 1% of an epoch's updates had to be skipped for producing
    non-finite values.
    """
    config = config.validated()
    if matrix.is_empty():
        raise ValueError("cannot train on an empty co-occurrence matrix")
    rows, cols, values = matrix.to_arrays()
    if values.min() <= 0:
        raise ValueError("co-occurrence entries must be positive")
    log_x = np.log(values)
    weight = _weights(values, config.x_max, config.alpha)

    model = init_model(matrix.vocab_size, config)
    order = np.arange(len(values), dtype=np.int64)
    history: list[float] = []
    for epoch in range(config.epochs):
        _kernels.shuffle(order, np.uint64(derive_seed(config.seed, epoch)))
        if config.workers == 1:
            total, skipped = _kernels.run_epoch(
                model.pivot, model.context, model.pivot_bias, model.context_bias,
                model.grad_sq_pivot, model.grad_sq_context,
                model.grad_sq_pivot_bias, model.grad_sq_context_bias,
                rows, cols, log_x, weight, order, config.eta,
            )
        else:
            total, skipped = _run_epoch_hogwild(model, rows, cols, log_x, weight, order, config)
        committed = len(order) - skipped
        if skipped > _MAX_SKIP_FRACTION * len(order):
            raise TrainingDiverged(
                f"epoch {epoch}: skipped {skipped} of {len(order)} updates "
                f"(non-finite); lower eta or check the input matrix"
            )
        history.append(total / max(1, committed))
    return model, history


def _run_epoch_hogwild(model, rows, cols, log_x, weight, order, config):
    # Lock-free: threads share the parameter arrays and the numba kernel
    # drops the GIL. Last write wins per scalar; not bit-reproducible.
    from concurrent.futures import ThreadPoolExecutor

    slices = np.array_split(order, config.workers)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [
            pool.submit(
                _kernels.run_epoch,
                model.pivot, model.context, model.pivot_bias, model.context_bias,
                model.grad_sq_pivot, model.grad_sq_context,
                model.grad_sq_pivot_bias, model.grad_sq_context_bias,
                rows, cols, log_x, weight, part, config.eta,
            )
            for part in slices
            if len(part)
        ]
        results = [f.result() for f in futures]
    return sum(r[0] for r in results), sum(r[1] for r in results)


def emit_vectors(model: GloveModel, vocab: Vocabulary, mode: str = "sum") -> EmbeddingMatrix:
    """Export per-word vectors: 'sum' rows are w_i + w~_i, 'pivot' rows are
    w_i alone. Biases are never exported."""
    if len(vocab) != model.vocab_size:
        raise ValueError(
            f"vocabulary size {len(vocab)} != model size {model.vocab_size}"
        )
    if mode == "sum":
        vectors = model.pivot + model.context
    elif mode in ("pivot", "pivot-only"):
        vectors = model.pivot.copy()
    else:
        raise ValueError(f"unknown emit mode {mode!r} (want 'sum' or 'pivot')")
    return EmbeddingMatrix(vocab, vectors)


def save_embeddings(emb: EmbeddingMatrix, path: str | Path) -> None:
    """One line per word in vocabulary order: word then values, 6 significant
    digits, space separated."""
    from .util import atomic_write

    with atomic_write(path) as fh:
        _write_embedding_lines(emb, fh)


def _write_embedding_lines(emb: EmbeddingMatrix, fh) -> None:
    for word_id, word in enumerate(emb.vocab.words):
        row = emb.vectors[word_id]
        fh.write(word)
        for v in row:
            fh.write(f" {v:.6g}")
        fh.write("\n")


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read the text vector format back. The vocabulary is reconstructed
    from the word column (counts unknown)."""
    words: list[str] = []
    rows: list[list[float]] = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'word v1 ... vk'")
            if dim is None:
                dim = len(parts) - 1
            elif len(parts) - 1 != dim:
                raise ValueError(
                    f"{path}:{lineno}: {len(parts) - 1} values, expected {dim}"
                )
            words.append(parts[0])
            rows.append([float(p) for p in parts[1:]])
    if not words:
        raise ValueError(f"{path}: no vectors found")
    return EmbeddingMatrix(Vocabulary.from_words(words), np.asarray(rows))
