"""Per-offset training and the three ways of joining positional vectors.

One embedding is trained per signed window offset; a word's final vector is
the concatenation of its per-offset vectors in ascending offset order
(-W..-1, +1..+W). Three strategies:

* direct: full-size blocks, total dimension (2W) * k;
* reduced: blocks of floor(k / 2W) so the total stays close to k;
* weighted: like direct but block p is scaled by 1 / |p| before joining.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cooccur import PositionalCoocSet
from .corpus import Vocabulary
from .rng import derive_seed
from .trainer import EmbeddingMatrix, TrainConfig, emit_vectors, save_embeddings, train

METHODS = ("direct", "reduced", "weighted")


@dataclass
class PositionalEmbeddings:
    """One embedding per signed offset, all sharing vocabulary and size."""

    window: int
    per_offset: dict[int, EmbeddingMatrix]

    def __post_init__(self):
        expected = [p for p in range(-self.window, self.window + 1) if p != 0]
        if sorted(self.per_offset) != expected:
            raise ValueError(
                f"need embeddings for offsets {expected}, got {sorted(self.per_offset)}"
            )
        dims = {emb.dim for emb in self.per_offset.values()}
        if len(dims) != 1:
            raise ValueError(f"per-offset dimensions differ: {sorted(dims)}")

    @property
    def offsets(self) -> list[int]:
        return sorted(self.per_offset)

    @property
    def dim(self) -> int:
        return next(iter(self.per_offset.values())).dim

    @property
    def vocab(self) -> Vocabulary:
        return next(iter(self.per_offset.values())).vocab


@dataclass
class ComposedEmbeddings:
    """Concatenated positional vectors plus the layout needed to read a
    single offset's block back out."""

    method: str
    layout: list[int]        # block order, ascending offsets
    block_dim: int
    vocab: Vocabulary
    vectors: np.ndarray      # V x total_dim
    base_dim: int            # the per-position k the run was configured with

    @property
    def total_dim(self) -> int:
        return self.vectors.shape[1]

    def block(self, offset: int) -> np.ndarray:
        pos = self.layout.index(offset)
        return self.vectors[:, pos * self.block_dim : (pos + 1) * self.block_dim]

    def row(self, word: str) -> np.ndarray:
        return self.vectors[self.vocab.id(word)]


def train_positional(
    matrices: PositionalCoocSet,
    vocab: Vocabulary,
    config: TrainConfig,
    per_position_dim: int | None = None,
) -> PositionalEmbeddings:
    """Train one embedding per offset at ``per_position_dim`` dimensions
    (default: config.dim).

    Offset p trains with seed derived from (config.seed, p), so every
    offset's result is independent of which other offsets are trained.
    config.workers parallelizes across offsets; each per-offset run is
    single-worker, keeping the whole thing deterministic.
    """
    if per_position_dim is None:
        per_position_dim = config.dim
    if per_position_dim < 1:
        raise ValueError(f"per-position dimension must be >= 1, got {per_position_dim}")
    for p in matrices.offsets:
        if matrices[p].is_empty():
            raise ValueError(f"co-occurrence matrix for offset {p:+d} is empty")

    def train_one(p: int) -> tuple[int, EmbeddingMatrix]:
        cfg = config.with_(
            dim=per_position_dim, seed=derive_seed(config.seed, p), workers=1
        )
        model, _ = train(matrices[p], cfg)
        return p, emit_vectors(model, vocab)

    offsets = matrices.offsets
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=min(config.workers, len(offsets))) as pool:
            results = dict(pool.map(train_one, offsets))
    else:
        results = dict(train_one(p) for p in offsets)
    return PositionalEmbeddings(matrices.window, results)


def direct_concat(pe: PositionalEmbeddings) -> ComposedEmbeddings:
    """Concatenate full-size per-offset blocks; total dimension (2W) * k."""
    blocks = [pe.per_offset[p].vectors for p in pe.offsets]
    return ComposedEmbeddings(
        "direct", pe.offsets, pe.dim, pe.vocab, np.hstack(blocks), pe.dim
    )


def weighted_concat(pe: PositionalEmbeddings) -> ComposedEmbeddings:
    """Direct concatenation with block p scaled elementwise by 1 / |p|."""
    blocks = [pe.per_offset[p].vectors * (1.0 / abs(p)) for p in pe.offsets]
    return ComposedEmbeddings(
        "weighted", pe.offsets, pe.dim, pe.vocab, np.hstack(blocks), pe.dim
    )


def reduced_concat(
    matrices: PositionalCoocSet, vocab: Vocabulary, config: TrainConfig
) -> ComposedEmbeddings:
    """Train each offset at floor(k / 2W) dimensions, then concatenate.

    The total comes out at 2W * floor(k / 2W), slightly under k when 2W does
    not divide it. Fails when 2W > k (blocks would be empty).
    """
    positions = 2 * matrices.window
    if positions > config.dim:
        raise ValueError(
            f"reduced concatenation needs 2W <= dim; got 2W={positions}, dim={config.dim}"
        )
    per_dim = config.dim // positions
    pe = train_positional(matrices, vocab, config, per_dim)
    blocks = [pe.per_offset[p].vectors for p in pe.offsets]
    return ComposedEmbeddings(
        "reduced", pe.offsets, per_dim, vocab, np.hstack(blocks), config.dim
    )


def compose(
    matrices: PositionalCoocSet, vocab: Vocabulary, config: TrainConfig, method: str
) -> ComposedEmbeddings:
    """Run the requested composition strategy end to end."""
    if method == "reduced":
        return reduced_concat(matrices, vocab, config)
    if method in ("direct", "weighted"):
        pe = train_positional(matrices, vocab, config)
        return direct_concat(pe) if method == "direct" else weighted_concat(pe)
    raise ValueError(f"unknown composition method {method!r} (want one of {METHODS})")


def metadata_path(vectors_path: str | Path) -> Path:
    return Path(f"{vectors_path}.meta")


def save_composed(comp: ComposedEmbeddings, path: str | Path) -> None:
    """Write composed vectors in the usual text format plus a key=value
    sidecar recording method, window and block layout."""
    from .util import atomic_write

    save_embeddings(EmbeddingMatrix(comp.vocab, comp.vectors), path)
    with atomic_write(metadata_path(path)) as fh:
        fh.write(f"method={comp.method}\n")
        fh.write(f"window={len(comp.layout) // 2}\n")
        fh.write(f"dim={comp.base_dim}\n")
        fh.write(f"per_position_dim={comp.block_dim}\n")
        fh.write(f"total_dim={comp.total_dim}\n")
        fh.write("block_order=" + ",".join(f"{p:+d}" for p in comp.layout) + "\n")


def parse_metadata(path: str | Path) -> dict[str, str]:
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, value = line.split("=", 1)
            meta[key] = value
    return meta
