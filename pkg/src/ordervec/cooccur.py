"""Sparse co-occurrence counting over encoded corpora.

Two counting modes:

* baseline: one symmetric matrix where a pair of words d apart contributes
  1/d to both ordered entries;
* positional: one exact-count matrix per signed window offset p, where entry
  (i, j) counts how often j sits exactly p positions after i.

Counting is the throughput bottleneck at corpus scale, so the accumulator is
a flat hash with an optional memory budget: when the hash outgrows the
budget it is sorted and spilled to disk, and the spill runs are k-way merged
at the end. Damped baseline increments are accumulated as exact integers
(scaled by lcm(1..W)) so that totals are independent of document chunking
and worker count down to the last bit.
"""

from __future__ import annotations

import heapq
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .corpus import EncodedCorpus

RECORD_DTYPE = np.dtype([("i", "<u4"), ("j", "<u4"), ("x", "<f8")])

# float64 holds integers exactly up to 2**53; beyond lcm(1..16) the scaled
# increments would eat too much of that headroom on corpus-scale counts, so
# larger windows fall back to plain 1/d float accumulation.
_MAX_EXACT_WINDOW = 16

# Rough per-entry footprint of a (i, j) -> float hash entry, used to turn a
# megabyte budget into an entry cap.
_BYTES_PER_ENTRY = 120


def _damping_scale(window: int) -> float:
    if window <= _MAX_EXACT_WINDOW:
        return float(math.lcm(*range(1, window + 1)))
    return 1.0


@dataclass
class CoocMatrix:
    """Sparse (i, j) -> value accumulator.

    ``counts`` stores raw accumulents; the true co-occurrence value of an
    entry is ``raw / scale``. Positional matrices use scale 1; the damped
    baseline uses lcm(1..W) so increments stay exact integers.
    """

    vocab_size: int
    scale: float = 1.0
    counts: dict = field(default_factory=dict)

    @property
    def nnz(self) -> int:
        return len(self.counts)

    def is_empty(self) -> bool:
        return not self.counts

    def value(self, i: int, j: int) -> float:
        return self.counts.get((i, j), 0.0) / self.scale

    def to_dict(self) -> dict:
        """Entries as {(i, j): value}."""
        s = self.scale
        return {key: raw / s for key, raw in self.counts.items()}

    def total(self) -> float:
        return sum(self.counts.values()) / self.scale

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Entries sorted by (i, j) as (row ids, col ids, values)."""
        n = self.nnz
        ii = np.empty(n, dtype=np.int32)
        jj = np.empty(n, dtype=np.int32)
        xx = np.empty(n, dtype=np.float64)
        for idx, (key, raw) in enumerate(sorted(self.counts.items())):
            ii[idx] = key[0]
            jj[idx] = key[1]
            xx[idx] = raw
        xx /= self.scale
        return ii, jj, xx


@dataclass
class PositionalCoocSet:
    """One exact-count matrix per signed offset in -W..-1, +1..+W."""

    window: int
    matrices: dict[int, CoocMatrix]

    def __post_init__(self):
        expected = set(signed_offsets(self.window))
        if set(self.matrices) != expected:
            raise ValueError(
                f"positional set for window {self.window} needs offsets "
                f"{sorted(expected)}, got {sorted(self.matrices)}"
            )

    @property
    def offsets(self) -> list[int]:
        return signed_offsets(self.window)

    def __getitem__(self, offset: int) -> CoocMatrix:
        return self.matrices[offset]


def signed_offsets(window: int) -> list[int]:
    """Ascending signed offsets, zero excluded: -W..-1, +1..+W."""
    return [p for p in range(-window, window + 1) if p != 0]


class _SpillingCounter:
    """Hash accumulator that spills sorted runs to disk past a size cap."""

    def __init__(self, max_entries: int | None = None):
        self.counts: dict = {}
        self.max_entries = max_entries
        self._spill_paths: list[str] = []
        self._tmp_dir: tempfile.TemporaryDirectory | None = None

    def over_budget(self) -> bool:
        return self.max_entries is not None and len(self.counts) > self.max_entries

    def spill(self) -> None:
        if not self.counts:
            return
        if self._tmp_dir is None:
            self._tmp_dir = tempfile.TemporaryDirectory(prefix="cooccur-spill-")
        path = os.path.join(self._tmp_dir.name, f"run{len(self._spill_paths):05d}.bin")
        _write_records(path, sorted(self.counts.items()))
        self._spill_paths.append(path)
        self.counts = {}

    def finish(self) -> dict:
        """Merge spilled runs with the live hash into one dict and clean up."""
        if not self._spill_paths:
            return self.counts
        streams = [_iter_records(p) for p in self._spill_paths]
        streams.append(iter(sorted(self.counts.items())))
        merged: dict = {}
        for key, raw in heapq.merge(*streams):
            if key in merged:
                merged[key] += raw
            else:
                merged[key] = raw
        self.counts = {}
        self._spill_paths = []
        if self._tmp_dir is not None:
            self._tmp_dir.cleanup()
            self._tmp_dir = None
        return merged


def _write_records(path: str | Path, items) -> None:
    arr = np.fromiter(
        ((key[0], key[1], raw) for key, raw in items),
        dtype=RECORD_DTYPE,
    )
    arr.tofile(path)


def _iter_records(path: str | Path, chunk: int = 1 << 16) -> Iterator[tuple[tuple[int, int], float]]:
    with open(path, "rb") as fh:
        while True:
            arr = np.fromfile(fh, dtype=RECORD_DTYPE, count=chunk)
            if arr.size == 0:
                return
            for rec in arr:
                yield (int(rec["i"]), int(rec["j"])), float(rec["x"])


def _entry_budget(memory_mb: float | None, parts: int = 1) -> int | None:
    if memory_mb is None:
        return None
    return max(1024, int(memory_mb * 1e6 / _BYTES_PER_ENTRY / parts))


def _count_chunk_baseline(documents, window, max_entries):
    counter = _SpillingCounter(max_entries)
    scale = int(_damping_scale(window))
    counts = counter.counts
    for doc in documents:
        ids = doc.tolist() if isinstance(doc, np.ndarray) else list(doc)
        n = len(ids)
        for d in range(1, window + 1):
            if d >= n:
                break
            inc = scale / d if scale == 1 else float(scale // d)
            for t in range(n - d):
                a = ids[t]
                b = ids[t + d]
                key = (a, b)
                if key in counts:
                    counts[key] += inc
                else:
                    counts[key] = inc
                key = (b, a)
                if key in counts:
                    counts[key] += inc
                else:
                    counts[key] = inc
        if counter.over_budget():
            counter.spill()
            counts = counter.counts
    return counter.finish()


def _count_chunk_positional(documents, window, max_entries):
    counters = {p: _SpillingCounter(max_entries) for p in signed_offsets(window)}
    for doc in documents:
        ids = doc.tolist() if isinstance(doc, np.ndarray) else list(doc)
        n = len(ids)
        for p in range(1, window + 1):
            if p >= n:
                break
            fwd = counters[p].counts
            bwd = counters[-p].counts
            for t in range(n - p):
                a = ids[t]
                b = ids[t + p]
                key = (a, b)
                if key in fwd:
                    fwd[key] += 1.0
                else:
                    fwd[key] = 1.0
                key = (b, a)
                if key in bwd:
                    bwd[key] += 1.0
                else:
                    bwd[key] = 1.0
        for counter in counters.values():
            if counter.over_budget():
                counter.spill()
    return {p: counter.finish() for p, counter in counters.items()}


def _chunk_documents(documents: Sequence[np.ndarray], parts: int) -> list[list[np.ndarray]]:
    parts = min(parts, max(1, len(documents)))
    bounds = np.linspace(0, len(documents), parts + 1).astype(int)
    return [list(documents[a:b]) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _merge_raw(dicts: list[dict]) -> dict:
    out = dicts[0]
    for other in dicts[1:]:
        for key, raw in other.items():
            if key in out:
                out[key] += raw
            else:
                out[key] = raw
    return out


def count_baseline(
    corpus: EncodedCorpus,
    window: int,
    memory_mb: float | None = None,
    workers: int = 1,
    vocab_size: int | None = None,
) -> CoocMatrix:
    """Count the distance-damped symmetric co-occurrence matrix.

    Every ordered pair of words up to ``window`` apart within one document
    contributes 1/d, d being the distance, to its entry; each unordered pair
    is seen from both sides, so the matrix is symmetric. ``memory_mb`` caps
    the accumulation hash (not the returned matrix); counting splits over
    document-aligned chunks when ``workers`` > 1, with a result identical to
    the single-worker one.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if vocab_size is None:
        vocab_size = _corpus_vocab_size(corpus)
    budget = _entry_budget(memory_mb, max(1, workers))
    if workers > 1 and len(corpus.documents) > 1:
        chunks = _chunk_documents(corpus.documents, workers)
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(_count_chunk_baseline, chunks, [window] * len(chunks), [budget] * len(chunks)))
        raw = _merge_raw(results)
    else:
        raw = _count_chunk_baseline(corpus.documents, window, budget)
    return CoocMatrix(vocab_size, _damping_scale(window), raw)


def count_positional(
    corpus: EncodedCorpus,
    window: int,
    memory_mb: float | None = None,
    workers: int = 1,
    vocab_size: int | None = None,
) -> PositionalCoocSet:
    """Count one undamped matrix per signed offset.

    Entry (i, j) of the matrix at offset p counts occurrences of j exactly p
    positions after i (p < 0 meaning before), never across a document
    boundary. The matrices at +p and -p are mutual transposes.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if vocab_size is None:
        vocab_size = _corpus_vocab_size(corpus)
    budget = _entry_budget(memory_mb, 2 * window * max(1, workers))
    if workers > 1 and len(corpus.documents) > 1:
        chunks = _chunk_documents(corpus.documents, workers)
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(_count_chunk_positional, chunks, [window] * len(chunks), [budget] * len(chunks)))
        per_offset = {p: _merge_raw([r[p] for r in results]) for p in signed_offsets(window)}
    else:
        per_offset = _count_chunk_positional(corpus.documents, window, budget)
    matrices = {p: CoocMatrix(vocab_size, 1.0, raw) for p, raw in per_offset.items()}
    return PositionalCoocSet(window, matrices)


def _corpus_vocab_size(corpus: EncodedCorpus) -> int:
    top = 0
    for doc in corpus.documents:
        if len(doc):
            top = max(top, int(doc.max()) + 1)
    return top


def merge(shards: Sequence[CoocMatrix]) -> CoocMatrix:
    """Entrywise sum of shards; result independent of how work was split."""
    if not shards:
        raise ValueError("nothing to merge")
    first = shards[0]
    for shard in shards[1:]:
        if shard.vocab_size != first.vocab_size:
            raise ValueError(
                f"vocab_size mismatch: {shard.vocab_size} != {first.vocab_size}"
            )
        if shard.scale != first.scale:
            raise ValueError(f"scale mismatch: {shard.scale} != {first.scale}")
    raw = _merge_raw([dict(first.counts)] + [s.counts for s in shards[1:]])
    return CoocMatrix(first.vocab_size, first.scale, raw)


def verify_decomposition(baseline: CoocMatrix, positional: PositionalCoocSet) -> float:
    """Max absolute difference between the damped baseline and the positional
    matrices recombined with 1/|p| weights. Near zero when both were counted
    from the same corpus and window."""
    recon: dict = {}
    for p, matrix in positional.matrices.items():
        w = 1.0 / (abs(p) * matrix.scale)
        for key, raw in matrix.counts.items():
            if key in recon:
                recon[key] += raw * w
            else:
                recon[key] = raw * w
    worst = 0.0
    for key in baseline.counts.keys() | recon.keys():
        diff = abs(baseline.value(*key) - recon.get(key, 0.0))
        if diff > worst:
            worst = diff
    return worst


def save_matrix(matrix: CoocMatrix, path: str | Path) -> None:
    """Write entries sorted by (i, j) as little-endian (u32, u32, f64) records."""
    from .util import atomic_write

    ii, jj, xx = matrix.to_arrays()
    arr = np.empty(matrix.nnz, dtype=RECORD_DTYPE)
    arr["i"] = ii
    arr["j"] = jj
    arr["x"] = xx
    with atomic_write(path, binary=True) as fh:
        arr.tofile(fh)


def load_matrix(path: str | Path, vocab_size: int) -> CoocMatrix:
    arr = np.fromfile(path, dtype=RECORD_DTYPE)
    if arr.size:
        if int(arr["i"].max()) >= vocab_size or int(arr["j"].max()) >= vocab_size:
            raise ValueError(
                f"{path}: word id out of range for vocabulary of {vocab_size}"
            )
        if not np.isfinite(arr["x"]).all() or arr["x"].min() <= 0:
            raise ValueError(f"{path}: co-occurrence values must be positive and finite")
    counts = {}
    for i, j, x in zip(arr["i"].tolist(), arr["j"].tolist(), arr["x"].tolist()):
        counts[(i, j)] = x
    return CoocMatrix(vocab_size, 1.0, counts)


def positional_path(prefix: str | Path, offset: int) -> Path:
    """Shard file name for one signed offset, e.g. prefix.p+2.bin."""
    return Path(f"{prefix}.p{offset:+d}.bin")


def baseline_path(prefix: str | Path) -> Path:
    return Path(f"{prefix}.bin")


def save_positional(pset: PositionalCoocSet, prefix: str | Path) -> list[Path]:
    paths = []
    for p in pset.offsets:
        path = positional_path(prefix, p)
        save_matrix(pset[p], path)
        paths.append(path)
    return paths


def load_positional(prefix: str | Path, window: int, vocab_size: int) -> PositionalCoocSet:
    matrices = {}
    for p in signed_offsets(window):
        path = positional_path(prefix, p)
        if not path.exists():
            raise FileNotFoundError(f"missing positional shard: {path}")
        matrices[p] = load_matrix(path, vocab_size)
    return PositionalCoocSet(window, matrices)
