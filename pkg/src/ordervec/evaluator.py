"""Scoring embeddings: analogy completion, synonym rank, report arithmetic.

Analogies follow the additive-offset rule: given (a, b, c) the prediction is
the vocabulary word (outside the question) whose vector is most cosine-
similar to a - b + c over unit-normalized rows. Synonym scoring uses the
rank-in-top-10 protocol: the 0-based position of the synonym among the ten
nearest neighbors of the target, with 10 meaning not found.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .trainer import EmbeddingMatrix

NOT_FOUND_RANK = 10


@dataclass
class AnalogyQuestion:
    a: str
    b: str
    c: str
    d: str
    section: str = "default"


@dataclass
class SynonymDataset:
    name: str
    pairs: list[tuple[str, str]]


@dataclass
class SectionScore:
    asked: int = 0
    answered: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float:
        """Correct over asked, in percent; unanswered questions count wrong."""
        return 100.0 * self.correct / self.asked if self.asked else 0.0

    @property
    def coverage(self) -> float:
        return 100.0 * self.answered / self.asked if self.asked else 0.0


@dataclass
class SimilarityScore:
    pairs: int
    found: int
    average_rank: float


@dataclass
class EvalReport:
    analogy: dict[str, SectionScore] = field(default_factory=dict)
    analogy_total: SectionScore | None = None
    similarity: dict[str, SimilarityScore] = field(default_factory=dict)
    comparisons: dict[str, tuple[float, float, float]] | None = None


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return vectors / safe


def nearest(
    emb: EmbeddingMatrix,
    query: np.ndarray,
    n: int,
    exclude: Iterable[str] = (),
) -> list[str]:
    """The ``n`` words most cosine-similar to ``query``, best first.

    Excluded words are removed before truncation. Ties break toward the
    lower word id so rankings are fully deterministic.
    """
    query = np.asarray(query, dtype=float)
    qnorm = np.linalg.norm(query)
    if qnorm == 0:
        raise ValueError("zero-norm query vector")
    sims = _unit_rows(emb.vectors) @ (query / qnorm)
    return _ranked_words(emb, sims, n, exclude)


def _ranked_words(emb, sims, n, exclude):
    sims = sims.copy()
    for word in exclude:
        if word in emb.vocab:
            sims[emb.vocab.id(word)] = -np.inf
    # lexsort: primary key last -> sort by -sim, then by word id for ties;
    # excluded entries land at the very end
    order = np.lexsort((np.arange(len(sims)), -sims))
    out = []
    for idx in order:
        if sims[idx] == -np.inf:
            break
        out.append(emb.vocab.word(int(idx)))
        if len(out) == n:
            break
    return out


def _solve_from_unit(emb, unit, a, b, c):
    target = unit[emb.vocab.id(a)] - unit[emb.vocab.id(b)] + unit[emb.vocab.id(c)]
    tnorm = np.linalg.norm(target)
    if tnorm == 0:
        return None
    sims = unit @ (target / tnorm)
    ranked = _ranked_words(emb, sims, 1, {a, b, c})
    return ranked[0] if ranked else None


def solve_analogy(emb: EmbeddingMatrix, a: str, b: str, c: str) -> str | None:
    """Predict the word completing a - b + c, or None when any input word is
    out of vocabulary. The prediction never repeats a, b or c."""
    for w in (a, b, c):
        if w not in emb.vocab:
            return None
    return _solve_from_unit(emb, _unit_rows(emb.vectors), a, b, c)


def eval_analogy(
    emb: EmbeddingMatrix, questions: Sequence[AnalogyQuestion]
) -> tuple[dict[str, SectionScore], SectionScore]:
    """Score analogy questions, tallied per section plus a grand total.

    A question is correct only when the prediction equals its fourth word
    exactly. Questions with any out-of-vocabulary word stay in the asked
    denominator but count as unanswered and wrong.
    """
    if not questions:
        raise ValueError("no analogy questions to evaluate")
    unit = _unit_rows(emb.vectors)
    sections: dict[str, SectionScore] = {}
    total = SectionScore()
    for q in questions:
        score = sections.setdefault(q.section, SectionScore())
        score.asked += 1
        total.asked += 1
        if any(w not in emb.vocab for w in (q.a, q.b, q.c, q.d)):
            continue
        prediction = _solve_from_unit(emb, unit, q.a, q.b, q.c)
        if prediction is None:
            continue
        score.answered += 1
        total.answered += 1
        if prediction == q.d:
            score.correct += 1
            total.correct += 1
    return sections, total


def extract_synonyms(
    scored_pairs: Iterable[tuple[str, str, float]],
    scale_max: float,
    threshold_fraction: float = 0.75,
    name: str = "synonyms",
) -> SynonymDataset:
    """Turn a human-scored similarity list into synonym pairs.

    A pair whose score reaches ``threshold_fraction`` of the scale maximum is
    kept in both directions; duplicates collapse.
    """
    if not 0 < threshold_fraction <= 1:
        raise ValueError(f"threshold_fraction must be in (0, 1], got {threshold_fraction}")
    if scale_max <= 0:
        raise ValueError(f"scale_max must be > 0, got {scale_max}")
    kept: dict[tuple[str, str], None] = {}
    for w1, w2, score in scored_pairs:
        if score < 0 or score > scale_max:
            raise ValueError(f"score {score} outside [0, {scale_max}] for ({w1}, {w2})")
        if score / scale_max >= threshold_fraction:
            kept[(w1, w2)] = None
            kept[(w2, w1)] = None
    return SynonymDataset(name, list(kept))


def eval_similarity(emb: EmbeddingMatrix, dataset: SynonymDataset) -> SimilarityScore:
    """Average rank-in-top-10 of the true synonym over all pairs.

    Rank is the synonym's 0-based position among the target's ten nearest
    neighbors (target excluded), or 10 when it is absent or the target is
    out of vocabulary. Lower is better.
    """
    if not dataset.pairs:
        raise ValueError(f"synonym dataset {dataset.name!r} is empty")
    unit = _unit_rows(emb.vectors)
    ranks = []
    found = 0
    for target, synonym in dataset.pairs:
        rank = NOT_FOUND_RANK
        if target in emb.vocab:
            sims = unit @ unit[emb.vocab.id(target)]
            top = _ranked_words(emb, sims, NOT_FOUND_RANK, {target})
            if synonym in top:
                rank = top.index(synonym)
        if rank < NOT_FOUND_RANK:
            found += 1
        ranks.append(rank)
    return SimilarityScore(len(ranks), found, float(np.mean(ranks)))


def relative_improvement(new: float, base: float) -> float:
    """Percent change of ``new`` over ``base``; positive means larger."""
    if base <= 0:
        raise ValueError(f"baseline must be > 0, got {base}")
    return 100.0 * (new - base) / base


# ---------------------------------------------------------------------------
# dataset files


def parse_analogy_file(path: str | Path) -> list[AnalogyQuestion]:
    """Question file: ': section' header lines, then four words per line."""
    questions = []
    section = "default"
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(":"):
                section = line[1:].strip() or "default"
                continue
            words = line.lower().split()
            if len(words) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 words, got {len(words)}")
            questions.append(AnalogyQuestion(*words, section=section))
    return questions


def parse_scored_pairs(path: str | Path) -> list[tuple[str, str, float]]:
    """Scored-pair file: 'word1 word2 score' per line."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'word1 word2 score'")
            pairs.append((parts[0].lower(), parts[1].lower(), float(parts[2])))
    return pairs


# ---------------------------------------------------------------------------
# report serialization and comparison

_LOWER_IS_BETTER = {"avg_rank"}


def dump_report(report: EvalReport) -> str:
    """Machine-readable key=value lines; floats keep full precision."""
    lines = []
    for name in sorted(report.analogy):
        s = report.analogy[name]
        for fld in ("asked", "answered", "correct"):
            lines.append(f"analogy.section.{name}.{fld}={getattr(s, fld)}")
    if report.analogy_total is not None:
        t = report.analogy_total
        lines.append(f"analogy.total.asked={t.asked}")
        lines.append(f"analogy.total.answered={t.answered}")
        lines.append(f"analogy.total.correct={t.correct}")
        lines.append(f"analogy.total.accuracy_pct={t.accuracy!r}")
        lines.append(f"analogy.total.coverage_pct={t.coverage!r}")
    for name in sorted(report.similarity):
        s = report.similarity[name]
        lines.append(f"similarity.{name}.pairs={s.pairs}")
        lines.append(f"similarity.{name}.found={s.found}")
        lines.append(f"similarity.{name}.avg_rank={s.average_rank!r}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> EvalReport:
    report = EvalReport()
    sections: dict[str, dict[str, float]] = {}
    similarity: dict[str, dict[str, float]] = {}
    total: dict[str, float] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or "=" not in line:
            continue
        key, value = line.split("=", 1)
        parts = key.split(".")
        if parts[0] == "analogy" and parts[1] == "section" and len(parts) >= 4:
            sections.setdefault(".".join(parts[2:-1]), {})[parts[-1]] = float(value)
        elif parts[0] == "analogy" and parts[1] == "total":
            total[parts[2]] = float(value)
        elif parts[0] == "similarity" and len(parts) >= 3:
            similarity.setdefault(".".join(parts[1:-1]), {})[parts[-1]] = float(value)
    for name, vals in sections.items():
        report.analogy[name] = SectionScore(
            int(vals.get("asked", 0)), int(vals.get("answered", 0)), int(vals.get("correct", 0))
        )
    if total:
        report.analogy_total = SectionScore(
            int(total.get("asked", 0)), int(total.get("answered", 0)), int(total.get("correct", 0))
        )
    for name, vals in similarity.items():
        report.similarity[name] = SimilarityScore(
            int(vals.get("pairs", 0)), int(vals.get("found", 0)), float(vals.get("avg_rank", 0.0))
        )
    return report


def load_report(path: str | Path) -> EvalReport:
    with open(path, encoding="utf-8") as fh:
        return parse_report(fh.read())


def compare_reports(base: EvalReport, new: EvalReport) -> dict[str, tuple[float, float, float]]:
    """Relative improvements of ``new`` over ``base`` for every metric both
    reports carry. For ranks (lower is better) the sign is flipped so that
    positive always means improvement."""
    out: dict[str, tuple[float, float, float]] = {}

    def add(metric: str, base_val: float, new_val: float, lower_better: bool = False):
        if base_val <= 0:
            return
        ri = relative_improvement(new_val, base_val)
        out[metric] = (base_val, new_val, -ri if lower_better else ri)

    if base.analogy_total and new.analogy_total:
        add("analogy.total.correct", base.analogy_total.correct, new.analogy_total.correct)
    for name in sorted(set(base.analogy) & set(new.analogy)):
        add(f"analogy.section.{name}.correct", base.analogy[name].correct, new.analogy[name].correct)
    for name in sorted(set(base.similarity) & set(new.similarity)):
        add(f"similarity.{name}.avg_rank", base.similarity[name].average_rank,
            new.similarity[name].average_rank, lower_better=True)
        add(f"similarity.{name}.found", base.similarity[name].found, new.similarity[name].found)
    return out


def render_report(report: EvalReport) -> str:
    """Human-readable report table."""
    lines = []
    if report.analogy:
        lines.append(f"{'section':<32} {'asked':>7} {'answered':>9} {'correct':>8} {'acc%':>7}")
        for name in sorted(report.analogy):
            s = report.analogy[name]
            lines.append(
                f"{name:<32} {s.asked:>7} {s.answered:>9} {s.correct:>8} {s.accuracy:>7.2f}"
            )
        if report.analogy_total:
            t = report.analogy_total
            lines.append(
                f"{'TOTAL':<32} {t.asked:>7} {t.answered:>9} {t.correct:>8} {t.accuracy:>7.2f}"
            )
    if report.similarity:
        if lines:
            lines.append("")
        lines.append(f"{'dataset':<32} {'pairs':>7} {'found':>7} {'avg rank':>9}")
        for name in sorted(report.similarity):
            s = report.similarity[name]
            lines.append(f"{name:<32} {s.pairs:>7} {s.found:>7} {s.average_rank:>9.2f}")
    return "\n".join(lines) + "\n"


def render_comparison(comparisons: dict[str, tuple[float, float, float]]) -> str:
    lines = [f"{'metric':<40} {'base':>10} {'new':>10} {'improv%':>9}"]
    for metric, (base_val, new_val, ri) in comparisons.items():
        lines.append(f"{metric:<40} {base_val:>10.4g} {new_val:>10.4g} {ri:>9.2f}")
    return "\n".join(lines) + "\n"
