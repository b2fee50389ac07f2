"""Command-line entry point chaining the pipeline stages.

Subcommands: vocab, cooccur, train, compose, eval-analogy, eval-sim,
compare. Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go
to stderr; data goes to the named output file (written atomically) or
stdout.
"""

from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

from . import __version__, composer, cooccur, corpus, evaluator, trainer
from .util import atomic_write

DEFAULTS = {
    "min_count": 5,
    "window": 4,
    "mode": "baseline",
    "memory": 512.0,
    "dim": 100,
    "epochs": 15,
    "eta": 0.05,
    "x_max": 100.0,
    "alpha": 0.75,
    "seed": 1,
    "workers": 1,
    "emit": "sum",
    "method": "direct",
    "scale": 10.0,
    "threshold": 0.75,
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; this artifact reserves 2 for data errors
    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="ordervec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ordervec {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="key=value file supplying flag defaults")
        return p

    p = add("vocab", "count words and write the frequency-filtered vocabulary")
    p.add_argument("inputs", nargs="+", type=Path, help="text corpus files")
    p.add_argument("--min-count", type=int, dest="min_count")
    p.add_argument("--output", type=Path, help="vocabulary file (default stdout)")

    p = add("cooccur", "count co-occurrences into binary shard files")
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--mode", choices=("baseline", "positional"))
    p.add_argument("--memory", type=float, help="accumulator budget in MB")
    p.add_argument("--workers", type=int)
    p.add_argument("--output", required=True, help="shard path prefix")

    p = add("train", "fit vectors to a baseline shard file")
    p.add_argument("shards", type=Path, help="co-occurrence shard file")
    p.add_argument("--vocab", type=Path, required=True)
    for flag in ("--dim", "--epochs", "--seed", "--workers"):
        p.add_argument(flag, type=int)
    for flag in ("--eta", "--x-max", "--alpha"):
        p.add_argument(flag, type=float)
    p.add_argument("--emit", choices=("sum", "pivot"))
    p.add_argument("--output", type=Path, help="vector file (default stdout)")

    p = add("compose", "train per-offset vectors and concatenate them")
    p.add_argument("shards", help="positional shard path prefix")
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--method", choices=composer.METHODS)
    for flag in ("--window", "--dim", "--epochs", "--seed", "--workers"):
        p.add_argument(flag, type=int)
    for flag in ("--eta", "--x-max", "--alpha"):
        p.add_argument(flag, type=float)
    p.add_argument("--emit", choices=("sum", "pivot"))
    p.add_argument("--output", type=Path, required=True, help="composed vector file")

    p = add("eval-analogy", "score vectors on analogy completion")
    p.add_argument("questions", type=Path, help="analogy question file")
    p.add_argument("--vectors", type=Path, required=True)
    p.add_argument("--output", type=Path, help="report file (default stdout)")

    p = add("eval-sim", "score vectors on synonym rank-in-top-10")
    p.add_argument("pairs", type=Path, help="scored word-pair file")
    p.add_argument("--vectors", type=Path, required=True)
    p.add_argument("--scale", type=float, help="score scale maximum")
    p.add_argument("--threshold", type=float, help="synonym score fraction")
    p.add_argument("--name", help="dataset label (default: pair file stem)")
    p.add_argument("--output", type=Path, help="report file (default stdout)")

    p = add("compare", "relative improvements between two reports")
    p.add_argument("base", type=Path, help="baseline report (key=value dump)")
    p.add_argument("new", type=Path, help="new report (key=value dump)")
    return parser


def _read_config(path: Path) -> dict:
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from built-in defaults."""
    config = _read_config(args.config) if getattr(args, "config", None) else {}
    for key, value in vars(args).items():
        if value is not None:
            continue
        if key in config:
            default = DEFAULTS.get(key)
            caster = type(default) if default is not None else str
            setattr(args, key, caster(config[key]))
        elif key in DEFAULTS:
            setattr(args, key, DEFAULTS[key])
    return args


def _require_files(*paths: Path) -> None:
    for path in paths:
        if not Path(path).exists():
            raise DataError(f"input file not found: {path}")


def _train_config(args) -> trainer.TrainConfig:
    try:
        return trainer.TrainConfig(
            dim=args.dim, x_max=args.x_max, alpha=args.alpha, eta=args.eta,
            epochs=args.epochs, seed=args.seed, workers=args.workers,
        ).validated()
    except ValueError as exc:
        raise UsageError(str(exc))


def _emit_text(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with atomic_write(output) as fh:
            fh.write(text)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _cmd_vocab(args) -> int:
    _require_files(*args.inputs)
    if args.min_count < 1:
        raise UsageError(f"--min-count must be >= 1, got {args.min_count}")
    counter: Counter[str] = Counter()
    for doc in corpus.iter_documents(args.inputs):
        counter.update(doc)
    vocab = corpus.Vocabulary.from_counts(counter, args.min_count)
    _log(f"vocab: kept {len(vocab)} of {len(counter)} words (min count {args.min_count})")
    if args.output is None:
        for word, count in vocab.entries:
            sys.stdout.write(f"{word} {count}\n")
    else:
        vocab.save(args.output)
    return 0


def _load_encoded(args, vocab):
    docs = corpus.iter_documents(args.inputs)
    return corpus.encode(docs, vocab)


def _cmd_cooccur(args) -> int:
    _require_files(*args.inputs, args.vocab)
    if args.window < 1:
        raise UsageError(f"--window must be >= 1, got {args.window}")
    vocab = corpus.Vocabulary.load(args.vocab)
    encoded = _load_encoded(args, vocab)
    _log(f"cooccur: {encoded.token_count} tokens in {len(encoded)} documents")
    if args.mode == "baseline":
        matrix = cooccur.count_baseline(
            encoded, args.window, args.memory, args.workers, vocab_size=len(vocab)
        )
        path = cooccur.baseline_path(args.output)
        cooccur.save_matrix(matrix, path)
        _log(f"cooccur: {matrix.nnz} entries -> {path}")
    else:
        pset = cooccur.count_positional(
            encoded, args.window, args.memory, args.workers, vocab_size=len(vocab)
        )
        paths = cooccur.save_positional(pset, args.output)
        total = sum(pset[p].nnz for p in pset.offsets)
        _log(f"cooccur: {total} entries over {len(paths)} offset files -> {args.output}.p*.bin")
    return 0


def _cmd_train(args) -> int:
    _require_files(args.shards, args.vocab)
    config = _train_config(args)
    vocab = corpus.Vocabulary.load(args.vocab)
    matrix = cooccur.load_matrix(args.shards, len(vocab))
    if matrix.is_empty():
        raise DataError(f"shard file has no entries: {args.shards}")
    model, history = trainer.train(matrix, config)
    for epoch, loss in enumerate(history, 1):
        _log(f"train: epoch {epoch:3d}  mean loss {loss:.6f}")
    emb = trainer.emit_vectors(model, vocab, args.emit)
    if args.output is None:
        import io

        buf = io.StringIO()
        trainer._write_embedding_lines(emb, buf)
        sys.stdout.write(buf.getvalue())
    else:
        trainer.save_embeddings(emb, args.output)
        _log(f"train: wrote {len(vocab)} x {emb.dim} vectors -> {args.output}")
    return 0


def _cmd_compose(args) -> int:
    _require_files(args.vocab)
    config = _train_config(args)
    if args.method == "reduced" and 2 * args.window > args.dim:
        raise UsageError(
            f"--method reduced needs 2*window <= dim; got window {args.window}, dim {args.dim}"
        )
    vocab = corpus.Vocabulary.load(args.vocab)
    for p in cooccur.signed_offsets(args.window):
        _require_files(cooccur.positional_path(args.shards, p))
    pset = cooccur.load_positional(args.shards, args.window, len(vocab))
    composed = composer.compose(pset, vocab, config, args.method)
    composer.save_composed(composed, args.output)
    _log(
        f"compose: {args.method}, window {args.window} -> "
        f"{composed.total_dim}-dim vectors -> {args.output}"
    )
    return 0


def _cmd_eval_analogy(args) -> int:
    _require_files(args.questions, args.vectors)
    emb = trainer.load_embeddings(args.vectors)
    questions = evaluator.parse_analogy_file(args.questions)
    if not questions:
        raise DataError(f"no questions in {args.questions}")
    sections, total = evaluator.eval_analogy(emb, questions)
    report = evaluator.EvalReport(analogy=sections, analogy_total=total)
    _log(evaluator.render_report(report).rstrip("\n"))
    _emit_text(evaluator.dump_report(report), args.output)
    return 0


def _cmd_eval_sim(args) -> int:
    _require_files(args.pairs, args.vectors)
    emb = trainer.load_embeddings(args.vectors)
    scored = evaluator.parse_scored_pairs(args.pairs)
    name = args.name or Path(args.pairs).stem
    dataset = evaluator.extract_synonyms(scored, args.scale, args.threshold, name)
    if not dataset.pairs:
        raise DataError(
            f"no pairs reach {args.threshold:.2f} of scale {args.scale} in {args.pairs}"
        )
    score = evaluator.eval_similarity(emb, dataset)
    report = evaluator.EvalReport(similarity={name: score})
    _log(evaluator.render_report(report).rstrip("\n"))
    _emit_text(evaluator.dump_report(report), args.output)
    return 0


def _cmd_compare(args) -> int:
    _require_files(args.base, args.new)
    base = evaluator.load_report(args.base)
    new = evaluator.load_report(args.new)
    comparisons = evaluator.compare_reports(base, new)
    if not comparisons:
        raise DataError("reports share no comparable metrics")
    sys.stdout.write(evaluator.render_comparison(comparisons))
    return 0


_COMMANDS = {
    "vocab": _cmd_vocab,
    "cooccur": _cmd_cooccur,
    "train": _cmd_train,
    "compose": _cmd_compose,
    "eval-analogy": _cmd_eval_analogy,
    "eval-sim": _cmd_eval_sim,
    "compare": _cmd_compare,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        args = _resolve(args)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ordervec: usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, trainer.TrainingDiverged) as exc:
        print(f"ordervec: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"ordervec: input file not found: {exc.filename}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"ordervec: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
