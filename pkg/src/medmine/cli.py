"""Command-line interface: ``medmine <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error (unparsable or
inconsistent input).  Every output directory gets a ``run.json`` with the
tool version, the full configuration and SHA-256 digests of the inputs.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from . import __version__
from .corpus import (
    SplitSpec,
    chunk_annotations,
    chunk_document,
    label_stats,
    oversample,
    spans_to_bio,
    split_corpus,
    to_token_records,
    tokenize,
)
from .ensemble import Intersection, PerLabelBest, Priority, Union, merge, provenance_json
from .errors import MedMineError, ParameterError
from .matcher import ALL_MODES, MatchMode, score_corpus
from .metrics import build_report, filter_and_reaggregate, read_rows, render_report, token_accuracy
from .model import parse_label
from .standoff import (
    load_corpus_dir,
    load_predictions,
    write_corpus_dir,
    write_token_tags,
)

log = logging.getLogger("medmine")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
FORMAT_EXT = {"tsv": "tsv", "json": "json", "markdown": "md"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------- helpers


def _csv_list(value: str | None) -> list[str]:
    if not value:
        return []
    return [v.strip() for v in value.split(",") if v.strip()]


def _labels(values: Sequence[str] | None) -> list[str]:
    out = []
    for v in values or ():
        out += [parse_label(x) for x in _csv_list(v)]
    return out


def _modes(value: str) -> list[MatchMode]:
    if value == "all":
        return list(ALL_MODES)
    try:
        return [MatchMode.parse(m) for m in _csv_list(value)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _formats(value: str) -> list[str]:
    fmts = ["markdown" if f == "md" else f for f in _csv_list(value)]
    bad = [f for f in fmts if f not in FORMAT_EXT]
    if bad:
        raise UsageError(f"unknown format(s) {bad}; choose from tsv, json, markdown")
    return fmts


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    path = Path(path)
    files = sorted(p for p in path.rglob("*") if p.is_file()) if path.is_dir() else [path]
    for p in files:
        h.update(str(p.relative_to(path) if path.is_dir() else p.name).encode())
        h.update(b"\0")
        h.update(p.read_bytes())
    return h.hexdigest()


def _config(args: argparse.Namespace) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "func"}


def write_metadata(out_dir: Path, args: argparse.Namespace, inputs: Sequence[Path]) -> None:
    meta = {
        "tool": "medmine",
        "version": __version__,
        "command": args.command,
        "config": _config(args),
        "inputs": {str(p): _digest(p) for p in inputs if p is not None and Path(p).exists()},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@contextlib.contextmanager
def _executor(n: int):
    if n and n > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            yield ex
    else:
        yield None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------- evaluate


def cmd_evaluate(args: argparse.Namespace) -> int:
    modes = _modes(args.mode)
    fmts = _formats(args.format)
    excluded = _labels(args.exclude_labels)
    out = Path(args.out)
    reports = {}

    if args.rows:
        if args.gold or args.pred:
            raise UsageError("--rows cannot be combined with gold/pred inputs")
        rows = read_rows(args.rows)
        for mode in modes:
            reports[mode] = filter_and_reaggregate(rows, excluded, mode)
        inputs = [Path(args.rows)]
    else:
        if not (args.gold and args.pred):
            raise UsageError("evaluate needs GOLD_DIR and PRED_PATH (or --rows)")
        with _executor(args.parallel) as ex:
            corpus = load_corpus_dir(args.gold, strict=args.strict_validation, executor=ex)
            preds = load_predictions(args.pred, corpus, strict=args.strict_validation, executor=ex)
            score = score_corpus(corpus.gold, preds, modes=modes, exclude=excluded, executor=ex)
        gold_tags, pred_tags = [], []
        for doc in corpus.documents:
            toks = tokenize(doc)
            g = [s for s in corpus.gold_for(doc.doc_id).spans if s.label not in excluded]
            p = [s for s in preds[doc.doc_id].spans if s.label not in excluded]
            with _quiet():
                gold_tags.append(spans_to_bio(toks, g))
                pred_tags.append(spans_to_bio(toks, p))
        acc = token_accuracy(gold_tags, pred_tags) if any(gold_tags) else None
        n_tokens = sum(len(t) for t in gold_tags)
        for mode in modes:
            reports[mode] = build_report(score.counts[mode], mode, token_accuracy=acc, token_count=n_tokens,
                                         excluded=excluded)
        inputs = [Path(args.gold), Path(args.pred)]

    for mode, report in reports.items():
        for fmt in fmts:
            _write(out / f"report_{mode.value}.{FORMAT_EXT[fmt]}", render_report(report, fmt, percent=args.percent))
        log.info("%s: micro/macro/weighted F1 = %s / %.4f / %.4f", mode.value,
                 f"{report.micro.f1:.4f}" if report.micro else "n/a", report.macro.f1, report.weighted.f1)
    if args.figures:
        from .plotting import plot_mode_comparison, plot_report

        for mode, report in reports.items():
            plot_report(report, out / f"report_{mode.value}.png")
        if len(reports) > 1:
            plot_mode_comparison({m.value: r for m, r in reports.items()}, out / "modes_f1.png")
    write_metadata(out, args, inputs)
    if not args.quiet:
        first = reports[modes[0]]
        sys.stdout.write(render_report(first, "tsv", percent=args.percent))
    return EXIT_OK


@contextlib.contextmanager
def _quiet():
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


# ------------------------------------------------------------------- split


def _parse_oversample(values: Sequence[str] | None) -> list[tuple[str, float]]:
    out = []
    for v in values or ():
        label, sep, factor = v.partition(":")
        try:
            if not sep:
                raise ValueError
            out.append((parse_label(label), float(factor)))
        except ValueError:
            raise UsageError(f"--oversample expects LABEL:FACTOR, got {v!r}") from None
    return out


def cmd_split(args: argparse.Namespace) -> int:
    try:
        ratios = tuple(float(x) for x in _csv_list(args.ratios))
    except ValueError:
        raise UsageError(f"bad --ratios {args.ratios!r}") from None
    spec = SplitSpec(ratios, args.seed)  # type: ignore[arg-type]
    corpus = load_corpus_dir(args.corpus, strict=args.strict_validation)
    parts = dict(zip(("train", "dev", "test"), split_corpus(corpus, spec)))
    for label, factor in _parse_oversample(args.oversample):
        parts["train"] = oversample(parts["train"], label, factor, seed=args.seed)
    out = Path(args.out)
    for name, part in parts.items():
        _write(out / f"{name}.txt", "".join(f"{d}\n" for d in part.doc_ids))
        if args.materialize:
            write_corpus_dir(out / name, part.documents, part.gold)
    write_metadata(out, args, [Path(args.corpus)])
    print("\t".join(f"{k}={len(v)}" for k, v in parts.items()))
    return EXIT_OK


# ------------------------------------------------------------------- chunk


def cmd_chunk(args: argparse.Namespace) -> int:
    corpus = load_corpus_dir(args.corpus, strict=args.strict_validation)
    out = Path(args.out)
    index = []
    sizes = []
    for doc in corpus.documents:
        chunks = chunk_document(doc, args.max_tokens, args.overlap)
        local = chunk_annotations(corpus.gold_for(doc.doc_id), chunks)
        write_corpus_dir(out, [c.to_document() for c in chunks], {a.doc_id: a for a in local})
        for c in chunks:
            sizes.append(c.n_tokens)
            index.append({
                "chunk_id": c.chunk_id,
                "doc_id": c.doc_id,
                "index": c.index,
                "token_start": c.token_start,
                "token_end": c.token_end,
                "char_offset_base": c.char_offset_base,
                "char_end": c.char_end,
            })
    _write(out / "chunks.json", json.dumps(index, indent=2) + "\n")
    if args.figures and sizes:
        from .plotting import plot_chunk_sizes

        plot_chunk_sizes(sizes, out / "chunk_sizes.png", args.max_tokens)
    write_metadata(out, args, [Path(args.corpus)])
    print(f"{len(corpus)} documents -> {len(index)} chunks")
    return EXIT_OK


# ------------------------------------------------------------------- stats


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus_dir(args.corpus, strict=args.strict_validation)
    stats = label_stats(corpus)
    out = Path(args.out)
    _write(out / "stats.tsv", stats.to_tsv())
    _write(out / "stats.json", stats.to_json())
    if args.figures:
        from .plotting import plot_label_distribution

        plot_label_distribution(stats.counts, out / "label_counts.png")
    write_metadata(out, args, [Path(args.corpus)])
    sys.stdout.write(stats.to_tsv())
    return EXIT_OK


# ----------------------------------------------------------------- convert


def cmd_convert(args: argparse.Namespace) -> int:
    out = Path(args.out)
    if args.to == "tags":
        corpus = load_corpus_dir(args.input, strict=args.strict_validation)
        with _quiet():
            records = {d.doc_id: to_token_records(d, corpus.gold_for(d.doc_id)) for d in corpus.documents}
        _write(out, write_token_tags(records))
        write_metadata(out.parent, args, [Path(args.input)])
    else:
        if not args.texts:
            raise UsageError("--to standoff needs --texts DIR with the .txt files")
        corpus = load_corpus_dir(args.texts)
        preds = load_predictions(args.input, corpus, source=args.source)
        write_corpus_dir(out, corpus.documents, preds, texts=args.with_texts)
        write_metadata(out, args, [Path(args.input), Path(args.texts)])
    return EXIT_OK


# ------------------------------------------------------------------- merge


def _named_paths(values: Sequence[str], flag: str) -> dict[str, Path]:
    out = {}
    for v in values or ():
        name, sep, path = v.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"{flag} expects NAME=PATH, got {v!r}")
        if name in out:
            raise UsageError(f"{flag}: duplicate name {name!r}")
        out[name] = Path(path)
    return out


def cmd_merge(args: argparse.Namespace) -> int:
    sources = _named_paths(args.pred, "--pred")
    if len(sources) < 1:
        raise UsageError("merge needs at least one --pred NAME=PATH")
    if args.strategy == "union":
        strategy = Union(priority=tuple(_csv_list(args.priority)) or None)
    elif args.strategy == "intersection":
        strategy = Intersection(_modes(args.mode)[0])
    elif args.strategy == "priority":
        strategy = Priority(tuple(_csv_list(args.priority)))
    else:
        reports = {}
        for name, path in _named_paths(args.dev_report, "--dev-report").items():
            reports[name] = read_rows(path)
        strategy = PerLabelBest(reports)

    with _executor(args.parallel) as ex:
        corpus = load_corpus_dir(args.texts, executor=ex)
        preds = {name: load_predictions(p, corpus, source=name, executor=ex) for name, p in sources.items()}
    merged = {d: merge({n: preds[n][d] for n in sources}, strategy) for d in corpus.doc_ids}

    out = Path(args.out)
    write_corpus_dir(out / "standoff", corpus.documents, merged, texts=False)
    with _quiet():
        records = {d.doc_id: to_token_records(d, merged[d.doc_id]) for d in corpus.documents}
    _write(out / "merged.tags", write_token_tags(records))
    _write(out / "provenance.json", provenance_json(list(merged.values())))
    write_metadata(out, args, [Path(args.texts)] + list(sources.values()))
    print(f"merged {len(sources)} sources over {len(corpus)} documents: {sum(len(a) for a in merged.values())} spans")
    return EXIT_OK


# ------------------------------------------------------------------- synth


def cmd_synth(args: argparse.Namespace) -> int:
    from .model import ENTITY_LABELS
    from .synthetic import GenSpec, NoiseSpec, generate, perturb_corpus, scaled_targets

    targets = scaled_targets(args.total_spans) if args.total_spans is not None else None
    corpus, ledger = generate(GenSpec(seed=args.seed, n_docs=args.n_docs, targets=targets))
    out = Path(args.out)
    write_corpus_dir(out / "gold", corpus.documents, corpus.gold)
    _write(out / "ledger.json", ledger.to_json())

    confusion = None
    if args.confusion:
        p = args.confusion
        confusion = {l: {**{m: p / (len(ENTITY_LABELS) - 1) for m in ENTITY_LABELS if m != l}, l: 1 - p}
                     for l in ENTITY_LABELS}
    for k, name in enumerate(args.simulate or ()):
        noise = NoiseSpec(deletion=args.deletion, jitter=args.jitter, max_jitter=args.max_jitter,
                          confusion=confusion, spurious_rate=args.spurious_rate, seed=args.seed + 1 + k)
        sim, ledgers = perturb_corpus(corpus, noise, name)
        write_corpus_dir(out / name, corpus.documents, sim.predictions[name], texts=False)
        payload = [ledgers[d].as_dict() for d in sorted(ledgers)]
        _write(out / f"{name}_ledger.json", json.dumps(payload, indent=2) + "\n")
    write_metadata(out, args, [])
    print(f"{len(corpus)} documents, {sum(ledger.counts.values())} gold spans")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="medmine", description="Medication-entity corpus tools and SemEval-style NER scoring.")
    parser.add_argument("--version", action="version", version=f"medmine {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, parallel=False):
        p.add_argument("--strict-validation", action="store_true",
                       help="treat surface/text mismatches in .ann files as errors")
        if parallel:
            p.add_argument("--parallel", type=int, default=1, metavar="N",
                           help="worker threads (results never depend on N)")

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("gold", nargs="?", type=Path, help="directory of gold .txt/.ann pairs")
    p.add_argument("pred", nargs="?", type=Path, help="directory of predicted .ann files or a .tags file")
    p.add_argument("--rows", type=Path, help="re-aggregate per-label rows from a TSV/JSON report instead")
    p.add_argument("--mode", default="type", help="strict, exact, partial, type, a comma list, or all")
    p.add_argument("--exclude-labels", action="append", metavar="L1,L2", help="labels to leave out")
    p.add_argument("--format", default="tsv,json,markdown", help="comma list of tsv, json, markdown")
    p.add_argument("--percent", action="store_true", help="print scores as percentages with 2 decimals")
    p.add_argument("--figures", action="store_true", help="also write PNG charts")
    p.add_argument("--out", type=Path, default=Path("medmine-report"))
    p.add_argument("--quiet", action="store_true")
    common(p, parallel=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("split", help="seeded train/dev/test split")
    p.add_argument("corpus", type=Path)
    p.add_argument("--ratios", default="0.7,0.15,0.15")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--oversample", action="append", metavar="LABEL:FACTOR",
                   help="duplicate training letters containing LABEL until its count grows by FACTOR")
    p.add_argument("--materialize", action="store_true", help="copy documents into train/ dev/ test/")
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("chunk", help="split long documents into token windows")
    p.add_argument("corpus", type=Path)
    p.add_argument("--max-tokens", type=int, default=512)
    p.add_argument("--overlap", type=int, default=0)
    p.add_argument("--figures", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("stats", help="gold label counts")
    p.add_argument("corpus", type=Path)
    p.add_argument("--figures", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("convert", help="stand-off <-> token-tag conversion")
    p.add_argument("input", type=Path, help="corpus directory (--to tags) or .tags file (--to standoff)")
    p.add_argument("--to", choices=("tags", "standoff"), required=True)
    p.add_argument("--texts", type=Path, help="directory with the .txt files (--to standoff)")
    p.add_argument("--source", default="converted")
    p.add_argument("--with-texts", action="store_true", help="also copy .txt files (--to standoff)")
    p.add_argument("--out", type=Path, required=True)
    common(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("merge", help="merge predictions of several models")
    p.add_argument("--texts", type=Path, required=True, help="directory with the .txt files")
    p.add_argument("--pred", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--strategy", choices=("union", "intersection", "priority", "per-label-best"), default="union")
    p.add_argument("--mode", default="type", help="match mode for --strategy intersection")
    p.add_argument("--priority", help="comma list of source names, highest first")
    p.add_argument("--dev-report", action="append", metavar="NAME=REPORT",
                   help="dev-set report (TSV or JSON) per source for per-label-best")
    p.add_argument("--out", type=Path, required=True)
    common(p, parallel=True)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("synth", help="generate a synthetic corpus (and simulated predictions)")
    p.add_argument("--n-docs", type=int, default=76)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--total-spans", type=int, help="scale the default label distribution to N spans")
    p.add_argument("--simulate", action="append", metavar="NAME", help="write a noisy prediction set NAME")
    p.add_argument("--deletion", type=float, default=0.1)
    p.add_argument("--jitter", type=float, default=0.1)
    p.add_argument("--max-jitter", type=int, default=3)
    p.add_argument("--confusion", type=float, default=0.0, help="probability of relabeling a kept span")
    p.add_argument("--spurious-rate", type=float, default=1.0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("MEDMINE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"medmine {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MedMineError as exc:
        print(f"medmine {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"medmine {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
