"""Command-line pipeline: ingest, generate, validate, stats.

Dataset files are line-delimited JSON, schema_version 1.  Generation
requires an explicit --seed; outputs are byte-identical across runs with
equal inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import annotate, assembly, dataset_io, opinion_index
from .corpus import (
    IngestOptions,
    ProductCatalog,
    ReviewStore,
    ingest_metadata,
    ingest_reviews,
    write_catalog,
    write_reviews,
)
from .errors import ShoptalkError
from .negotiation import default_phrasebank, load_phrasebank

SCHEMA_NOTE = "dataset schema: one JSON conversation per line, schema_version 1"

DEFAULTS = {
    "per_template": 10,
    "p_skip": 0.25,
    "retry_budget": 25,
    "top_k": 3,
    "t_pos": 0.1,
    "t_neg": -0.1,
    "min_opinions": 2,
    "workers": 1,
    "strict": False,
}


def _effective_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """flags > config file > defaults."""
    config = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            file_config = json.load(fh)
        unknown = set(file_config) - set(DEFAULTS)
        if unknown:
            raise ShoptalkError(f"unknown config keys: {sorted(unknown)}")
        config.update(file_config)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    return {key: config[key] for key in keys}


def _load_snapshot(snapshot_dir: str, strict: bool) -> tuple[ProductCatalog, ReviewStore]:
    snapshot = Path(snapshot_dir)
    options = IngestOptions(strict=strict)
    catalog = ingest_metadata(snapshot / "catalog.jsonl", options)
    store = ingest_reviews(snapshot / "reviews.jsonl", catalog, options)
    return catalog, store


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _effective_config(args, ["strict"])
    options = IngestOptions(strict=config["strict"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    catalog = ingest_metadata(args.meta, options)
    store = ingest_reviews(args.reviews, catalog, options)
    write_catalog(catalog, out / "catalog.jsonl")
    write_reviews(store, out / "reviews.jsonl")
    report = {
        "products": len(catalog),
        "reviews": len(store),
        "metadata": vars(catalog.report),
        "review_report": vars(store.report),
        "config": config,
    }
    with open(out / "ingest_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    print(f"ingested {len(catalog)} products, {len(store)} reviews -> {out}")
    if catalog.report.malformed or store.report.malformed:
        print(
            f"skipped malformed records: metadata={catalog.report.malformed} "
            f"reviews={store.report.malformed}"
        )
    if store.report.orphans:
        print(f"skipped orphan reviews: {store.report.orphans}")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    keys = [
        "per_template", "p_skip", "retry_budget", "top_k",
        "t_pos", "t_neg", "min_opinions", "workers", "strict",
    ]
    config = _effective_config(args, keys)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    catalog, store = _load_snapshot(args.snapshot, config["strict"])
    lexicons = (
        annotate.load_lexicons(args.lexicon) if args.lexicon
        else annotate.default_lexicons()
    )
    polarity = annotate.PolarityConfig(t_pos=config["t_pos"], t_neg=config["t_neg"])
    spans = annotate.annotate_store(store, lexicons, polarity)
    if args.annotations:
        imported = annotate.import_annotations(
            args.annotations, store, polarity, strict=config["strict"]
        )
        spans = annotate.merge_spans(spans, imported.spans)
    index = opinion_index.build_index(catalog, store, spans)

    phrasebank = (
        load_phrasebank(args.phrasebank) if args.phrasebank else default_phrasebank()
    )
    templates = (
        assembly.load_templates(args.templates) if args.templates
        else assembly.builtin_templates()
    )
    settings = assembly.GenerationSettings(
        per_template=config["per_template"],
        retry_budget=config["retry_budget"],
        top_k=config["top_k"],
        p_skip=config["p_skip"],
        min_opinions=config["min_opinions"],
        workers=config["workers"],
    )
    sentences = annotate.sentence_map(store)
    conversations, report = assembly.generate_dataset(
        templates, args.seed, catalog, store, index,
        phrasebank=phrasebank, sentences=sentences, settings=settings,
    )
    dataset_io.write_dataset(conversations, out / "dataset.jsonl")
    run_report = report.to_record()
    run_report["config"] = config
    run_report["spans_indexed"] = len(spans)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(run_report, fh, indent=2, sort_keys=True)
    print(
        f"generated {report.successes}/{report.requested} conversations "
        f"({len(report.exhausted)} exhausted) -> {out / 'dataset.jsonl'}"
    )
    for failure in report.exhausted:
        print(
            f"  exhausted: template {failure['template_id']} "
            f"instance {failure['ordinal']} after {failure['attempts']} attempts"
        )
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    catalog, store = _load_snapshot(args.snapshot, strict=False)
    lexicons = (
        annotate.load_lexicons(args.lexicon) if args.lexicon
        else annotate.default_lexicons()
    )
    polarity = annotate.PolarityConfig(
        t_pos=args.t_pos if args.t_pos is not None else DEFAULTS["t_pos"],
        t_neg=args.t_neg if args.t_neg is not None else DEFAULTS["t_neg"],
    )
    spans = annotate.annotate_store(store, lexicons, polarity)
    if args.annotations:
        imported = annotate.import_annotations(args.annotations, store, polarity)
        spans = annotate.merge_spans(spans, imported.spans)
    index = opinion_index.build_index(catalog, store, spans)
    templates = (
        assembly.load_templates(args.templates) if args.templates
        else assembly.builtin_templates()
    )
    report = dataset_io.validate(args.dataset, catalog, store, index, templates)
    print(report.summary())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for record in report.to_records():
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    return 0 if report.passed else 1


def cmd_stats(args: argparse.Namespace) -> int:
    result = dataset_io.stats(args.dataset)
    print(result.summary())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result.to_record(), fh, indent=2, sort_keys=True)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shoptalk", epilog=SCHEMA_NOTE)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="build a corpus snapshot", epilog=SCHEMA_NOTE)
    p_ingest.add_argument("--meta", required=True, help="meta.jsonl path")
    p_ingest.add_argument("--reviews", required=True, help="reviews.jsonl path")
    p_ingest.add_argument("--out", required=True, help="snapshot output directory")
    p_ingest.add_argument("--strict", action="store_true", default=None)
    p_ingest.add_argument("--config", help="JSON config file (flags override it)")
    p_ingest.set_defaults(func=cmd_ingest)

    p_gen = sub.add_parser("generate", help="generate a conversation dataset", epilog=SCHEMA_NOTE)
    p_gen.add_argument("--snapshot", required=True, help="snapshot directory from ingest")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--seed", required=True, type=int, help="master seed (mandatory)")
    p_gen.add_argument("--per-template", dest="per_template", type=int)
    p_gen.add_argument("--templates", help="template config JSON (default: built-in 14)")
    p_gen.add_argument("--lexicon", help="lexicon file (default: bundled)")
    p_gen.add_argument("--phrasebank", help="phrasebank file (default: bundled)")
    p_gen.add_argument("--annotations", help="imported annotations jsonl")
    p_gen.add_argument("--p-skip", dest="p_skip", type=float)
    p_gen.add_argument("--retry-budget", dest="retry_budget", type=int)
    p_gen.add_argument("--top-k", dest="top_k", type=int)
    p_gen.add_argument("--t-pos", dest="t_pos", type=float)
    p_gen.add_argument("--t-neg", dest="t_neg", type=float)
    p_gen.add_argument("--min-opinions", dest="min_opinions", type=int)
    p_gen.add_argument("--workers", type=int)
    p_gen.add_argument("--strict", action="store_true", default=None)
    p_gen.add_argument("--config", help="JSON config file (flags override it)")
    p_gen.set_defaults(func=cmd_generate)

    p_val = sub.add_parser("validate", help="validate a dataset against its corpus", epilog=SCHEMA_NOTE)
    p_val.add_argument("--dataset", required=True)
    p_val.add_argument("--snapshot", required=True)
    p_val.add_argument("--templates")
    p_val.add_argument("--lexicon")
    p_val.add_argument("--annotations")
    p_val.add_argument("--t-pos", dest="t_pos", type=float)
    p_val.add_argument("--t-neg", dest="t_neg", type=float)
    p_val.add_argument("--out", help="violation report jsonl")
    p_val.set_defaults(func=cmd_validate)

    p_stats = sub.add_parser("stats", help="dataset statistics", epilog=SCHEMA_NOTE)
    p_stats.add_argument("--dataset", required=True)
    p_stats.add_argument("--out", help="stats JSON output")
    p_stats.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShoptalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
