"""Command-line pipeline: score, fuse, rank, evaluate, compare.

Subcommands: textsim, imgsim, codebook, quantize, expand, fuse, eval,
compare. Exit codes: 0 on success, 1 for usage errors, 2 for data
validation errors. The INTERFUSE_CONFIG environment variable supplies a
default fusion config path when --config is not given.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields as dataclass_fields

from . import fusion, ingest, metrics, runio, textsim, visual
from .errors import ValidationError

log = logging.getLogger(__name__)

CONFIG_ENV = "INTERFUSE_CONFIG"

_FLOAT_KEYS = {"w_text", "w_image", "t_lower", "t_upper"}
_CONFIG_KEYS = {f.name for f in dataclass_fields(fusion.FusionConfig)}


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for
    data problems, so usage errors exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _pool_map(jobs: int, func, items):
    """Run func over items, optionally in a thread pool; order preserved."""
    if jobs <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _stopwords(path: str | None) -> frozenset[str]:
    return textsim.load_stopwords(path) if path else textsim.default_stopwords()


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def cmd_textsim(args) -> int:
    stopwords = _stopwords(args.stopwords)
    docs = ingest.load_corpus(args.corpus, fmt=args.format)
    queries = ingest.load_queries(args.queries)

    if args.expand:
        qrels = ingest.load_qrels(args.qrels)
        docs_by_id = {d.doc_id: d for d in docs}
        queries = [
            textsim.expand_query(
                q,
                [docs_by_id[d] for d in sorted(qrels.relevant_for(q.query_id))
                 if d in docs_by_id],
                k=args.expand_k, stopwords=stopwords,
            )
            for q in queries
        ]

    vocab, doc_vecs = textsim.build_index(docs, stopwords)
    doc_ids = sorted(doc_vecs)

    def score_one(query):
        qvec = textsim.vectorize(textsim.tokenize(query.text, stopwords), vocab)
        return [(query.query_id, doc_id,
                 textsim.text_score(qvec, doc_vecs[doc_id]))
                for doc_id in doc_ids]

    table = ingest.ScoreTable()
    for rows in _pool_map(args.jobs, score_one, queries):
        for query_id, doc_id, score in rows:
            table.add(query_id, doc_id, "text", score)
    ingest.write_scores(table, args.out)
    log.info("textsim: %d entries -> %s", len(table), args.out)
    return 0


def cmd_imgsim(args) -> int:
    doc_vecs = ingest.vectors_by_id(ingest.load_vectors(args.doc_vectors))
    query_vecs = ingest.vectors_by_id(ingest.load_vectors(args.query_vectors))
    queries = ingest.load_queries(args.queries)
    doc_ids = sorted(doc_vecs)

    def score_one(query):
        refs = query.sample_image_refs
        if not refs:
            log.warning("query %s has no sample images; no image scores",
                        query.query_id)
            return []
        missing = [r for r in refs if r not in query_vecs]
        if missing:
            raise ValidationError(
                f"query {query.query_id}: sample images missing from "
                f"{args.query_vectors}: {missing}"
            )
        rows = []
        for doc_id in doc_ids:
            per_image = [visual.image_score(query_vecs[r], doc_vecs[doc_id])
                         for r in refs]
            rows.append((query.query_id, doc_id,
                         visual.aggregate_query_images(per_image,
                                                       mode=args.aggregate)))
        return rows

    table = ingest.ScoreTable()
    for rows in _pool_map(args.jobs, score_one, queries):
        for query_id, doc_id, score in rows:
            table.add(query_id, doc_id, "image", score)
    ingest.write_scores(table, args.out)
    log.info("imgsim: %d entries -> %s", len(table), args.out)
    return 0


def cmd_codebook(args) -> int:
    sets = visual.load_descriptors(args.descriptors)
    log.info("codebook: k=%d seed=%d over %d images", args.k, args.seed,
             len(sets))
    codebook = visual.learn_codebook(sets, k=args.k, seed=args.seed,
                                     max_iters=args.max_iters)
    visual.save_codebook(codebook, args.out)
    meta = {
        "k": codebook.k,
        "dim": codebook.dim,
        "seed": codebook.rng_seed,
        "max_iters": args.max_iters,
        "n_iters": codebook.n_iters,
        "inertia_per_iter": list(codebook.inertia_per_iter),
    }
    with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("codebook: converged in %d iterations, final inertia %.6g",
             codebook.n_iters, codebook.inertia_per_iter[-1])
    return 0


def cmd_quantize(args) -> int:
    codebook = visual.load_codebook(args.codebook)
    sets = visual.load_descriptors(args.descriptors)
    histograms = [visual.quantize(ds, codebook) for ds in sets]
    ingest.write_vectors(visual.histograms_to_vectors(histograms), args.out)
    log.info("quantize: %d histograms (K=%d) -> %s", len(histograms),
             codebook.k, args.out)
    return 0


def cmd_expand(args) -> int:
    stopwords = _stopwords(args.stopwords)
    docs = ingest.load_corpus(args.corpus, fmt=args.format)
    queries = ingest.load_queries(args.queries)
    qrels = ingest.load_qrels(args.qrels)
    docs_by_id = {d.doc_id: d for d in docs}
    expanded = [
        textsim.expand_query(
            q,
            [docs_by_id[d] for d in sorted(qrels.relevant_for(q.query_id))
             if d in docs_by_id],
            k=args.k, stopwords=stopwords, count_mode=args.count_mode,
            include_existing=not args.exclude_existing,
        )
        for q in queries
    ]
    ingest.write_queries(expanded, args.out)
    log.info("expand: %d queries -> %s", len(expanded), args.out)
    return 0


def _resolve_config(args, parser: argparse.ArgumentParser) -> fusion.FusionConfig:
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep or key not in _CONFIG_KEYS:
            parser.error(f"--set expects key=value with key in "
                         f"{sorted(_CONFIG_KEYS)}, got {item!r}")
        overrides[key] = float(value) if key in _FLOAT_KEYS else value
    if args.mode:
        overrides["mode"] = args.mode

    config_path = args.config or os.environ.get(CONFIG_ENV)
    if args.preset == "bow":
        return fusion.FusionConfig.bow_preset(**overrides)
    if args.preset == "enhanced":
        return fusion.FusionConfig.enhanced_preset(
            t_upper=overrides.pop("t_upper", None), **overrides)
    if config_path:
        return fusion.FusionConfig.from_file(config_path, **overrides)
    return fusion.FusionConfig.bow_preset(**overrides)


def cmd_fuse(args, parser) -> int:
    cfg = _resolve_config(args, parser)
    table = ingest.load_scores(args.scores)
    tag = args.tag or f"interfuse-{cfg.mode}"
    fused, diagnostics = fusion.fuse_table(table, cfg)
    run = runio.run_from_fused(fused, tag)
    runio.write_run(run, args.out_run)
    if args.out_diagnostics:
        fusion.write_diagnostics(diagnostics, args.out_diagnostics)
    counts = fusion.rule_counts(diagnostics)
    log.info("fuse: mode=%s rules fired %s -> %s", cfg.mode,
             {k: v for k, v in counts.items() if v}, args.out_run)
    if cfg.mode == "quantum" and counts["R1"] == 0 and counts["R2"] == 0:
        log.info("fuse: upper threshold never exceeded by p_text "
                 "(R1/R2 cannot fire under this config)")
    return 0


def cmd_eval(args) -> int:
    run = runio.read_run(args.run)
    qrels = ingest.load_qrels(args.qrels)
    report = metrics.evaluate_run(run, qrels)
    metrics.write_per_query_report(report, args.out_prefix + ".per_query.csv")
    metrics.write_summary_report(report, args.out_prefix + ".summary.csv")
    for metric in metrics.METRIC_NAMES:
        print(f"{metric}\tmean={report.mean(metric):.6f}"
              f"\tsd={report.sd(metric):.6f}")
    return 0


def cmd_compare(args) -> int:
    qrels = ingest.load_qrels(args.qrels)
    report_a = metrics.evaluate_run(runio.read_run(args.run_a), qrels)
    report_b = metrics.evaluate_run(runio.read_run(args.run_b), qrels)
    result = metrics.write_comparison(report_a, report_b, args.metric, args.out)

    print(f"{args.metric}\t{report_a.run_tag}={result.mean_a:.6f}"
          f"\t{report_b.run_tag}={result.mean_b:.6f}")
    if result.mean_b > result.mean_a:
        direction = f"{report_b.run_tag} > {report_a.run_tag}"
    elif result.mean_a > result.mean_b:
        direction = f"{report_a.run_tag} > {report_b.run_tag}"
    else:
        direction = "no difference"
    print(f"direction\t{direction}")
    print(f"p_value_t\t{result.p_value_t:.6g}")
    print(f"p_value_wilcoxon\t{result.p_value_wilcoxon:.6g}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="interfuse",
                     description="Multimodal rank fusion pipeline")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("textsim", help="TF-IDF cosine text scores")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--stopwords", help="stopword file; packaged list if omitted")
    p.add_argument("--expand", action="store_true",
                   help="expand queries from qrels-relevant documents first")
    p.add_argument("--qrels", help="qrels file (required with --expand)")
    p.add_argument("--expand-k", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("imgsim", help="cosine image scores with aggregation")
    p.add_argument("--doc-vectors", required=True)
    p.add_argument("--query-vectors", required=True)
    p.add_argument("--queries", required=True,
                   help="query JSONL mapping queries to sample image ids")
    p.add_argument("--out", required=True)
    p.add_argument("--aggregate", choices=("max", "mean"), default="max")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("codebook", help="learn a visual-word codebook")
    p.add_argument("--descriptors", required=True)
    p.add_argument("--k", type=int, default=visual.DEFAULT_CODEBOOK_SIZE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--out", required=True)

    p = sub.add_parser("quantize", help="descriptor sets to histograms")
    p.add_argument("--descriptors", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("expand", help="qrels-driven query expansion")
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--count-mode", choices=("term", "doc"), default="term")
    p.add_argument("--exclude-existing", action="store_true")
    p.add_argument("--stopwords")

    p = sub.add_parser("fuse", help="fuse a score table into a ranked run")
    p.add_argument("--scores", required=True)
    p.add_argument("--out-run", required=True)
    p.add_argument("--out-diagnostics")
    p.add_argument("--mode", choices=("classical", "quantum"))
    group = p.add_mutually_exclusive_group()
    group.add_argument("--config", help=f"INI config (default ${CONFIG_ENV})")
    group.add_argument("--preset", choices=("bow", "enhanced"))
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--tag", help="run tag (default interfuse-<mode>)")

    p = sub.add_parser("eval", help="score a run against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--out-prefix", required=True,
                   help="writes <prefix>.per_query.csv and <prefix>.summary.csv")

    p = sub.add_parser("compare", help="paired significance test of two runs")
    p.add_argument("--run-a", required=True)
    p.add_argument("--run-b", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--metric", choices=metrics.METRIC_NAMES, default="ap")
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    if args.command == "textsim" and args.expand and not args.qrels:
        parser.error("--expand requires --qrels")

    handlers = {
        "textsim": lambda: cmd_textsim(args),
        "imgsim": lambda: cmd_imgsim(args),
        "codebook": lambda: cmd_codebook(args),
        "quantize": lambda: cmd_quantize(args),
        "expand": lambda: cmd_expand(args),
        "fuse": lambda: cmd_fuse(args, parser),
        "eval": lambda: cmd_eval(args),
        "compare": lambda: cmd_compare(args),
    }
    try:
        return handlers[args.command]()
    except ValidationError as exc:
        print(f"interfuse: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"interfuse: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
