"""Command line: ingest -> fit -> series, plus simulate and likelihood.

Exit codes: 0 success, 1 user error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import replace
from datetime import date, timedelta
from pathlib import Path

from . import __version__
from .config import PipelineConfig, load_config, write_resolved
from .corpus import (
    Corpus,
    LabelWord,
    RowMeta,
    Vocabulary,
    build_corpus,
    ingest,
    load_corpus,
    parse_timestamp,
    save_corpus,
    write_vocabulary_csv,
)
from .errors import DataError, DuplicateImageId, UserError, VocabularyMismatch
from .lda import (
    fit_gibbs,
    fit_vb,
    load_model,
    log_likelihood_report,
    project,
    save_model,
    simulate_corpus,
    top_labels,
    write_elbo_csv,
    write_report_csv,
)
from .timeseries import export, label_series, topic_series, weekly_overlay
from .weighting import WeightingMode, corpus_matrix, write_matrix

logger = logging.getLogger("bolw")

EXIT_OK, EXIT_USER, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER, f"{self.prog}: error: {message}\n")


def _global_options() -> argparse.ArgumentParser:
    # SUPPRESS so a flag given before the subcommand is not reset after it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="INI file with pipeline settings")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="top-level random seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--strict", action="store_true", default=argparse.SUPPRESS, help="abort on the first bad input line")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return common


def _weighting(value: str) -> WeightingMode:
    try:
        return WeightingMode(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"choose from {', '.join(m.value for m in WeightingMode)}") from None


def _date(value: str) -> date:
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = _Parser(prog="bolw", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="label records -> corpus artifact and vocabulary")
    p.add_argument("inputs", nargs="*", help="label-record JSON-lines files")
    p.add_argument("--cutoff", type=float, help="minimum document frequency (default 1e-5)")
    p.add_argument("--blacklist", action="append", metavar="PATTERN", help="case-insensitive substring to drop; repeatable")
    p.add_argument("--weighting", type=_weighting, help="weighting for the exported matrix")

    p = sub.add_parser("fit", parents=[common], help="fit topics on a corpus artifact")
    p.add_argument("corpus")
    p.add_argument("--k", type=int, help="number of topics (default 10)")
    p.add_argument("--alpha", type=float, help="image-topic prior (default 50/k)")
    p.add_argument("--beta", type=float, help="topic-label prior (default 0.1)")
    p.add_argument("--weighting", type=_weighting)
    p.add_argument("--passes", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--top", type=int, default=10, help="labels per topic in the report")
    p.add_argument("--gibbs", action="store_true", help="use the collapsed Gibbs sampler (binary or count weights only)")

    p = sub.add_parser("series", parents=[common], help="binned per-camera topic and label series")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("--topic", type=int, action="append", default=[], help="topic number, from 1; repeatable")
    p.add_argument("--label", action="append", default=[], help='rendered label, e.g. "LS1: snow"; repeatable')
    p.add_argument("--weighting", type=_weighting, help="weighting for label series")
    p.add_argument("--bin-width", type=float, metavar="MINUTES")
    p.add_argument("--utc-offset", type=float, metavar="HOURS", help="shift plot tick labels")
    p.add_argument("--weekly", action="store_true", help="also write weekly overlays")
    p.add_argument("--highlight", type=_date, action="append", default=[], metavar="DATE")
    p.set_defaults(usage=p.format_usage())

    p = sub.add_parser("simulate", parents=[common], help="draw a synthetic corpus from the LDA model")
    p.add_argument("--images", type=int, default=500)
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--weight", type=float, action="append", help="target bag weight; one value or one per image")
    p.add_argument("--cameras", type=int, default=1)
    p.add_argument("--start", default="2018-01-01T00:00:00Z")
    p.add_argument("--interval", type=float, default=300.0, metavar="SECONDS")

    p = sub.add_parser("likelihood", parents=[common], help="held-out log likelihood per topic count")
    p.add_argument("corpus")
    p.add_argument("--k", type=int, nargs="+", required=True, dest="k_values")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--weighting", type=_weighting)
    return parser


def _resolve(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    if hasattr(args, "seed"):
        cfg = cfg.with_seed(args.seed)
    if hasattr(args, "out"):
        cfg = replace(cfg, out=args.out)
    if hasattr(args, "strict"):
        cfg = replace(cfg, strict=True)
    if getattr(args, "cutoff", None) is not None:
        cfg = replace(cfg, cutoff=args.cutoff)
    if getattr(args, "blacklist", None):
        cfg = replace(cfg, blacklist=tuple(args.blacklist))
    if getattr(args, "weighting", None) is not None:
        cfg = replace(cfg, weighting=args.weighting)
    if getattr(args, "bin_width", None) is not None:
        cfg = replace(cfg, bin_width=timedelta(minutes=args.bin_width))
    if getattr(args, "utc_offset", None) is not None:
        cfg = replace(cfg, utc_offset_hours=args.utc_offset)
    lda = cfg.lda
    if getattr(args, "k", None) is not None:
        lda = replace(lda, k=args.k, alpha=None if lda.default_alpha else lda.alpha)
    if getattr(args, "alpha", None) is not None:
        lda = replace(lda, alpha=args.alpha)
    if getattr(args, "beta", None) is not None:
        lda = replace(lda, beta=args.beta)
    vb = lda.vb
    if getattr(args, "passes", None) is not None:
        vb = replace(vb, passes=args.passes)
    if getattr(args, "batch_size", None) is not None:
        vb = replace(vb, batch_size=args.batch_size)
    return replace(cfg, lda=replace(lda, vb=vb))


def _outdir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", text).strip("-") or "x"


def cmd_ingest(args, cfg: PipelineConfig) -> int:
    inputs = tuple(args.inputs) or cfg.inputs
    if not inputs:
        raise UserError("no input files given")
    cfg = replace(cfg, inputs=inputs)
    records, seen, problems = [], set(), []
    for path in inputs:
        for rec in ingest(path, strict=cfg.strict, report=problems):
            if rec.image_id in seen:
                exc = DuplicateImageId(rec.image_id)
                if cfg.strict:
                    raise exc
                problems.append(exc)
                continue
            seen.add(rec.image_id)
            records.append(rec)
    for exc in problems:
        print(f"skipped: {exc}", file=sys.stderr)
    corpus = build_corpus(records, blacklist=cfg.blacklist, cutoff=cfg.cutoff)
    out = _outdir(cfg)
    save_corpus(corpus, out / "corpus.json")
    write_vocabulary_csv(corpus.vocab, out / "vocabulary.csv")
    write_matrix(corpus_matrix(corpus, cfg.weighting), out / "matrix.coo", out / "matrix.rows.csv")
    write_resolved(cfg, out / "config.ini", inputs)
    print(f"{len(corpus)} images, {len(corpus.vocab)} label words -> {out}")
    return EXIT_OK


def cmd_fit(args, cfg: PipelineConfig) -> int:
    corpus = load_corpus(args.corpus)
    matrix = corpus_matrix(corpus, cfg.weighting)
    model = fit_gibbs(matrix, cfg.lda) if args.gibbs else fit_vb(matrix, cfg.lda)
    out = _outdir(cfg)
    save_model(model, out / "model.json")
    write_report_csv(top_labels(model, min(args.top, len(corpus.vocab))), out / "topics.csv")
    write_elbo_csv(model.elbo_trace, out / "elbo.csv")
    write_resolved(cfg, out / "config.ini", [args.corpus])
    print(f"fitted {model.k} topics ({model.method}, {matrix.mode.value}) -> {out}")
    return EXIT_OK


def cmd_series(args, cfg: PipelineConfig) -> int:
    if not args.topic and not args.label:
        print(args.usage, end="", file=sys.stderr)
        print("series: give at least one --topic or --label", file=sys.stderr)
        return EXIT_USER
    model = load_model(args.model)
    corpus = load_corpus(args.corpus)
    if corpus.vocab.digest() != model.vocab_digest:
        raise VocabularyMismatch("model and corpus vocabularies differ")
    keyed = []
    if args.topic:
        theta = model.theta
        if theta.shape[0] != len(corpus):
            theta = project(model, corpus_matrix(corpus, model.weighting))
        for number in args.topic:
            if not 1 <= number <= model.k:
                raise UserError(f"topic {number} outside 1..{model.k}")
            keyed.append(topic_series(theta, corpus.rows, number - 1, cfg.bin_width))
    if args.label:
        matrix = corpus_matrix(corpus, cfg.weighting)
        for label in args.label:
            keyed.append(label_series(matrix, corpus.vocab.index(label), cfg.bin_width))
    out = _outdir(cfg) / "series"
    out.mkdir(exist_ok=True)
    for per_camera in keyed:
        for camera, series in per_camera.items():
            stem = f"{_slug(series.key)}__{_slug(camera)}"
            export(series, out / f"{stem}.csv", "csv")
            export(series, out / f"{stem}.svg", "svg", utc_offset_hours=cfg.utc_offset_hours)
            if args.weekly:
                overlay = weekly_overlay(series, args.highlight)
                export(overlay, out / f"{stem}.weekly.csv", "csv")
                export(overlay, out / f"{stem}.weekly.svg", "svg")
    write_resolved(cfg, _outdir(cfg) / "config.ini", [args.model, args.corpus])
    print(f"series written to {out}")
    return EXIT_OK


def _simulated_corpus(args, cfg: PipelineConfig):
    if args.images < 1 or args.vocab_size < 1 or args.cameras < 1:
        raise UserError("--images, --vocab-size and --cameras must be positive")
    weights = args.weight or [50.0]
    if len(weights) == 1:
        weights = weights * args.images
    elif len(weights) != args.images:
        raise UserError("give one --weight or exactly one per image")
    width = len(str(args.vocab_size))
    words = [LabelWord("LS1", f"label-{j:0{width}d}") for j in range(1, args.vocab_size + 1)]
    sim = simulate_corpus(cfg.lda, weights, words)
    start = parse_timestamp(args.start)
    cameras = [f"sim-{c + 1}" for c in range(args.cameras)]
    rows = [
        RowMeta(f"sim-{i + 1:06d}", cameras[i % len(cameras)], start + timedelta(seconds=args.interval * i))
        for i in range(args.images)
    ]
    vocab = Vocabulary.from_bags(words, sim.bags, rows)
    return Corpus(vocab, tuple(sim.bags), tuple(rows)), sim


def cmd_simulate(args, cfg: PipelineConfig) -> int:
    corpus, sim = _simulated_corpus(args, cfg)
    out = _outdir(cfg)
    save_corpus(corpus, out / "corpus.json")
    write_vocabulary_csv(corpus.vocab, out / "vocabulary.csv")
    truth = {
        "config": cfg.lda.to_dict(),
        "vocabulary": corpus.vocab.rendered(),
        "phi": {"rows": sim.phi.shape[0], "cols": sim.phi.shape[1], "values": [float(x) for x in sim.phi.ravel()]},
        "theta": {"rows": sim.theta.shape[0], "cols": sim.theta.shape[1], "values": [float(x) for x in sim.theta.ravel()]},
    }
    (out / "truth.json").write_text(json.dumps(truth, sort_keys=True) + "\n", encoding="utf-8")
    write_resolved(cfg, out / "config.ini")
    print(f"simulated {len(corpus)} images over {len(corpus.vocab)} labels -> {out}")
    return EXIT_OK


def cmd_likelihood(args, cfg: PipelineConfig) -> int:
    corpus = load_corpus(args.corpus)
    rows = log_likelihood_report(corpus_matrix(corpus, cfg.weighting), cfg.lda, args.k_values)
    out = _outdir(cfg)
    with open(out / "likelihood.csv", "w", encoding="utf-8") as fh:
        fh.write("k,per_token_log_likelihood,held_out_images,held_out_weight\n")
        for row in rows:
            fh.write(f"{row.k},{row.per_token!r},{row.held_out_docs},{row.held_out_weight!r}\n")
            print(f"K={row.k}: {row.per_token:.6f} per token")
    write_resolved(cfg, out / "config.ini", [args.corpus])
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _resolve(args)
        if args.command == "ingest":
            return cmd_ingest(args, cfg)
        if args.command == "fit":
            return cmd_fit(args, cfg)
        if args.command == "series":
            return cmd_series(args, cfg)
        if args.command == "simulate":
            return cmd_simulate(args, cfg)
        return cmd_likelihood(args, cfg)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return EXIT_USER
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
