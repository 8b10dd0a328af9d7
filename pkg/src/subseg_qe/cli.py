"""Command-line pipeline: build-store, extract, train, predict, evaluate, synth.

Exit codes: 0 success, 1 usage error, 2 data error, 3 schema mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import multiprocessing
import os
import sys
from pathlib import Path

import numpy as np

from . import corpus_io, features, metrics, network, sentence_qe, synthetic
from .corpus_io import BaselineSchema, DataError
from .phrase_store import PhrasePairStore, PhraseTableError, build_store

log = logging.getLogger("subseg_qe")

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SCHEMA = 3
FEATURE_VERSION = 1
WORKERS_ENV = "SUBSEG_QE_WORKERS"


class UsageError(Exception):
    pass


class SchemaMismatch(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _require_files(*paths):
    for path in paths:
        if path is not None and not Path(path).is_file():
            raise DataError(f"missing file: {path}")


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


# -- build-store ---------------------------------------------------------------

def cmd_build_store(args):
    tables = list(args.table or []) + list(args.inverted_table or [])
    if not tables:
        raise UsageError("at least one --table or --inverted-table is required")
    _require_files(*tables)
    inverts = [False] * len(args.table or []) + [True] * len(args.inverted_table or [])
    store = build_store(tables, inverts)
    store.save(args.out)
    log.info("stored %d phrase pairs in %s", len(store), args.out)


# -- extract -------------------------------------------------------------------

_STORE: PhrasePairStore | None = None
_MAX_LEN = features.DEFAULT_L


def _extract_one(item):
    src, mt, baseline = item
    ctx = features.build_feature_context(src, mt, _STORE, baseline, _MAX_LEN)
    return ctx.word_vectors, ctx.gap_vectors


def _workers(args):
    if args.workers is not None:
        return max(1, args.workers)
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def feature_fingerprint(max_len, baseline_width, schema):
    return {
        "version": FEATURE_VERSION,
        "L": max_len,
        "B": baseline_width,
        "F": features.word_width(max_len, baseline_width),
        "G": features.gap_width(max_len),
        "word_components": features.word_feature_names(max_len, baseline_width),
        "gap_components": features.gap_feature_names(max_len),
        "baseline_schema": schema.to_dict() if schema is not None else None,
    }


def save_features(path, fingerprint, lengths, word_rows, gap_rows):
    with open(path, "wb") as fh:
        np.savez_compressed(
            fh, meta=np.array(json.dumps(fingerprint, sort_keys=True)),
            lengths=np.asarray(lengths, dtype=np.int64),
            word=np.vstack(word_rows) if word_rows else np.zeros((0, fingerprint["F"])),
            gap=np.vstack(gap_rows) if gap_rows else np.zeros((0, fingerprint["G"])))


def load_features(path):
    """Return (fingerprint, list of (word_vectors, gap_vectors))."""
    _require_files(path)
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            lengths = data["lengths"]
            word, gap = data["word"], data["gap"]
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"{path}: not a feature file ({exc})") from None
    if meta.get("version") != FEATURE_VERSION:
        raise SchemaMismatch(f"{path}: feature version {meta.get('version')}")
    contexts, w0, g0 = [], 0, 0
    for n in lengths:
        contexts.append((word[w0:w0 + n], gap[g0:g0 + n + 1]))
        w0 += n
        g0 += n + 1
    return meta, contexts


def dump_tsv(path, fingerprint, contexts):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(["sentence", "kind", "index"] + fingerprint["word_components"]) + "\n")
        gap_header = ["sentence", "kind", "index"] + fingerprint["gap_components"]
        fh.write("#" + "\t".join(gap_header) + "\n")
        for s, (wv, gv) in enumerate(contexts):
            for j, row in enumerate(wv, 1):
                fh.write("\t".join([str(s), "word", str(j)] + [repr(float(v)) for v in row]) + "\n")
            for j, row in enumerate(gv):
                fh.write("\t".join([str(s), "gap", str(j)] + [repr(float(v)) for v in row]) + "\n")


def cmd_extract(args):
    global _STORE, _MAX_LEN
    if args.max_len < 1:
        raise UsageError("--max-len must be >= 1")
    _require_files(args.store, args.src, args.mt, args.baseline, args.baseline_schema_from)
    sentences = corpus_io.load_qe_dataset(args.src, args.mt)
    lengths = [len(s.mt_tokens) for s in sentences]
    if any(n == 0 for n in lengths):
        raise DataError(f"{args.mt}: empty MT line")

    schema = None
    if args.baseline is not None:
        if args.baseline_schema_from is not None:
            meta, _ = load_features(args.baseline_schema_from)
            if meta.get("baseline_schema") is None:
                raise SchemaMismatch(f"{args.baseline_schema_from} has no baseline schema")
            schema = BaselineSchema.from_dict(meta["baseline_schema"])
        else:
            if not args.baseline_numeric_cols:
                raise UsageError("--baseline needs --baseline-numeric-cols or --baseline-schema-from")
            schema = BaselineSchema(_int_list(args.baseline_numeric_cols), args.baseline_pos_col,
                                    use_pos=not args.no_pos, n_columns=args.baseline_columns)
        table = corpus_io.load_baseline_features(args.baseline, schema, lengths)
    else:
        table = corpus_io.BaselineFeatureTable.empty(lengths)

    store = PhrasePairStore.load(args.store)
    _STORE, _MAX_LEN = store, args.max_len
    items = [(s.source_tokens, s.mt_tokens, row) for s, row in zip(sentences, table.rows)]
    workers = _workers(args)
    if workers > 1:
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            results = pool.map(_extract_one, items, chunksize=16)
    else:
        results = [_extract_one(item) for item in items]
    fingerprint = feature_fingerprint(args.max_len, table.width, schema)
    save_features(args.out, fingerprint, lengths, [r[0] for r in results], [r[1] for r in results])
    if args.dump_tsv:
        dump_tsv(args.dump_tsv, fingerprint, results)
    log.info("extracted features for %d sentences (F=%d, G=%d)", len(results),
             fingerprint["F"], fingerprint["G"])


# -- train ---------------------------------------------------------------------

def _labelled_windows(features_path, tags_path, context, dtype):
    meta, contexts = load_features(features_path)
    _require_files(tags_path)
    lengths = [wv.shape[0] for wv, _ in contexts]
    word_tags, gap_tags = corpus_io.read_tags(tags_path, lengths)
    batch = features.build_windows(
        contexts, context,
        [corpus_io.tags_to_array(t) for t in word_tags],
        [corpus_io.tags_to_array(t) for t in gap_tags], dtype=dtype)
    return meta, batch


def train_config(args):
    return network.TrainConfig(
        learning_rate=args.learning_rate, dropout=args.dropout, patience=args.patience,
        restarts=args.restarts, batch_size=args.batch_size, seed=args.seed,
        max_epochs=args.max_epochs, embedding=args.embedding, dev_metric=args.dev_metric,
        dtype=args.dtype)


def cmd_train(args):
    if args.context < 0:
        raise UsageError("--context must be >= 0")
    try:
        config = train_config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train_meta, train_batch = _labelled_windows(args.train_features, args.train_tags,
                                                args.context, config.dtype)
    dev_meta, dev_batch = _labelled_windows(args.dev_features, args.dev_tags,
                                            args.context, config.dtype)
    if train_meta != dev_meta:
        raise SchemaMismatch("training and development features have different schemas")
    params, history = network.train(train_batch, dev_batch, config)
    fingerprint = dict(train_meta, C=args.context)
    network.save_model(params, args.model_out, fingerprint)
    if args.history_out:
        with open(args.history_out, "w", encoding="utf-8") as fh:
            json.dump({"config": network.config_dict(config), "history": history}, fh, indent=1)
    report = network.evaluate(params, dev_batch, metrics.DecisionThresholds(
        params.word_threshold, params.gap_threshold))
    log.info("dev word F_MULTI %.4f gap F_MULTI %.4f", report["word"][2], report["gap"][2])


# -- predict -------------------------------------------------------------------

def cmd_predict(args):
    _require_files(args.model, args.features)
    params, model_fp = network.load_model(args.model)
    meta, contexts = load_features(args.features)
    expected = {k: v for k, v in model_fp.items() if k != "C"}
    if meta != expected:
        raise SchemaMismatch(f"{args.features} does not match the model's feature schema")
    batch = features.build_windows(contexts, params.C)
    word_probs, gap_probs = network.predict(params.astype(np.float64), batch)
    wp, gp, wl, gl, scores = [], [], [], [], []
    for s, (wv, _) in enumerate(contexts):
        idx = np.flatnonzero(batch.sentence == s)
        w = word_probs[idx][1:]
        g = gap_probs[idx]
        wtags = corpus_io.array_to_tags(w >= params.word_threshold)
        gtags = corpus_io.array_to_tags(g >= params.gap_threshold)
        wp.append(w)
        gp.append(g)
        wl.append(wtags)
        gl.append(gtags)
        scores.append(sentence_qe.approximate_ter(wtags, gtags)[1])
    lengths = [wv.shape[0] for wv, _ in contexts]
    corpus_io.write_predictions(lengths, wp, gp, wl, gl, scores, args.out_dir)


# -- evaluate ------------------------------------------------------------------

def evaluation_report(pred_dir, gold_tags, gold_hter=None):
    pred_path = Path(pred_dir) / corpus_io.TAGS_FILE
    _require_files(pred_path, gold_tags, gold_hter)
    lines = corpus_io.read_lines(pred_path)
    lengths = []
    for lineno, line in enumerate(lines, 1):
        n = len(line.split())
        if n % 2 != 1:
            raise DataError(f"{pred_path}:{lineno}: even number of tags")
        lengths.append((n - 1) // 2)
    pw, pg = corpus_io.read_tags(pred_path, lengths)
    gw, gg = corpus_io.read_tags(gold_tags, lengths)
    flat = lambda seqs: [t for seq in seqs for t in seq]  # noqa: E731
    report = {}
    for name, pred, gold in (("word", pw, gw), ("gap", pg, gg)):
        f_bad, f_ok, f_multi = metrics.f1_suite(flat(pred), flat(gold))
        report.update({f"{name}_f_bad": f_bad, f"{name}_f_ok": f_ok, f"{name}_f_multi": f_multi})
    if gold_hter is not None:
        pred_scores = corpus_io.read_scores(Path(pred_dir) / corpus_io.SCORES_FILE)
        gold_scores = corpus_io.read_scores(gold_hter)
        if len(pred_scores) != len(gold_scores):
            raise DataError("predicted and gold sentence scores differ in number")
        s = metrics.sentence_metrics(pred_scores, gold_scores)
        report.update({"pearson_r": s.pearson_r, "mae": s.mae, "rmse": s.rmse,
                       "spearman_rho": s.spearman_rho})
    return report


def cmd_evaluate(args):
    report = evaluation_report(args.pred_dir, args.gold_tags, args.gold_hter)
    out = Path(args.out) if args.out else Path(args.pred_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.txt", "w", encoding="utf-8") as fh:
        for key, value in report.items():
            fh.write(f"{key}\t{value:.6f}\n")
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    for key, value in report.items():
        print(f"{key}\t{value:.4f}")


# -- synth ---------------------------------------------------------------------

def cmd_synth(args):
    synthetic.generate_corpus(args.out, seed=args.seed, n_train=args.train, n_dev=args.dev,
                              n_test=args.test)


def build_parser():
    parser = _Parser(prog="subseg-qe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-store", help="ingest phrase tables into a store cache")
    p.add_argument("--table", action="append", help="phrase table, source -> target")
    p.add_argument("--inverted-table", action="append", help="phrase table stored target -> source")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_store)

    p = sub.add_parser("extract", help="compute word and gap features")
    p.add_argument("--store", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--mt", required=True)
    p.add_argument("--baseline")
    p.add_argument("--baseline-numeric-cols", help="comma-separated 0-based column indices")
    p.add_argument("--baseline-pos-col", type=int)
    p.add_argument("--baseline-columns", type=int, default=28)
    p.add_argument("--baseline-schema-from", help="reuse the baseline schema of a training feature file")
    p.add_argument("--no-pos", action="store_true", help="drop the part-of-speech one-hot block")
    p.add_argument("--max-len", type=int, default=features.DEFAULT_L)
    p.add_argument("--workers", type=int)
    p.add_argument("--dump-tsv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the network")
    p.add_argument("--train-features", required=True)
    p.add_argument("--train-tags", required=True)
    p.add_argument("--dev-features", required=True)
    p.add_argument("--dev-tags", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--history-out")
    p.add_argument("--context", type=int, default=features.DEFAULT_C)
    p.add_argument("--embedding", type=int)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--dropout", type=float, default=0.2)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dev-metric", choices=("fmulti", "loss"), default="fmulti")
    p.add_argument("--dtype", choices=("float32", "float64"), default="float64")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="tag words and gaps and score sentences")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold data")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gold-tags", required=True)
    p.add_argument("--gold-hter")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate the synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--train", type=int, default=2000)
    p.add_argument("--dev", type=int, default=200)
    p.add_argument("--test", type=int, default=200)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"subseg-qe: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaMismatch as exc:
        print(f"subseg-qe: schema mismatch: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (DataError, PhraseTableError, OSError, ValueError) as exc:
        print(f"subseg-qe: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
