"""Reading and writing QE datasets, baseline features and predictions.

Tag lines interleave gap and word tags as ``g_0 w_1 g_1 ... w_n g_n``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

OK = "OK"
BAD = "BAD"
TAGS = (OK, BAD)


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class QeSentence:
    source_tokens: tuple
    mt_tokens: tuple
    gold_word_tags: tuple | None = None
    gold_gap_tags: tuple | None = None
    gold_hter: float | None = None

    def __post_init__(self):
        if self.gold_word_tags is not None:
            if not self.mt_tokens:
                raise DataError("tagged sentence with empty MT")
            if len(self.gold_word_tags) != len(self.mt_tokens):
                raise DataError("word tags do not match MT length")
        if self.gold_gap_tags is not None and len(self.gold_gap_tags) != len(self.mt_tokens) + 1:
            raise DataError("gap tags do not match MT length + 1")


def read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def tokenize(line: str) -> tuple:
    return tuple(tok for tok in line.split(" ") if tok)


def split_tags(tags, mt_length: int) -> tuple[tuple, tuple]:
    """Split an interleaved tag sequence into (word tags, gap tags)."""
    tags = list(tags)
    if len(tags) != 2 * mt_length + 1:
        raise DataError(f"expected {2 * mt_length + 1} tags, got {len(tags)}")
    for tag in tags:
        if tag not in TAGS:
            raise DataError(f"unknown tag {tag!r}")
    return tuple(tags[1::2]), tuple(tags[0::2])


def join_tags(word_tags, gap_tags) -> list[str]:
    if len(gap_tags) != len(word_tags) + 1:
        raise DataError("need exactly one more gap tag than word tags")
    out = [gap_tags[0]]
    for w, g in zip(word_tags, gap_tags[1:]):
        out += [w, g]
    return out


def read_tags(path, lengths) -> tuple[list, list]:
    """Read an interleaved tags file given the MT length of every line."""
    lines = read_lines(path)
    if len(lines) != len(lengths):
        raise DataError(f"{path}: {len(lines)} lines, expected {len(lengths)}")
    words, gaps = [], []
    for lineno, (line, size) in enumerate(zip(lines, lengths), 1):
        try:
            w, g = split_tags(line.split(), size)
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        words.append(w)
        gaps.append(g)
    return words, gaps


def read_scores(path) -> list[float]:
    scores = []
    for lineno, line in enumerate(read_lines(path), 1):
        try:
            scores.append(float(line.strip()))
        except ValueError:
            raise DataError(f"{path}:{lineno}: cannot parse score {line!r}") from None
    return scores


def load_qe_dataset(src_path, mt_path, tags_path=None, hter_path=None) -> list[QeSentence]:
    src = read_lines(src_path)
    mt = read_lines(mt_path)
    if len(src) != len(mt):
        raise DataError(f"{src_path} has {len(src)} lines but {mt_path} has {len(mt)}")
    mt_tokens = [tokenize(line) for line in mt]
    word_tags = gap_tags = hter = None
    if tags_path is not None:
        word_tags, gap_tags = read_tags(tags_path, [len(t) for t in mt_tokens])
    if hter_path is not None:
        hter = read_scores(hter_path)
        if len(hter) != len(mt):
            raise DataError(f"{hter_path}: {len(hter)} scores for {len(mt)} sentences")
    return [
        QeSentence(
            tokenize(s), t,
            word_tags[k] if word_tags is not None else None,
            gap_tags[k] if gap_tags is not None else None,
            hter[k] if hter is not None else None,
        )
        for k, (s, t) in enumerate(zip(src, mt_tokens))
    ]


def tags_to_array(tags) -> np.ndarray:
    """OK/BAD sequence to a 0/1 array (BAD = 1)."""
    return np.array([tag == BAD for tag in tags], dtype=float)


def array_to_tags(values) -> tuple:
    return tuple(BAD if v else OK for v in values)


@dataclass
class BaselineSchema:
    """Which baseline columns are used and how.

    Column indices are 0-based. ``pos_vocab`` is learned on the first
    (training) file loaded and reused afterwards.
    """

    numeric_columns: list
    pos_column: int | None = None
    use_pos: bool = True
    n_columns: int = 28
    pos_vocab: list | None = None

    @property
    def width(self) -> int:
        pos = len(self.pos_vocab or ()) if self.use_pos and self.pos_column is not None else 0
        return len(self.numeric_columns) + pos

    def to_dict(self) -> dict:
        return {"numeric_columns": list(self.numeric_columns), "pos_column": self.pos_column,
                "use_pos": self.use_pos, "n_columns": self.n_columns,
                "pos_vocab": list(self.pos_vocab) if self.pos_vocab is not None else None}

    @classmethod
    def from_dict(cls, d) -> "BaselineSchema":
        return cls(**d)


@dataclass
class BaselineFeatureTable:
    rows: list  # one (|T|, B) array per sentence
    schema: BaselineSchema | None = None
    width: int = 0

    @classmethod
    def empty(cls, lengths) -> "BaselineFeatureTable":
        return cls([np.zeros((n, 0)) for n in lengths], None, 0)


def _read_baseline_sentences(path, n_columns):
    sentences, current = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                if current:
                    sentences.append(current)
                    current = []
                continue
            cols = line.split("\t")
            if len(cols) != n_columns:
                raise DataError(f"{path}:{lineno}: {len(cols)} columns, expected {n_columns}")
            current.append((lineno, cols))
    if current:
        sentences.append(current)
    return sentences


def load_baseline_features(path, schema: BaselineSchema | None, lengths=None) -> BaselineFeatureTable:
    """Load word-level baseline features; ``path=None`` yields width 0.

    Sentences are separated by blank lines. When ``lengths`` is given the
    number of sentences and words is checked against it.
    """
    if path is None or schema is None:
        if lengths is None:
            raise DataError("lengths required when no baseline file is given")
        return BaselineFeatureTable.empty(lengths)
    sentences = _read_baseline_sentences(path, schema.n_columns)
    if lengths is not None:
        if len(sentences) != len(lengths):
            raise DataError(f"{path}: {len(sentences)} sentences, expected {len(lengths)}")
        for k, (sent, n) in enumerate(zip(sentences, lengths), 1):
            if len(sent) != n:
                raise DataError(f"{path}: sentence {k} has {len(sent)} rows, expected {n}")
    use_pos = schema.use_pos and schema.pos_column is not None
    if use_pos and schema.pos_vocab is None:
        schema.pos_vocab = sorted({cols[schema.pos_column] for sent in sentences for _, cols in sent})
    pos_index = {tag: k for k, tag in enumerate(schema.pos_vocab or ())} if use_pos else {}
    width = schema.width
    rows = []
    for sent in sentences:
        block = np.zeros((len(sent), width))
        for r, (lineno, cols) in enumerate(sent):
            for c, col in enumerate(schema.numeric_columns):
                try:
                    block[r, c] = float(cols[col])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: non-numeric value {cols[col]!r} "
                                    f"in column {col}") from None
            if use_pos:
                k = pos_index.get(cols[schema.pos_column])
                if k is not None:
                    block[r, len(schema.numeric_columns) + k] = 1.0
        rows.append(block)
    return BaselineFeatureTable(rows, schema, width)


@dataclass
class Predictions:
    word_labels: list
    gap_labels: list
    word_probs: list = field(default_factory=list)
    gap_probs: list = field(default_factory=list)
    sentence_scores: list = field(default_factory=list)


TAGS_FILE = "predicted.tags"
WORD_TAGS_FILE = "predicted.word.tags"
GAP_TAGS_FILE = "predicted.gap.tags"
PROBS_FILE = "predicted.probs"
SCORES_FILE = "predicted.hter"
RANKING_FILE = "predicted.rank"


def write_predictions(sentences, word_probs, gap_probs, word_labels, gap_labels,
                      sentence_scores, out_dir) -> dict:
    """Write tag, probability and sentence-score files; returns their paths.

    The interleaved tags file reads back with :func:`load_qe_dataset`.
    Probabilities are written in the same interleaved order, tab-separated.
    """
    n = len(sentences)
    for name, seq in (("word_probs", word_probs), ("gap_probs", gap_probs),
                      ("word_labels", word_labels), ("gap_labels", gap_labels),
                      ("sentence_scores", sentence_scores)):
        if len(seq) != n:
            raise DataError(f"{name}: {len(seq)} entries for {n} sentences")
    for k, sent in enumerate(sentences):
        size = len(sent.mt_tokens) if isinstance(sent, QeSentence) else int(sent)
        if len(word_labels[k]) != size or len(word_probs[k]) != size:
            raise DataError(f"sentence {k + 1}: word outputs do not match MT length {size}")
        if len(gap_labels[k]) != size + 1 or len(gap_probs[k]) != size + 1:
            raise DataError(f"sentence {k + 1}: gap outputs do not match MT length {size}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {key: out / name for key, name in (
        ("tags", TAGS_FILE), ("word_tags", WORD_TAGS_FILE), ("gap_tags", GAP_TAGS_FILE),
        ("probs", PROBS_FILE), ("scores", SCORES_FILE), ("ranking", RANKING_FILE))}
    with open(paths["tags"], "w", encoding="utf-8") as tags_fh, \
            open(paths["word_tags"], "w", encoding="utf-8") as w_fh, \
            open(paths["gap_tags"], "w", encoding="utf-8") as g_fh, \
            open(paths["probs"], "w", encoding="utf-8") as p_fh:
        for wl, gl, wp, gp in zip(word_labels, gap_labels, word_probs, gap_probs):
            tags_fh.write(" ".join(join_tags(list(wl), list(gl))) + "\n")
            w_fh.write(" ".join(wl) + "\n")
            g_fh.write(" ".join(gl) + "\n")
            probs = join_tags([f"{p:.6f}" for p in wp], [f"{p:.6f}" for p in gp])
            p_fh.write("\t".join(probs) + "\n")
    with open(paths["scores"], "w", encoding="utf-8") as fh:
        for score in sentence_scores:
            fh.write(f"{score:.6f}\n")
    order = sorted(range(n), key=lambda k: (sentence_scores[k], k))
    with open(paths["ranking"], "w", encoding="utf-8") as fh:
        for k in order:
            fh.write(f"{k}\n")
    return {k: os.fspath(v) for k, v in paths.items()}
