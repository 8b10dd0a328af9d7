"""Bilingual sub-segment evidence collected from phrase tables."""

from __future__ import annotations

import gzip
import io
import os
import pickle
from collections import defaultdict

BOS = "<s>"
EOS = "</s>"
CACHE_MAGIC = b"SUBSEGQE-STORE"
CACHE_VERSION = 1

Phrase = tuple  # tuple[str, ...]


class PhraseTableError(ValueError):
    pass


class StoreFrozenError(RuntimeError):
    pass


def open_text(path, mode="rt"):
    """Open a possibly gzip-compressed UTF-8 text file."""
    path = os.fspath(path)
    with open(path, "rb") as fh:
        is_gzip = fh.read(2) == b"\x1f\x8b"
    if is_gzip:
        return gzip.open(path, mode, encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def as_phrase(text) -> Phrase:
    if isinstance(text, str):
        text = text.split()
    return tuple(tok.lower() for tok in text)


def parse_joint_count(field: str) -> float:
    values = field.split()
    if not values:
        raise PhraseTableError("empty counts field")
    try:
        numbers = [float(v) for v in values]
    except ValueError as exc:
        raise PhraseTableError(f"non-numeric counts field {field!r}") from exc
    return numbers[2] if len(numbers) >= 3 else numbers[-1]


def parse_line(line: str) -> tuple[Phrase, Phrase, float]:
    """Split a Moses-style phrase-table line into (source, target, joint count).

    Layout is ``src ||| tgt ||| scores [||| alignment] ||| counts [||| ...]``;
    with five or more fields the counts sit in the fifth, with four fields
    in the fourth.
    """
    fields = [f.strip() for f in line.rstrip("\n").split("|||")]
    if len(fields) < 3:
        raise PhraseTableError(f"malformed phrase-table line: {line.strip()!r}")
    if len(fields) == 3:
        raise PhraseTableError("phrase table has no counts column")
    counts_field = fields[4] if len(fields) >= 5 else fields[3]
    count = parse_joint_count(counts_field)
    if not count > 0:
        raise PhraseTableError(f"non-positive joint count {count}")
    src, tgt = as_phrase(fields[0]), as_phrase(fields[1])
    if not src or not tgt:
        raise PhraseTableError(f"empty phrase in line: {line.strip()!r}")
    return src, tgt, count


class PhrasePairStore:
    """Joint counts of (source phrase, target phrase) pairs with both-way indexes.

    Phrases are lower-cased token tuples. Boundary tokens ``<s>``/``</s>``
    are stored like any other token.
    """

    def __init__(self):
        self.entries: dict[tuple[Phrase, Phrase], float] = {}
        self.source_index: dict[Phrase, dict[Phrase, float]] = defaultdict(dict)
        self.target_index: dict[Phrase, dict[Phrase, float]] = defaultdict(dict)
        self.source_marginal: dict[Phrase, float] = defaultdict(float)
        self.target_marginal: dict[Phrase, float] = defaultdict(float)
        self.max_source_len = 0
        self.max_target_len = 0
        self.frozen = False

    def __len__(self):
        return len(self.entries)

    def __contains__(self, pair):
        sigma, tau = pair
        return (as_phrase(sigma), as_phrase(tau)) in self.entries

    def add(self, sigma, tau, count: float) -> None:
        if self.frozen:
            raise StoreFrozenError("store is frozen")
        if not count > 0:
            raise PhraseTableError(f"non-positive joint count {count}")
        sigma, tau = as_phrase(sigma), as_phrase(tau)
        key = (sigma, tau)
        total = self.entries.get(key, 0.0) + count
        self.entries[key] = total
        self.source_index[sigma][tau] = total
        self.target_index[tau][sigma] = total
        self.source_marginal[sigma] += count
        self.target_marginal[tau] += count
        self.max_source_len = max(self.max_source_len, len(sigma))
        self.max_target_len = max(self.max_target_len, len(tau))

    def ingest(self, lines, invert: bool = False) -> int:
        """Add every phrase pair from an iterable of phrase-table lines."""
        added = 0
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                src, tgt, count = parse_line(line)
            except PhraseTableError as exc:
                raise PhraseTableError(f"line {lineno}: {exc}") from None
            if invert:
                src, tgt = tgt, src
            self.add(src, tgt, count)
            added += 1
        return added

    def ingest_file(self, path, invert: bool = False) -> int:
        with open_text(path) as fh:
            try:
                return self.ingest(fh, invert=invert)
            except PhraseTableError as exc:
                raise PhraseTableError(f"{path}: {exc}") from None

    def freeze(self) -> "PhrasePairStore":
        self.source_index = dict(self.source_index)
        self.target_index = dict(self.target_index)
        self.source_marginal = dict(self.source_marginal)
        self.target_marginal = dict(self.target_marginal)
        self.frozen = True
        return self

    def count(self, sigma, tau) -> float:
        return self.entries[(as_phrase(sigma), as_phrase(tau))]

    def translation_prob(self, sigma, tau) -> float:
        """p(tau | sigma) from accumulated joint counts; KeyError for unknown pairs."""
        sigma, tau = as_phrase(sigma), as_phrase(tau)
        return self.entries[(sigma, tau)] / self.source_marginal[sigma]

    def inverse_prob(self, sigma, tau) -> float:
        """p(sigma | tau), the target-conditioned counterpart."""
        sigma, tau = as_phrase(sigma), as_phrase(tau)
        return self.entries[(sigma, tau)] / self.target_marginal[tau]

    def lookup_by_source(self, sigma) -> dict[Phrase, float]:
        return dict(self.source_index.get(as_phrase(sigma), {}))

    def lookup_by_target(self, tau) -> dict[Phrase, float]:
        return dict(self.target_index.get(as_phrase(tau), {}))

    def save(self, path) -> None:
        header = CACHE_MAGIC + b" %d\n" % CACHE_VERSION
        payload = sorted(self.entries.items())
        with gzip.open(os.fspath(path), "wb") as fh:
            fh.write(header)
            pickle.dump(payload, fh, protocol=pickle.HIGHEST_PROTOCOL)

    @classmethod
    def load(cls, path) -> "PhrasePairStore":
        with gzip.open(os.fspath(path), "rb") as fh:
            header = fh.readline()
            parts = header.split()
            if len(parts) != 2 or parts[0] != CACHE_MAGIC:
                raise PhraseTableError(f"{path}: not a phrase store cache")
            if int(parts[1]) != CACHE_VERSION:
                raise PhraseTableError(
                    f"{path}: cache version {int(parts[1])}, expected {CACHE_VERSION}"
                )
            payload = pickle.load(fh)
        store = cls()
        for (sigma, tau), count in payload:
            store.add(sigma, tau, count)
        return store.freeze()


def build_store(tables, inverts=None) -> PhrasePairStore:
    """Build a frozen store from phrase-table paths with per-table invert flags."""
    store = PhrasePairStore()
    inverts = inverts or [False] * len(tables)
    if len(inverts) != len(tables):
        raise ValueError("one invert flag per table expected")
    for path, invert in zip(tables, inverts):
        store.ingest_file(path, invert=invert)
    return store.freeze()


def store_from_text(text: str, invert: bool = False) -> PhrasePairStore:
    store = PhrasePairStore()
    store.ingest(io.StringIO(text), invert=invert)
    return store.freeze()
