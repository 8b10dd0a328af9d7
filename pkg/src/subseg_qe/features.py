"""Per-word and per-gap features from matched sub-segment pairs, and context windows.

Word vector layout, for each n = 1..L::

    keep[sl-tl], keep[tl-sl], freq[sl-tl], freq[tl-sl], align[match], align[delete]

followed by the baseline block. Gap vector layout, for each n = 2..L::

    noins[sl-tl], noins[tl-sl], freq_noins[sl-tl], freq_noins[tl-sl],
    align_noins[match], align_noins[insert]

Empty denominators give 0. Ratios count distinct target strings; a target
occurring several times in T covers every position of every occurrence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import edit_align
from .edit_align import DELETE, INSERT, MATCH
from .phrase_store import PhrasePairStore
from .subseg_match import SL_TL, TL_SL, all_subsegments, extend, match_pairs

DEFAULT_L = 5
DEFAULT_C = 3

WORD_FAMILIES = ("keep", "keep", "freq", "freq", "align", "align")
WORD_VARIANTS = (SL_TL, TL_SL, SL_TL, TL_SL, MATCH, DELETE)
GAP_FAMILIES = ("noins", "noins", "freq_noins", "freq_noins", "align_noins", "align_noins")
GAP_VARIANTS = (SL_TL, TL_SL, SL_TL, TL_SL, MATCH, INSERT)
PER_N = 6


def word_width(max_len: int, baseline_width: int = 0) -> int:
    return PER_N * max_len + baseline_width


def gap_width(max_len: int) -> int:
    return PER_N * max(max_len - 1, 0)


def word_feature_names(max_len: int, baseline_width: int = 0) -> list[str]:
    names = [f"{fam}_{n}[{var}]" for n in range(1, max_len + 1)
             for fam, var in zip(WORD_FAMILIES, WORD_VARIANTS)]
    return names + [f"baseline_{k}" for k in range(baseline_width)]


def gap_feature_names(max_len: int) -> list[str]:
    return [f"{fam}_{n}[{var}]" for n in range(2, max_len + 1)
            for fam, var in zip(GAP_FAMILIES, GAP_VARIANTS)]


def word_offset(n: int, component: int) -> int:
    return PER_N * (n - 1) + component


def gap_offset(n: int, component: int) -> int:
    return PER_N * (n - 2) + component


@dataclass
class FeatureContext:
    source_tokens: list
    mt_tokens: list
    max_len: int
    word_vectors: np.ndarray  # (|T|, F)
    gap_vectors: np.ndarray  # (|T| + 1, G)
    baseline_width: int = 0
    matches: dict = field(default_factory=dict, repr=False)

    @property
    def F(self) -> int:
        return self.word_vectors.shape[1]

    @property
    def G(self) -> int:
        return self.gap_vectors.shape[1]


def _ratio_and_freq(store, matched, ngram_spans, positions, covers, conditional):
    """Keep-style ratio and Freq-style sum at each position for one direction."""
    ratio = np.zeros(len(positions))
    freq = np.zeros(len(positions))
    for k, pos in enumerate(positions):
        denom = {tau for tau, where in ngram_spans.items() if covers(where, pos)}
        if not denom:
            continue
        confirming = [m for m in matched if covers(m.tau_spans, pos)]
        ratio[k] = len({m.tau for m in confirming}) / len(denom)
        freq[k] = sum(conditional(m.sigma, m.tau) for m in confirming)
    return ratio, freq


def _covers_word(where, j):
    return any(a <= j <= b for a, b in where)


def _covers_gap(where, j):
    return any(a <= j and j + 1 <= b for a, b in where)


def _ngram_spans(t_ext, n, lo, hi):
    found = {}
    for k in range(lo, hi - n + 2):
        found.setdefault(t_ext[k:k + n], set()).add((k, k + n - 1))
    return found


def candidate_targets(store: PhrasePairStore, source_tokens) -> set:
    """Every target phrase paired in the store with some sub-segment of the source."""
    s_ext = extend(source_tokens)
    targets = set()
    for sigma in all_subsegments(s_ext, store.max_source_len):
        targets.update(store.source_index.get(sigma, ()))
    return targets


def build_feature_context(source_tokens, mt_tokens, store: PhrasePairStore,
                          baseline_row=None, max_len: int = DEFAULT_L) -> FeatureContext:
    """Compute all word and gap features for one sentence pair."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    t = [w.lower() for w in mt_tokens]
    t_ext = tuple(extend(t))
    size = len(t)
    if baseline_row is None:
        baseline = np.zeros((size, 0))
    else:
        baseline = np.asarray(baseline_row, dtype=float).reshape(size, -1)
    words = np.zeros((size, word_width(max_len)))
    gaps = np.zeros((size + 1, gap_width(max_len)))
    conditionals = {SL_TL: store.translation_prob, TL_SL: store.inverse_prob}
    word_pos = list(range(1, size + 1))
    gap_pos = list(range(0, size + 1))
    matches = {}

    # A tau sharing no token with T_ext has LCS 0 and adds nothing to Align.
    vocab = set(t_ext)
    by_len: dict[int, list] = {}
    for tau in candidate_targets(store, source_tokens):
        if vocab.intersection(tau):
            by_len.setdefault(len(tau), []).append(tau)

    for n in range(1, max_len + 1):
        plain = _ngram_spans(t_ext, n, 1, size)
        for d, direction in enumerate((SL_TL, TL_SL)):
            matched = match_pairs(store, source_tokens, t, n, direction, boundaries=False)
            matches[("word", n, direction)] = matched
            ratio, freq = _ratio_and_freq(store, matched, plain, word_pos, _covers_word,
                                          conditionals[direction])
            words[:, word_offset(n, d)] = ratio
            words[:, word_offset(n, 2 + d)] = freq
        for tau in sorted(by_len.get(n, ())):
            weight = edit_align.lcs_length(tau, t) / len(tau)
            for j, op in enumerate(edit_align.word_edit_ops(t, tau)):
                component = 4 if op == MATCH else 5
                words[j, word_offset(n, component)] += weight

        if n < 2:
            continue
        extended = _ngram_spans(t_ext, n, 0, size + 1)
        for d, direction in enumerate((SL_TL, TL_SL)):
            matched = match_pairs(store, source_tokens, t, n, direction, boundaries=True)
            matches[("gap", n, direction)] = matched
            ratio, freq = _ratio_and_freq(store, matched, extended, gap_pos, _covers_gap,
                                          conditionals[direction])
            gaps[:, gap_offset(n, d)] = ratio
            gaps[:, gap_offset(n, 2 + d)] = freq
        for tau in sorted(by_len.get(n, ())):
            weight = edit_align.lcs_length(tau, t_ext) / len(tau)
            for j, op in enumerate(edit_align.gap_edit_ops(tau, t_ext)):
                if op == MATCH:
                    gaps[j, gap_offset(n, 4)] += weight
                elif op == INSERT:
                    gaps[j, gap_offset(n, 5)] += weight

    return FeatureContext(
        source_tokens=list(source_tokens),
        mt_tokens=list(mt_tokens),
        max_len=max_len,
        word_vectors=np.hstack([words, baseline]),
        gap_vectors=gaps,
        baseline_width=baseline.shape[1],
        matches=matches,
    )


def _direction_index(direction):
    if direction not in (SL_TL, TL_SL):
        raise ValueError(f"unknown direction {direction!r}")
    return 0 if direction == SL_TL else 1


def _check_n(n, ctx, lowest):
    if not lowest <= n <= ctx.max_len:
        raise ValueError(f"n={n} outside {lowest}..{ctx.max_len}")


def keep(j, n, direction, ctx: FeatureContext) -> float:
    _check_n(n, ctx, 1)
    return float(ctx.word_vectors[j - 1, word_offset(n, _direction_index(direction))])


def freq_keep(j, n, direction, ctx: FeatureContext) -> float:
    _check_n(n, ctx, 1)
    return float(ctx.word_vectors[j - 1, word_offset(n, 2 + _direction_index(direction))])


def align_keep(j, n, e, ctx: FeatureContext) -> float:
    _check_n(n, ctx, 1)
    component = {MATCH: 4, DELETE: 5}[e]
    return float(ctx.word_vectors[j - 1, word_offset(n, component)])


def noinsert(j, n, direction, ctx: FeatureContext) -> float:
    _check_n(n, ctx, 2)
    return float(ctx.gap_vectors[j, gap_offset(n, _direction_index(direction))])


def freq_noins(j, n, direction, ctx: FeatureContext) -> float:
    _check_n(n, ctx, 2)
    return float(ctx.gap_vectors[j, gap_offset(n, 2 + _direction_index(direction))])


def align_noins(j, n, e, ctx: FeatureContext) -> float:
    _check_n(n, ctx, 2)
    component = {MATCH: 4, INSERT: 5}[e]
    return float(ctx.gap_vectors[j, gap_offset(n, component)])


@dataclass
class WindowBatch:
    """Context windows, one per predicted index i = 0..|T| of every sentence.

    ``word``/``gap`` have shape (N, 2C+1, F) and (N, 2C+1, G). The window
    at i = 0 predicts only gap 0; its word label is masked out.
    """

    word: np.ndarray
    gap: np.ndarray
    word_label: np.ndarray
    gap_label: np.ndarray
    word_mask: np.ndarray
    sentence: np.ndarray
    position: np.ndarray

    def __len__(self):
        return len(self.position)

    @property
    def context(self) -> int:
        return (self.word.shape[1] - 1) // 2

    @property
    def width(self) -> int:
        return self.word.shape[1] * (self.word.shape[2] + self.gap.shape[2])

    def subset(self, index) -> "WindowBatch":
        return WindowBatch(self.word[index], self.gap[index], self.word_label[index],
                           self.gap_label[index], self.word_mask[index],
                           self.sentence[index], self.position[index])


def sentence_windows(word_vectors, gap_vectors, context):
    """Windowed views for one sentence: arrays of shape (|T|+1, 2C+1, F) and (.., G)."""
    size = word_vectors.shape[0]
    k = 2 * context + 1
    padded_words = np.zeros((size + 1 + 2 * context, word_vectors.shape[1]))
    padded_words[context + 1:context + 1 + size] = word_vectors
    padded_gaps = np.zeros((size + 1 + 2 * context, gap_vectors.shape[1]))
    padded_gaps[context:context + size + 1] = gap_vectors
    idx = np.arange(size + 1)[:, None] + np.arange(k)[None, :]
    return padded_words[idx], padded_gaps[idx]


def build_windows(contexts, context: int = DEFAULT_C, word_tags=None, gap_tags=None,
                  dtype=np.float64) -> WindowBatch:
    """Stack the windows of every sentence into one batch.

    ``contexts`` holds FeatureContext objects or (word_vectors, gap_vectors)
    pairs; tags are optional per-sentence 0/1 (BAD = 1) sequences.
    """
    if context < 0:
        raise ValueError("context must be >= 0")
    words, gaps, wl, gl, mask, sent, pos = [], [], [], [], [], [], []
    for s, ctx in enumerate(contexts):
        wv, gv = (ctx.word_vectors, ctx.gap_vectors) if isinstance(ctx, FeatureContext) else ctx
        size = wv.shape[0]
        w, g = sentence_windows(wv, gv, context)
        words.append(w.astype(dtype, copy=False))
        gaps.append(g.astype(dtype, copy=False))
        labels = np.zeros(size + 1)
        if word_tags is not None:
            labels[1:] = word_tags[s]
        wl.append(labels)
        gl.append(np.asarray(gap_tags[s], dtype=float) if gap_tags is not None else np.zeros(size + 1))
        m = np.ones(size + 1, dtype=bool)
        m[0] = False
        mask.append(m)
        sent.append(np.full(size + 1, s))
        pos.append(np.arange(size + 1))
    if not words:
        raise ValueError("no sentences to window")
    return WindowBatch(np.concatenate(words), np.concatenate(gaps), np.concatenate(wl),
                       np.concatenate(gl), np.concatenate(mask), np.concatenate(sent),
                       np.concatenate(pos))
