"""Generated QE corpus with planted phrase-table evidence.

Source sentences come from a sparse bigram model over a Zipfian vocabulary
(each word has a handful of likely successors), so n-grams recur; the
reference is a monotone word-by-word translation (some words translate to
two tokens). The MT output corrupts the reference by substitution, omission
and spurious insertion, which fixes the gold word/gap tags and HTER. Phrase
tables hold the sub-segment pairs of a separate clean parallel corpus drawn
from the same distribution, thinned at random and mixed with random pairs,
so evidence for rare words and long n-grams is incomplete.
"""

from __future__ import annotations

import random
from collections import Counter
from pathlib import Path

from .corpus_io import BAD, OK, join_tags
from .phrase_store import BOS, EOS

N_BASELINE_COLUMNS = 28
BASELINE_NUMERIC = list(range(4, 18))
BASELINE_POS = 18
POS_TAGS = ("N", "V", "ADJ", "ADV", "DET", "PRP")


def make_lexicon(rng, size, two_token_rate=0.15):
    lexicon = {}
    for k in range(size):
        if rng.random() < two_token_rate:
            lexicon[f"s{k}"] = (f"t{k}", f"t{k}x")
        else:
            lexicon[f"s{k}"] = (f"t{k}",)
    return lexicon


def corrupt(rng, reference, vocab, error_rate):
    """Return (mt tokens, word tags, gap tags, edit count) for one reference."""
    mt, words, gaps = [], [], [OK]
    edits = 0
    for tok in reference:
        u = rng.random()
        if u < 0.4 * error_rate:
            sub = rng.choice(vocab)
            while sub == tok:
                sub = rng.choice(vocab)
            mt.append(sub)
            words.append(BAD)
            gaps.append(OK)
            edits += 1
        elif u < 0.7 * error_rate:
            gaps[-1] = BAD
            edits += 1
        else:
            mt.append(tok)
            words.append(OK)
            gaps.append(OK)
        if rng.random() < 0.3 * error_rate:
            mt.append(rng.choice(vocab))
            words.append(BAD)
            gaps.append(OK)
            edits += 1
    return mt, words, gaps, edits


def zipf_weights(size, exponent):
    return [1.0 / (k + 1) ** exponent for k in range(size)]


class BigramSource:
    """Words follow one of ``fanout`` fixed successors with probability ``coherence``."""

    def __init__(self, rng, sources, weights, fanout=6, coherence=0.85):
        self.sources, self.weights, self.coherence = sources, weights, coherence
        self.successors = {w: rng.choices(sources, weights, k=fanout) for w in sources}

    def sample(self, rng, min_len=4, max_len=14):
        words = [rng.choices(self.sources, self.weights)[0]]
        for _ in range(rng.randint(min_len, max_len) - 1):
            if rng.random() < self.coherence:
                words.append(rng.choice(self.successors[words[-1]]))
            else:
                words.append(rng.choices(self.sources, self.weights)[0])
        return words


def generate_sentence(rng, lexicon, model, vocab, max_error=0.35):
    while True:
        src = model.sample(rng)
        reference = [tok for word in src for tok in lexicon[word]]
        mt, words, gaps, edits = corrupt(rng, reference, vocab, rng.uniform(0.0, max_error))
        if mt:
            return {"src": src, "ref": reference, "mt": mt, "word_tags": words,
                    "gap_tags": gaps, "hter": edits / len(mt)}


def extract_pairs(src, lexicon, max_source=4, max_target=5):
    """Monotone phrase pairs of a clean pair, boundary-annotated at the edges."""
    spans, pos = [], 0
    for word in src:
        width = len(lexicon[word])
        spans.append((pos, pos + width))
        pos += width
    ref = [tok for word in src for tok in lexicon[word]]
    pairs = []
    for a in range(len(src)):
        for b in range(a + 1, min(a + max_source, len(src)) + 1):
            sigma = src[a:b]
            tau = ref[spans[a][0]:spans[b - 1][1]]
            if len(tau) > max_target:
                break
            first, last = a == 0, b == len(src)
            pairs.append((sigma, tau))
            if first:
                pairs.append(([BOS] + sigma, [BOS] + tau))
            if last:
                pairs.append((sigma + [EOS], tau + [EOS]))
            if first and last:
                pairs.append(([BOS] + sigma + [EOS], [BOS] + tau + [EOS]))
    return [(s, t) for s, t in pairs if len(t) <= max_target]


def baseline_rows(rng, mt, src):
    rows = []
    for j, tok in enumerate(mt):
        numeric = [len(tok), j, len(mt), len(src), (j + 1) / len(mt), int(j == 0),
                   int(j == len(mt) - 1), len(mt) / len(src)]
        numeric += [round(rng.gauss(0.0, 1.0), 4) for _ in range(6)]
        cols = ["_"] * N_BASELINE_COLUMNS
        cols[0] = tok
        cols[1] = mt[j - 1] if j > 0 else BOS
        cols[2] = mt[j + 1] if j + 1 < len(mt) else EOS
        cols[3] = src[min(j, len(src) - 1)]
        for c, value in zip(BASELINE_NUMERIC, numeric):
            cols[c] = str(value)
        cols[BASELINE_POS] = POS_TAGS[int(tok.strip("tx")) % len(POS_TAGS)]
        rows.append("\t".join(cols))
    return rows


def generate_corpus(out_dir, seed=1, n_train=2000, n_dev=200, n_test=200, vocab_size=2000,
                    zipf_exponent=1.0, n_parallel=4000, keep_rate=0.7, noise_pairs=20000,
                    fanout=6, coherence=0.85):
    """Write splits, baseline files and two phrase tables (one stored inverted) to ``out_dir``."""
    rng = random.Random(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lexicon = make_lexicon(rng, vocab_size)
    sources = [f"s{k}" for k in range(vocab_size)]
    weights = zipf_weights(vocab_size, zipf_exponent)
    model = BigramSource(rng, sources, weights, fanout, coherence)
    vocab = sorted({tok for toks in lexicon.values() for tok in toks})

    for split, size in (("train", n_train), ("dev", n_dev), ("test", n_test)):
        sentences = [generate_sentence(rng, lexicon, model, vocab) for _ in range(size)]
        with open(out / f"{split}.src", "w", encoding="utf-8") as f_src, \
                open(out / f"{split}.mt", "w", encoding="utf-8") as f_mt, \
                open(out / f"{split}.tags", "w", encoding="utf-8") as f_tags, \
                open(out / f"{split}.hter", "w", encoding="utf-8") as f_hter, \
                open(out / f"{split}.baseline", "w", encoding="utf-8") as f_base:
            for sent in sentences:
                f_src.write(" ".join(sent["src"]) + "\n")
                f_mt.write(" ".join(sent["mt"]) + "\n")
                f_tags.write(" ".join(join_tags(sent["word_tags"], sent["gap_tags"])) + "\n")
                f_hter.write(f"{sent['hter']:.6f}\n")
                f_base.write("\n".join(baseline_rows(rng, sent["mt"], sent["src"])) + "\n\n")

    counts = Counter()
    for _ in range(n_parallel):
        for sigma, tau in extract_pairs(model.sample(rng), lexicon):
            if rng.random() < keep_rate:
                counts[(tuple(sigma), tuple(tau))] += 1
    for _ in range(noise_pairs):
        sigma = tuple(rng.choices(sources, weights, k=rng.randint(1, 2)))
        tau = tuple(rng.choice(vocab) for _ in range(rng.randint(1, 2)))
        counts[(sigma, tau)] += 1

    items = sorted(counts.items())
    with open(out / "phrases.sl-tl", "w", encoding="utf-8") as f_fwd, \
            open(out / "phrases.tl-sl", "w", encoding="utf-8") as f_inv:
        for k, ((sigma, tau), c) in enumerate(items):
            if k % 2 == 0:
                f_fwd.write(f"{' '.join(sigma)} ||| {' '.join(tau)} ||| 1 1 1 1 ||| 0-0 ||| {c} {c} {c}\n")
            else:
                f_inv.write(f"{' '.join(tau)} ||| {' '.join(sigma)} ||| 1 1 1 1 ||| 0-0 ||| {c} {c} {c}\n")
    return out
