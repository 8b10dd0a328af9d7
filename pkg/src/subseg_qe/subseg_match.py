"""Sub-segment enumeration and phrase-pair matching against a sentence pair.

Positions follow the boundary-extended convention: ``t_0 = <s>``, real words
at ``1..|T|`` and ``t_{|T|+1} = </s>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .phrase_store import BOS, EOS, PhrasePairStore, as_phrase

SL_TL = "sl-tl"
TL_SL = "tl-sl"
DIRECTIONS = (SL_TL, TL_SL)


@dataclass(frozen=True)
class SpannedMatch:
    sigma: tuple
    tau: tuple
    tau_spans: frozenset  # of inclusive (start, end) intervals
    direction: str
    count: float


def extend(tokens: Sequence[str]) -> list[str]:
    return [BOS, *(t.lower() for t in tokens), EOS]


def subsegments(tokens: Sequence[str], n: int, offset: int = 1) -> list[tuple[tuple, int]]:
    """All contiguous ``n``-grams with their start positions (``offset`` for the first token)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    tokens = as_phrase(tokens)
    return [(tokens[k:k + n], k + offset) for k in range(len(tokens) - n + 1)]


def all_subsegments(tokens: Sequence[str], max_len: int | None = None) -> set[tuple]:
    tokens = as_phrase(tokens)
    limit = len(tokens) if max_len is None else min(max_len, len(tokens))
    return {tokens[k:k + n] for n in range(1, limit + 1) for k in range(len(tokens) - n + 1)}


def spans(tau, t_ext: Sequence[str]) -> set[tuple[int, int]]:
    """Every inclusive interval at which ``tau`` occurs in ``t_ext`` (0-based positions)."""
    tau = as_phrase(tau)
    n = len(tau)
    t_ext = as_phrase(t_ext)
    return {(k, k + n - 1) for k in range(len(t_ext) - n + 1) if t_ext[k:k + n] == tau}


def _occurrences(t_ext: tuple, n: int, lo: int, hi: int) -> dict[tuple, set]:
    """n-grams of ``t_ext`` lying within positions ``lo..hi``, keyed by string."""
    found: dict[tuple, set] = {}
    for k in range(lo, hi - n + 2):
        found.setdefault(t_ext[k:k + n], set()).add((k, k + n - 1))
    return found


def match_pairs(store: PhrasePairStore, s, t, n: int, direction: str = SL_TL,
                boundaries: bool = True) -> set[SpannedMatch]:
    """Phrase pairs (sigma, tau) with sigma inside S and tau an n-token sub-segment of T.

    ``sigma`` ranges over sub-segments of the boundary-extended source. With
    ``boundaries`` the n-grams of T may include ``<s>``/``</s>``; otherwise
    only real words are used. SL-TL queries the store by source phrase,
    TL-SL by target phrase; both describe the same evidence.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s_ext = tuple(extend(s))
    t_ext = tuple(extend(t))
    lo, hi = (0, len(t_ext) - 1) if boundaries else (1, len(t_ext) - 2)
    occ = _occurrences(t_ext, n, lo, hi)
    out = set()
    if direction == SL_TL:
        for sigma in all_subsegments(s_ext, store.max_source_len):
            for tau, count in store.source_index.get(sigma, {}).items():
                if tau in occ:
                    out.add(SpannedMatch(sigma, tau, frozenset(occ[tau]), SL_TL, count))
    elif direction == TL_SL:
        sources = all_subsegments(s_ext, store.max_source_len)
        for tau, where in occ.items():
            for sigma, count in store.target_index.get(tau, {}).items():
                if sigma in sources:
                    out.add(SpannedMatch(sigma, tau, frozenset(where), TL_SL, count))
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return out
