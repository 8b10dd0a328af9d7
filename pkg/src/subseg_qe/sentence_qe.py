"""TER-like sentence scores from predicted word and gap labels."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus_io import BAD


@dataclass(frozen=True)
class EditCounts:
    replacements: int
    deletions: int
    insertions: int
    mt_length: int

    @property
    def total(self) -> int:
        return self.replacements + self.deletions + self.insertions


def _is_bad(tag) -> bool:
    return tag == BAD or tag is True or tag == 1


def approximate_ter(word_labels, gap_labels) -> tuple[EditCounts, float]:
    """Count edits implied by the labels and normalise by the MT length.

    A BAD word whose following gap is BAD is one replacement; other BAD
    words are deletions and other BAD gaps (gap 0 included) are one-word
    insertions.
    """
    size = len(word_labels)
    if len(gap_labels) != size + 1:
        raise ValueError(f"{len(gap_labels)} gap labels for {size} words")
    if size == 0:
        raise ValueError("empty MT segment")
    words = [_is_bad(t) for t in word_labels]
    gaps = [_is_bad(t) for t in gap_labels]
    replacements = deletions = 0
    insertions = int(gaps[0])
    for j in range(1, size + 1):
        if words[j - 1] and gaps[j]:
            replacements += 1
        elif words[j - 1]:
            deletions += 1
        elif gaps[j]:
            insertions += 1
    counts = EditCounts(replacements, deletions, insertions, size)
    return counts, counts.total / size


def ranking(scores) -> list[int]:
    """Sentence indices from best (lowest score) to worst; ties keep input order."""
    return sorted(range(len(scores)), key=lambda k: (scores[k], k))
