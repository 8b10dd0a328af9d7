"""Word-level LCS and the edit scripts derived from it.

Edit operations are expressed as tuples ``(op, i, j)`` with 1-based indices
into the first (``i``) and second (``j``) sequence; the unused index of a
``delete``/``insert`` is ``None``.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

MATCH = "match"
DELETE = "delete"
INSERT = "insert"
NONE = "none"


class EditOp(NamedTuple):
    op: str
    i: int | None
    j: int | None


def _norm(tokens: Sequence[str]) -> list[str]:
    return [t.lower() for t in tokens]


def _lcs_table(x: Sequence[str], y: Sequence[str]) -> list[list[int]]:
    n, m = len(x), len(y)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        xi = x[i - 1]
        row, prev = table[i], table[i - 1]
        for j in range(1, m + 1):
            if xi == y[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = row[j - 1] if row[j - 1] > prev[j] else prev[j]
    return table


def lcs_length(x: Sequence[str], y: Sequence[str]) -> int:
    """Length of the word-based longest common subsequence (case-insensitive)."""
    x, y = _norm(x), _norm(y)
    return _lcs_table(x, y)[len(x)][len(y)]


def edit_script(x: Sequence[str], y: Sequence[str]) -> list[EditOp]:
    """Edit operations turning ``x`` into ``y``.

    The DP table is backtraced from the bottom-right corner, preferring a
    match, then a deletion (step up), then an insertion (step left), so the
    script is unique for any pair of inputs.
    """
    x, y = _norm(x), _norm(y)
    table = _lcs_table(x, y)
    i, j = len(x), len(y)
    ops: list[EditOp] = []
    while i > 0 or j > 0:
        if i > 0 and j > 0 and x[i - 1] == y[j - 1]:
            ops.append(EditOp(MATCH, i, j))
            i -= 1
            j -= 1
        elif i > 0 and table[i - 1][j] == table[i][j]:
            ops.append(EditOp(DELETE, i, None))
            i -= 1
        else:
            ops.append(EditOp(INSERT, None, j))
            j -= 1
    ops.reverse()
    return ops


def word_edit_ops(t: Sequence[str], tau: Sequence[str]) -> list[str]:
    """Operation (match/delete) assigned to every word of ``t`` when aligning ``t`` to ``tau``."""
    result = [DELETE] * len(t)
    for op in edit_script(t, tau):
        if op.op == MATCH:
            result[op.i - 1] = MATCH
    return result


def word_edit_op(j: int, t: Sequence[str], tau: Sequence[str]) -> str:
    if not 1 <= j <= len(t):
        raise IndexError(f"word position {j} outside 1..{len(t)}")
    return word_edit_ops(t, tau)[j - 1]


def gap_edit_ops(tau: Sequence[str], t_ext: Sequence[str]) -> list[str]:
    """Operation (match/insert/none) for every gap of a boundary-extended sentence.

    ``t_ext`` holds ``<s> t_1 .. t_n </s>``; the result has ``n + 1`` entries,
    entry ``j`` describing the gap between ``t_ext[j]`` and ``t_ext[j + 1]``.
    The script aligns ``tau`` to ``t_ext``. A gap is ``match`` when both
    neighbours align to consecutive tokens of ``tau`` and ``insert`` when
    tokens of ``tau`` fall between them; anything else leaves it uncovered.
    """
    aligned: list[int | None] = [None] * len(t_ext)
    for op in edit_script(tau, t_ext):
        if op.op == MATCH:
            aligned[op.j - 1] = op.i
    result = []
    for j in range(len(t_ext) - 1):
        left, right = aligned[j], aligned[j + 1]
        if left is None or right is None:
            result.append(NONE)
        elif right == left + 1:
            result.append(MATCH)
        else:
            result.append(INSERT)
    return result


def gap_edit_op(j: int, tau: Sequence[str], t_ext: Sequence[str]) -> str:
    if not 0 <= j <= len(t_ext) - 2:
        raise IndexError(f"gap position {j} outside 0..{len(t_ext) - 2}")
    return gap_edit_ops(tau, t_ext)[j]
