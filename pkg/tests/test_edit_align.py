import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subseg_qe.edit_align import (
    DELETE, INSERT, MATCH, NONE, EditOp, edit_script, gap_edit_op, gap_edit_ops, lcs_length,
    word_edit_op,
)
from subseg_qe.subseg_match import extend

from oracle import lcs_len, script


def toks(s):
    return s.split()


@pytest.mark.parametrize("x, y, expected", [
    ("x y z", "x y z", 3),
    ("x z", "x y z", 2),
    ("a", "b", 0),
    ("", "x y", 0),
])
def test_lcs_length(x, y, expected):
    assert lcs_length(toks(x), toks(y)) == expected


def test_lcs_is_case_insensitive():
    assert lcs_length(["Haus", "X"], ["haus", "x"]) == 2


def test_edit_script_delete():
    assert edit_script(toks("x y z"), toks("x z")) == [
        EditOp(MATCH, 1, 1), EditOp(DELETE, 2, None), EditOp(MATCH, 3, 2)]


def test_edit_script_insert():
    assert edit_script(toks("x z"), toks("x y z")) == [
        EditOp(MATCH, 1, 1), EditOp(INSERT, None, 2), EditOp(MATCH, 2, 3)]


def test_edit_script_identity():
    assert [op.op for op in edit_script(toks("a b c"), toks("a b c"))] == [MATCH] * 3


def test_word_edit_op():
    t = toks("x y z")
    assert word_edit_op(2, t, toks("x z")) == DELETE
    assert word_edit_op(1, t, toks("x z")) == MATCH
    assert [word_edit_op(j, t, t) for j in (1, 2, 3)] == [MATCH] * 3
    with pytest.raises(IndexError):
        word_edit_op(0, t, t)


def test_gap_edit_op_examples():
    assert gap_edit_op(1, toks("x y z"), extend(toks("x z"))) == INSERT
    assert gap_edit_op(1, toks("x y"), extend(toks("x y"))) == MATCH
    assert gap_edit_op(2, toks("x y"), extend(toks("x y z"))) == NONE


def test_gap_edit_op_needs_boundary_tokens_at_edges():
    t_ext = extend(toks("x y"))
    assert gap_edit_op(0, toks("x y"), t_ext) == NONE
    assert gap_edit_op(0, ["<s>", "x"], t_ext) == MATCH
    assert gap_edit_op(2, ["y", "q", "</s>"], t_ext) == INSERT


token_lists = st.lists(st.sampled_from("abcd"), max_size=10)


@settings(max_examples=300, deadline=None)
@given(token_lists, token_lists)
def test_edit_script_counts(x, y):
    ops = edit_script(x, y)
    lcs = lcs_length(x, y)
    counts = {k: sum(op.op == k for op in ops) for k in (MATCH, DELETE, INSERT)}
    assert counts[MATCH] == lcs
    assert counts[DELETE] == len(x) - lcs
    assert counts[INSERT] == len(y) - lcs
    assert lcs == lcs_length(y, x)
    i_seq = [op.i for op in ops if op.i is not None]
    j_seq = [op.j for op in ops if op.j is not None]
    assert i_seq == list(range(1, len(x) + 1))
    assert j_seq == list(range(1, len(y) + 1))
    for op in ops:
        if op.op == MATCH:
            assert x[op.i - 1] == y[op.j - 1]


@settings(max_examples=200, deadline=None)
@given(token_lists, token_lists)
def test_edit_script_matches_recursive_oracle(x, y):
    assert lcs_length(x, y) == lcs_len(x, y)
    assert [tuple(op) for op in edit_script(x, y)] == script(x, y)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("abc"), min_size=1, max_size=8), token_lists)
def test_word_match_implies_shared_token(t, tau):
    for j, op in enumerate(gap_free := [word_edit_op(j, t, tau) for j in range(1, len(t) + 1)], 1):
        if op == MATCH:
            assert t[j - 1] in tau
    assert len(gap_free) == len(t)


def test_gap_edit_ops_deterministic():
    rng = random.Random(3)
    for _ in range(50):
        tau = [rng.choice("xyz") for _ in range(rng.randint(1, 5))]
        t_ext = extend([rng.choice("xyz") for _ in range(rng.randint(1, 6))])
        assert gap_edit_ops(tau, t_ext) == gap_edit_ops(list(tau), list(t_ext))
        assert len(gap_edit_ops(tau, t_ext)) == len(t_ext) - 1
