"""Threshold calibration and word/gap/sentence evaluation metrics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .corpus_io import BAD


@dataclass(frozen=True)
class DecisionThresholds:
    word_threshold: float = 0.5
    gap_threshold: float = 0.5


def _as_bad(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.dtype.kind in "US" or arr.dtype == object:
        return arr == BAD
    return arr.astype(bool)


def _f1(tp, fp, fn):
    tp, fp, fn = (np.asarray(v, dtype=float) for v in (tp, fp, fn))
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
        recall = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 0.0)
        f1 = np.where(precision + recall > 0,
                      2 * precision * recall / np.where(precision + recall > 0, precision + recall, 1),
                      0.0)
    return f1


def f1_suite(pred_labels, gold_labels) -> tuple[float, float, float]:
    """(F1 of BAD, F1 of OK, their product). Labels are OK/BAD strings or 0/1 with BAD = 1."""
    pred, gold = _as_bad(pred_labels), _as_bad(gold_labels)
    if pred.shape != gold.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {gold.shape}")
    tp_bad = np.sum(pred & gold)
    fp_bad = np.sum(pred & ~gold)
    fn_bad = np.sum(~pred & gold)
    tp_ok = np.sum(~pred & ~gold)
    f_bad = float(_f1(tp_bad, fp_bad, fn_bad))
    f_ok = float(_f1(tp_ok, fn_bad, fp_bad))
    return f_bad, f_ok, f_bad * f_ok


def f1_product_curve(probs, gold, thresholds) -> np.ndarray:
    """F1_BAD * F1_OK for each threshold, predicting BAD when prob >= threshold."""
    probs = np.asarray(probs, dtype=float)
    gold = _as_bad(gold)
    thresholds = np.asarray(thresholds, dtype=float)
    order = np.sort(probs)
    bad_sorted = np.sort(probs[gold])
    n, n_bad = len(probs), int(gold.sum())
    pred_bad = n - np.searchsorted(order, thresholds, side="left")
    tp_bad = n_bad - np.searchsorted(bad_sorted, thresholds, side="left")
    fp_bad = pred_bad - tp_bad
    fn_bad = n_bad - tp_bad
    tp_ok = (n - n_bad) - fp_bad
    return _f1(tp_bad, fp_bad, fn_bad) * _f1(tp_ok, fn_bad, fp_bad)


def line_search_threshold(probs, gold) -> float:
    """Threshold maximising F1_BAD * F1_OK over all distinct decision points.

    Candidates are 0, 1 and the midpoints between consecutive distinct
    probabilities; ties go to the smallest threshold.
    """
    probs = np.asarray(probs, dtype=float)
    gold_bad = _as_bad(gold)
    if probs.size == 0:
        raise ValueError("empty input")
    if probs.shape != gold_bad.shape:
        raise ValueError("probs and gold differ in length")
    if gold_bad.all() or not gold_bad.any():
        warnings.warn("gold labels contain a single class; using threshold 0.5", RuntimeWarning)
        return 0.5
    distinct = np.unique(probs)
    candidates = np.unique(np.concatenate([[0.0, 1.0], (distinct[:-1] + distinct[1:]) / 2]))
    scores = f1_product_curve(probs, gold_bad, candidates)
    return float(candidates[int(np.argmax(scores))])


def apply_threshold(probs, threshold) -> np.ndarray:
    return np.asarray(probs) >= threshold


@dataclass(frozen=True)
class SentenceScores:
    pearson_r: float
    mae: float
    rmse: float
    spearman_rho: float


def _correlation(a, b) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if denom == 0.0:
        return float("nan")
    return float(np.clip(np.dot(a, b) / denom, -1.0, 1.0))


def sentence_metrics(pred_scores, gold_scores) -> SentenceScores:
    """Pearson r, MAE, RMSE and Spearman rho (average ranks for ties).

    A constant vector makes the correlations undefined; they come back NaN.
    """
    pred = np.asarray(pred_scores, dtype=float)
    gold = np.asarray(gold_scores, dtype=float)
    if pred.shape != gold.shape:
        raise ValueError("length mismatch")
    if pred.size < 2:
        raise ValueError("need at least two scores")
    err = pred - gold
    return SentenceScores(
        pearson_r=_correlation(pred, gold),
        mae=float(np.mean(np.abs(err))),
        rmse=float(np.sqrt(np.mean(err ** 2))),
        spearman_rho=_correlation(rankdata(pred), rankdata(gold)),
    )
