"""Shared helpers for network tests: random batches, finite differences, a toy task."""

import numpy as np

from subseg_qe.features import WindowBatch
from subseg_qe.network import _forward, init_params, loss_and_grad


def random_batch(rng, n, F, G, C, mask_rate=0.2):
    k = 2 * C + 1
    mask = rng.random(n) >= mask_rate
    mask[0] = True
    return WindowBatch(
        rng.normal(size=(n, k, F)), rng.normal(size=(n, k, G)),
        (rng.random(n) < 0.5).astype(float), (rng.random(n) < 0.5).astype(float),
        mask, np.zeros(n, dtype=int), np.arange(n))


def _activation_pattern(params, batch):
    _, (zw, zg, _, z2, _) = _forward(params, batch.word, batch.gap)
    return np.concatenate([(zw > 0).ravel(), (zg > 0).ravel(), (z2 > 0).ravel()])


def gradient_check(params, batch, step=1e-5, floor=1e-7):
    """Largest |analytic - numeric| / max(|analytic| + |numeric|, floor) over all weights.

    Coordinates whose +/- perturbation flips a ReLU are skipped: the loss has
    a kink there and central differences are meaningless. Returns
    (max relative error, number of coordinates checked).
    """
    _, grads = loss_and_grad(params, batch)
    worst, checked = 0.0, 0
    for name, array in params.arrays.items():
        flat = array.reshape(-1)
        g = grads[name].reshape(-1)
        for idx in range(flat.size):
            old = flat[idx]
            flat[idx] = old + step
            plus, pattern_plus = loss_and_grad(params, batch)[0], _activation_pattern(params, batch)
            flat[idx] = old - step
            minus, pattern_minus = loss_and_grad(params, batch)[0], _activation_pattern(params, batch)
            flat[idx] = old
            if not np.array_equal(pattern_plus, pattern_minus):
                continue
            numeric = (plus - minus) / (2 * step)
            err = abs(g[idx] - numeric) / max(abs(g[idx]) + abs(numeric), floor)
            worst = max(worst, err)
            checked += 1
    return worst, checked


def tiny_net(seed):
    rng = np.random.default_rng(seed)
    F, G, C = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(0, 2))
    params = init_params(F, G, C, seed=seed)
    for name in ("word_b", "gap_b", "hidden_b", "out_b"):
        params.arrays[name] = rng.normal(scale=0.1, size=params.arrays[name].shape)
    return params, random_batch(rng, int(rng.integers(2, 6)), F, G, C)


def separable_task(seed, n_sentences=120, F=4, G=3, C=1):
    """Windows whose centre features carry the labels plus noise."""
    rng = np.random.default_rng(seed)
    k = 2 * C + 1
    sizes = rng.integers(3, 9, size=n_sentences)
    n = int(sizes.sum() + n_sentences)
    word = rng.normal(scale=0.3, size=(n, k, F))
    gap = rng.normal(scale=0.3, size=(n, k, G))
    word_label = (rng.random(n) < 0.35).astype(float)
    gap_label = (rng.random(n) < 0.25).astype(float)
    word[:, C, 0] += 2.0 * word_label - 1.0
    gap[:, C, 0] += 2.0 * gap_label - 1.0
    position = np.concatenate([np.arange(s + 1) for s in sizes])
    sentence = np.repeat(np.arange(n_sentences), sizes + 1)
    mask = position > 0
    word_label[~mask] = 0.0
    word[~mask, C] = 0.0
    return WindowBatch(word, gap, word_label, gap_label, mask, sentence, position)


def auc(scores, labels):
    from scipy.stats import rankdata
    labels = np.asarray(labels, dtype=bool)
    ranks = rankdata(scores)
    n_pos, n_neg = labels.sum(), (~labels).sum()
    return (ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)
