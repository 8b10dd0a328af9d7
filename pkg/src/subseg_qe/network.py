"""Two-hidden-layer feed-forward network predicting word and gap BAD probabilities.

Layer one encodes every word slot with a shared F -> E ReLU map and every
gap slot with a shared G -> E ReLU map. The 2(2C+1) codes are concatenated
and fed to a ReLU layer of width (2C+1)(F+G), followed by two sigmoid
units: output 0 is the word, output 1 the gap. Training uses Adam on the
summed binary cross-entropy, inverted dropout on both hidden layers, early
stopping on the development set and several random restarts.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics
from .features import WindowBatch

log = logging.getLogger(__name__)

MODEL_VERSION = 1
PARAM_NAMES = ("word_w", "word_b", "gap_w", "gap_b", "hidden_w", "hidden_b", "out_w", "out_b")


class DivergenceError(FloatingPointError):
    pass


@dataclass
class QeNetParams:
    F: int
    G: int
    C: int
    E: int
    arrays: dict
    word_threshold: float = 0.5
    gap_threshold: float = 0.5

    @property
    def slots(self) -> int:
        return 2 * self.C + 1

    @property
    def hidden(self) -> int:
        return self.slots * (self.F + self.G)

    def copy(self) -> "QeNetParams":
        return QeNetParams(self.F, self.G, self.C, self.E,
                           {k: v.copy() for k, v in self.arrays.items()},
                           self.word_threshold, self.gap_threshold)

    def astype(self, dtype) -> "QeNetParams":
        out = self.copy()
        out.arrays = {k: v.astype(dtype) for k, v in out.arrays.items()}
        return out

    def n_parameters(self) -> int:
        return sum(v.size for v in self.arrays.values())


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dropout: float = 0.2
    patience: int = 10
    restarts: int = 10
    batch_size: int = 64
    seed: int = 0
    max_epochs: int = 100
    embedding: int | None = None
    dev_metric: str = "fmulti"
    dtype: str = "float64"

    def __post_init__(self):
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.restarts < 1 or self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("restarts, max_epochs and batch_size must be positive")
        if self.dev_metric not in ("fmulti", "loss"):
            raise ValueError(f"unknown dev metric {self.dev_metric!r}")


def default_embedding(F: int, G: int) -> int:
    return math.ceil((F + G) / 2)


def init_params(F: int, G: int, C: int, seed: int = 0, E: int | None = None) -> QeNetParams:
    """He-style uniform initialisation, U(-sqrt(6/fan_in), sqrt(6/fan_in)); zero biases."""
    if min(F, G) < 1 or C < 0:
        raise ValueError("F and G must be positive and C non-negative")
    E = E or default_embedding(F, G)
    slots = 2 * C + 1
    hidden = slots * (F + G)
    rng = np.random.default_rng(seed)

    def uniform(fan_in, fan_out):
        limit = math.sqrt(6.0 / fan_in)
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    arrays = {
        "word_w": uniform(F, E), "word_b": np.zeros(E),
        "gap_w": uniform(G, E), "gap_b": np.zeros(E),
        "hidden_w": uniform(2 * slots * E, hidden), "hidden_b": np.zeros(hidden),
        "out_w": uniform(hidden, 2), "out_b": np.zeros(2),
    }
    return QeNetParams(F, G, C, E, arrays)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _check_dims(params, word, gap):
    if word.ndim != 3 or gap.ndim != 3:
        raise ValueError("window arrays must be (N, slots, features)")
    if word.shape[1:] != (params.slots, params.F) or gap.shape[1:] != (params.slots, params.G):
        raise ValueError(
            f"windows {word.shape[1:]}/{gap.shape[1:]} do not fit network "
            f"({params.slots}, {params.F})/({params.slots}, {params.G})")


def dropout_masks(params, n, rate, rng):
    """Inverted-dropout masks for the two hidden layers."""
    a = params.arrays
    shapes = ((n, 2 * params.slots * params.E), (n, a["hidden_b"].shape[0]))
    masks = []
    for shape in shapes:
        keep = rng.random(shape) >= rate
        masks.append(keep.astype(a["hidden_w"].dtype) / (1.0 - rate))
    return masks


def _forward(params, word, gap, masks=None):
    a = params.arrays
    n, k = word.shape[:2]
    zw = word @ a["word_w"] + a["word_b"]
    zg = gap @ a["gap_w"] + a["gap_b"]
    h1 = np.concatenate([np.maximum(zw, 0).reshape(n, -1), np.maximum(zg, 0).reshape(n, -1)], axis=1)
    if masks is not None:
        h1 = h1 * masks[0]
    z2 = h1 @ a["hidden_w"] + a["hidden_b"]
    h2 = np.maximum(z2, 0)
    if masks is not None:
        h2 = h2 * masks[1]
    logits = h2 @ a["out_w"] + a["out_b"]
    return logits, (zw, zg, h1, z2, h2)


def forward(params: QeNetParams, word, gap, train_mode=False, dropout=0.0, rng=None,
            masks=None, return_logits=False):
    """Word and gap BAD probabilities for a batch of windows.

    In ``train_mode`` inverted dropout is applied, either with explicit
    ``masks`` or masks drawn from ``rng``; at inference no rescaling is needed.
    """
    _check_dims(params, word, gap)
    if train_mode and masks is None and dropout > 0:
        masks = dropout_masks(params, word.shape[0], dropout, rng or np.random.default_rng())
    logits, _ = _forward(params, word, gap, masks if train_mode else None)
    if return_logits:
        return logits[:, 0], logits[:, 1]
    probs = sigmoid(logits)
    return probs[:, 0], probs[:, 1]


def _bce_with_logits(logits, labels):
    # log(1 + exp(-|x|)) + max(x, 0) - x*y
    return np.logaddexp(0.0, logits) - logits * labels


def loss_and_grad(params: QeNetParams, batch: WindowBatch, masks=None):
    """Mean cross-entropy of both outputs and its exact gradient.

    The gap term averages over all windows, the word term over windows with
    an unmasked word; ``masks`` are optional fixed dropout masks.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    a = params.arrays
    word, gap = batch.word, batch.gap
    _check_dims(params, word, gap)
    n, k = word.shape[:2]
    logits, (zw, zg, h1, z2, h2) = _forward(params, word, gap, masks)
    wmask = batch.word_mask.astype(logits.dtype)
    n_words = max(float(wmask.sum()), 1.0)
    loss_word = float(np.sum(_bce_with_logits(logits[:, 0], batch.word_label) * wmask)) / n_words
    loss_gap = float(np.mean(_bce_with_logits(logits[:, 1], batch.gap_label)))
    loss = loss_word + loss_gap
    if not math.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss}")

    probs = sigmoid(logits)
    d_logits = np.empty_like(logits)
    d_logits[:, 0] = (probs[:, 0] - batch.word_label) * wmask / n_words
    d_logits[:, 1] = (probs[:, 1] - batch.gap_label) / n
    grads = {
        "out_w": h2.T @ d_logits,
        "out_b": d_logits.sum(axis=0),
    }
    d_h2 = d_logits @ a["out_w"].T
    if masks is not None:
        d_h2 = d_h2 * masks[1]
    d_z2 = d_h2 * (z2 > 0)
    grads["hidden_w"] = h1.T @ d_z2
    grads["hidden_b"] = d_z2.sum(axis=0)
    d_h1 = d_z2 @ a["hidden_w"].T
    if masks is not None:
        d_h1 = d_h1 * masks[0]
    half = k * params.E
    d_zw = d_h1[:, :half].reshape(n, k, params.E) * (zw > 0)
    d_zg = d_h1[:, half:].reshape(n, k, params.E) * (zg > 0)
    grads["word_w"] = word.reshape(n * k, -1).T @ d_zw.reshape(n * k, -1)
    grads["word_b"] = d_zw.sum(axis=(0, 1))
    grads["gap_w"] = gap.reshape(n * k, -1).T @ d_zg.reshape(n * k, -1)
    grads["gap_b"] = d_zg.sum(axis=(0, 1))
    return loss, grads


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: QeNetParams, grads: dict, state: AdamState, config: TrainConfig) -> None:
    """In-place bias-corrected Adam update of ``params`` and ``state``."""
    state.step += 1
    t = state.step
    for name, g in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m, v = state.m[name], state.v[name]
        m *= config.beta1
        m += (1 - config.beta1) * g
        v *= config.beta2
        v += (1 - config.beta2) * g * g
        m_hat = m / (1 - config.beta1 ** t)
        v_hat = v / (1 - config.beta2 ** t)
        params.arrays[name] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)


def predict(params: QeNetParams, batch: WindowBatch, chunk: int = 4096):
    """Inference-mode probabilities; the word probability of i = 0 windows is meaningless."""
    word_probs, gap_probs = [], []
    for start in range(0, len(batch), chunk):
        w, g = forward(params, batch.word[start:start + chunk], batch.gap[start:start + chunk])
        word_probs.append(w)
        gap_probs.append(g)
    return np.concatenate(word_probs), np.concatenate(gap_probs)


def calibrate(params: QeNetParams, batch: WindowBatch) -> metrics.DecisionThresholds:
    word_probs, gap_probs = predict(params, batch)
    mask = batch.word_mask
    return metrics.DecisionThresholds(
        metrics.line_search_threshold(word_probs[mask], batch.word_label[mask]),
        metrics.line_search_threshold(gap_probs, batch.gap_label),
    )


def evaluate(params: QeNetParams, batch: WindowBatch, thresholds=None) -> dict:
    """F1 scores of both outputs; thresholds re-fitted on ``batch`` unless given."""
    word_probs, gap_probs = predict(params, batch)
    mask = batch.word_mask
    wp, wl = word_probs[mask], batch.word_label[mask]
    if thresholds is None:
        thresholds = metrics.DecisionThresholds(
            metrics.line_search_threshold(wp, wl),
            metrics.line_search_threshold(gap_probs, batch.gap_label))
    word = metrics.f1_suite(wp >= thresholds.word_threshold, wl)
    gap = metrics.f1_suite(gap_probs >= thresholds.gap_threshold, batch.gap_label)
    return {"word": word, "gap": gap, "product": word[2] * gap[2], "thresholds": thresholds}


def batch_loss(params, batch, chunk=4096) -> float:
    """Dropout-free loss over a large batch, computed in chunks."""
    total_word = total_gap = 0.0
    n_words = max(float(batch.word_mask.sum()), 1.0)
    for start in range(0, len(batch), chunk):
        sl = slice(start, start + chunk)
        logits, _ = _forward(params, batch.word[sl], batch.gap[sl])
        total_word += float(np.sum(_bce_with_logits(logits[:, 0], batch.word_label[sl])
                                   * batch.word_mask[sl]))
        total_gap += float(np.sum(_bce_with_logits(logits[:, 1], batch.gap_label[sl])))
    return total_word / n_words + total_gap / len(batch)


def _cast(batch: WindowBatch, dtype) -> WindowBatch:
    if batch.word.dtype == dtype:
        return batch
    return WindowBatch(batch.word.astype(dtype), batch.gap.astype(dtype),
                       batch.word_label.astype(dtype), batch.gap_label.astype(dtype),
                       batch.word_mask, batch.sentence, batch.position)


def _dev_score(params, dev, config):
    if config.dev_metric == "loss":
        return -batch_loss(params, dev)
    return evaluate(params, dev)["product"]


def train_once(train: WindowBatch, dev: WindowBatch, config: TrainConfig, seed: int):
    """One restart: returns (best params, best dev score, per-epoch history)."""
    dtype = np.dtype(config.dtype)
    F, G = train.word.shape[2], train.gap.shape[2]
    params = init_params(F, G, train.context, seed, config.embedding).astype(dtype)
    rng = np.random.default_rng(seed)
    state = AdamState()
    best, best_score, best_epoch = params.copy(), -math.inf, 0
    history = []
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = train.subset(order[start:start + config.batch_size])
            masks = dropout_masks(params, len(batch), config.dropout, rng) if config.dropout > 0 else None
            loss, grads = loss_and_grad(params, batch, masks)
            adam_step(params, grads, state, config)
            losses.append(loss * len(batch))
        score = _dev_score(params, dev, config)
        train_loss = sum(losses) / len(train)
        history.append({"seed": seed, "epoch": epoch, "train_loss": train_loss, "dev_score": score})
        log.info("seed %d epoch %d loss %.4f dev %.4f", seed, epoch, train_loss, score)
        if score > best_score:
            best, best_score, best_epoch = params.copy(), score, epoch
        elif epoch - best_epoch >= config.patience:
            break
    return best, best_score, history


def train(train_windows: WindowBatch, dev_windows: WindowBatch, config: TrainConfig):
    """Train ``config.restarts`` networks and keep the best one on the dev set.

    The returned parameters carry thresholds line-searched on the dev set.
    """
    if len(train_windows) == 0 or len(dev_windows) == 0:
        raise ValueError("training and development sets must be non-empty")
    dtype = np.dtype(config.dtype)
    train_windows = _cast(train_windows, dtype)
    dev_windows = _cast(dev_windows, dtype)
    best, best_score, history = None, -math.inf, []
    for r in range(config.restarts):
        seed = config.seed + r
        try:
            params, score, hist = train_once(train_windows, dev_windows, config, seed)
        except DivergenceError as exc:
            log.warning("restart %d diverged: %s", r, exc)
            history.append({"seed": seed, "failed": str(exc)})
            continue
        history.extend(hist)
        if score > best_score:
            best, best_score = params, score
    if best is None:
        raise DivergenceError("every restart diverged")
    thresholds = calibrate(best, dev_windows)
    best.word_threshold = thresholds.word_threshold
    best.gap_threshold = thresholds.gap_threshold
    return best, history


def save_model(params: QeNetParams, path, fingerprint: dict) -> None:
    meta = {"version": MODEL_VERSION, "F": params.F, "G": params.G, "C": params.C, "E": params.E,
            "word_threshold": params.word_threshold, "gap_threshold": params.gap_threshold,
            "fingerprint": fingerprint}
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)),
                 **{name: params.arrays[name] for name in PARAM_NAMES})


def load_model(path) -> tuple[QeNetParams, dict]:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: model version {meta.get('version')}, expected {MODEL_VERSION}")
        arrays = {name: data[name].copy() for name in PARAM_NAMES}
    params = QeNetParams(meta["F"], meta["G"], meta["C"], meta["E"], arrays,
                         meta["word_threshold"], meta["gap_threshold"])
    return params, meta["fingerprint"]


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
