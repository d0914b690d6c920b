"""Lightweight sequence classifier: input dropout, one unidirectional LSTM,
and a linear two-class head.

The recurrence uses a single bias per gate (gate order: input, forget,
cell, output), so the parameter count is ``4*(D + H + 1)*H + (2H + 2)``.
Frame mode emits one logit pair per step; segment mode reads the final
hidden state. Everything runs in float64 numpy; gradients come from
backpropagation through time and are checked against central finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    DivergedError,
    EmptySetError,
    NonFiniteLossError,
    ParseError,
)
from .features import LabeledFeatures, Segment
from .seeding import derive_seed, rng_for

FRAME = "frame"
SEGMENT = "segment"

CHECKPOINT_FORMAT = "signerlab-checkpoint-v1"


@dataclass(frozen=True)
class DetectorConfig:
    input_dim: int
    hidden_size: int = 64
    dropout_p: float = 0.5
    mode: str = FRAME
    seed: int = 0

    def validate(self) -> None:
        if self.input_dim < 1 or self.hidden_size < 1:
            raise ConfigError("input_dim and hidden_size must be >= 1")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.mode not in (FRAME, SEGMENT):
            raise ConfigError(f"mode must be {FRAME!r} or {SEGMENT!r}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 10
    batch_size: int = 8
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def validate(self) -> None:
        if self.learning_rate < 0 or not np.isfinite(self.learning_rate):
            raise ConfigError("learning_rate must be finite and >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


@dataclass
class DetectorModel:
    config: DetectorConfig
    w_x: np.ndarray  # (4H, D)
    w_h: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)
    w_out: np.ndarray  # (2, H)
    b_out: np.ndarray  # (2,)

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "w_x": self.w_x,
            "w_h": self.w_h,
            "b": self.b,
            "w_out": self.w_out,
            "b_out": self.b_out,
        }

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def copy(self) -> "DetectorModel":
        return DetectorModel(
            config=self.config,
            **{name: p.copy() for name, p in self.parameters().items()},
        )

    def validate(self) -> None:
        self.config.validate()
        d, h = self.config.input_dim, self.config.hidden_size
        shapes = {
            "w_x": (4 * h, d),
            "w_h": (4 * h, h),
            "b": (4 * h,),
            "w_out": (2, h),
            "b_out": (2,),
        }
        for name, param in self.parameters().items():
            if param.shape != shapes[name]:
                raise ConfigError(
                    f"{name} has shape {param.shape}, expected {shapes[name]}"
                )
            if not np.isfinite(param).all():
                raise ConfigError(f"{name} contains non-finite values")


@dataclass
class EvalResult:
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int
    n_units: int

    def __post_init__(self) -> None:
        if self.tp + self.fp + self.tn + self.fn != self.n_units:
            raise ConfigError("confusion counts do not sum to n_units")


def init_model(cfg: DetectorConfig) -> DetectorModel:
    """Uniform init in [-1/sqrt(H), 1/sqrt(H)]; forget-gate bias starts at 1."""
    cfg.validate()
    rng = rng_for(cfg.seed, "detector-init")
    d, h = cfg.input_dim, cfg.hidden_size
    bound = 1.0 / np.sqrt(h)

    def draw(*shape: int) -> np.ndarray:
        return rng.uniform(-bound, bound, size=shape)

    model = DetectorModel(
        config=cfg,
        w_x=draw(4 * h, d),
        w_h=draw(4 * h, h),
        b=draw(4 * h),
        w_out=draw(2, h),
        b_out=draw(2),
    )
    model.b[h : 2 * h] = 1.0
    return model


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class _Cache:
    """Per-step activations needed by backward."""

    x: np.ndarray  # (T, B, D) post-dropout inputs
    i: np.ndarray  # (T, B, H)
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c_prev: np.ndarray
    tanh_c: np.ndarray
    h_prev: np.ndarray
    h: np.ndarray  # (T, B, H) hidden states


def _dropout_inputs(
    x: np.ndarray, p: float, training: bool, seed: int
) -> np.ndarray:
    """Inverted dropout on input features; the mask is a pure function of
    (seed, shape), never of the parameters."""
    if not training or p == 0.0:
        return x
    rng = rng_for(seed, "dropout")
    keep = rng.random(size=x.shape) >= p
    return x * keep / (1.0 - p)


def _run_lstm(model: DetectorModel, x: np.ndarray) -> _Cache:
    """Unroll the recurrence over a (B, T, D) batch; zero initial state."""
    b_sz, t_len, _ = x.shape
    h_dim = model.config.hidden_size
    wx_t, wh_t = model.w_x.T, model.w_h.T

    shape = (t_len, b_sz, h_dim)
    cache = _Cache(
        x=np.ascontiguousarray(x.transpose(1, 0, 2)),
        i=np.empty(shape),
        f=np.empty(shape),
        g=np.empty(shape),
        o=np.empty(shape),
        c_prev=np.empty(shape),
        tanh_c=np.empty(shape),
        h_prev=np.empty(shape),
        h=np.empty(shape),
    )
    h = np.zeros((b_sz, h_dim))
    c = np.zeros((b_sz, h_dim))
    for t in range(t_len):
        a = cache.x[t] @ wx_t + h @ wh_t + model.b
        i = _sigmoid(a[:, :h_dim])
        f = _sigmoid(a[:, h_dim : 2 * h_dim])
        g = np.tanh(a[:, 2 * h_dim : 3 * h_dim])
        o = _sigmoid(a[:, 3 * h_dim :])
        cache.i[t], cache.f[t], cache.g[t], cache.o[t] = i, f, g, o
        cache.c_prev[t] = c
        cache.h_prev[t] = h
        c = f * c + i * g
        tc = np.tanh(c)
        cache.tanh_c[t] = tc
        h = o * tc
        cache.h[t] = h
    return cache


def _backward_lstm(
    model: DetectorModel, cache: _Cache, dh_head: np.ndarray
) -> dict[str, np.ndarray]:
    """BPTT given the head's gradient on every hidden state (T, B, H)."""
    h_dim = model.config.hidden_size
    t_len, b_sz, _ = dh_head.shape
    d_wx = np.zeros_like(model.w_x)
    d_wh = np.zeros_like(model.w_h)
    d_b = np.zeros_like(model.b)
    dh_next = np.zeros((b_sz, h_dim))
    dc_next = np.zeros((b_sz, h_dim))
    da = np.empty((b_sz, 4 * h_dim))
    for t in range(t_len - 1, -1, -1):
        i, f, g, o = cache.i[t], cache.f[t], cache.g[t], cache.o[t]
        tc = cache.tanh_c[t]
        dh = dh_head[t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * cache.c_prev[t]
        da[:, :h_dim] = di * i * (1.0 - i)
        da[:, h_dim : 2 * h_dim] = df * f * (1.0 - f)
        da[:, 2 * h_dim : 3 * h_dim] = dg * (1.0 - g * g)
        da[:, 3 * h_dim :] = do * o * (1.0 - o)
        d_wx += da.T @ cache.x[t]
        d_wh += da.T @ cache.h_prev[t]
        d_b += da.sum(axis=0)
        dh_next = da @ model.w_h
        dc_next = dc * f
    return {"w_x": d_wx, "w_h": d_wh, "b": d_b}


def _stack_batch(
    model: DetectorModel, batch: Sequence[LabeledFeatures] | Sequence[Segment]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pad to (B, T, D); returns (x, lengths, labels).

    Frame mode labels are (B, T) ints; segment mode labels are (B,) ints.
    """
    d = model.config.input_dim
    for item in batch:
        if item.features.ndim != 2 or item.features.shape[1] != d:
            raise DimensionMismatch(
                f"{item.video_id}: features have width "
                f"{item.features.shape[-1]}, model expects {d}"
            )
    lengths = np.asarray([len(item.features) for item in batch], dtype=np.int64)
    t_max = int(lengths.max())
    x = np.zeros((len(batch), t_max, d))
    for bi, item in enumerate(batch):
        x[bi, : lengths[bi]] = item.features
    if model.config.mode == FRAME:
        labels = np.zeros((len(batch), t_max), dtype=np.int64)
        for bi, item in enumerate(batch):
            if item.labels is None:
                raise ConfigError(f"{item.video_id}: frame mode requires labels")
            labels[bi, : lengths[bi]] = np.asarray(item.labels, dtype=np.int64)
    else:
        labels = np.asarray([int(item.label) for item in batch], dtype=np.int64)
    return x, lengths, labels


def _head_logits(model: DetectorModel, cache: _Cache, lengths: np.ndarray):
    """Logits per unit: (T, B, 2) in frame mode, (B, 2) in segment mode."""
    if model.config.mode == FRAME:
        return cache.h @ model.w_out.T + model.b_out
    last = cache.h[lengths - 1, np.arange(len(lengths))]
    return last @ model.w_out.T + model.b_out


def forward(
    model: DetectorModel,
    sequence: np.ndarray,
    training: bool = False,
    seed: int = 0,
) -> np.ndarray:
    """Logits for one sequence: (T, 2) in frame mode, (2,) in segment mode."""
    model.validate()
    sequence = np.asarray(sequence, dtype=np.float64)
    if sequence.ndim != 2 or sequence.shape[1] != model.config.input_dim:
        raise DimensionMismatch(
            f"sequence shape {sequence.shape} does not match input_dim "
            f"{model.config.input_dim}"
        )
    x = _dropout_inputs(
        sequence[None, :, :], model.config.dropout_p, training, seed
    )
    cache = _run_lstm(model, x)
    lengths = np.asarray([sequence.shape[0]])
    logits = _head_logits(model, cache, lengths)
    if model.config.mode == FRAME:
        return logits[:, 0, :]
    return logits[0]


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def loss_and_gradients(
    model: DetectorModel,
    batch: Sequence[LabeledFeatures] | Sequence[Segment],
    seed: int = 0,
    training: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over labeled units and gradients for every
    parameter via backpropagation through time."""
    if not batch:
        raise EmptySetError("empty batch")
    x, lengths, labels = _stack_batch(model, batch)
    x = _dropout_inputs(x, model.config.dropout_p, training, seed)
    cache = _run_lstm(model, x)
    logits = _head_logits(model, cache, lengths)
    log_p = _log_softmax(logits)

    t_len, b_sz = cache.h.shape[0], cache.h.shape[1]
    if model.config.mode == FRAME:
        valid = (np.arange(t_len)[:, None] < lengths[None, :])  # (T, B)
        n_units = int(lengths.sum())
        picked = np.take_along_axis(
            log_p, labels.T[:, :, None], axis=2
        )[:, :, 0]
        loss = -(picked * valid).sum() / n_units
        d_logits = np.exp(log_p)
        rows = np.zeros_like(d_logits)
        np.put_along_axis(rows, labels.T[:, :, None], 1.0, axis=2)
        d_logits = (d_logits - rows) * valid[:, :, None] / n_units
        d_w_out = np.einsum("tbo,tbh->oh", d_logits, cache.h)
        d_b_out = d_logits.sum(axis=(0, 1))
        dh_head = d_logits @ model.w_out
    else:
        n_units = b_sz
        picked = log_p[np.arange(b_sz), labels]
        loss = -picked.sum() / n_units
        d_logits = np.exp(log_p)
        d_logits[np.arange(b_sz), labels] -= 1.0
        d_logits /= n_units
        last = cache.h[lengths - 1, np.arange(b_sz)]
        d_w_out = d_logits.T @ last
        d_b_out = d_logits.sum(axis=0)
        dh_head = np.zeros((t_len, b_sz, model.config.hidden_size))
        dh_head[lengths - 1, np.arange(b_sz)] = d_logits @ model.w_out

    if not np.isfinite(loss):
        raise NonFiniteLossError(f"loss is {loss!r}")
    grads = _backward_lstm(model, cache, dh_head)
    grads["w_out"] = d_w_out
    grads["b_out"] = d_b_out
    return float(loss), grads


def evaluate(
    model: DetectorModel,
    eval_set: Sequence[LabeledFeatures] | Sequence[Segment],
    batch_size: int = 64,
) -> EvalResult:
    """Argmax decision per unit; signing (class 1) is the positive class."""
    if not eval_set:
        raise EmptySetError("empty evaluation set")
    tp = fp = tn = fn = 0
    for start in range(0, len(eval_set), batch_size):
        batch = eval_set[start : start + batch_size]
        x, lengths, labels = _stack_batch(model, batch)
        cache = _run_lstm(model, x)
        logits = _head_logits(model, cache, lengths)
        if model.config.mode == FRAME:
            pred = logits.argmax(axis=2)  # (T, B)
            valid = np.arange(cache.h.shape[0])[:, None] < lengths[None, :]
            pred_flat = pred.T[valid.T]
            true_flat = labels[valid.T]
        else:
            pred_flat = logits.argmax(axis=1)
            true_flat = labels
        tp += int(((pred_flat == 1) & (true_flat == 1)).sum())
        fp += int(((pred_flat == 1) & (true_flat == 0)).sum())
        tn += int(((pred_flat == 0) & (true_flat == 0)).sum())
        fn += int(((pred_flat == 0) & (true_flat == 1)).sum())
    n_units = tp + fp + tn + fn
    return EvalResult(
        accuracy=(tp + tn) / n_units, tp=tp, fp=fp, tn=tn, fn=fn, n_units=n_units
    )


def train(
    model: DetectorModel,
    train_set: Sequence[LabeledFeatures] | Sequence[Segment],
    dev_set: Sequence[LabeledFeatures] | Sequence[Segment],
    tcfg: TrainConfig,
) -> tuple[DetectorModel, list[float]]:
    """Adam over shuffled minibatches; returns the parameters of the epoch
    with the best dev accuracy and the full per-epoch dev-accuracy history."""
    tcfg.validate()
    model.validate()
    if not train_set or not dev_set:
        raise EmptySetError("train and dev sets must be non-empty")

    model = model.copy()
    params = model.parameters()
    m_state = {k: np.zeros_like(p) for k, p in params.items()}
    v_state = {k: np.zeros_like(p) for k, p in params.items()}
    step = 0
    history: list[float] = []
    best_acc = -1.0
    best_params = {k: p.copy() for k, p in params.items()}

    order = np.arange(len(train_set))
    for epoch in range(tcfg.epochs):
        rng = rng_for(tcfg.seed, f"train-shuffle:{epoch}")
        rng.shuffle(order)
        for start in range(0, len(order), tcfg.batch_size):
            batch = [train_set[i] for i in order[start : start + tcfg.batch_size]]
            step += 1
            loss, grads = loss_and_gradients(
                model,
                batch,
                seed=derive_seed(tcfg.seed, f"train-dropout:{epoch}:{start}"),
            )
            if not np.isfinite(loss):
                raise DivergedError(f"non-finite loss at epoch {epoch}")
            for name, p in params.items():
                g = grads[name]
                m_state[name] = tcfg.beta1 * m_state[name] + (1 - tcfg.beta1) * g
                v_state[name] = tcfg.beta2 * v_state[name] + (1 - tcfg.beta2) * g * g
                m_hat = m_state[name] / (1 - tcfg.beta1**step)
                v_hat = v_state[name] / (1 - tcfg.beta2**step)
                p -= tcfg.learning_rate * m_hat / (np.sqrt(v_hat) + tcfg.adam_eps)
            if not all(np.isfinite(p).all() for p in params.values()):
                raise DivergedError(f"non-finite parameters at epoch {epoch}")
        acc = evaluate(model, dev_set).accuracy
        history.append(acc)
        if acc > best_acc:
            best_acc = acc
            best_params = {k: p.copy() for k, p in params.items()}

    best = DetectorModel(config=model.config, **best_params)
    return best, history


def relative_decrease(acc_overlap: float, acc_no_overlap: float) -> float:
    """Relative accuracy drop in percent: 100 * (a - b) / a."""
    if acc_overlap == 0:
        raise ZeroDivisionError("acc_overlap must be > 0")
    return 100.0 * (acc_overlap - acc_no_overlap) / acc_overlap


# -- checkpoints ---------------------------------------------------------------


def save_checkpoint(model: DetectorModel, path: str | Path) -> None:
    """Text header line (config + tensor directory) followed by row-major
    little-endian float64 tensor data."""
    import json
    import os
    import tempfile

    model.validate()
    params = model.parameters()
    header = {
        "format": CHECKPOINT_FORMAT,
        "config": {
            "input_dim": model.config.input_dim,
            "hidden_size": model.config.hidden_size,
            "dropout_p": model.config.dropout_p,
            "mode": model.config.mode,
            "seed": model.config.seed,
        },
        "dtype": "<f8",
        "tensors": [
            {"name": name, "shape": list(p.shape)} for name, p in params.items()
        ],
    }
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        umask = os.umask(0)
        os.umask(umask)
        os.fchmod(fd, 0o666 & ~umask)
        with os.fdopen(fd, "wb") as fh:
            fh.write((json.dumps(header, separators=(",", ":")) + "\n").encode())
            for p in params.values():
                fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str | Path) -> DetectorModel:
    import json

    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(str(path), 1, "malformed checkpoint header") from exc
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ParseError(str(path), 1, f"unknown format {header.get('format')!r}")
        cfg = DetectorConfig(**header["config"])
        arrays = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise ParseError(str(path), 1, f"truncated tensor {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    model = DetectorModel(config=cfg, **arrays)
    model.validate()
    return model
