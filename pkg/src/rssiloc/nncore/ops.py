"""Forward/backward kernels on float64 numpy arrays.

Layouts: dense weights are ``[in, out]``; images are NHWC; conv kernels are
``[kh, kw, cin, cout]``; LSTM weights are one ``[in + units, 4 * units]``
matrix with gate blocks ordered (input, candidate, forget, output).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    pass


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def xavier_init(fan_in: int, fan_out: int, seed=0, shape=None) -> np.ndarray:
    """Glorot-uniform draw in [-a, a], a = sqrt(6 / (fan_in + fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fan_in and fan_out must be >= 1, got {fan_in}, {fan_out}")
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return as_rng(seed).uniform(-a, a, size=shape if shape is not None else (fan_in, fan_out))


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


# dense ---------------------------------------------------------------------

def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeError(f"dense: x {x.shape} incompatible with w {w.shape}, b {b.shape}")
    return x @ w + b


def dense_backward(dy: np.ndarray, x: np.ndarray, w: np.ndarray):
    """Returns (dx, dw, db)."""
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def relu_forward(x):
    return np.maximum(x, 0.0)


def relu_backward(dy, x):
    return dy * (x > 0)


# convolution and pooling ----------------------------------------------------

def _im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # [B, H, W, C, kh, kw]
    B, H, W, C = x.shape
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(B * H * W, kh * kw * C)


def conv2d_forward(x: np.ndarray, k: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Same-padded stride-1 cross-correlation. x: [B, H, W, Cin], k: [kh, kw, Cin, Cout]."""
    if x.ndim != 4 or k.ndim != 4 or x.shape[3] != k.shape[2]:
        raise ShapeError(f"conv2d: x {x.shape} incompatible with kernel {k.shape}")
    kh, kw, cin, cout = k.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d: same padding needs odd kernel sizes, got {k.shape}")
    B, H, W, _ = x.shape
    out = _im2col(x, kh, kw) @ k.reshape(kh * kw * cin, cout)
    if b is not None:
        out += b
    return out.reshape(B, H, W, cout)


def conv2d_backward(dy: np.ndarray, x: np.ndarray, k: np.ndarray):
    """Returns (dx, dk, db)."""
    kh, kw, cin, cout = k.shape
    B, H, W, _ = x.shape
    cols = _im2col(x, kh, kw)
    dy2 = dy.reshape(-1, cout)
    dk = (cols.T @ dy2).reshape(k.shape)
    db = dy2.sum(axis=0)
    dcols = (dy2 @ k.reshape(-1, cout).T).reshape(B, H, W, kh, kw, cin)
    ph, pw = kh // 2, kw // 2
    dxp = np.zeros((B, H + 2 * ph, W + 2 * pw, cin))
    for i in range(kh):
        for j in range(kw):
            dxp[:, i:i + H, j:j + W, :] += dcols[:, :, :, i, j, :]
    return dxp[:, ph:ph + H, pw:pw + W, :], dk, db


def pool_output_shape(H: int, W: int, size: int) -> tuple[int, int]:
    return -(-H // size), -(-W // size)


def _pool_windows(x: np.ndarray, size: int) -> np.ndarray:
    B, H, W, C = x.shape
    Ho, Wo = pool_output_shape(H, W, size)
    xp = np.pad(x, ((0, 0), (0, Ho * size - H), (0, Wo * size - W), (0, 0)),
                constant_values=-np.inf)
    return xp.reshape(B, Ho, size, Wo, size, C).transpose(0, 1, 3, 5, 2, 4).reshape(B, Ho, Wo, C, size * size)


def maxpool_forward(x: np.ndarray, size: int = 3) -> np.ndarray:
    """Non-overlapping max pooling (stride == size); windows at the far edges are
    truncated to the input, i.e. output is ceil(H/size) x ceil(W/size)."""
    if x.ndim != 4:
        raise ShapeError(f"maxpool: expected NHWC input, got shape {x.shape}")
    return _pool_windows(x, size).max(axis=-1)


def maxpool_backward(dy: np.ndarray, x: np.ndarray, size: int = 3) -> np.ndarray:
    B, H, W, C = x.shape
    Ho, Wo = pool_output_shape(H, W, size)
    win = _pool_windows(x, size)
    arg = win.argmax(axis=-1)  # first maximum wins on ties
    dwin = np.zeros_like(win)
    np.put_along_axis(dwin, arg[..., None], dy[..., None], axis=-1)
    dxp = dwin.reshape(B, Ho, Wo, C, size, size).transpose(0, 1, 4, 2, 5, 3)
    return dxp.reshape(B, Ho * size, Wo * size, C)[:, :H, :W, :]


# dropout ---------------------------------------------------------------------

def dropout(x: np.ndarray, keep_prob: float, training: bool, rng=None):
    """Inverted dropout. Returns (y, mask); mask is None when nothing is dropped."""
    if not 0 < keep_prob <= 1:
        raise ValueError(f"keep_prob must be in (0, 1], got {keep_prob}")
    if not training or keep_prob == 1.0:
        return x, None
    mask = (as_rng(rng).random(x.shape) < keep_prob) / keep_prob
    return x * mask, mask


def dropout_backward(dy: np.ndarray, mask):
    return dy if mask is None else dy * mask


# loss ------------------------------------------------------------------------

def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch and its gradient w.r.t. the logits."""
    labels = np.asarray(labels)
    B, K = logits.shape
    if labels.shape != (B,):
        raise ShapeError(f"labels shape {labels.shape} does not match batch {B}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= K:
        raise ValueError(f"labels must lie in [0, {K})")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(B)
    loss = float(np.mean(log_norm - z[rows, labels]))
    grad = np.exp(z - log_norm[:, None])
    grad[rows, labels] -= 1.0
    return loss, grad / B


# LSTM ------------------------------------------------------------------------

class LstmState(NamedTuple):
    c: np.ndarray
    h: np.ndarray


def lstm_zero_state(batch: int, units: int) -> LstmState:
    return LstmState(np.zeros((batch, units)), np.zeros((batch, units)))


def lstm_cell_step(x: np.ndarray, state: LstmState, w: np.ndarray, b: np.ndarray):
    """One time step. Returns (new_state, cache) where cache feeds lstm_cell_backward.

        i = sigmoid(.)  g = tanh(.)  f = sigmoid(.)  o = sigmoid(.)
        c' = f * c + i * g
        h' = o * tanh(c')
    """
    units = state.h.shape[1]
    if x.shape[0] != state.h.shape[0] or w.shape != (x.shape[1] + units, 4 * units):
        raise ShapeError(f"lstm: x {x.shape}, h {state.h.shape} incompatible with w {w.shape}")
    xh = np.concatenate([x, state.h], axis=1)
    z = xh @ w + b
    i = sigmoid(z[:, :units])
    g = np.tanh(z[:, units:2 * units])
    f = sigmoid(z[:, 2 * units:3 * units])
    o = sigmoid(z[:, 3 * units:])
    c = f * state.c + i * g
    tc = np.tanh(c)
    h = o * tc
    return LstmState(c, h), (xh, state.c, i, g, f, o, tc)


def lstm_cell_backward(dh: np.ndarray, dc: np.ndarray, cache, w: np.ndarray):
    """Backprop one step. ``dh``/``dc`` are gradients w.r.t. this step's outputs.

    Returns (dx, dh_prev, dc_prev, dw, db).
    """
    xh, c_prev, i, g, f, o, tc = cache
    n_in = xh.shape[1] - i.shape[1]
    dc = dc + dh * o * (1.0 - tc * tc)
    dz = np.concatenate([
        dc * g * i * (1.0 - i),
        dc * i * (1.0 - g * g),
        dc * c_prev * f * (1.0 - f),
        dh * tc * o * (1.0 - o),
    ], axis=1)
    dxh = dz @ w.T
    return dxh[:, :n_in], dxh[:, n_in:], dc * f, xh.T @ dz, dz.sum(axis=0)


def lstm_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, state: LstmState | None = None):
    """Unroll over x: [B, T, in]. Returns (h_seq [B, T, units], caches)."""
    B, T, _ = x.shape
    units = w.shape[1] // 4
    state = state if state is not None else lstm_zero_state(B, units)
    hs = np.empty((B, T, units))
    caches = []
    for t in range(T):
        state, cache = lstm_cell_step(x[:, t, :], state, w, b)
        hs[:, t, :] = state.h
        caches.append(cache)
    return hs, caches


def lstm_backward(dhs: np.ndarray, caches, w: np.ndarray):
    """Backprop through time. ``dhs`` is dL/dh for every step [B, T, units].

    Returns (dx [B, T, in], dw, db).
    """
    B, T, units = dhs.shape
    n_in = w.shape[0] - units
    dx = np.empty((B, T, n_in))
    dw = np.zeros_like(w)
    db = np.zeros(w.shape[1])
    dh_next = np.zeros((B, units))
    dc_next = np.zeros((B, units))
    for t in range(T - 1, -1, -1):
        dxt, dh_next, dc_next, dwt, dbt = lstm_cell_backward(dhs[:, t, :] + dh_next, dc_next, caches[t], w)
        dx[:, t, :] = dxt
        dw += dwt
        db += dbt
    return dx, dw, db
