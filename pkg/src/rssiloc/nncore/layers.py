"""Stateful layer wrappers around the kernels in ``ops``.

Each layer caches what its backward pass needs during ``forward`` and fills
``grads`` (same keys as ``params``) during ``backward``.
"""
from __future__ import annotations

import numpy as np

from rssiloc.nncore import ops


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int, rng):
        super().__init__()
        self.params = {"w": ops.xavier_init(n_in, n_out, rng), "b": np.zeros(n_out)}

    def forward(self, x, training=False):
        self._x = x
        return ops.dense_forward(x, self.params["w"], self.params["b"])

    def backward(self, dy):
        dx, dw, db = ops.dense_backward(dy, self._x, self.params["w"])
        self.grads = {"w": dw, "b": db}
        return dx


class ReLU(Layer):
    def forward(self, x, training=False):
        self._x = x
        return ops.relu_forward(x)

    def backward(self, dy):
        return ops.relu_backward(dy, self._x)


class Conv2D(Layer):
    def __init__(self, c_in: int, c_out: int, rng, size: int = 3):
        super().__init__()
        self.params = {
            "w": ops.xavier_init(size * size * c_in, size * size * c_out, rng,
                                 shape=(size, size, c_in, c_out)),
            "b": np.zeros(c_out),
        }

    def forward(self, x, training=False):
        self._x = x
        return ops.conv2d_forward(x, self.params["w"], self.params["b"])

    def backward(self, dy):
        dx, dw, db = ops.conv2d_backward(dy, self._x, self.params["w"])
        self.grads = {"w": dw, "b": db}
        return dx


class MaxPool2D(Layer):
    def __init__(self, size: int = 3):
        super().__init__()
        self.size = size

    def forward(self, x, training=False):
        self._x = x
        return ops.maxpool_forward(x, self.size)

    def backward(self, dy):
        return ops.maxpool_backward(dy, self._x, self.size)


class Dropout(Layer):
    def __init__(self, keep_prob: float, rng):
        super().__init__()
        if not 0 < keep_prob <= 1:
            raise ValueError(f"keep_prob must be in (0, 1], got {keep_prob}")
        self.keep_prob = keep_prob
        self.rng = ops.as_rng(rng)

    def forward(self, x, training=False):
        y, self._mask = ops.dropout(x, self.keep_prob, training, self.rng)
        return y

    def backward(self, dy):
        return ops.dropout_backward(dy, self._mask)


class Reshape(Layer):
    """Reshape everything after the batch axis; ``shape=(-1,)`` flattens."""

    def __init__(self, shape: tuple[int, ...]):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x, training=False):
        self._in_shape = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def backward(self, dy):
        return dy.reshape(self._in_shape)


class LSTM(Layer):
    """Unrolled LSTM over ``[B, T, in]``; state starts at zero for every sequence.

    With ``return_sequences=False`` only the final step's ``h`` is emitted.
    """

    def __init__(self, n_in: int, units: int, rng, return_sequences: bool = True,
                 forget_bias: float = 1.0):
        super().__init__()
        rng = ops.as_rng(rng)
        w = np.concatenate([ops.xavier_init(n_in + units, units, rng) for _ in range(4)], axis=1)
        b = np.zeros(4 * units)
        b[2 * units:3 * units] = forget_bias
        self.params = {"w": w, "b": b}
        self.units = units
        self.return_sequences = return_sequences

    def forward(self, x, training=False):
        hs, self._caches = ops.lstm_forward(x, self.params["w"], self.params["b"])
        self._T = x.shape[1]
        return hs if self.return_sequences else hs[:, -1, :]

    def backward(self, dy):
        if self.return_sequences:
            dhs = dy
        else:
            dhs = np.zeros((dy.shape[0], self._T, self.units))
            dhs[:, -1, :] = dy
        dx, dw, db = ops.lstm_backward(dhs, self._caches, self.params["w"])
        self.grads = {"w": dw, "b": db}
        return dx
