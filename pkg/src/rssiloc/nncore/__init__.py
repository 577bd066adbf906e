from rssiloc.nncore.checkpoint import load_checkpoint, save_checkpoint
from rssiloc.nncore.layers import LSTM, Conv2D, Dense, Dropout, Layer, MaxPool2D, ReLU, Reshape
from rssiloc.nncore.ops import (
    LstmState,
    ShapeError,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    dropout,
    lstm_backward,
    lstm_cell_backward,
    lstm_cell_step,
    lstm_forward,
    lstm_zero_state,
    maxpool_backward,
    maxpool_forward,
    softmax,
    softmax_cross_entropy,
    xavier_init,
)
from rssiloc.nncore.optim import AdamState, adam_step, clip_elementwise, clip_global_norm, global_norm

__all__ = [
    "AdamState", "Conv2D", "Dense", "Dropout", "LSTM", "Layer", "LstmState", "MaxPool2D", "ReLU",
    "Reshape", "ShapeError", "adam_step", "clip_elementwise", "clip_global_norm", "conv2d_backward",
    "conv2d_forward", "dense_backward", "dense_forward", "dropout", "global_norm", "load_checkpoint",
    "lstm_backward", "lstm_cell_backward", "lstm_cell_step", "lstm_forward", "lstm_zero_state",
    "maxpool_backward", "maxpool_forward", "save_checkpoint", "softmax", "softmax_cross_entropy",
    "xavier_init",
]
