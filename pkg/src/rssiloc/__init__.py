"""Indoor WiFi RSSI distance estimation: channel simulation, preprocessing,
from-scratch FCN/CNN/LSTM classifiers and error metrics."""

__version__ = "0.1.0"

TICK_MS = 50
N_NODES = 5
TARGET_NODE = 4
