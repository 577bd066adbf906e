"""RSSI preprocessing and the distance-bin classification framing.

Order of operations is fixed: gap fill, median filter, per-node
normalization (statistics from the training segment only), then sliding
windows of shape ``[count, W, N]`` labeled by the bin of the window's last tick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from rssiloc import N_NODES
from rssiloc.netsim import Dataset, RssiRecord

STEPS = ("gap_fill", "median_filter", "normalize", "window")
TENSOR_CACHE_VERSION = 1
STD_FLOOR = 1e-8


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class BinningSpec:
    d_min: float = 0.0151
    n_bins: int = 30
    l_bin: float = 0.1173

    def __post_init__(self):
        if not self.l_bin > 0:
            raise ValueError(f"l_bin must be > 0, got {self.l_bin}")
        if self.n_bins < 2:
            raise ValueError(f"n_bins must be >= 2, got {self.n_bins}")

    @property
    def d_max(self) -> float:
        return self.d_min + self.n_bins * self.l_bin


def bin_index(d: float, spec: BinningSpec) -> int:
    if not spec.d_min <= d < spec.d_max:
        raise LabelError(f"distance {d} m outside bin range [{spec.d_min}, {spec.d_max})")
    return min(int(math.floor((d - spec.d_min) / spec.l_bin)), spec.n_bins - 1)


def bin_indices(d: np.ndarray, spec: BinningSpec) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    bad = (d < spec.d_min) | (d >= spec.d_max) | ~np.isfinite(d)
    if bad.any():
        first = d[bad][0]
        raise LabelError(f"{int(bad.sum())} distances outside bin range "
                         f"[{spec.d_min}, {spec.d_max}), e.g. {first}")
    idx = np.floor((d - spec.d_min) / spec.l_bin).astype(np.int64)
    return np.minimum(idx, spec.n_bins - 1)


def bin_center(i, spec: BinningSpec):
    i_arr = np.asarray(i)
    if np.any(i_arr < 0) or np.any(i_arr >= spec.n_bins):
        raise LabelError(f"bin index out of range [0, {spec.n_bins}): {i}")
    centers = spec.d_min + (i_arr + 0.5) * spec.l_bin
    return float(centers) if centers.ndim == 0 else centers


def median_filter(series, window: int) -> np.ndarray:
    """Centered running median with edge replication; output length == input length."""
    x = np.asarray(series, dtype=float)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"median window must be a positive odd integer, got {window}")
    if window > len(x):
        raise ValueError(f"median window {window} exceeds series length {len(x)}")
    if window == 1:
        return x.copy()
    half = window // 2
    padded = np.pad(x, half, mode="edge")
    return np.median(sliding_window_view(padded, window), axis=-1)


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray


def fit_normalize(train_series_per_node) -> NormStats:
    """Per-column mean and population std; ``train_series_per_node`` is [T, N] or 1-D."""
    x = np.asarray(train_series_per_node, dtype=float)
    if x.size == 0:
        raise ValueError("cannot fit normalization on an empty series")
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), STD_FLOOR)
    return NormStats(mean=np.atleast_1d(mean), std=np.atleast_1d(std))


def apply_normalize(series, stats: NormStats) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    out = (x - stats.mean) / stats.std
    return out.reshape(x.shape)


def gap_fill(records: list[RssiRecord], n_ticks: int, n_nodes: int = N_NODES) -> np.ndarray:
    """Dense [T, N] RSSI matrix indexed by tick (= seq).

    Missing reports are carried forward from the last observation; a node's
    leading gap takes its first observation.
    """
    out = np.full((n_ticks, n_nodes), np.nan)
    for r in records:
        if r.seq < n_ticks:
            out[r.seq, r.node_id] = r.rssi_dbm
    for j in range(n_nodes):
        col = out[:, j]
        seen = np.flatnonzero(~np.isnan(col))
        if len(seen) == 0:
            raise ValueError(f"node {j} has no records")
        col[: seen[0]] = col[seen[0]]
        idx = np.where(np.isnan(col), 0, np.arange(n_ticks))
        np.maximum.accumulate(idx, out=idx)
        out[:, j] = col[idx]
    return out


@dataclass
class WindowBatch:
    inputs: np.ndarray  # [count, W, N]
    labels: np.ndarray  # [count]

    def __len__(self):
        return len(self.labels)

    @property
    def window(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> WindowBatch:
        return WindowBatch(self.inputs[idx], self.labels[idx])

    def batches(self, batch_size: int):
        for start in range(0, len(self), batch_size):
            yield self.subset(slice(start, start + batch_size))


def make_windows(rssi: np.ndarray, distances: np.ndarray, spec: BinningSpec, W: int,
                 stride: int = 1) -> WindowBatch:
    """Window ``w`` covers ticks ``[w*stride, w*stride + W)``; its label is the bin of
    the last tick's distance."""
    x = np.asarray(rssi, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    T, N = x.shape
    if W < 1 or stride < 1:
        raise ValueError(f"window and stride must be >= 1, got W={W}, stride={stride}")
    if len(distances) != T:
        raise ValueError(f"{T} RSSI ticks but {len(distances)} distances")
    if T < W:
        return WindowBatch(np.empty((0, W, N)), np.empty(0, dtype=np.int64))
    views = sliding_window_view(x, W, axis=0)[::stride]  # [count, N, W]
    inputs = np.ascontiguousarray(views.transpose(0, 2, 1))
    last = np.arange(W - 1, T, stride)
    labels = bin_indices(np.asarray(distances)[last], spec)
    return WindowBatch(inputs, labels)


@dataclass
class Preprocessed:
    train: WindowBatch
    val: WindowBatch
    test: WindowBatch
    stats: NormStats
    spec: BinningSpec
    meta: dict[str, str] = field(default_factory=dict)
    test_raw_target: np.ndarray | None = None
    test_distances: np.ndarray | None = None


def split_bounds(T: int, train: float = 0.7, val: float = 0.15) -> tuple[int, int]:
    if not (0 < train < 1 and 0 <= val < 1 and train + val < 1):
        raise ValueError(f"bad split fractions train={train} val={val}")
    a = int(T * train)
    b = a + int(T * val)
    return a, b


def preprocess(ds: Dataset, spec: BinningSpec = BinningSpec(), W: int = 20, stride: int = 1,
               median_window: int = 5, filter_rssi: bool = True, filter_distance: bool = True,
               train_frac: float = 0.7, val_frac: float = 0.15) -> Preprocessed:
    """Turn a dataset into normalized train/val/test windows.

    Splits are contiguous in time; each segment is windowed on its own so no
    window straddles a boundary.
    """
    T = ds.n_ticks()
    raw = gap_fill(ds.records, T)
    rssi = raw
    if filter_rssi:
        rssi = np.column_stack([median_filter(rssi[:, j], median_window) for j in range(rssi.shape[1])])
    dist = np.asarray(ds.truth.distances, dtype=float)
    if filter_distance:
        dist = median_filter(dist, median_window)

    a, b = split_bounds(T, train_frac, val_frac)
    stats = fit_normalize(rssi[:a])
    norm = apply_normalize(rssi, stats)
    segments = [(0, a), (a, b), (b, T)]
    train, val, test = (make_windows(norm[s:e], dist[s:e], spec, W, stride) for s, e in segments)
    for name, part in (("train", train), ("val", val), ("test", test)):
        if len(part) == 0:
            raise ValueError(f"{name} split has no windows (T={T}, W={W})")

    meta = {
        "steps": ",".join(STEPS),
        "ticks": str(T),
        "window": str(W),
        "stride": str(stride),
        "median_window": str(median_window),
        "filter_rssi": str(filter_rssi).lower(),
        "filter_distance": str(filter_distance).lower(),
        "split": f"{a},{b},{T}",
    }
    # raw (unnormalized) test-segment target RSSI at each window's last tick, for the baseline
    last = np.arange(W - 1, T - b, stride) + b
    return Preprocessed(train, val, test, stats, spec, meta,
                        test_raw_target=rssi[last, -1].copy(), test_distances=dist[last].copy())


def save_tensors(path: str | Path, pre: Preprocessed) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh,
                 version=np.array([TENSOR_CACHE_VERSION]),
                 train_x=pre.train.inputs, train_y=pre.train.labels,
                 val_x=pre.val.inputs, val_y=pre.val.labels,
                 test_x=pre.test.inputs, test_y=pre.test.labels,
                 norm_mean=pre.stats.mean, norm_std=pre.stats.std,
                 spec=np.array([pre.spec.d_min, pre.spec.n_bins, pre.spec.l_bin]),
                 test_raw_target=pre.test_raw_target, test_distances=pre.test_distances,
                 meta=np.array([f"{k}={v}" for k, v in pre.meta.items()]))


def load_tensors(path: str | Path) -> Preprocessed:
    with np.load(path, allow_pickle=False) as z:
        version = int(z["version"][0])
        if version != TENSOR_CACHE_VERSION:
            raise ValueError(f"tensor cache version {version}, expected {TENSOR_CACHE_VERSION}")
        d_min, n_bins, l_bin = z["spec"].tolist()
        meta = dict(item.split("=", 1) for item in z["meta"].tolist())
        return Preprocessed(
            train=WindowBatch(z["train_x"], z["train_y"]),
            val=WindowBatch(z["val_x"], z["val_y"]),
            test=WindowBatch(z["test_x"], z["test_y"]),
            stats=NormStats(z["norm_mean"], z["norm_std"]),
            spec=BinningSpec(d_min, int(n_bins), l_bin),
            meta=meta,
            test_raw_target=z["test_raw_target"],
            test_distances=z["test_distances"],
        )
