"""Distance-bin error metrics and the path-loss inversion baseline.

For a true bin ``x`` and predicted bin ``y`` the worst-case distance error is
``|x - y| * l_bin + l_bin / 2``; the average of that bound over a test set is
the headline error figure, next to plain bin accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rssiloc.channel import ChannelParams
from rssiloc.pipeline import BinningSpec, bin_indices


def e_max(x: int, y: int, l_bin: float) -> float:
    return abs(int(x) - int(y)) * l_bin + l_bin / 2.0


def _check_pair(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"label vectors must be 1-D and equal length, got {xs.shape} and {ys.shape}")
    if len(xs) == 0:
        raise ValueError("need at least one test case")
    return xs, ys


def avg_upper_bound(xs, ys, l_bin: float) -> float:
    xs, ys = _check_pair(xs, ys)
    return float(np.mean(np.abs(xs - ys)) * l_bin + l_bin / 2.0)


def classification_accuracy(xs, ys) -> float:
    xs, ys = _check_pair(xs, ys)
    return float(np.mean(xs == ys))


def confusion_matrix(xs, ys, n_bins: int) -> np.ndarray:
    """Counts indexed [true, predicted]."""
    xs, ys = _check_pair(xs, ys)
    cm = np.zeros((n_bins, n_bins), dtype=np.int64)
    np.add.at(cm, (xs, ys), 1)
    return cm


def avg_upper_bound_from_confusion(cm: np.ndarray, l_bin: float) -> float:
    n = cm.sum()
    if n == 0:
        raise ValueError("empty confusion matrix")
    k = np.arange(cm.shape[0])
    gap = np.abs(k[:, None] - k[None, :])
    return float((cm * gap).sum() / n * l_bin + l_bin / 2.0)


def baseline_pathloss_distance(rssi, params: ChannelParams):
    """Invert the mean path-loss model: d = d0 * 10 ** ((p0 - rssi) / (10 * gamma))."""
    d = params.d0 * np.power(10.0, (params.p0 - np.asarray(rssi, dtype=float)) / (10.0 * params.gamma))
    return float(d) if np.ndim(d) == 0 else d


@dataclass
class MetricsReport:
    accuracy: float
    confidence_bound_m: float
    avg_upper_bound_m: float
    per_bin_confusion: np.ndarray
    n_cases: int
    name: str = ""
    mean_abs_error_m: float | None = None

    def row(self) -> dict[str, str]:
        return {
            "dataset": self.name,
            "confidence_pct": f"{100.0 * self.accuracy:.2f}",
            "confidence_bound_cm": f"{100.0 * self.confidence_bound_m:.3f}",
            "avg_upper_bound_cm": f"{100.0 * self.avg_upper_bound_m:.3f}",
            "n_cases": str(self.n_cases),
        }


def evaluate(xs, ys, spec: BinningSpec, name: str = "", true_distances=None,
             predicted_distances=None) -> MetricsReport:
    xs, ys = _check_pair(xs, ys)
    mae = None
    if true_distances is not None and predicted_distances is not None:
        mae = float(np.mean(np.abs(np.asarray(true_distances) - np.asarray(predicted_distances))))
    return MetricsReport(
        accuracy=classification_accuracy(xs, ys),
        confidence_bound_m=spec.l_bin / 2.0,
        avg_upper_bound_m=avg_upper_bound(xs, ys, spec.l_bin),
        per_bin_confusion=confusion_matrix(xs, ys, spec.n_bins),
        n_cases=len(xs),
        name=name,
        mean_abs_error_m=mae,
    )


def baseline_bins(rssi, params: ChannelParams, spec: BinningSpec) -> tuple[np.ndarray, np.ndarray]:
    """Baseline distance estimates clamped into the bin range, and their bins."""
    d = np.atleast_1d(baseline_pathloss_distance(rssi, params))
    eps = 1e-9 * spec.l_bin
    clamped = np.clip(d, spec.d_min, spec.d_max - eps)
    return bin_indices(clamped, spec), d


COLUMNS = ("dataset", "confidence_pct", "confidence_bound_cm", "avg_upper_bound_cm", "n_cases")


def format_table(reports: list[MetricsReport]) -> str:
    """Aligned text table in the layout: dataset, confidence %, average upper bound."""
    rows = [dict(zip(COLUMNS, COLUMNS))] + [r.row() for r in reports]
    widths = {c: max(len(row[c]) for row in rows) for c in COLUMNS}
    lines = ["  ".join(row[c].ljust(widths[c]) if c == "dataset" else row[c].rjust(widths[c])
                       for c in COLUMNS) for row in rows]
    return "\n".join(lines) + "\n"


def write_metrics_csv(path: str | Path, reports: list[MetricsReport]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for r in reports:
            row = r.row()
            fh.write(",".join(row[c] for c in COLUMNS) + "\n")
