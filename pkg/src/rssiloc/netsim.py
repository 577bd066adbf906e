"""Star-network acquisition: five nodes report RSSI every tick to a coordinator.

Wire format, one ASCII line per report::

    node_id,seq,timestamp_ms,rssi_dbm\\n

with ``rssi_dbm`` printed to exactly two decimals.  A dataset directory holds
``records.csv``, ``truth.csv`` and ``meta.txt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rssiloc import N_NODES, TARGET_NODE, TICK_MS
from rssiloc.channel import ChannelParams, NodeChannel
from rssiloc.kvfile import format_kv, parse_kv
from rssiloc.scenario import Arena, GroundTruth, Trajectory, sample_ground_truth

RECORDS_HEADER = "node_id,seq,timestamp_ms,rssi_dbm"
TRUTH_HEADER = "timestamp_ms,distance_m"
RECORDS_FILE = "records.csv"
TRUTH_FILE = "truth.csv"
META_FILE = "meta.txt"


class ParseError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class RssiRecord:
    node_id: int
    seq: int
    timestamp_ms: int
    rssi_dbm: float


def quantize_rssi(value: float) -> float:
    """Round to the wire resolution; -0.0 is folded to 0.0."""
    return round(float(value), 2) + 0.0


def encode_record(r: RssiRecord) -> bytes:
    return f"{r.node_id},{r.seq},{r.timestamp_ms},{r.rssi_dbm + 0.0:.2f}\n".encode("ascii")


def _int_field(name: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(name, f"non-numeric value {text!r}") from None


def decode_record(line: bytes | str) -> RssiRecord:
    if isinstance(line, bytes):
        try:
            line = line.decode("ascii")
        except UnicodeDecodeError:
            raise ParseError("line", "not ASCII") from None
    parts = line.rstrip("\r\n").split(",")
    if len(parts) != 4:
        raise ParseError("line", f"expected 4 fields, got {len(parts)}")
    node_id = _int_field("node_id", parts[0])
    seq = _int_field("seq", parts[1])
    timestamp_ms = _int_field("timestamp_ms", parts[2])
    try:
        rssi = float(parts[3])
    except ValueError:
        raise ParseError("rssi_dbm", f"non-numeric value {parts[3]!r}") from None
    if not math.isfinite(rssi):
        raise ParseError("rssi_dbm", f"non-finite value {parts[3]!r}")
    if not 0 <= node_id < N_NODES:
        raise ParseError("node_id", f"out of range: {node_id}")
    if seq < 0:
        raise ParseError("seq", f"negative: {seq}")
    return RssiRecord(node_id, seq, timestamp_ms, rssi + 0.0)


@dataclass
class Dataset:
    records: list[RssiRecord]
    truth: GroundTruth
    meta: dict[str, str] = field(default_factory=dict)

    def n_ticks(self) -> int:
        return len(self.truth)

    def per_node(self, node_id: int) -> list[RssiRecord]:
        return [r for r in self.records if r.node_id == node_id]


def run_acquisition(arena: Arena, traj: Trajectory, params_per_node: list[ChannelParams],
                    loss_prob: float = 0.0, seed: int = 0, truth_noise_mm: float = 4.0,
                    meta: dict[str, str] | None = None) -> Dataset:
    """Simulate every tick of ``traj`` for the four fixed nodes and the target.

    Fixed node ``i`` (0-3) measures its constant distance to the WAP; node 4
    measures the target's current distance.  Each report is dropped
    independently with ``loss_prob``; sequence numbers still advance, so a
    drop shows up as a seq gap.
    """
    if len(params_per_node) != N_NODES:
        raise ValueError(f"need {N_NODES} channel parameter sets, got {len(params_per_node)}")
    if not 0 <= loss_prob < 1:
        raise ValueError(f"loss_prob must be in [0, 1), got {loss_prob}")

    fixed_d = arena.distance_to_wap(np.asarray(arena.fixed_nodes))
    target_d = arena.distance_to_wap(traj.positions)
    channels = [NodeChannel(params_per_node[i], i, static=i != TARGET_NODE) for i in range(N_NODES)]
    loss_rng = np.random.default_rng(np.random.SeedSequence([int(seed), 104729]))
    drops = loss_rng.random((len(traj), N_NODES)) < loss_prob

    records = []
    for k, ts in enumerate(traj.timestamps_ms.tolist()):
        for i, ch in enumerate(channels):
            d = target_d[k] if i == TARGET_NODE else fixed_d[i]
            # the channel evolves whether or not the report reaches the coordinator
            value = ch.sample(float(d))
            if not drops[k, i]:
                records.append(RssiRecord(i, k, int(ts), quantize_rssi(value)))

    truth = sample_ground_truth(traj, arena, noise_mm=truth_noise_mm, seed=seed)
    # keep the in-memory dataset identical to what the truth file stores
    truth = GroundTruth(truth.timestamps_ms,
                        np.array([float(f"{d:.4f}") for d in truth.distances.tolist()]))
    info = {
        "ticks": str(len(traj)),
        "tick_ms": str(TICK_MS),
        "loss_prob": repr(float(loss_prob)),
        "seed": str(seed),
        "truth_noise_mm": repr(float(truth_noise_mm)),
    }
    for i, ch in enumerate(channels):
        if ch.multipath_offset is not None:
            info[f"node{i}.multipath_offset_db"] = f"{ch.multipath_offset:.6f}"
    info.update(meta or {})
    return Dataset(records=records, truth=truth, meta=info)


def write_dataset(ds: Dataset, directory: str | Path) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / RECORDS_FILE, "wb") as fh:
        fh.write((RECORDS_HEADER + "\n").encode("ascii"))
        fh.writelines(encode_record(r) for r in ds.records)
    with open(out / TRUTH_FILE, "w", newline="\n") as fh:
        fh.write(TRUTH_HEADER + "\n")
        for ts, d in zip(ds.truth.timestamps_ms.tolist(), ds.truth.distances.tolist()):
            fh.write(f"{ts},{d:.4f}\n")
    (out / META_FILE).write_text(format_kv(ds.meta))
    return out


def read_dataset(directory: str | Path) -> Dataset:
    src = Path(directory)
    with open(src / RECORDS_FILE, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        if header != RECORDS_HEADER:
            raise ParseError("header", f"unexpected records header {header!r}")
        records = [decode_record(line) for line in fh if line.strip()]
    ts, dist = [], []
    with open(src / TRUTH_FILE) as fh:
        header = fh.readline().strip()
        if header != TRUTH_HEADER:
            raise ParseError("header", f"unexpected truth header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            a, b = line.strip().split(",")
            ts.append(int(a))
            dist.append(float(b))
    truth = GroundTruth(np.asarray(ts, dtype=np.int64), np.asarray(dist, dtype=float))
    meta_path = src / META_FILE
    meta = parse_kv(meta_path.read_text()) if meta_path.exists() else {}
    return Dataset(records=records, truth=truth, meta=meta)
