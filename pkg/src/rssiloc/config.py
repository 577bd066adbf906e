"""Typed ``key = value`` configuration covering every tunable default.

Precedence: built-in defaults < config file < command-line overrides.
Unknown keys are rejected, and values are checked against the owning
module's invariants before any command does work.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from rssiloc import N_NODES
from rssiloc.channel import ChannelParams
from rssiloc.kvfile import parse_kv
from rssiloc.models import ARCHITECTURES, Hyperparams
from rssiloc.pipeline import BinningSpec
from rssiloc.scenario import TRAJECTORY_KINDS, Arena


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.replace(" ", "").split(",") if p)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {text!r}")
        return text
    return parse


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def inner(text: str):
        return None if text.strip().lower() in ("", "none", "auto") else parse(text)
    return inner


@dataclass(frozen=True)
class Key:
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str


_CHANNEL_FIELDS = [
    ("p0", "received power at the reference distance, dBm", -40.0),
    ("d0", "reference distance, m", 1.0),
    ("gamma", "path-loss exponent", 2.2),
    ("sigma", "shadowing standard deviation, dB", 4.0),
    ("rho", "shadowing correlation per 50 ms tick", 0.95),
    ("rician_k", "Rician K-factor of multipath fading (inf = line of sight only)", 6.0),
]

KEYS: dict[str, Key] = {}


def _add(name, parse, default, help):
    KEYS[name] = Key(name, parse, default, help)


for _f, _h, _d in _CHANNEL_FIELDS:
    _add(f"channel.{_f}", _float, _d, _h + " (all nodes)")
_add("channel.seed", int, 0, "base channel seed; environment e uses seed + e")
for _i in range(N_NODES):
    for _f, _h, _d in _CHANNEL_FIELDS:
        _add(f"node{_i}.{_f}", _optional(_float), None, f"node {_i} override of channel.{_f}")

_add("arena.room_width", _float, 8.46, "room width, m")
_add("arena.room_depth", _float, 6.98, "room depth, m")
_add("arena.inner_width", _float, 4.14, "localization arena width, m")
_add("arena.inner_depth", _float, 2.86, "localization arena depth, m")
_add("arena.wap_x", _optional(_float), None, "WAP x position, m (default: arena center)")
_add("arena.wap_y", _optional(_float), None, "WAP y position, m (default: arena center)")

_add("trajectory.kind", _choice(*TRAJECTORY_KINDS), "lissajous", "target path shape")
_add("trajectory.duration_s", _float, 1800.0, "simulated duration, s")
_add("trajectory.speed", _float, 0.5, "target speed for waypoint-loop and random-walk, m/s")
_add("trajectory.max_speed", _float, 1.0, "maximum allowed target speed, m/s")
_add("trajectory.margin", _float, 0.0, "distance kept from the arena edges, m")
_add("trajectory.keep_out", _float, 0.1, "minimum distance from the WAP, m")
_add("trajectory.seed", int, 0, "random-walk seed")

_add("sim.loss_prob", _float, 0.0, "probability that a single report is lost")
_add("sim.seed", int, 0, "acquisition seed (loss and camera noise); environment e uses seed + e")
_add("sim.environments", int, 1, "number of environment variants to simulate")
_add("sim.truth_noise_mm", _float, 4.0, "camera ground-truth error bound, mm")

_add("bins.d_min", _float, 0.0151, "lower edge of bin 0, m")
_add("bins.n_bins", int, 30, "number of distance bins")
_add("bins.l_bin", _float, 0.1173, "bin length, m")

_add("pre.env", int, 0, "which environment dataset to preprocess")
_add("pre.median_window", int, 5, "median filter window (odd)")
_add("pre.filter_rssi", _bool, True, "median-filter each node's RSSI stream")
_add("pre.filter_distance", _bool, True, "median-filter the ground-truth distance")
_add("pre.window", int, 20, "window length W, ticks")
_add("pre.stride", int, 1, "window stride, ticks")

_add("split.train", _float, 0.7, "training fraction (contiguous, first in time)")
_add("split.val", _float, 0.15, "validation fraction; the test split takes the rest")

_add("train.batch_size", int, 128, "batch size Bs")
_add("train.iterations", int, 1500, "training iterations")
_add("train.lr", _float, 1e-4, "Adam learning rate")
_add("train.max_grad_norm", _float, 10.0, "gradient clipping threshold")
_add("train.clip_mode", _choice("global", "element"), "global", "clip by global norm or per element")
_add("train.keep_prob", _float, 0.75, "dropout keep probability")
_add("train.lstm_sizes", _int_list, (64, 128), "LSTM layer sizes, comma separated")
_add("train.seed", int, 0, "initialization and batch-order seed")
_add("train.eval_every", int, 50, "iterations between validation evaluations")

_add("paths.data", str, "data", "dataset root; environment e lives in <data>/env<e>")
_add("paths.out", str, "runs", "output root for tensors, checkpoints, traces and metrics")


class Config:
    def __init__(self, values: dict[str, Any] | None = None):
        self.values = {k: key.default for k, key in KEYS.items()}
        if values:
            self.values.update(values)

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: dict[str, str] | None = None) -> Config:
        raw: dict[str, str] = {}
        if path is not None:
            raw.update(parse_kv(Path(path).read_text(), str(path)))
        raw.update(overrides or {})
        values = {}
        for name, text in raw.items():
            if name not in KEYS:
                raise ConfigError(f"unknown config key {name!r}")
            try:
                values[name] = KEYS[name].parse(text)
            except ValueError as exc:
                raise ConfigError(f"{name}: {exc}") from None
        cfg = cls(values)
        cfg.validate()
        return cfg

    def __getitem__(self, name: str):
        return self.values[name]

    def validate(self) -> None:
        try:
            for e in range(self["sim.environments"]):
                self.channel_params(e)
            self.arena()
            self.binning()
            self.hyperparams()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        checks = [
            (self["sim.environments"] >= 1, "sim.environments must be >= 1"),
            (0 <= self["sim.loss_prob"] < 1, "sim.loss_prob must be in [0, 1)"),
            (self["sim.truth_noise_mm"] >= 0, "sim.truth_noise_mm must be >= 0"),
            (self["trajectory.duration_s"] > 0, "trajectory.duration_s must be > 0"),
            (self["trajectory.speed"] > 0, "trajectory.speed must be > 0"),
            (self["pre.median_window"] >= 1 and self["pre.median_window"] % 2 == 1,
             "pre.median_window must be a positive odd integer"),
            (self["pre.stride"] >= 1, "pre.stride must be >= 1"),
            (0 <= self["pre.env"] < self["sim.environments"], "pre.env must index a simulated environment"),
            (0 < self["split.train"] < 1 and 0 < self["split.val"] < 1
             and self["split.train"] + self["split.val"] < 1, "split fractions must leave a test split"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def channel_params(self, env: int = 0) -> list[ChannelParams]:
        out = []
        for i in range(N_NODES):
            kw = {}
            for f, _, _ in _CHANNEL_FIELDS:
                override = self[f"node{i}.{f}"]
                kw[f] = self[f"channel.{f}"] if override is None else override
            out.append(ChannelParams(seed=self["channel.seed"] + env, **kw))
        return out

    def arena(self) -> Arena:
        wx, wy = self["arena.wap_x"], self["arena.wap_y"]
        wap = None if wx is None and wy is None else (wx, wy)
        if wap is not None and None in wap:
            raise ConfigError("set both arena.wap_x and arena.wap_y, or neither")
        return Arena(room=(self["arena.room_width"], self["arena.room_depth"]),
                     inner=(self["arena.inner_width"], self["arena.inner_depth"]), wap=wap)

    def binning(self) -> BinningSpec:
        return BinningSpec(self["bins.d_min"], self["bins.n_bins"], self["bins.l_bin"])

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            batch_size=self["train.batch_size"], window=self["pre.window"],
            max_grad_norm=self["train.max_grad_norm"], lr=self["train.lr"],
            lstm_sizes=tuple(self["train.lstm_sizes"]), keep_prob=self["train.keep_prob"],
            iterations=self["train.iterations"], seed=self["train.seed"],
            eval_every=self["train.eval_every"], clip_mode=self["train.clip_mode"])

    def trajectory_kwargs(self) -> dict:
        return dict(speed=self["trajectory.speed"], max_speed=self["trajectory.max_speed"],
                    margin=self["trajectory.margin"], keep_out=self["trajectory.keep_out"])

    def env_dir(self, env: int) -> Path:
        return Path(self["paths.data"]) / f"env{env}"

    def out_dir(self) -> Path:
        return Path(self["paths.out"])

    def dump(self, prefixes: tuple[str, ...] = ()) -> dict[str, str]:
        """Current values as strings, optionally restricted to key prefixes."""
        out = {}
        for name, value in self.values.items():
            if prefixes and not name.startswith(prefixes):
                continue
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = str(value).lower()
            elif isinstance(value, float):
                value = repr(value)
            out[name] = "auto" if value is None else str(value)
        return out


def describe(prefixes: tuple[str, ...]) -> str:
    """Help text listing every key under the given prefixes."""
    lines = ["config keys read (set in --config FILE or override with --<key> VALUE):"]
    for name, key in KEYS.items():
        if name.startswith(prefixes) and not name.startswith("node"):
            lines.append(f"  {name} (default {key.default!r}): {key.help}")
    if any(p.startswith(("channel", "node")) for p in prefixes):
        lines.append(f"  node<i>.<field> for i in 0..{N_NODES - 1} (default: inherit channel.<field>): "
                     "per-node override of " + ", ".join(f for f, _, _ in _CHANNEL_FIELDS))
    return "\n".join(lines)


__all__ = ["ARCHITECTURES", "Config", "ConfigError", "KEYS", "describe"]
