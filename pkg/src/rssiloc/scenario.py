"""Arena geometry, target trajectories and simulated camera ground truth.

Coordinates are meters in the room frame with the origin at one room corner.
The localization arena is an inner rectangle centered in the room; the four
fixed nodes sit on its corners and the WAP defaults to its center.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rssiloc import TICK_MS

TRAJECTORY_KINDS = ("waypoint-loop", "lissajous", "random-walk")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class Arena:
    room: tuple[float, float] = (8.46, 6.98)
    inner: tuple[float, float] = (4.14, 2.86)
    wap: tuple[float, float] | None = None

    def __post_init__(self):
        rw, rd = self.room
        iw, idp = self.inner
        if min(rw, rd, iw, idp) <= 0:
            raise ConfigurationError("room and arena dimensions must be positive")
        if iw > rw or idp > rd:
            raise ConfigurationError(f"arena {self.inner} does not fit in room {self.room}")
        if self.wap is None:
            object.__setattr__(self, "wap", self.center)
        x0, y0, x1, y1 = self.bounds
        wx, wy = self.wap
        if not (x0 <= wx <= x1 and y0 <= wy <= y1):
            raise ConfigurationError(f"WAP {self.wap} lies outside the arena")

    @property
    def center(self) -> tuple[float, float]:
        return (self.room[0] / 2.0, self.room[1] / 2.0)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) of the inner arena."""
        cx, cy = self.center
        hw, hd = self.inner[0] / 2.0, self.inner[1] / 2.0
        return (cx - hw, cy - hd, cx + hw, cy + hd)

    @property
    def fixed_nodes(self) -> list[tuple[float, float]]:
        x0, y0, x1, y1 = self.bounds
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        x0, y0, x1, y1 = self.bounds
        p = np.asarray(points, dtype=float)
        return ((p[..., 0] >= x0 - tol) & (p[..., 0] <= x1 + tol)
                & (p[..., 1] >= y0 - tol) & (p[..., 1] <= y1 + tol))

    def distance_to_wap(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.hypot(p[..., 0] - self.wap[0], p[..., 1] - self.wap[1])


@dataclass(frozen=True)
class Trajectory:
    timestamps_ms: np.ndarray
    positions: np.ndarray
    tick_ms: int = TICK_MS

    def __len__(self):
        return len(self.timestamps_ms)

    def speeds(self) -> np.ndarray:
        """Speed (m/s) between consecutive samples."""
        step = np.diff(self.positions, axis=0)
        return np.hypot(step[:, 0], step[:, 1]) / (self.tick_ms / 1000.0)


@dataclass(frozen=True)
class GroundTruth:
    timestamps_ms: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.timestamps_ms)


def n_ticks(duration_s: float, tick_ms: int = TICK_MS) -> int:
    return int(round(duration_s * 1000.0 / tick_ms))


def _waypoint_loop(arena: Arena, t: np.ndarray, speed: float, margin: float) -> np.ndarray:
    x0, y0, x1, y1 = arena.bounds
    corners = np.array([(x0 + margin, y0 + margin), (x1 - margin, y0 + margin),
                        (x1 - margin, y1 - margin), (x0 + margin, y1 - margin)])
    loop = np.vstack([corners, corners[:1]])
    seg = np.hypot(*np.diff(loop, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.mod(speed * t, cum[-1])
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[idx]) / seg[idx]
    return loop[idx] + frac[:, None] * (loop[idx + 1] - loop[idx])


def _lissajous(arena: Arena, t: np.ndarray, margin: float, periods: tuple[float, float],
               phase: float) -> np.ndarray:
    x0, y0, x1, y1 = arena.bounds
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    ax, ay = (x1 - x0) / 2.0 - margin, (y1 - y0) / 2.0 - margin
    x = cx + ax * np.sin(2.0 * np.pi * t / periods[0] + phase)
    y = cy + ay * np.sin(2.0 * np.pi * t / periods[1])
    return np.column_stack([x, y])


def _random_walk(arena: Arena, n: int, dt: float, speed: float, margin: float, keep_out: float,
                 rng: np.random.Generator) -> np.ndarray:
    # heading performs a random walk, speed is constant: smooth and bounded
    x0, y0, x1, y1 = arena.bounds
    lo = np.array([x0 + margin, y0 + margin])
    hi = np.array([x1 - margin, y1 - margin])
    wap = np.asarray(arena.wap)
    pos = np.empty((n, 2))
    p = lo + rng.uniform(size=2) * (hi - lo)
    while np.hypot(*(p - wap)) < keep_out:
        p = lo + rng.uniform(size=2) * (hi - lo)
    heading = rng.uniform(0.0, 2.0 * np.pi)
    turn = rng.normal(0.0, 0.25, size=n)
    for i in range(n):
        pos[i] = p
        heading += turn[i]
        step = speed * dt * np.array([math.cos(heading), math.sin(heading)])
        nxt = p + step
        if nxt[0] < lo[0] or nxt[0] > hi[0]:
            step[0] = -step[0]
            heading = math.pi - heading
        if nxt[1] < lo[1] or nxt[1] > hi[1]:
            step[1] = -step[1]
            heading = -heading
        nxt = p + step
        if np.hypot(*(nxt - wap)) < keep_out:
            # bounce off the router: head radially away from it
            away = p - wap
            heading = math.atan2(away[1], away[0])
            nxt = p + speed * dt * np.array([math.cos(heading), math.sin(heading)])
        p = np.clip(nxt, lo, hi)
    return pos


def make_trajectory(arena: Arena, kind: str, duration_s: float, seed: int = 0, *,
                    speed: float = 0.5, max_speed: float = 1.0, margin: float = 0.0,
                    keep_out: float = 0.1, periods: tuple[float, float] = (40.0, 30.0),
                    phase: float = math.pi / 20) -> Trajectory:
    """Sample a smooth target path at the node tick rate.

    ``keep_out`` is the minimum distance to the WAP (the router is a physical
    obstacle, and distances below the first bin edge cannot be labeled).
    ``speed`` applies to waypoint-loop and random-walk; lissajous speed follows
    from the arena size and ``periods``.
    """
    if not duration_s > 0:
        raise ConfigurationError(f"duration_s must be > 0, got {duration_s}")
    if kind not in TRAJECTORY_KINDS:
        raise ConfigurationError(f"unknown trajectory kind {kind!r}; expected one of {TRAJECTORY_KINDS}")
    x0, y0, x1, y1 = arena.bounds
    if 2 * margin >= min(x1 - x0, y1 - y0):
        raise ConfigurationError(f"margin {margin} m leaves no room in arena {arena.inner}")

    n = n_ticks(duration_s)
    dt = TICK_MS / 1000.0
    t = np.arange(n) * dt
    if kind == "waypoint-loop":
        pos = _waypoint_loop(arena, t, speed, margin)
    elif kind == "lissajous":
        pos = _lissajous(arena, t, margin, periods, phase)
    else:
        pos = _random_walk(arena, n, dt, speed, margin, keep_out, np.random.default_rng(seed))

    traj = Trajectory(timestamps_ms=np.arange(n, dtype=np.int64) * TICK_MS, positions=pos)
    if n > 1 and traj.speeds().max() > max_speed + 1e-9:
        raise ConfigurationError(
            f"{kind} path needs {traj.speeds().max():.3f} m/s, above max_speed {max_speed}")
    closest = arena.distance_to_wap(pos).min()
    if closest < keep_out - 1e-9:
        raise ConfigurationError(
            f"{kind} path passes {closest:.3f} m from the WAP, inside keep_out {keep_out} m")
    return traj


def sample_ground_truth(traj: Trajectory, arena: Arena, noise_mm: float = 4.0,
                        seed: int = 0) -> GroundTruth:
    """Camera distance to the WAP per tick, with uniform error of +-noise_mm."""
    d = arena.distance_to_wap(traj.positions)
    if noise_mm > 0:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7919]))
        d = d + rng.uniform(-noise_mm, noise_mm, size=d.shape) / 1000.0
    return GroundTruth(timestamps_ms=traj.timestamps_ms.copy(), distances=np.maximum(d, 0.0))
