"""Log-distance path loss with temporally correlated log-normal shadowing.

Received power in dBm for a link of length ``d``::

    rssi(d) = p0 - 10 * gamma * log10(d / d0) + shadowing + multipath

Shadowing is a Gauss-Markov (AR(1)) process per node with stationary
standard deviation ``sigma``.  Multipath enters as a Rician envelope
converted to dB: static nodes keep one draw for the lifetime of an
environment, the moving target gets a fresh draw every tick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    p0: float = -40.0
    d0: float = 1.0
    gamma: float = 2.2
    sigma: float = 4.0
    rho: float = 0.95
    rician_k: float = 6.0
    seed: int = 0

    def __post_init__(self):
        if not self.d0 > 0:
            raise ValueError(f"d0 must be > 0, got {self.d0}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0 <= self.rho < 1:
            raise ValueError(f"rho must be in [0, 1), got {self.rho}")
        if not self.rician_k >= 0:
            raise ValueError(f"rician_k must be >= 0, got {self.rician_k}")


@dataclass
class ShadowState:
    """Current shadowing deviate (dB) of one node, plus its private RNG."""

    current: float = 0.0
    rng: np.random.Generator = field(default_factory=np.random.default_rng, repr=False)


def node_rng(seed: int, node_id: int) -> np.random.Generator:
    """Independent, reproducible stream for one (seed, node) pair."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(node_id)]))


def mean_rssi(params: ChannelParams, d: float) -> float:
    if not d > 0:
        raise ValueError(f"distance must be > 0, got {d}")
    return params.p0 - 10.0 * params.gamma * math.log10(d / params.d0)


def step_shadowing(state: ShadowState, params: ChannelParams) -> float:
    z = state.rng.standard_normal()
    state.current = params.rho * state.current + math.sqrt(1.0 - params.rho ** 2) * params.sigma * z
    return state.current


def init_shadowing(params: ChannelParams, rng: np.random.Generator, stationary: bool = True) -> ShadowState:
    """Start a shadow process; ``stationary`` draws the first value from N(0, sigma^2)
    so no burn-in is needed."""
    start = params.sigma * rng.standard_normal() if stationary else 0.0
    return ShadowState(current=float(start), rng=rng)


def rician_db(k: float, rng: np.random.Generator) -> float:
    """One Rician envelope deviate in dB with unit mean power.

    ``k`` is the LOS-to-scatter power ratio; ``k = inf`` is pure LOS (0 dB),
    ``k = 0`` is Rayleigh.
    """
    if math.isinf(k):
        return 0.0
    los = math.sqrt(k / (k + 1.0))
    scale = math.sqrt(1.0 / (2.0 * (k + 1.0)))
    re, im = rng.standard_normal(2)
    amp = math.hypot(los + scale * re, scale * im)
    return 20.0 * math.log10(max(amp, 1e-12))


def sample_rssi(params: ChannelParams, shadow: ShadowState, multipath_offset: float | None,
                d: float) -> float:
    """One RSSI reading at distance ``d``.

    Pass the node's fixed ``multipath_offset`` for a static node; pass None for
    the moving target to draw fresh per-tick fading from the shadow's RNG.
    """
    mean = mean_rssi(params, d)
    shadowing = step_shadowing(shadow, params)
    if multipath_offset is None:
        multipath = rician_db(params.rician_k, shadow.rng)
    else:
        multipath = multipath_offset
    return mean + shadowing + multipath


class NodeChannel:
    """Channel seen by a single node; owns its shadow process and fading draws."""

    def __init__(self, params: ChannelParams, node_id: int, static: bool):
        self.params = params
        self.node_id = node_id
        self.static = static
        rng = node_rng(params.seed, node_id)
        # drawn once per environment seed: fixed topology seen by a static node
        self.multipath_offset = rician_db(params.rician_k, rng) if static else None
        self.shadow = init_shadowing(params, rng)

    def sample(self, d: float) -> float:
        return sample_rssi(self.params, self.shadow, self.multipath_offset, d)
