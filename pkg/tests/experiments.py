"""Shared Monte-Carlo and training experiments used by unit and acceptance tests."""
import math

import numpy as np

from rssiloc.channel import ChannelParams, NodeChannel
from rssiloc.evaluate import baseline_pathloss_distance
from rssiloc.models import ARCHITECTURES, Hyperparams, accuracy, build_for, train
from rssiloc.netsim import run_acquisition
from rssiloc.pipeline import preprocess
from rssiloc.scenario import Arena, make_trajectory


def baseline_errors(sigma: float, n: int = 10_000, seed: int = 0) -> np.ndarray:
    """|d_hat - d| of path-loss inversion on n target readings at uniform random d.

    Shadowing is drawn independently per reading (rho = 0) and multipath is
    switched off so sigma is the only noise source.
    """
    params = ChannelParams(sigma=sigma, rho=0.0, rician_k=math.inf, seed=seed)
    ch = NodeChannel(params, node_id=4, static=False)
    d = np.random.default_rng([seed, 11]).uniform(0.2, 2.5, size=n)
    rssi = np.array([ch.sample(x) for x in d])
    return np.abs(baseline_pathloss_distance(rssi, params) - d)


def overfit_subset(pre, n: int = 64):
    """n training windows spread evenly over the training split."""
    idx = np.linspace(0, len(pre.train) - 1, n).astype(int)
    return pre.train.subset(idx)


def synthetic_preprocessed(duration_s: float, seed: int = 0, sigma: float = 4.0, rho: float = 0.95):
    arena = Arena()
    traj = make_trajectory(arena, "lissajous", duration_s)
    params = [ChannelParams(sigma=sigma, rho=rho, seed=seed)] * 5
    return preprocess(run_acquisition(arena, traj, params, seed=seed))


def architecture_comparison(duration_s: float = 1800.0, iterations: int = 1500,
                            batch_size: int = 128, seed: int = 0) -> dict[str, float]:
    """Held-out test accuracy per architecture, all trained on the same tensors."""
    pre = synthetic_preprocessed(duration_s, seed=seed)
    hp = Hyperparams(batch_size=batch_size, iterations=iterations, seed=seed, eval_every=iterations)
    out = {}
    for arch in ARCHITECTURES:
        model = build_for(arch, hp)
        train(model, pre.train, pre.val, hp)
        out[arch] = accuracy(model, pre.test)
    return out
