"""UAV-to-UAV achievable data rates.

Log-distance path loss with an optional static interference set::

    S     = P * g0 * d_ik ** -a
    I     = sum_l P * g0 * d_lk ** -a        (l != i, k)
    sinr  = S / (N0 + I)
    rate  = B * log2(1 + sinr)   if sinr > threshold else 0
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ZeroDistance

INTERFERENCE_MODES = ("none", "all_others")


class Position3D(NamedTuple):
    x: float
    y: float
    h: float


@dataclass(frozen=True)
class RadioParams:
    tx_power: float = 0.1
    noise_floor: float = 1e-13
    path_loss_exponent: float = 2.7
    reference_gain: float = 1e-4
    bandwidth_hz: float = 20e6
    sinr_disconnect_threshold: float = 1e-3

    def __post_init__(self):
        if not (self.tx_power > 0 and self.noise_floor > 0 and self.bandwidth_hz > 0):
            raise ValueError("tx_power, noise_floor and bandwidth_hz must be positive")
        if not self.path_loss_exponent >= 2:
            raise ValueError("path_loss_exponent must be >= 2")
        if not self.reference_gain > 0:
            raise ValueError("reference_gain must be positive")
        if not self.sinr_disconnect_threshold >= 0:
            raise ValueError("sinr_disconnect_threshold must be >= 0")


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def _received(params: RadioParams, d: float) -> float:
    if math.isinf(d):
        return 0.0
    return params.tx_power * params.reference_gain * d ** (-params.path_loss_exponent)


def sinr(i: int, k: int, positions, interferers, params: RadioParams) -> float:
    """Signal-to-interference-plus-noise ratio of the link i -> k."""
    if i == k:
        raise ValueError("sinr needs two distinct nodes")
    d = distance(positions[i], positions[k])
    if d == 0:
        raise ZeroDistance(f"nodes {i} and {k} coincide")
    signal = _received(params, d)
    interference = 0.0
    for l in sorted(set(interferers) - {i, k}):
        d_lk = distance(positions[l], positions[k])
        if d_lk == 0:
            raise ZeroDistance(f"interferer {l} coincides with receiver {k}")
        interference += _received(params, d_lk)
    return signal / (params.noise_floor + interference)


def rate_from_sinr(gamma: float, params: RadioParams) -> float:
    if gamma <= params.sinr_disconnect_threshold:
        return 0.0
    return params.bandwidth_hz * math.log2(1.0 + gamma)


def rate_matrix(positions, params: RadioParams, interference_mode: str = "none") -> np.ndarray:
    """N x N matrix of achievable rates in bits/s; the diagonal is zero and unused."""
    if interference_mode not in INTERFERENCE_MODES:
        raise ValueError(f"interference_mode must be one of {INTERFERENCE_MODES}")
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    if n < 1 or pos.shape[1:] != (3,):
        raise ValueError("positions must be a non-empty (N, 3) array")
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    off = ~np.eye(n, dtype=bool)
    if np.any(dist[off] == 0):
        i, k = np.argwhere((dist == 0) & off)[0]
        raise ZeroDistance(f"nodes {i} and {k} coincide")

    with np.errstate(divide="ignore"):
        recv = params.tx_power * params.reference_gain * np.where(
            off, dist, np.inf) ** (-params.path_loss_exponent)
    # recv[l, k]: power from l seen at k
    if interference_mode == "all_others":
        # interference[i, k] = sum over l != i of recv[l, k]; recv[k, k] is already 0
        interference = off.astype(float) @ recv
    else:
        interference = np.zeros_like(recv)
    gamma = recv / (params.noise_floor + interference)
    rates = np.where(
        gamma > params.sinr_disconnect_threshold,
        params.bandwidth_hz * np.log2(1.0 + gamma),
        0.0,
    )
    rates[~off] = 0.0
    return rates


def rate_series(trajectory, params: RadioParams, interference_mode: str = "none") -> np.ndarray:
    """Stack of per-step rate matrices, shape (T, N, N).

    ``trajectory`` is a :class:`~swarmsplit.mobility.Trajectory` or a (T, N, 3) array.
    """
    frames = np.asarray(getattr(trajectory, "positions", trajectory), dtype=float)
    return np.stack([rate_matrix(p, params, interference_mode) for p in frames])
