"""Reference Point Group mobility.

UAV 0 is the group leader.  It shuttles between ``leader_start`` and
``leader_end`` at constant speed, reflecting at the endpoints.  Members keep a
horizontal offset from the leader that is perturbed by Gaussian noise each
step and clamped to ``member_offset_radius``.  Altitude never changes.

Randomness for step ``t`` is drawn from ``default_rng([rng_seed, t])`` so any
single step is reproducible on its own.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .channel import Position3D


@dataclass(frozen=True)
class RpgParams:
    leader_start: Position3D = Position3D(0.0, 0.0, 50.0)
    leader_end: Position3D = Position3D(100.0, 100.0, 50.0)
    leader_speed: float = 5.0
    step_duration: float = 1.0
    member_offset_radius: float = 50.0
    member_deviation_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "leader_start", Position3D(*map(float, self.leader_start)))
        object.__setattr__(self, "leader_end", Position3D(*map(float, self.leader_end)))
        if not self.leader_speed > 0:
            raise ValueError("leader_speed must be positive")
        if not self.step_duration > 0:
            raise ValueError("step_duration must be positive")
        if self.member_offset_radius < 0 or self.member_deviation_sigma < 0:
            raise ValueError("offset radius and deviation sigma must be >= 0")
        if self.leader_start.h <= 0:
            raise ValueError("altitude must be positive")


@dataclass(frozen=True)
class Trajectory:
    positions: np.ndarray  # (T, N, 3)

    @property
    def T(self) -> int:
        return self.positions.shape[0]

    @property
    def N(self) -> int:
        return self.positions.shape[1]

    def to_csv(self, path) -> None:
        """Rows ``step,uav,x,y,h`` with 1-based step and uav."""
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "uav", "x", "y", "h"])
            for t, frame in enumerate(self.positions, start=1):
                for i, (x, y, h) in enumerate(frame, start=1):
                    w.writerow([t, i, repr(float(x)), repr(float(y)), repr(float(h))])


def leader_position(params: RpgParams, t: int) -> np.ndarray:
    """Leader position at step index ``t`` (0-based) on the round trip."""
    start = np.array(params.leader_start, dtype=float)
    end = np.array(params.leader_end, dtype=float)
    seg = end - start
    length = float(np.hypot(seg[0], seg[1]))
    if length == 0:
        return start
    travelled = (params.leader_speed * params.step_duration * t) % (2 * length)
    along = travelled if travelled <= length else 2 * length - travelled
    return start + seg * (along / length)


def _uniform_disk(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    theta = 2 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def init_swarm(n: int, params: RpgParams) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one UAV")
    rng = np.random.default_rng([params.rng_seed, 0])
    pos = np.tile(np.array(params.leader_start, dtype=float), (n, 1))
    if n > 1:
        pos[1:, :2] += _uniform_disk(rng, n - 1, params.member_offset_radius)
    return pos


def _clamp(offsets, radius):
    norm = np.hypot(offsets[:, 0], offsets[:, 1])
    scale = np.where(norm > radius, radius / np.where(norm > 0, norm, 1.0), 1.0)
    return offsets * scale[:, None]


def step(positions, params: RpgParams, t: int) -> np.ndarray:
    """Advance from step ``t`` to step ``t + 1``."""
    pos = np.asarray(positions, dtype=float)
    leader_next = leader_position(params, t + 1)
    offsets = pos[:, :2] - pos[0, :2]
    if params.member_deviation_sigma > 0 and len(pos) > 1:
        rng = np.random.default_rng([params.rng_seed, t + 1])
        offsets[1:] += rng.normal(0.0, params.member_deviation_sigma, size=(len(pos) - 1, 2))
        offsets[1:] = _clamp(offsets[1:], params.member_offset_radius)
        new = pos.copy()
        new[:, :2] = leader_next[:2] + offsets
    else:
        # rigid translation; relative geometry kept exactly up to rounding
        new = pos + (leader_next - pos[0])
    new[0] = leader_next
    new[:, 2] = params.leader_start.h
    return new


def predict(n: int, params: RpgParams, horizon: int) -> Trajectory:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    frames = [init_swarm(n, params)]
    for t in range(horizon - 1):
        frames.append(step(frames[-1], params, t))
    return Trajectory(np.stack(frames))
