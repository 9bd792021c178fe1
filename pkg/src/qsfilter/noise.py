"""Time grids and reproducible driving-noise paths.

Every trajectory draws from a counter-based Philox stream keyed by
``(seed, stream)``, so the same pair always reproduces the same increments,
independent of how an ensemble is chunked across workers.  Increments are
pre-drawn for the whole grid so that linear and nonlinear runs can consume
the identical path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRID_ATOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T] with step dt; T/dt must be an integer."""

    T: float
    dt: float

    def __post_init__(self):
        if self.T <= 0 or self.dt <= 0:
            raise ValueError("T and dt must be positive")
        if self.dt > self.T * (1 + GRID_ATOL):
            raise ValueError("dt must not exceed T")
        ratio = self.T / self.dt
        if abs(ratio - round(ratio)) > GRID_ATOL * max(1.0, ratio):
            raise ValueError(f"T/dt = {ratio} is not an integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    def index_of(self, t: float) -> int:
        k = int(round(t / self.dt))
        if abs(t - k * self.dt) > GRID_ATOL * max(1.0, self.T) or not 0 <= k <= self.n_steps:
            raise ValueError(f"t = {t} is not on the grid")
        return k


def stream_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream): splittable and counter-based."""
    key = np.array([np.uint64(seed & (2 ** 64 - 1)),
                    np.uint64(stream & (2 ** 64 - 1))], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class NoisePath:
    """Driving noise aligned to a grid.

    Wiener paths hold Normal(0, dt) increments per step.  Poisson paths hold
    the exact event times (exponential waiting-time construction); the
    per-step ``increments`` are the bin counts, which are 0/1 except on grids
    coarse relative to 1/nu.
    """

    kind: str
    grid: TimeGrid
    increments: np.ndarray
    seed: int
    stream: int
    jump_times: np.ndarray | None = None
    intensity: float | None = None

    def __post_init__(self):
        if self.kind not in ("wiener", "poisson"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.increments.shape != (self.grid.n_steps,):
            raise ValueError("increments must have one entry per grid step")

    def cumulative(self) -> np.ndarray:
        """Path value at the grid times, starting from 0."""
        out = np.empty(self.grid.n_steps + 1)
        out[0] = 0.0
        np.cumsum(self.increments, out=out[1:])
        return out


def wiener_path(grid: TimeGrid, seed: int, stream: int = 0) -> NoisePath:
    rng = stream_generator(seed, stream)
    dw = rng.standard_normal(grid.n_steps) * np.sqrt(grid.dt)
    return NoisePath(kind="wiener", grid=grid, increments=dw, seed=seed, stream=stream)


def draw_jump_times(rng: np.random.Generator, nu: float, T: float) -> np.ndarray:
    """Exact homogeneous-Poisson event times on (0, T]."""
    if nu <= 0:
        raise ValueError("intensity nu must be positive")
    block = max(16, int(nu * T * 1.2) + 16)
    waits = rng.exponential(scale=1.0 / nu, size=block)
    total = waits.sum()
    while total <= T:
        more = rng.exponential(scale=1.0 / nu, size=block)
        waits = np.concatenate([waits, more])
        total += more.sum()
    times = np.cumsum(waits)
    return times[times <= T]


def poisson_path(grid: TimeGrid, nu: float, seed: int, stream: int = 0) -> NoisePath:
    rng = stream_generator(seed, stream)
    jt = draw_jump_times(rng, nu, grid.T)
    edges = grid.times()
    counts, _ = np.histogram(jt, bins=edges)
    return NoisePath(kind="poisson", grid=grid, increments=counts.astype(float),
                     seed=seed, stream=stream, jump_times=jt, intensity=nu)
