"""On-lattice diffusion-limited aggregation with a sticking probability.

Walkers start on a circle just outside the cluster, take 4-neighbour steps,
and freeze when they touch the cluster (with probability
``sticking_probability`` per contact). Walkers that wander past twice the
launch radius are relaunched.

The random walk runs in a numba kernel that consumes uniforms from a buffer
filled by a ``numpy.random.Generator``, so runs are reproducible from the
seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from numba import njit

_BATCH = 8192

# walker state slots
_X, _Y, _ACTIVE = 0, 1, 2
# kernel return codes
_STUCK, _NEED_RANDOM = 0, 1


@dataclass
class DlaConfig:
    particle_count: int = 3000
    lattice_size: int = 257
    sticking_probability: float = 0.6
    launch_radius_margin: int = 5
    rng_seed: int = 0

    def __post_init__(self):
        if self.particle_count < 0:
            raise ValueError("particle_count must be >= 0")
        if self.lattice_size < 3 or self.lattice_size % 2 == 0:
            raise ValueError("lattice_size must be odd and >= 3")
        if not 0 < self.sticking_probability <= 1:
            raise ValueError("sticking_probability must lie in (0, 1]")
        if self.launch_radius_margin < 1:
            raise ValueError("launch_radius_margin must be >= 1")


@dataclass
class Aggregate:
    grid: np.ndarray                 # bool occupancy, lattice_size x lattice_size
    seed: tuple[int, int]
    history: list = field(default_factory=list)   # stuck cells in order
    truncated: bool = False
    max_radius: float = 0.0

    @classmethod
    def seeded(cls, lattice_size: int) -> "Aggregate":
        grid = np.zeros((lattice_size, lattice_size), dtype=bool)
        c = lattice_size // 2
        grid[c, c] = True
        return cls(grid, (c, c))

    @property
    def size(self) -> int:
        return int(self.grid.sum())

    def radius_of_gyration(self) -> float:
        ys, xs = np.nonzero(self.grid)
        return float(np.sqrt(np.mean((ys - ys.mean()) ** 2 + (xs - xs.mean()) ** 2)))

    def to_pbm(self) -> str:
        h, w = self.grid.shape
        rows = (" ".join("1" if v else "0" for v in row) for row in self.grid)
        return f"P1\n{w} {h}\n" + "\n".join(rows) + "\n"

    def save_pbm(self, path) -> None:
        Path(path).write_text(self.to_pbm())


@njit(cache=True)
def _touches(grid, y, x):
    n = grid.shape[0]
    if y > 0 and grid[y - 1, x]:
        return True
    if y < n - 1 and grid[y + 1, x]:
        return True
    if x > 0 and grid[y, x - 1]:
        return True
    if x < n - 1 and grid[y, x + 1]:
        return True
    return False


@njit(cache=True)
def _walk(grid, cy, cx, launch_r, kill_r, stick_p, rand, walker):
    """Advance one walker; returns (code, random numbers consumed)."""
    n = grid.shape[0]
    k = 0
    m = rand.shape[0]
    while True:
        if walker[_ACTIVE] == 0:
            if k >= m:
                return _NEED_RANDOM, k
            theta = 2.0 * np.pi * rand[k]
            k += 1
            walker[_Y] = cy + int(np.round(launch_r * np.sin(theta)))
            walker[_X] = cx + int(np.round(launch_r * np.cos(theta)))
            walker[_ACTIVE] = 1
            if walker[_Y] < 0 or walker[_Y] >= n or walker[_X] < 0 or walker[_X] >= n or grid[walker[_Y], walker[_X]]:
                walker[_ACTIVE] = 0
                continue
        y = walker[_Y]
        x = walker[_X]
        if _touches(grid, y, x):
            if stick_p >= 1.0:
                return _STUCK, k
            if k >= m:
                return _NEED_RANDOM, k
            u = rand[k]
            k += 1
            if u < stick_p:
                return _STUCK, k
        if k >= m:
            return _NEED_RANDOM, k
        d = int(rand[k] * 4.0)
        k += 1
        ny, nx = y, x
        if d == 0:
            ny = y - 1
        elif d == 1:
            ny = y + 1
        elif d == 2:
            nx = x - 1
        else:
            nx = x + 1
        if ny < 0 or ny >= n or nx < 0 or nx >= n:
            walker[_ACTIVE] = 0
            continue
        if grid[ny, nx]:
            continue
        dy = ny - cy
        dx = nx - cx
        if dy * dy + dx * dx > kill_r * kill_r:
            walker[_ACTIVE] = 0
            continue
        walker[_Y] = ny
        walker[_X] = nx


class _UniformStream:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf = rng.random(_BATCH)
        self.pos = 0

    def window(self) -> np.ndarray:
        if self.pos >= len(self.buf):
            self.buf = self.rng.random(_BATCH)
            self.pos = 0
        return self.buf[self.pos:]

    def consume(self, k: int) -> None:
        self.pos += k


def _launch_radius(aggregate: Aggregate, config: DlaConfig) -> float:
    return aggregate.max_radius + config.launch_radius_margin


def random_walk(
    aggregate: Aggregate,
    config: DlaConfig,
    rng,
    start: Optional[tuple[int, int]] = None,
) -> tuple[int, int]:
    """Release one walker and return the (row, col) cell where it sticks.

    ``rng`` is a ``numpy.random.Generator`` or a stream already wrapping one.
    ``start`` places the first launch at a given cell instead of the circle.
    The aggregate itself is not modified.
    """
    stream = rng if isinstance(rng, _UniformStream) else _UniformStream(rng)
    cy, cx = aggregate.seed
    launch_r = _launch_radius(aggregate, config)
    walker = np.zeros(3, dtype=np.int64)
    if start is not None:
        walker[_Y], walker[_X], walker[_ACTIVE] = start[0], start[1], 1
    while True:
        code, used = _walk(
            aggregate.grid, cy, cx, launch_r, 2.0 * launch_r,
            float(config.sticking_probability), stream.window(), walker,
        )
        stream.consume(used)
        if code == _STUCK:
            return int(walker[_Y]), int(walker[_X])


def run_dla(config: DlaConfig) -> Aggregate:
    agg = Aggregate.seeded(config.lattice_size)
    stream = _UniformStream(np.random.default_rng(np.random.SeedSequence([config.rng_seed, 0])))
    n = config.lattice_size
    cy, cx = agg.seed
    for _ in range(config.particle_count):
        if _launch_radius(agg, config) >= (n // 2) * np.sqrt(2.0):
            # launch circle lies wholly off the lattice
            agg.truncated = True
            break
        y, x = random_walk(agg, config, stream)
        agg.grid[y, x] = True
        agg.history.append((y, x))
        agg.max_radius = max(agg.max_radius, float(np.hypot(y - cy, x - cx)))
        if y in (0, n - 1) or x in (0, n - 1):
            agg.truncated = True
            break
    return agg
