"""Grid-world geometry: cells, no-fly zone, base station, devices and clusters.

Coordinates: a cell is an integer pair ``(i, j)`` with ``0 <= i < grid_cells_x``
and ``0 <= j < grid_cells_y``.  Metric positions use the lower-left corner of
the grid as origin, so the centre of cell ``(i, j)`` is
``((i + 0.5) * L, (j + 0.5) * L)``.  Devices live in continuous coordinates,
UAVs only at cell centres.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel import Duplex

Cell = tuple[int, int]


class Direction(IntEnum):
    NORTH = 0
    SOUTH = 1
    EAST = 2
    WEST = 3
    HOVER = 4


NUM_DIRECTIONS = len(Direction)

# cell-index offsets; one cell step is L_c metres
OFFSETS: dict[Direction, Cell] = {
    Direction.NORTH: (0, 1),
    Direction.SOUTH: (0, -1),
    Direction.EAST: (1, 0),
    Direction.WEST: (-1, 0),
    Direction.HOVER: (0, 0),
}


class WorldConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorldConfig:
    grid_cells_x: int = 11
    grid_cells_y: int = 11
    cell_size: float = 100.0
    bs_height: float = 15.0
    restricted_cells: frozenset = frozenset()
    frame_duration: float = 4.0
    rng_seed: int = 0
    # None -> geometric centre cell
    bs_cell: Optional[Cell] = None

    def __post_init__(self):
        cells = frozenset(tuple(int(v) for v in c) for c in self.restricted_cells)
        object.__setattr__(self, "restricted_cells", cells)
        if self.bs_cell is not None:
            object.__setattr__(self, "bs_cell", tuple(int(v) for v in self.bs_cell))


@dataclass(frozen=True)
class Device:
    id: int
    position: tuple[float, float]
    weight: float
    cluster_id: int = -1


@dataclass(frozen=True)
class Cluster:
    id: int
    member_ids: tuple[int, ...]
    centroid: tuple[float, float]

    @property
    def size(self) -> int:
        return len(self.member_ids)


@dataclass(frozen=True)
class UavConfig:
    count: int = 10
    height: float = 100.0
    velocity: float = 25.0
    duplex: Duplex = Duplex.FULL
    # None -> every UAV starts at the BS cell
    start_cells: Optional[tuple[Cell, ...]] = None


@dataclass(frozen=True)
class GridWorld:
    config: WorldConfig
    valid: np.ndarray = field(repr=False, compare=False)
    bs_cell: Cell = (0, 0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.config.grid_cells_x, self.config.grid_cells_y

    @property
    def cell_size(self) -> float:
        return self.config.cell_size

    @property
    def extent(self) -> tuple[float, float]:
        L = self.config.cell_size
        return self.config.grid_cells_x * L, self.config.grid_cells_y * L

    @property
    def bs_position(self) -> np.ndarray:
        return self.cell_center(self.bs_cell)

    def in_grid(self, cell: Cell) -> bool:
        i, j = cell
        return 0 <= i < self.config.grid_cells_x and 0 <= j < self.config.grid_cells_y

    def is_valid(self, cell: Cell) -> bool:
        return self.in_grid(cell) and bool(self.valid[cell[0], cell[1]])

    def valid_cells(self) -> list[Cell]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.valid))]

    def cell_center(self, cell: Cell) -> np.ndarray:
        L = self.config.cell_size
        return np.array([(cell[0] + 0.5) * L, (cell[1] + 0.5) * L])

    def cell_of(self, position: Sequence[float]) -> Cell:
        L = self.config.cell_size
        i = min(int(position[0] // L), self.config.grid_cells_x - 1)
        j = min(int(position[1] // L), self.config.grid_cells_y - 1)
        return i, j


def build_world(config: WorldConfig) -> GridWorld:
    """Validate ``config`` and precompute the valid-location mask."""
    nx, ny = config.grid_cells_x, config.grid_cells_y
    if nx < 1 or ny < 1:
        raise WorldConfigError(f"grid dimensions must be >= 1, got {nx}x{ny}")
    if not config.cell_size > 0:
        raise WorldConfigError(f"cell_size must be positive, got {config.cell_size}")
    bs_cell = config.bs_cell if config.bs_cell is not None else (nx // 2, ny // 2)
    if not (0 <= bs_cell[0] < nx and 0 <= bs_cell[1] < ny):
        raise WorldConfigError(f"BS cell {bs_cell} outside the {nx}x{ny} grid")
    valid = np.ones((nx, ny), dtype=bool)
    for cell in config.restricted_cells:
        if not (0 <= cell[0] < nx and 0 <= cell[1] < ny):
            raise WorldConfigError(f"restricted cell {cell} outside the {nx}x{ny} grid")
        valid[cell] = False
    if not valid[bs_cell]:
        raise WorldConfigError(f"BS cell {bs_cell} lies inside the restricted zone")
    valid.setflags(write=False)
    return GridWorld(config=config, valid=valid, bs_cell=bs_cell)


def place_devices(world: GridWorld, count: int, seed: int) -> list[Device]:
    """Drop ``count`` devices i.i.d. uniformly over the grid extent."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    width, height = world.extent
    xs = rng.uniform(0.0, width, size=count)
    ys = rng.uniform(0.0, height, size=count)
    return [Device(id=d, position=(float(xs[d]), float(ys[d])), weight=1.0 / count)
            for d in range(count)]


def cluster_devices(devices: Sequence[Device], capacity: int,
                    cell_size: Optional[float] = None) -> list[Cluster]:
    """Partition devices into ``ceil(D / capacity)`` clusters.

    Devices are ordered row-major over position (row band first, then x) and
    poured into clusters sequentially, so every cluster but possibly the last
    is full.  ``cell_size`` sets the row band height; without it rows are
    ordered by the raw y coordinate.
    """
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    pos = np.array([d.position for d in devices], dtype=float).reshape(-1, 2)
    rows = np.floor(pos[:, 1] / cell_size) if cell_size else pos[:, 1]
    order = np.lexsort((np.arange(len(devices)), pos[:, 0], rows))
    clusters = []
    for c in range(math.ceil(len(devices) / capacity)):
        idx = order[c * capacity:(c + 1) * capacity]
        centroid = pos[idx].mean(axis=0)
        clusters.append(Cluster(id=c,
                                member_ids=tuple(int(devices[k].id) for k in idx),
                                centroid=(float(centroid[0]), float(centroid[1]))))
    return clusters


def assign_clusters(devices: Sequence[Device], clusters: Iterable[Cluster]) -> list[Device]:
    owner = {m: c.id for c in clusters for m in c.member_ids}
    return [Device(d.id, d.position, d.weight, owner[d.id]) for d in devices]


def apply_move(location: Cell, direction: Direction, world: GridWorld) -> Cell:
    """Successor cell of one move; leaving the grid or entering the no-fly
    zone degrades to hovering in place."""
    di, dj = OFFSETS[Direction(direction)]
    target = (location[0] + di, location[1] + dj)
    return target if world.is_valid(target) else tuple(location)


def start_cells(world: GridWorld, uav: UavConfig) -> list[Cell]:
    if uav.start_cells is None:
        return [world.bs_cell] * uav.count
    cells = [tuple(int(v) for v in c) for c in uav.start_cells]
    if len(cells) != uav.count:
        raise WorldConfigError(f"{len(cells)} start cells given for {uav.count} UAVs")
    for c in cells:
        if not world.is_valid(c):
            raise WorldConfigError(f"start cell {c} is outside the grid or restricted")
    return cells
