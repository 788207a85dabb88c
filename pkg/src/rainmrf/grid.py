"""Regular lat/lon lattice with 8-neighbour adjacency.

Locations are ordered by longitude first, latitude next.  Ids only identify
locations; every computation goes through the neighbour table.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateLocation, InvalidLocation, NonLatticeCoordinate

_LATTICE_TOL = 1e-9
_OFFSETS = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]


@dataclass(frozen=True)
class Location:
    id: int
    lat: float
    lon: float


@dataclass(frozen=True, eq=False)
class GridIndex:
    locations: tuple
    neighbor_table: tuple
    spacing: float = 1.0
    # integer lattice coordinates (row = lat index, col = lon index)
    ij: np.ndarray = field(repr=False, default=None)
    nb_ptr: np.ndarray = field(repr=False, default=None)
    nb_idx: np.ndarray = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return len(self.locations)

    def __len__(self):
        return len(self.locations)

    def coords(self) -> np.ndarray:
        return np.array([(loc.lat, loc.lon) for loc in self.locations], dtype=float).reshape(-1, 2)

    def index_of(self, lat: float, lon: float) -> int:
        key = _lattice_key(lat, lon, self._origin, self.spacing)
        try:
            return self._lookup[key]
        except KeyError:
            raise InvalidLocation(f"no location at ({lat}, {lon})") from None

    def edges(self) -> np.ndarray:
        """Undirected spatial edges as an (E, 2) array with s < s'."""
        src = np.repeat(np.arange(self.size), np.diff(self.nb_ptr))
        keep = src < self.nb_idx
        return np.column_stack([src[keep], self.nb_idx[keep]]).astype(np.int64)

    def lattice_shape(self) -> tuple:
        if self.size == 0:
            return (0, 0)
        return tuple(int(v) for v in self.ij.max(axis=0) + 1)


def _lattice_key(lat, lon, origin, spacing):
    ri = (lat - origin[0]) / spacing
    rj = (lon - origin[1]) / spacing
    i, j = round(ri), round(rj)
    if abs(ri - i) > _LATTICE_TOL or abs(rj - j) > _LATTICE_TOL:
        raise NonLatticeCoordinate(f"({lat}, {lon}) is not on the {spacing}-unit lattice")
    return int(i), int(j)


def build_grid(locations, spacing: float = 1.0) -> GridIndex:
    """Build a GridIndex from ``(lat, lon)`` pairs.

    Ids are assigned in (lon, lat) order regardless of input order.  Missing
    lattice cells are allowed; their neighbours simply lack that entry.
    """
    pts = [(float(lat), float(lon)) for lat, lon in locations]
    if not pts:
        raise InvalidLocation("grid needs at least one location")
    origin = (min(p[0] for p in pts), min(p[1] for p in pts))
    keys = {}
    for lat, lon in pts:
        key = _lattice_key(lat, lon, origin, spacing)
        if key in keys:
            raise DuplicateLocation(f"duplicate location ({lat}, {lon})")
        keys[key] = (lat, lon)

    ordered = sorted(keys, key=lambda k: (k[1], k[0]))
    lookup = {k: n for n, k in enumerate(ordered)}
    locs = tuple(Location(n, keys[k][0], keys[k][1]) for n, k in enumerate(ordered))

    table = []
    for i, j in ordered:
        nbs = [lookup[(i + di, j + dj)] for di, dj in _OFFSETS if (i + di, j + dj) in lookup]
        table.append(frozenset(nbs))

    counts = np.array([len(nb) for nb in table], dtype=np.int64)
    nb_ptr = np.zeros(len(table) + 1, dtype=np.int64)
    np.cumsum(counts, out=nb_ptr[1:])
    nb_idx = np.array([n for nb in table for n in sorted(nb)], dtype=np.int64)
    ij = np.array(ordered, dtype=np.int64).reshape(-1, 2)
    ij = ij - ij.min(axis=0)

    grid = GridIndex(locs, tuple(table), float(spacing), ij, nb_ptr, nb_idx)
    object.__setattr__(grid, "_origin", origin)
    object.__setattr__(grid, "_lookup", lookup)
    return grid


def neighbors(g: GridIndex, s: int) -> frozenset:
    if not 0 <= s < g.size:
        raise InvalidLocation(f"location id {s} out of range [0, {g.size})")
    return g.neighbor_table[s]


def rect_grid(rows: int, cols: int, lat0: float = 0.0, lon0: float = 0.0) -> GridIndex:
    """Full ``rows x cols`` lattice; handy for synthetic data and tests."""
    return build_grid([(lat0 + r, lon0 + c) for r in range(rows) for c in range(cols)])
