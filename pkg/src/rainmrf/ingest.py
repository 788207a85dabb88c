"""Loading, annual aggregation and synthetic generation of gridded rainfall."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import get_float, get_int, read_kv
from .errors import (
    ConflictingBlocks,
    IncompleteGrid,
    IncompleteSeries,
    InvalidParameter,
    InvalidValue,
    ParseError,
)
from .grid import GridIndex, build_grid, rect_grid

CSV_HEADER = ["location_id", "lat", "lon", "year", "rain_mm_per_day"]


@dataclass(frozen=True, eq=False)
class RainfallDataset:
    """Annual rainfall ``y[s, t]`` in mm/day on a grid."""

    grid: GridIndex
    years: np.ndarray
    y: np.ndarray
    aimr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        years = np.asarray(self.years, dtype=np.int64)
        if y.shape != (self.grid.size, years.size):
            raise IncompleteGrid(f"y has shape {y.shape}, expected {(self.grid.size, years.size)}")
        if not np.all(np.isfinite(y)):
            raise InvalidValue("rainfall values must be finite")
        if np.any(y < 0):
            raise InvalidValue("rainfall values must be non-negative")
        if years.size > 1 and np.any(np.diff(years) != 1):
            raise InvalidValue("years must be strictly increasing and consecutive")
        y.setflags(write=False)
        years.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "aimr", compute_aimr(self))

    @property
    def S(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]

    def year_index(self, year: int) -> int:
        idx = int(year) - int(self.years[0])
        if not 0 <= idx < self.T:
            raise InvalidParameter(f"year {year} outside {self.years[0]}..{self.years[-1]}")
        return idx


def compute_aimr(dataset) -> np.ndarray:
    """Per-year mean over all locations."""
    aimr = np.asarray(dataset.y, dtype=np.float64).mean(axis=0)
    aimr.setflags(write=False)
    return aimr


def load_csv(path) -> RainfallDataset:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        return _read_rows(fh)


def loads_csv(text: str) -> RainfallDataset:
    return _read_rows(io.StringIO(text))


def _read_rows(fh) -> RainfallDataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    if [h.strip() for h in header] != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)}", 1)

    coords = {}
    values = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, got {len(row)}", lineno)
        try:
            lid = row[0].strip()
            lat, lon = float(row[1]), float(row[2])
            year = int(row[3])
            val = float(row[4])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if not np.isfinite(val):
            raise InvalidValue(f"line {lineno}: non-finite rainfall")
        if val < 0:
            raise InvalidValue(f"line {lineno}: negative rainfall {val}")
        if coords.setdefault(lid, (lat, lon)) != (lat, lon):
            raise ParseError(f"location {lid} has inconsistent coordinates", lineno)
        if (lid, year) in values:
            raise ParseError(f"duplicate row for location {lid}, year {year}", lineno)
        values[(lid, year)] = val

    if not values:
        raise IncompleteGrid("no data rows")
    years_present = sorted({yr for _, yr in values})
    years = np.arange(years_present[0], years_present[-1] + 1)
    grid = build_grid(list(coords.values()))
    y = np.full((grid.size, years.size), np.nan)
    for (lid, year), val in values.items():
        y[grid.index_of(*coords[lid]), year - years[0]] = val
    if np.isnan(y).any():
        s, t = np.argwhere(np.isnan(y))[0]
        loc = grid.locations[s]
        raise IncompleteGrid(f"missing value at ({loc.lat}, {loc.lon}) in year {years[t]}")
    return RainfallDataset(grid, years, y)


def write_csv(dataset: RainfallDataset, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_csv(dataset))


def dumps_csv(dataset: RainfallDataset) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for loc in dataset.grid.locations:
        for t, year in enumerate(dataset.years):
            w.writerow([loc.id, repr(loc.lat), repr(loc.lon), int(year), repr(float(dataset.y[loc.id, t]))])
    return out.getvalue()


def aggregate_annual(locations, dates, daily) -> RainfallDataset:
    """Mean daily rainfall per calendar year.

    ``dates`` is a sequence of days (anything ``np.datetime64`` accepts) shared by
    all locations; ``daily`` has shape (S, len(dates)).  Every day of every year
    covered must be present exactly once.
    """
    dates = np.asarray(dates, dtype="datetime64[D]")
    daily = np.asarray(daily, dtype=np.float64)
    if daily.ndim != 2 or daily.shape[1] != dates.size:
        raise IncompleteSeries(f"daily has shape {daily.shape}, expected (S, {dates.size})")
    if np.isnan(daily).any():
        raise IncompleteSeries("daily series contains missing values")
    if np.unique(dates).size != dates.size:
        raise IncompleteSeries("duplicate days in calendar")
    year_of = dates.astype("datetime64[Y]").astype(np.int64) + 1970
    years = np.unique(year_of)
    if years.size and np.any(np.diff(years) != 1):
        raise IncompleteSeries("calendar skips whole years")
    y = np.empty((daily.shape[0], years.size))
    for t, year in enumerate(years):
        sel = year_of == year
        n_days = int((np.datetime64(f"{year + 1}-01-01", "D") - np.datetime64(f"{year}-01-01", "D")).astype(np.int64))
        if sel.sum() != n_days:
            raise IncompleteSeries(f"year {year} has {int(sel.sum())} of {n_days} days")
        y[:, t] = daily[:, sel].mean(axis=1)
    grid = build_grid(locations)
    return RainfallDataset(grid, years, _reorder(grid, locations, y))


def _reorder(grid, locations, rows):
    out = np.empty_like(rows)
    for k, (lat, lon) in enumerate(locations):
        out[grid.index_of(lat, lon)] = rows[k]
    return out


# --- synthetic data -------------------------------------------------------


@dataclass(frozen=True)
class Block:
    """Mean-shifted box ``rows[0]:rows[1] x cols[0]:cols[1] x years[0]:years[1]`` (half-open)."""

    sign: int
    rows: tuple
    cols: tuple
    years: tuple
    shift: float

    @property
    def volume(self) -> int:
        return (self.rows[1] - self.rows[0]) * (self.cols[1] - self.cols[0]) * (self.years[1] - self.years[0])


@dataclass(frozen=True)
class SyntheticSpec:
    S_rows: int
    S_cols: int
    T: int
    background_mu: float = 5.0
    background_sigma: float = 1.0
    blocks: tuple = ()
    seed: int = 0
    start_year: int = 1901

    def validate(self):
        if self.S_rows < 1 or self.S_cols < 1 or self.T < 1:
            raise InvalidParameter("grid dimensions and T must be positive")
        if self.background_sigma < 0:
            raise InvalidParameter("background_sigma must be >= 0")
        for b in self.blocks:
            if b.sign not in (1, -1):
                raise InvalidParameter(f"block sign must be + or -, got {b.sign}")
            if b.shift < 0:
                raise InvalidParameter("block shift must be >= 0")
            for (lo, hi), n in ((b.rows, self.S_rows), (b.cols, self.S_cols), (b.years, self.T)):
                if not 0 <= lo < hi <= n:
                    raise InvalidParameter(f"block range {lo}:{hi} outside 0:{n}")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    labels: np.ndarray


def generate_synthetic(spec: SyntheticSpec):
    """Gaussian background with planted mean-shifted blocks.

    Values are clipped at 0 so the dataset stays physical; with the default
    mu=5, sigma=1 this never triggers in practice.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    cube = rng.normal(spec.background_mu, spec.background_sigma, size=(spec.S_rows, spec.S_cols, spec.T))
    lab = np.full(cube.shape, 3, dtype=np.int8)
    for b in spec.blocks:
        box = np.s_[b.rows[0]:b.rows[1], b.cols[0]:b.cols[1], b.years[0]:b.years[1]]
        other = 2 if b.sign > 0 else 1
        if np.any(lab[box] == other):
            raise ConflictingBlocks("blocks of opposite sign overlap")
        cube[box] += b.sign * b.shift * spec.background_sigma
        lab[box] = 1 if b.sign > 0 else 2
    np.maximum(cube, 0.0, out=cube)

    grid = rect_grid(spec.S_rows, spec.S_cols)
    r, c = grid.ij[:, 0], grid.ij[:, 1]
    years = np.arange(spec.start_year, spec.start_year + spec.T)
    return RainfallDataset(grid, years, cube[r, c, :]), GroundTruth(lab[r, c, :].copy())


def read_synthetic_spec(path) -> SyntheticSpec:
    return synthetic_spec_from_dict(read_kv(path))


_SYNTH_KEYS = {"rows", "cols", "years", "start_year", "background_mu", "background_sigma", "seed"}


def synthetic_spec_from_dict(cfg: dict) -> SyntheticSpec:
    blocks = []
    for key, val in cfg.items():
        if key.startswith("block."):
            blocks.append(_parse_block(key, val))
        elif key not in _SYNTH_KEYS:
            raise ParseError(f"unknown key {key!r}")
    spec = SyntheticSpec(
        S_rows=get_int(cfg, "rows"),
        S_cols=get_int(cfg, "cols"),
        T=get_int(cfg, "years"),
        background_mu=get_float(cfg, "background_mu", 5.0),
        background_sigma=get_float(cfg, "background_sigma", 1.0),
        blocks=tuple(blocks),
        seed=get_int(cfg, "seed", 0),
        start_year=get_int(cfg, "start_year", 1901),
    )
    try:
        spec.validate()
    except InvalidParameter as exc:
        raise ParseError(str(exc)) from None
    return spec


def _parse_block(key, val):
    # block.<name> = <+|-> r0:r1 c0:c1 t0:t1 shift
    parts = val.split()
    try:
        if len(parts) != 5 or parts[0] not in "+-":
            raise ValueError
        ranges = [tuple(int(v) for v in p.split(":")) for p in parts[1:4]]
        if any(len(r) != 2 for r in ranges):
            raise ValueError
        return Block(1 if parts[0] == "+" else -1, *ranges, float(parts[4]))
    except ValueError:
        raise ParseError(f"key {key!r}: expected '<+|-> r0:r1 c0:c1 t0:t1 shift', got {val!r}") from None


def synthetic_spec_to_dict(spec: SyntheticSpec) -> dict:
    cfg = {
        "rows": spec.S_rows, "cols": spec.S_cols, "years": spec.T, "start_year": spec.start_year,
        "background_mu": spec.background_mu, "background_sigma": spec.background_sigma, "seed": spec.seed,
    }
    for n, b in enumerate(spec.blocks):
        sign = "+" if b.sign > 0 else "-"
        cfg[f"block.{n}"] = f"{sign} {b.rows[0]}:{b.rows[1]} {b.cols[0]}:{b.cols[1]} {b.years[0]}:{b.years[1]} {b.shift}"
    return cfg
