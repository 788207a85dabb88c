"""Anomalies as same-state connected components, and the statistics built on them."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateClimatology, ShapeError
from .lwa import StateField, YearSets, widespread_year_sets

POSITIVE, NEGATIVE = 1, -1
SIGN_NAME = {POSITIVE: "positive", NEGATIVE: "negative"}

# 8-neighbours within a year, plus the same cell one year earlier/later
_STRUCTURE = np.zeros((3, 3, 3), dtype=bool)
_STRUCTURE[:, :, 1] = True
_STRUCTURE[1, 1, 0] = _STRUCTURE[1, 1, 2] = True


@dataclass(eq=False)
class Anomaly:
    id: int
    sign: int
    nodes: np.ndarray   # (n, 2) rows of (s, t), sorted
    intensity: float | None = None

    @property
    def st_size(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def spatial_size(self) -> int:
        return int(np.unique(self.nodes[:, 0]).size)

    @property
    def temporal_size(self) -> int:
        return int(np.unique(self.nodes[:, 1]).size)

    @property
    def locations(self) -> np.ndarray:
        return np.unique(self.nodes[:, 0])

    @property
    def year_indices(self) -> np.ndarray:
        return np.unique(self.nodes[:, 1])


def _field(z):
    return z.z if isinstance(z, StateField) else np.asarray(z)


def label_components(z, grid) -> tuple:
    """Component labels for state 1 and state 2 as two (S, T) int arrays (0 = none)."""
    z = _field(z)
    S, T = z.shape
    if S != grid.size:
        raise ShapeError(f"field has {S} locations, grid has {grid.size}")
    rows, cols = grid.lattice_shape()
    r, c = grid.ij[:, 0], grid.ij[:, 1]
    out = []
    for state in (1, 2):
        cube = np.zeros((rows, cols, T), dtype=bool)
        cube[r, c, :] = z == state
        labels, _ = ndimage.label(cube, structure=_STRUCTURE)
        out.append(labels[r, c, :])
    return tuple(out)


def extract_anomalies(z, grid, dataset=None, stats=None) -> list:
    """Connected components of state-1 and state-2 location-year nodes.

    Positive anomalies come first; within a sign, ordering is by the earliest
    (year, location) node.  When ``dataset`` is given intensities are filled in.
    """
    S = _field(z).shape[0]
    found = []
    for sign, labels in zip((POSITIVE, NEGATIVE), label_components(z, grid)):
        flat = labels.ravel()
        live = np.flatnonzero(flat)
        if live.size == 0:
            continue
        order = live[np.argsort(flat[live], kind="stable")]
        bounds = np.flatnonzero(np.diff(flat[order])) + 1
        for group in np.split(order, bounds):
            s, t = np.divmod(group, labels.shape[1])
            nodes = np.column_stack([s, t])
            key = int((t * S + s).min())
            found.append((sign != POSITIVE, key, nodes))
    found.sort(key=lambda item: item[:2])
    anomalies = [Anomaly(k, NEGATIVE if neg else POSITIVE, nodes) for k, (neg, _, nodes) in enumerate(found)]
    if dataset is not None:
        mu = stats.mu if stats is not None else dataset.y.mean(axis=1)
        for a in anomalies:
            a.intensity = _intensity(a, dataset.y, mu)
    return anomalies


def _intensity(a, y, mu):
    s, t = a.nodes[:, 0], a.nodes[:, 1]
    if np.any(mu[s] == 0):
        raise DegenerateClimatology(f"anomaly {a.id} covers a location with zero mean rainfall")
    return float(np.mean(y[s, t] / mu[s]))


def anomaly_intensity(a: Anomaly, dataset, stats=None) -> float:
    """Mean over the anomaly's nodes of observed / climatological mean rainfall."""
    mu = stats.mu if stats is not None else dataset.y.mean(axis=1)
    return _intensity(a, dataset.y, mu)


# --- aggregate statistics --------------------------------------------------


@dataclass
class AnomalyStats:
    min_st_size: int
    NP: int | None = None
    NN: int | None = None
    STSP: float | None = None
    STSN: float | None = None
    SSP: float | None = None
    SSN: float | None = None
    TSP: float | None = None
    TSN: float | None = None
    IP: float | None = None
    IN: float | None = None
    STS: float | None = None
    SS: float | None = None
    TS: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _mean(values):
    return float(np.mean(values)) if len(values) else None


def aggregate_stats(anomalies, min_st_size: int = 1) -> AnomalyStats:
    """Counts and mean sizes/intensities per sign over anomalies with ``st_size >= min_st_size``."""
    kept = [a for a in anomalies if a.st_size >= min_st_size]
    out = AnomalyStats(min_st_size)
    if not kept:
        return out
    pos = [a for a in kept if a.sign == POSITIVE]
    neg = [a for a in kept if a.sign == NEGATIVE]
    out.NP, out.NN = len(pos), len(neg)
    for suffix, group in (("P", pos), ("N", neg), ("", kept)):
        setattr(out, "STS" + suffix, _mean([a.st_size for a in group]))
        setattr(out, "SS" + suffix, _mean([a.spatial_size for a in group]))
        setattr(out, "TS" + suffix, _mean([a.temporal_size for a in group]))
    for suffix, group in (("P", pos), ("N", neg)):
        vals = [a.intensity for a in group if a.intensity is not None]
        setattr(out, "I" + suffix, _mean(vals))
    return out


@dataclass
class GainLossReport:
    N1: int
    N2: int
    NG1: int
    NG2: int
    NL1: int
    NL2: int

    def as_dict(self) -> dict:
        return asdict(self)


def gain_loss(z, z_ref) -> GainLossReport:
    """States gained/lost relative to a reference field (normally the LWA field)."""
    z, ref = _field(z), _field(z_ref)
    if z.shape != ref.shape:
        raise ShapeError(f"field shapes differ: {z.shape} vs {ref.shape}")
    return GainLossReport(
        N1=int((z == 1).sum()),
        N2=int((z == 2).sum()),
        NG1=int(((z == 1) & (ref != 1)).sum()),
        NG2=int(((z == 2) & (ref != 2)).sum()),
        NL1=int(((ref == 1) & (z != 1)).sum()),
        NL2=int(((ref == 2) & (z != 2)).sum()),
    )


@dataclass
class OverlapReport:
    H: frozenset
    L: frozenset
    HL: frozenset
    LL: frozenset
    ZH: frozenset
    ZL: frozenset
    H_in_ZH: float | None
    HL_in_ZH: float | None
    L_in_ZL: float | None
    LL_in_ZL: float | None

    def as_dict(self, years=None) -> dict:
        def conv(v):
            if isinstance(v, frozenset):
                return sorted(int(years[t]) if years is not None else int(t) for t in v)
            return v
        return {k: conv(v) for k, v in self.__dict__.items()}


def _frac(a, b):
    return len(a & b) / len(a) if a else None


def overlap_report(z_mrf: StateField, z0: StateField, stats=None) -> OverlapReport:
    """Compare aggregate MRF states (ZH, ZL) with threshold-based year sets."""
    ys = widespread_year_sets(z0, stats)
    ZH = frozenset(int(t) for t in np.flatnonzero(z_mrf.z_aimr == 1))
    ZL = frozenset(int(t) for t in np.flatnonzero(z_mrf.z_aimr == 2))
    return OverlapReport(ys.H, ys.L, ys.HL, ys.LL, ZH, ZL,
                         _frac(ys.H, ZH), _frac(ys.HL, ZH), _frac(ys.L, ZL), _frac(ys.LL, ZL))


@dataclass
class YearAssignmentStats:
    N1Y: float
    N2Y: float
    N1H: float | None
    N2L: float | None
    D12H: float | None
    D21L: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def year_assignment_stats(z, year_sets: YearSets) -> YearAssignmentStats:
    """Mean per-year counts of state-1/2 locations over all, H and L years."""
    z = _field(z)
    n1 = (z == 1).sum(axis=0).astype(float)
    n2 = (z == 2).sum(axis=0).astype(float)
    H = sorted(year_sets.H)
    L = sorted(year_sets.L)
    return YearAssignmentStats(
        N1Y=float(n1.mean()),
        N2Y=float(n2.mean()),
        N1H=float(n1[H].mean()) if H else None,
        N2L=float(n2[L].mean()) if L else None,
        D12H=float((n1[H] - n2[H]).mean()) if H else None,
        D21L=float((n2[L] - n1[L]).mean()) if L else None,
    )


CORRELATION_PAIRS = {
    "temporal_spatial": ("temporal_size", "spatial_size"),
    "st_spatial": ("st_size", "spatial_size"),
    "st_temporal": ("st_size", "temporal_size"),
    "st_intensity": ("st_size", "intensity"),
}


def pearson(x, y):
    """Pearson r, or None for fewer than two points or a constant vector."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        return None
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt((dx * dx).sum()), np.sqrt((dy * dy).sum())
    if sx == 0 or sy == 0:
        return None
    return float(np.clip((dx * dy).sum() / (sx * sy), -1.0, 1.0))


def size_correlations(anomalies) -> dict:
    """Per-sign Pearson correlations between anomaly sizes and intensity."""
    report = {}
    for sign in (POSITIVE, NEGATIVE):
        group = [a for a in anomalies if a.sign == sign]
        row = {}
        for name, (fa, fb) in CORRELATION_PAIRS.items():
            if any(getattr(a, fb) is None or getattr(a, fa) is None for a in group):
                row[name] = None
                continue
            row[name] = pearson([getattr(a, fa) for a in group], [getattr(a, fb) for a in group])
        report[SIGN_NAME[sign]] = row
    return report


def case_report(a: Anomaly, dataset, stats=None) -> dict:
    """Locations, years, long-term and per-year observed means, and intensity of one anomaly."""
    mu = stats.mu if stats is not None else dataset.y.mean(axis=1)
    locs = a.locations
    years = a.year_indices
    grid = dataset.grid
    return {
        "anomaly_id": int(a.id),
        "sign": SIGN_NAME[a.sign],
        "spatial_size": a.spatial_size,
        "temporal_size": a.temporal_size,
        "st_size": a.st_size,
        "locations": [{"location_id": int(s), "lat": grid.locations[s].lat, "lon": grid.locations[s].lon}
                      for s in locs],
        "first_year": int(dataset.years[years[0]]),
        "last_year": int(dataset.years[years[-1]]),
        "long_term_mean": float(mu[locs].mean()),
        "observed_mean_by_year": {str(int(dataset.years[t])): float(dataset.y[locs, t].mean()) for t in years},
        "intensity": _intensity(a, dataset.y, mu),
    }
