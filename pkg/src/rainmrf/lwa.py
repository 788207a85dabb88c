"""Location-wise analysis: per-location mean +/- k*std thresholds."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeries, DegenerateThreshold, InsufficientYears, InvalidValue, ShapeError


@dataclass(frozen=True, eq=False)
class LocationStats:
    mu: np.ndarray
    sigma: np.ndarray
    mu_aimr: float
    sigma_aimr: float


@dataclass(frozen=True, eq=False)
class StateField:
    """Latent states in {1, 2, 3}: 1 = high, 2 = low, 3 = normal."""

    z: np.ndarray
    z_aimr: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.int8)
        za = np.asarray(self.z_aimr, dtype=np.int8)
        if z.ndim != 2 or za.shape != (z.shape[1],):
            raise ShapeError(f"inconsistent StateField shapes {z.shape} / {za.shape}")
        if not (np.isin(z, (1, 2, 3)).all() and np.isin(za, (1, 2, 3)).all()):
            raise InvalidValue("states must be 1, 2 or 3")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "z_aimr", za)

    def __eq__(self, other):
        return (isinstance(other, StateField) and np.array_equal(self.z, other.z)
                and np.array_equal(self.z_aimr, other.z_aimr))


@dataclass(frozen=True)
class YearSets:
    H: frozenset
    L: frozenset
    HL: frozenset
    LL: frozenset
    thresholds: dict


def location_stats(dataset) -> LocationStats:
    y = dataset.y
    if y.shape[1] < 2:
        raise InsufficientYears(f"need at least 2 years, got {y.shape[1]}")
    aimr = dataset.aimr
    return LocationStats(y.mean(axis=1), y.std(axis=1), float(aimr.mean()), float(aimr.std()))


def _threshold(values, mu, sigma, k):
    out = np.full(values.shape, 3, dtype=np.int8)
    live = sigma > 0
    out[(values >= mu + k * sigma) & live] = 1
    out[(values <= mu - k * sigma) & live] = 2
    return out


def lwa_assign(dataset, stats: LocationStats, k: float = 1.0) -> StateField:
    """State 1 where ``y >= mu_s + k*sigma_s``, 2 where ``y <= mu_s - k*sigma_s``, else 3.

    Zero-variance series carry no anomaly evidence and stay in state 3.
    """
    flat = stats.sigma == 0
    if flat.any():
        warnings.warn(f"{int(flat.sum())} location(s) have zero variance; assigned state 3",
                      DegenerateSeries, stacklevel=2)
    z = _threshold(dataset.y, stats.mu[:, None], stats.sigma[:, None], k)
    za = _threshold(dataset.aimr, stats.mu_aimr, np.full(dataset.T, stats.sigma_aimr), k)
    return StateField(z, za)


def widespread_year_sets(z0: StateField, stats: LocationStats = None) -> YearSets:
    """H/L from the AIMR states; HL/LL from years with unusually many local anomalies."""
    n1 = (z0.z == 1).sum(axis=0)
    n2 = (z0.z == 2).sum(axis=0)
    thresholds = {}
    sets = {}
    for name, counts in (("HL", n1), ("LL", n2)):
        mu, sd = float(counts.mean()), float(counts.std())
        if sd == 0:
            warnings.warn(f"{name}: count series is constant; every year meets the threshold",
                          DegenerateThreshold, stacklevel=2)
        thresholds[name] = {"mean": mu, "std": sd, "threshold": mu + sd}
        sets[name] = frozenset(int(t) for t in np.flatnonzero(counts >= mu + sd))
    H = frozenset(int(t) for t in np.flatnonzero(z0.z_aimr == 1))
    L = frozenset(int(t) for t in np.flatnonzero(z0.z_aimr == 2))
    if stats is not None:
        thresholds["H"] = {"mean": stats.mu_aimr, "std": stats.sigma_aimr,
                           "threshold": stats.mu_aimr + stats.sigma_aimr}
        thresholds["L"] = {"mean": stats.mu_aimr, "std": stats.sigma_aimr,
                           "threshold": stats.mu_aimr - stats.sigma_aimr}
    return YearSets(H, L, sets["HL"], sets["LL"], thresholds)


def year_sets_report(ys: YearSets, years) -> dict:
    """JSON-ready report; year indices are translated to year labels."""
    years = [int(v) for v in years]

    def label(idx):
        return [years[t] for t in sorted(idx)]

    return {"H": label(ys.H), "L": label(ys.L), "HL": label(ys.HL), "LL": label(ys.LL),
            "thresholds": ys.thresholds}
