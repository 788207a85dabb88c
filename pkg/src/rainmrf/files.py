"""CSV/JSON readers and writers for fields, posteriors and anomalies."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .anomaly import SIGN_NAME
from .errors import IncompleteGrid, ParseError
from .lwa import StateField

STATE_HEADER = ["location_id", "year", "state"]
AIMR_LOCATION_ID = "aimr"


def write_state_field(path, field: StateField, years) -> None:
    """``location_id,year,state`` rows; aggregate states use location_id ``aimr``."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATE_HEADER)
        S, T = field.z.shape
        for s in range(S):
            for t in range(T):
                w.writerow([s, int(years[t]), int(field.z[s, t])])
        for t in range(T):
            w.writerow([AIMR_LOCATION_ID, int(years[t]), int(field.z_aimr[t])])


def write_labels(path, labels, years) -> None:
    """Location-year states only (no aggregate rows), e.g. planted ground truth."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATE_HEADER)
        S, T = labels.shape
        for s in range(S):
            for t in range(T):
                w.writerow([s, int(years[t]), int(labels[s, t])])


def read_header(path) -> list:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return [h.strip() for h in next(csv.reader(fh), [])]


def read_state_field(path, S: int, years) -> StateField:
    years = [int(v) for v in years]
    y0 = years[0]
    z = np.zeros((S, len(years)), dtype=np.int8)
    za = np.zeros(len(years), dtype=np.int8)
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        if [h.strip() for h in next(reader, [])] != STATE_HEADER:
            raise ParseError(f"expected header {','.join(STATE_HEADER)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                lid, year, state = row[0].strip(), int(row[1]), int(row[2])
                t = year - y0
                if not 0 <= t < len(years) or state not in (1, 2, 3):
                    raise ValueError(f"year {year} or state {state} out of range")
                if lid == AIMR_LOCATION_ID:
                    za[t] = state
                else:
                    z[int(lid), t] = state
            except (ValueError, IndexError) as exc:
                raise ParseError(str(exc), lineno) from None
    if (z == 0).any():
        raise IncompleteGrid("state file does not cover every location and year")
    if (za == 0).any():
        # field without aggregate rows: treat aggregate as normal
        za[za == 0] = 3
    return StateField(z, za)


def write_marginals(path, marginal, marginal_aimr, years) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["location_id", "year", "p1", "p2", "p3"])
        S, T, _ = marginal.shape
        for s in range(S):
            for t in range(T):
                w.writerow([s, int(years[t])] + [repr(float(v)) for v in marginal[s, t]])
        for t in range(T):
            w.writerow([AIMR_LOCATION_ID, int(years[t])] + [repr(float(v)) for v in marginal_aimr[t]])


def write_trace(path, sweeps, values) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep", "loglik"])
        for k, v in zip(sweeps, values):
            w.writerow([int(k), repr(float(v))])


def write_anomalies(path, anomalies) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["anomaly_id", "sign", "spatial_size", "temporal_size", "st_size", "intensity"])
        for a in anomalies:
            inten = "" if a.intensity is None else repr(float(a.intensity))
            w.writerow([a.id, SIGN_NAME[a.sign], a.spatial_size, a.temporal_size, a.st_size, inten])


def write_membership(path, anomalies, years) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["anomaly_id", "location_id", "year"])
        for a in anomalies:
            for s, t in a.nodes:
                w.writerow([a.id, int(s), int(years[t])])


def read_anomaly_signs(path) -> dict:
    signs = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            signs[int(row["anomaly_id"])] = 1 if row["sign"] == "positive" else 2
    return signs


def membership_to_field(path, signs: dict, S: int, years) -> StateField:
    """Rebuild a state field from a membership CSV: member nodes take their anomaly's state."""
    y0 = int(years[0])
    z = np.full((S, len(years)), 3, dtype=np.int8)
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                z[int(row["location_id"]), int(row["year"]) - y0] = signs[int(row["anomaly_id"])]
            except (KeyError, ValueError, IndexError) as exc:
                raise ParseError(f"bad membership row: {exc}", lineno) from None
    return StateField(z, np.full(len(years), 3, dtype=np.int8))


def _default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8")
