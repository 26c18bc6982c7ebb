"""Hourly multi-area load/wind data: loading, normalisation and day slicing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

HOURS_PER_DAY = 24
POINTS_PER_DAY = HOURS_PER_DAY + 1
FEATURES = ("load", "wind")
FACTOR_TOL = 1e-9


class DataError(ValueError):
    """Invalid or incomplete input data."""


@dataclass(frozen=True)
class HourlyDataset:
    """Per-area load and wind factors for one year.

    ``values`` has shape ``(n_areas, n_features, n_days * 24)``. Hour
    ``n_days * 24`` is not stored: :meth:`at` wraps it to hour 0.
    """

    areas: tuple[str, ...]
    features: tuple[str, ...]
    values: np.ndarray
    year_length_days: int = 365

    def __post_init__(self):
        object.__setattr__(self, "areas", tuple(self.areas))
        object.__setattr__(self, "features", tuple(self.features))
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        for f in ("load", "wind"):
            if f not in self.features:
                raise DataError(f"dataset must include feature {f!r}")
        if len(set(self.areas)) != len(self.areas):
            raise DataError("duplicate area identifiers")
        expect = (len(self.areas), len(self.features), self.year_length_days * HOURS_PER_DAY)
        if vals.shape != expect:
            raise DataError(f"values shape {vals.shape} != {expect}")
        if not np.all(np.isfinite(vals)):
            raise DataError("non-finite factor values")
        wind = vals[:, self.features.index("wind")]
        if wind.min() < -FACTOR_TOL or wind.max() > 1 + FACTOR_TOL:
            raise DataError("wind factor out of [0,1]")
        if vals[:, self.features.index("load")].min() <= 0:
            raise DataError("load factors must be strictly positive")

    @property
    def n_hours(self) -> int:
        return self.year_length_days * HOURS_PER_DAY

    def area_index(self, area: str) -> int:
        try:
            return self.areas.index(area)
        except ValueError:
            raise DataError(f"unknown area {area!r}") from None

    def series(self, area: str, feature: str) -> np.ndarray:
        return self.values[self.area_index(area), self.features.index(feature)]

    def at(self, area: str, feature: str, hour: int) -> float:
        return float(self.series(area, feature)[hour % self.n_hours])


@dataclass(frozen=True)
class DayMatrix:
    """25 hourly points of one day, both midnights included: ``points[area, feature, t]``."""

    day_index: int
    points: np.ndarray

    @property
    def n_points(self) -> int:
        return self.points.shape[-1]


def compute_factors(raw_load_mw, raw_wind, installed_wind_mw: float | None = None, area: str = "?"):
    """Return ``(FL, FW)``: load over its annual peak, wind as a capacity factor.

    ``raw_wind`` is a capacity factor unless ``installed_wind_mw`` is given,
    in which case it is MW output and is divided by the installed capacity.
    """
    load = np.asarray(raw_load_mw, dtype=float)
    peak = load.max() if load.size else 0.0
    if not peak > 0:
        raise DataError(f"area {area}: zero peak load")
    fl = load / peak
    wind = np.asarray(raw_wind, dtype=float)
    if installed_wind_mw is not None:
        if not installed_wind_mw > 0:
            raise DataError(f"area {area}: installed wind capacity must be positive")
        wind = wind / installed_wind_mw
    if wind.size and (wind.min() < -FACTOR_TOL or wind.max() > 1 + FACTOR_TOL):
        raise DataError(f"area {area}: wind factor out of [0,1]")
    return fl, np.clip(wind, 0.0, 1.0)


def slice_days(ds: HourlyDataset) -> list[DayMatrix]:
    """Cut the year into 25-point days; point 24 of day d is hour 0 of day d+1 (wrapping)."""
    n = ds.n_hours
    out = []
    for d in range(ds.year_length_days):
        hours = (HOURS_PER_DAY * d + np.arange(POINTS_PER_DAY)) % n
        pts = ds.values[:, :, hours]
        pts.setflags(write=False)
        out.append(DayMatrix(d, pts))
    return out


def unslice_days(days: list[DayMatrix]) -> np.ndarray:
    """Inverse of :func:`slice_days` (drops each day's last point)."""
    return np.concatenate([d.points[:, :, :HOURS_PER_DAY] for d in days], axis=2)


def net_load(ds: HourlyDataset, instance, area: str, hour: int) -> float:
    """Load minus maximum available wind (MW) in ``area`` at ``hour``."""
    if area not in instance.area_names:
        raise DataError(f"unknown area {area!r}")
    fl = ds.at(area, "load", hour)
    fw = ds.at(area, "wind", hour)
    return fl * instance.area_peak_load(area) - fw * instance.area_wind_max(area)


def net_load_series(ds: HourlyDataset, instance, area: str) -> np.ndarray:
    return (ds.series(area, "load") * instance.area_peak_load(area)
            - ds.series(area, "wind") * instance.area_wind_max(area))


# -- CSV input -----------------------------------------------------------------


def _parse_hour(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1]
    if len(text) == 13:  # YYYY-MM-DDTHH
        text += ":00"
    return datetime.fromisoformat(text)


def read_capacity_table(path) -> dict[str, float]:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["area"].strip()] = float(row["installed_wind_mw"])
    return out


def load_hourly_csv(path, areas=None, wind_capacity=None, n_days: int = 365) -> HourlyDataset:
    """Read ``timestamp,area,load_mw,wind_cf`` (or ``wind_mw``) rows into factors.

    ``areas`` restricts/declares the expected areas (default: those in the
    file, sorted). ``wind_capacity`` (mapping or CSV path with
    ``area,installed_wind_mw``) is required when the file carries ``wind_mw``.
    Errors name the offending CSV row (header is row 1).
    """
    path = Path(path)
    if isinstance(wind_capacity, (str, Path)):
        wind_capacity = read_capacity_table(wind_capacity)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        cols = {h: i for i, h in enumerate(header)}
        for need in ("timestamp", "area", "load_mw"):
            if need not in cols:
                raise DataError(f"{path}: missing column {need!r}")
        if "wind_cf" in cols:
            wind_col, wind_mw = cols["wind_cf"], False
        elif "wind_mw" in cols:
            wind_col, wind_mw = cols["wind_mw"], True
            if wind_capacity is None:
                raise DataError(f"{path}: wind_mw given without an installed-capacity table")
        else:
            raise DataError(f"{path}: missing column 'wind_cf' or 'wind_mw'")
        rows = []
        for rowno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                ts = _parse_hour(row[cols["timestamp"]])
            except (ValueError, IndexError):
                raise DataError(f"row {rowno}: bad timestamp") from None
            area = row[cols["area"]].strip()
            try:
                load = float(row[cols["load_mw"]])
                wind = float(row[wind_col])
            except (ValueError, IndexError):
                raise DataError(f"row {rowno}: non-numeric value") from None
            if not (math.isfinite(load) and math.isfinite(wind)):
                raise DataError(f"row {rowno}: non-numeric value")
            if not wind_mw and not -FACTOR_TOL <= wind <= 1 + FACTOR_TOL:
                raise DataError(f"row {rowno}: wind factor out of [0,1]")
            rows.append((rowno, ts, area, load, wind))
    if not rows:
        raise DataError(f"{path}: no data rows")

    declared = list(areas) if areas is not None else sorted({r[2] for r in rows})
    a_idx = {a: i for i, a in enumerate(declared)}
    start = min(r[1] for r in rows)
    if (start.hour, start.minute, start.second) != (0, 0, 0):
        raise DataError(f"first timestamp {start.isoformat()} is not a midnight")
    n_hours = n_days * HOURS_PER_DAY
    load = np.full((len(declared), n_hours), np.nan)
    wind = np.full((len(declared), n_hours), np.nan)
    for rowno, ts, area, lv, wv in rows:
        if area not in a_idx:
            raise DataError(f"row {rowno}: unknown area {area!r}")
        delta = ts - start
        h, rem = divmod(delta, timedelta(hours=1))
        if rem:
            raise DataError(f"row {rowno}: timestamp not on the hour")
        if h >= n_hours:
            if h < (n_days + 1) * HOURS_PER_DAY and n_days == 365:
                raise DataError(f"row {rowno}: leap-year data (366 days) not supported")
            raise DataError(f"row {rowno}: hour index {h} beyond {n_days} days")
        i = a_idx[area]
        if not np.isnan(load[i, h]):
            raise DataError(f"row {rowno}: duplicate timestamp {ts.isoformat()} for area {area!r}")
        load[i, h], wind[i, h] = lv, wv
    for i, a in enumerate(declared):
        gaps = np.flatnonzero(np.isnan(load[i]))
        if gaps.size:
            raise DataError(f"area {a!r}: gap at hour index {gaps[0]}")
    values = np.empty((len(declared), len(FEATURES), n_hours))
    for i, a in enumerate(declared):
        cap = wind_capacity.get(a) if wind_mw else None
        if wind_mw and cap is None:
            raise DataError(f"no installed wind capacity for area {a!r}")
        values[i, 0], values[i, 1] = compute_factors(load[i], wind[i], cap, area=a)
    return HourlyDataset(tuple(declared), FEATURES, values, n_days)


# -- factor files (pipeline artifact) -------------------------------------------


def write_factors_csv(ds: HourlyDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["area", "hour", *ds.features])
        for i, a in enumerate(ds.areas):
            for h in range(ds.n_hours):
                w.writerow([a, h, *(repr(float(v)) for v in ds.values[i, :, h])])


def read_factors_csv(path) -> HourlyDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        features = tuple(header[2:])
        data: dict[str, list] = {}
        for row in reader:
            data.setdefault(row[0], []).append([float(v) for v in row[2:]])
    areas = tuple(data)
    values = np.stack([np.asarray(data[a]).T for a in areas])
    n_days = values.shape[2] // HOURS_PER_DAY
    return HourlyDataset(areas, features, values, n_days)
