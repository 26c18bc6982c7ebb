"""Seeded synthetic load/wind years for tests and the bundled toy case."""

from __future__ import annotations

import csv
from datetime import datetime, timedelta

import numpy as np

from .data_ingest import FEATURES, HOURS_PER_DAY, HourlyDataset


def synthetic_dataset(areas=("north", "south"), n_days: int = 365, seed: int = 0,
                      peak_days: dict[str, int] | None = None, peak_boost: float = 0.45,
                      noise: float = 0.03) -> HourlyDataset:
    """Daily load shapes with seasonal drift and AR(1) wind per area.

    ``peak_days`` maps an area to a day whose evening load is raised by
    ``peak_boost`` (relative) while wind drops over the same hours, producing a clear
    net-load extreme. Load is normalised to an annual peak of 1.
    """
    rng = np.random.default_rng(seed)
    n_hours = n_days * HOURS_PER_DAY
    h = np.arange(n_hours)
    hod = h % HOURS_PER_DAY
    day = h // HOURS_PER_DAY
    values = np.empty((len(areas), len(FEATURES), n_hours))
    for i, area in enumerate(areas):
        phase = rng.uniform(-1.5, 1.5)
        daily = (0.55 + 0.18 * np.exp(-((hod - 9 - phase) ** 2) / 8)
                 + 0.25 * np.exp(-((hod - 19 - phase) ** 2) / 6))
        season = 1 + 0.12 * np.cos(2 * np.pi * (day + rng.uniform(0, 30)) / max(n_days, 1))
        day_level = 1 + rng.normal(0, 0.04, n_days)[day]
        load = daily * season * day_level * (1 + rng.normal(0, noise, n_hours))
        wind = np.empty(n_hours)
        x = rng.uniform(0.2, 0.6)
        mean = rng.uniform(0.3, 0.45)
        for k in range(n_hours):
            x = mean + 0.97 * (x - mean) + rng.normal(0, 0.06)
            wind[k] = x
        wind = np.clip(wind, 0.0, 1.0)
        if peak_days and area in peak_days:
            d = peak_days[area]
            sl = slice(d * HOURS_PER_DAY, (d + 1) * HOURS_PER_DAY)
            shape = np.exp(-((np.arange(HOURS_PER_DAY) - 18) ** 2) / 10)
            load[sl] *= 1 + peak_boost * shape
            wind[sl] *= 1 - 0.9 * shape
        values[i, 0] = load / load.max()
        values[i, 1] = wind
    return HourlyDataset(tuple(areas), FEATURES, values, n_days)


def write_hourly_csv(ds: HourlyDataset, path, peak_mw: dict[str, float] | None = None,
                     start: datetime = datetime(2019, 1, 1)) -> None:
    """Write the dataset in the ingest CSV schema (``timestamp,area,load_mw,wind_cf``)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "area", "load_mw", "wind_cf"])
        for hour in range(ds.n_hours):
            ts = (start + timedelta(hours=hour)).strftime("%Y-%m-%dT%H:%M")
            for i, area in enumerate(ds.areas):
                scale = (peak_mw or {}).get(area, 1000.0)
                w.writerow([ts, area, repr(float(ds.values[i, 0, hour] * scale)),
                            repr(float(ds.values[i, 1, hour]))])
