"""Pluggable weather provider.

The synthetic provider is a deterministic function of (lat, lon, t): a
latitude-dependent base plus yearly and daily sinusoidal cycles.  The file
provider reads an hourly CSV fixture (timestamp,temperature[,other vars]).
"""
from __future__ import annotations

import csv
import math
import os
from pathlib import Path

from .errors import MissingCoordinates, NoProvider
from .timeseries import TimeSeriesWindow
from .timeutil import parse_rfc3339

HOUR = 3600.0


def _hour_grid(start: float, end: float) -> list[float]:
    first = math.ceil(start / HOUR) * HOUR
    out = []
    t = first
    while t < end:
        out.append(t)
        t += HOUR
    return out


class SyntheticWeatherProvider:
    """Deterministic sinusoidal-seasonal weather on an hourly grid."""

    variables = ("temperature",)

    def get(self, latitude: float, longitude: float, start: float, end: float):
        grid = _hour_grid(start, end)
        temps = []
        for t in grid:
            day_of_year = (t % (365.0 * 86400.0)) / 86400.0
            hour_of_day = (t % 86400.0) / HOUR
            base = 28.0 - 0.35 * abs(latitude) + 0.01 * longitude
            seasonal = 8.0 * math.sin(2.0 * math.pi * (day_of_year - 80.0) / 365.0)
            diurnal = 4.0 * math.sin(2.0 * math.pi * (hour_of_day - 9.0) / 24.0)
            temps.append(base + seasonal + diurnal)
        return {
            "temperature": TimeSeriesWindow(None, start, end, list(zip(grid, temps)))
        }


class FileWeatherProvider:
    """CSV-backed provider; first column is an RFC 3339 timestamp, remaining
    columns are weather variables."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def get(self, latitude: float, longitude: float, start: float, end: float):
        with open(self.path, newline="") as f:
            reader = csv.DictReader(f)
            variables = [c for c in reader.fieldnames or [] if c != "timestamp"]
            data: dict[str, list[tuple[float, float]]] = {v: [] for v in variables}
            for row in reader:
                ts = parse_rfc3339(row["timestamp"])
                if not (start <= ts < end):
                    continue
                for v in variables:
                    data[v].append((ts, float(row[v])))
        return {
            v: TimeSeriesWindow(None, start, end, sorted(pts)) for v, pts in data.items()
        }


def provider_from_env(env: dict | None = None):
    env = env if env is not None else os.environ
    kind = env.get("CASTORLITE_WEATHER", "synthetic")
    if kind == "synthetic":
        return SyntheticWeatherProvider()
    if kind == "file":
        path = env.get("CASTORLITE_WEATHER_FILE")
        if not path:
            raise NoProvider("CASTORLITE_WEATHER=file requires CASTORLITE_WEATHER_FILE")
        return FileWeatherProvider(path)
    if kind in ("none", "off"):
        return None
    raise NoProvider(f"unknown weather provider {kind!r}")


class WeatherService:
    def __init__(self, provider=None):
        self.provider = provider

    def get_weather(self, latitude, longitude, start: float, end: float):
        if self.provider is None:
            raise NoProvider("no weather provider configured")
        if latitude is None or longitude is None:
            raise MissingCoordinates("entity has no GIS coordinates")
        return self.provider.get(latitude, longitude, start, end)
