"""Seeded synthetic data generation for fixtures and demos.

Produces a daily-periodic load with a weekly rhythm and a temperature
coupling, matching the synthetic weather provider so reference models have
a real covariate to learn from.
"""
from __future__ import annotations

import math
import random

from .timeutil import FrequencySpec
from .weather import SyntheticWeatherProvider


def synthetic_load(
    start: float,
    days: int,
    frequency: str | FrequencySpec = "1H",
    seed: int = 7,
    base: float = 120.0,
    daily_amplitude: float = 35.0,
    weekly_amplitude: float = 10.0,
    temperature_coeff: float = -1.5,
    noise: float = 0.0,
    latitude: float = 34.9,
    longitude: float = 33.6,
) -> list[tuple[float, float]]:
    """Deterministic (per seed) load series on a regular grid."""
    freq = frequency if isinstance(frequency, FrequencySpec) else FrequencySpec.parse(frequency)
    rng = random.Random(seed)
    end = start + days * 86400.0
    weather = SyntheticWeatherProvider().get(latitude, longitude, start, end + 3600.0)
    temp = dict(weather["temperature"].points)
    points = []
    t = start
    while t < end:
        hour = (t % 86400.0) / 3600.0
        dow = int((t // 86400.0 + 3) % 7)  # epoch day 0 was a Thursday
        daily = daily_amplitude * math.sin(2.0 * math.pi * (hour - 7.0) / 24.0)
        weekly = weekly_amplitude * (1.0 if dow < 5 else -1.0)
        hourly_ts = (t // 3600.0) * 3600.0
        coupling = temperature_coeff * temp.get(hourly_ts, 20.0)
        value = base + daily + weekly + coupling
        if noise > 0:
            value += rng.gauss(0.0, noise)
        points.append((t, value))
        t += freq.seconds
    return points


def constant_series(start: float, count: int, step_s: float, value: float):
    return [(start + i * step_s, value) for i in range(count)]
