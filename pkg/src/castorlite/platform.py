"""Wires the stores and engines over one data directory."""
from __future__ import annotations

import os
from pathlib import Path

from .forecasts import ForecastStore
from .registry import ModelRegistry
from .scheduler import FiringLedger, Scheduler
from .semantics import SemanticStore
from .store import Store
from .timeseries import TimeseriesEngine
from .weather import WeatherService, provider_from_env


class Platform:
    def __init__(
        self,
        data_dir: str | Path,
        manifest_path: str | Path | None = None,
        weather_provider=None,
        store_latency_s: float = 0.0,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.store = Store(self.data_dir / "castorlite.db", latency_s=store_latency_s)
        self.semantics = SemanticStore(self.store)
        self.timeseries = TimeseriesEngine(self.store, self.semantics)
        if weather_provider is None:
            weather_provider = provider_from_env()
        self.weather = WeatherService(weather_provider)
        if manifest_path is None:
            manifest_path = os.environ.get("CASTORLITE_MANIFEST")
        self.registry = ModelRegistry(self.store, self.semantics, manifest_path)
        self.forecasts = ForecastStore(self.store, self.semantics, self.registry)
        self.ledger = FiringLedger(self.store)
        self.scheduler = Scheduler(self.registry, self.ledger)

    @classmethod
    def from_env(cls, **kwargs) -> "Platform":
        data_dir = os.environ.get("CASTORLITE_DATA_DIR", "./castorlite-data")
        return cls(data_dir, **kwargs)
