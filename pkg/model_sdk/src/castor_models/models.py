"""Reference model implementations.

- PersistenceModel: flat forecast at the last observed value.
- LinearRegressionModel: ordinary least squares on temperature, 1-24 h lags
  of weather and target, and calendar features, scored recursively over a
  24-hour horizon (predicted values feed later lags).
- EnergyIntegrationModel: left-Riemann integration of an instantaneous
  power/current feed into regular per-bucket energy, written back as an
  ordinary time-series on the target context.
"""
from __future__ import annotations

import math

import numpy as np

from .client import ServiceError
from .errors import InsufficientHistory, ModelError, NoData, UnknownSourceContext
from .interface import ModelInterface
from .timeparse import parse_rfc3339

HOUR = 3600.0
N_LAGS = 24


class PersistenceModel(ModelInterface):
    """Forecasts the last observed value indefinitely."""

    def load(self) -> None:
        lookback = self.param_duration("lookback", "7D")
        # end is due+1s so a reading at the due instant itself counts
        self.data = self.client.get_timeseries(
            self.entity_name, self.signal_name, self.due_time - lookback,
            self.due_time + 1.0,
        )
        self.n_rows = len(self.data)

    def train(self) -> dict:
        if not self.data:
            raise NoData("context has no history in the lookback window")
        return {"last_value": self.data[-1][1]}

    def score(self, fitted: dict | None) -> list[tuple[float, float]]:
        if not self.data:
            raise NoData("context has no history in the lookback window")
        last = self.data[-1][1]
        step = self.param_frequency()
        horizon = self.param_duration("horizon", "24H")
        n = int(horizon // step)
        return [(self.due_time + (k + 1) * step, last) for k in range(n)]


def _hourly(points: list[tuple[float, float]]) -> dict[float, float]:
    """Snap points to the hourly grid, last value per hour winning."""
    return {ts - (ts % HOUR): v for ts, v in points}


def _calendar(ts: float) -> tuple[float, float]:
    hour_of_day = (ts % 86400.0) / HOUR
    day_of_week = math.floor((ts / 86400.0 + 3.0)) % 7  # epoch was a Thursday
    return hour_of_day, float(day_of_week)


class LinearRegressionModel(ModelInterface):
    """OLS over weather, lag, and calendar features at hourly resolution."""

    def load(self) -> None:
        horizon = self.param_duration("horizon", "24H")
        if self.task == "train":
            window = self.user_params.get("train_time")
            if window:
                start, end = parse_rfc3339(window[0]), parse_rfc3339(window[1])
            else:
                start = self.due_time - self.param_duration("lookback", "60_days")
                end = self.due_time
            # extra day of history materializes the 24 h lags of the first row
            fetch_start = start - (N_LAGS + 1) * HOUR
            weather_end = end
            self._window = (start, end)
        else:
            fetch_start = self.due_time - (N_LAGS + 2) * HOUR
            end = self.due_time + 1.0
            # weather forecasts may extend past the due time
            weather_end = self.due_time + horizon + HOUR
            self._window = (fetch_start, end)
        self.data = self.client.get_timeseries(
            self.entity_name, self.signal_name, fetch_start, end
        )
        self.n_rows = len(self.data)
        lat, lon = self.coordinates
        weather = self.client.get_weather(lat, lon, fetch_start, weather_end)
        self._temps = _hourly(weather["temperature"])
        self._target = _hourly(self.data)

    def _feature_row(self, ts: float, target: dict[float, float]) -> list[float] | None:
        row = []
        temp = self._temps.get(ts)
        if temp is None:
            return None
        row.append(temp)
        for i in range(1, N_LAGS + 1):
            t_lag = self._temps.get(ts - i * HOUR)
            y_lag = target.get(ts - i * HOUR)
            if t_lag is None or y_lag is None:
                return None
            row.append(t_lag)
            row.append(y_lag)
        row.extend(_calendar(ts))
        return row

    @staticmethod
    def _feature_names() -> list[str]:
        names = ["temperature"]
        for i in range(1, N_LAGS + 1):
            names.append(f"temperature_lag_{i}h")
            names.append(f"target_lag_{i}h")
        names.extend(["hour_of_day", "day_of_week"])
        return names

    def train(self) -> dict:
        start, end = self._window
        xs, ys = [], []
        ts = start - (start % HOUR)
        while ts < end:
            if ts >= start and ts in self._target:
                row = self._feature_row(ts, self._target)
                if row is not None:
                    xs.append(row)
                    ys.append(self._target[ts])
            ts += HOUR
        if not xs:
            raise InsufficientHistory(
                "need at least 26 hours of aligned history to build lag features"
            )
        design = np.column_stack([np.ones(len(xs)), np.array(xs)])
        coef, *_ = np.linalg.lstsq(design, np.array(ys), rcond=None)
        names = self._feature_names()
        return {
            "intercept": float(coef[0]),
            "coefficients": {n: float(c) for n, c in zip(names, coef[1:])},
        }

    def score(self, fitted: dict | None) -> list[tuple[float, float]]:
        assert fitted is not None
        names = self._feature_names()
        weights = np.array([fitted["coefficients"][n] for n in names])
        intercept = fitted["intercept"]
        horizon = self.param_duration("horizon", "24H")
        origin = self.due_time - (self.due_time % HOUR)
        known = dict(self._target)
        points: list[tuple[float, float]] = []
        steps = int(horizon // HOUR)
        for k in range(1, steps + 1):
            ts = origin + k * HOUR
            row = self._feature_row(ts, known)
            if row is None:
                raise InsufficientHistory(
                    "need at least 26 hours of aligned history to build lag features"
                )
            y = float(intercept + weights @ np.array(row))
            known[ts] = y  # predicted values feed the later lags
            points.append((ts, y))
        return points


class EnergyIntegrationModel(ModelInterface):
    """Turns an irregular instantaneous feed into regular energy buckets.

    The output is not a prediction: it lands as an ordinary time-series on
    the deployment's own context, so the wire result carries no points.
    """

    requires_trained_model = False

    def load(self) -> None:
        source = self.user_params.get("source_context")
        if not isinstance(source, dict) or "entity" not in source or "signal" not in source:
            raise UnknownSourceContext(
                "user_parameters.source_context must name an entity and a signal"
            )
        window = self.param_duration("window", "1H")
        try:
            self.data = self.client.get_timeseries(
                source["entity"], source["signal"],
                self.due_time - window, self.due_time,
            )
        except ServiceError as exc:
            raise UnknownSourceContext(str(exc)) from exc
        self.n_rows = len(self.data)

    def train(self) -> dict:
        raise ModelError("transformation models have no training step")

    def score(self, fitted: dict | None) -> list[tuple[float, float]]:
        step = self.param_frequency(default="15T")
        scale = float(self.user_params.get("scale", 1.0))
        buckets: dict[float, float] = {}
        for i, (ts, value) in enumerate(self.data):
            bucket = ts - (ts % step)
            hold_until = self.data[i + 1][0] if i + 1 < len(self.data) else bucket + step
            gap = min(hold_until, bucket + step) - ts
            if gap > 0:
                buckets[bucket] = buckets.get(bucket, 0.0) + scale * value * gap
        energy = [(b, ws / 3600.0) for b, ws in sorted(buckets.items())]
        if energy:
            series_id = self.client.bind_series(self.entity_name, self.signal_name)
            self.client.post_points(series_id, energy)
        return []


MODEL_CLASSES: dict[str, type[ModelInterface]] = {
    "PersistenceModel": PersistenceModel,
    "LinearRegressionModel": LinearRegressionModel,
    "EnergyIntegrationModel": EnergyIntegrationModel,
}
