"""Time-series ingestion, retrieval, alignment, integration and features.

Buckets are anchored at midnight UTC.  Timestamp conflicts on ingest are
resolved last-write-wins; empty buckets are omitted rather than gap-filled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    EmptyRange,
    NonFiniteValue,
    NonPositiveScale,
    UnalignedInput,
    UnknownSeries,
)
from .semantics import Context, SemanticStore
from .store import Store
from .timeutil import FrequencySpec, bucket_start, timedelta_seconds, to_datetime


@dataclass(frozen=True)
class TimeSeriesWindow:
    series: int | None
    start: float
    end: float
    points: list[tuple[float, float]]  # (ts, value), strictly increasing ts


@dataclass
class FeatureMatrix:
    timestamps: list[float]
    columns: dict[str, list[float]] = field(default_factory=dict)

    def row(self, i: int) -> dict[str, float]:
        return {name: col[i] for name, col in self.columns.items()}

    def __len__(self) -> int:
        return len(self.timestamps)


def _lag_name(seconds: float) -> str:
    s = int(seconds)
    if s % 3600 == 0:
        return f"lag_{s // 3600}h"
    if s % 60 == 0:
        return f"lag_{s // 60}m"
    return f"lag_{s}s"


class TimeseriesEngine:
    def __init__(self, store: Store, semantics: SemanticStore):
        self._store = store
        self._semantics = semantics

    # --- ingest / retrieve ---

    def ingest(self, series_id: int, points: list[tuple[float, float]]) -> int:
        with self._store.connect() as conn:
            row = conn.execute("SELECT id FROM series WHERE id = ?", (series_id,)).fetchone()
        if row is None:
            raise UnknownSeries(f"no series with id {series_id}")
        for ts, value in points:
            if not math.isfinite(value):
                raise NonFiniteValue(f"non-finite value at ts {ts}")
        with self._store.write() as conn:
            conn.executemany(
                "INSERT INTO points (series_id, ts, value) VALUES (?, ?, ?) "
                "ON CONFLICT(series_id, ts) DO UPDATE SET value = excluded.value",
                [(series_id, float(ts), float(v)) for ts, v in points],
            )
        return len(points)

    def get_timeseries(self, context: Context, start: float, end: float) -> TimeSeriesWindow:
        if not start < end:
            raise EmptyRange(f"start {start} must be before end {end}")
        series_id = self._semantics.series_id(context.entity.name, context.signal.name)
        return self.get_series_window(series_id, start, end)

    def get_series_window(self, series_id: int, start: float, end: float) -> TimeSeriesWindow:
        if not start < end:
            raise EmptyRange(f"start {start} must be before end {end}")
        with self._store.connect() as conn:
            rows = conn.execute(
                "SELECT ts, value FROM points WHERE series_id = ? AND ts >= ? AND ts < ? "
                "ORDER BY ts",
                (series_id, start, end),
            ).fetchall()
        return TimeSeriesWindow(series_id, start, end, [(r["ts"], r["value"]) for r in rows])

    # --- alignment / integration ---

    def align(
        self, window: TimeSeriesWindow, frequency: str | FrequencySpec, aggregation: str = "mean"
    ) -> TimeSeriesWindow:
        freq = frequency if isinstance(frequency, FrequencySpec) else FrequencySpec.parse(frequency)
        if aggregation not in ("mean", "sum", "last"):
            raise ValueError(f"unsupported aggregation {aggregation!r}")
        buckets: dict[float, list[float]] = {}
        for ts, value in window.points:
            buckets.setdefault(bucket_start(ts, freq), []).append(value)
        out = []
        for b in sorted(buckets):
            values = buckets[b]
            if aggregation == "mean":
                v = sum(values) / len(values)
            elif aggregation == "sum":
                v = sum(values)
            else:
                v = values[-1]
            out.append((b, v))
        return TimeSeriesWindow(window.series, window.start, window.end, out)

    def resample_integrate(
        self, window: TimeSeriesWindow, frequency: str | FrequencySpec, scale: float
    ) -> TimeSeriesWindow:
        """Left Riemann integration of an instantaneous feed into per-bucket
        energy: each sample contributes scale*value*gap_hours, the gap running
        to the next sample and clipped at its bucket's end."""
        freq = frequency if isinstance(frequency, FrequencySpec) else FrequencySpec.parse(frequency)
        if scale <= 0:
            raise NonPositiveScale(f"scale must be positive, got {scale}")
        step = freq.seconds
        totals: dict[float, float] = {}
        pts = window.points
        for i, (ts, value) in enumerate(pts):
            bucket = bucket_start(ts, freq)
            nxt = pts[i + 1][0] if i + 1 < len(pts) else bucket + step
            gap = min(nxt, bucket + step) - ts
            if gap <= 0:
                continue
            # accumulate in value*seconds; divide once per bucket for exactness
            totals[bucket] = totals.get(bucket, 0.0) + scale * value * gap
        out = [(b, totals[b] / 3600.0) for b in sorted(totals)]
        return TimeSeriesWindow(window.series, window.start, window.end, out)

    # --- feature engineering ---

    def lagged_features(self, window: TimeSeriesWindow, lags: list) -> FeatureMatrix:
        pts = window.points
        if len(pts) >= 3:
            steps = {round(pts[i + 1][0] - pts[i][0], 6) for i in range(len(pts) - 1)}
            if len(steps) > 1:
                raise UnalignedInput("window is not on a regular frequency grid")
        lag_seconds = [timedelta_seconds(lag) for lag in lags]
        by_ts = {ts: v for ts, v in pts}
        timestamps: list[float] = []
        cols: dict[str, list[float]] = {_lag_name(k): [] for k in lag_seconds}
        cols["value"] = []
        for ts, value in pts:
            row = {}
            for k in lag_seconds:
                past = by_ts.get(ts - k)
                if past is None:
                    row = None
                    break
                row[_lag_name(k)] = past
            if row is None:
                continue
            timestamps.append(ts)
            cols["value"].append(value)
            for name, v in row.items():
                cols[name].append(v)
        return FeatureMatrix(timestamps, cols)

    def calendar_features(self, timestamps: list[float]) -> FeatureMatrix:
        hours, dows = [], []
        for ts in timestamps:
            dt = to_datetime(ts)
            hours.append(float(dt.hour))
            dows.append(float(dt.weekday()))
        return FeatureMatrix(list(timestamps), {"hour_of_day": hours, "day_of_week": dows})

    # --- statistics ---

    def ingestion_stats(
        self,
        bucket: str | FrequencySpec,
        start: float | None = None,
        end: float | None = None,
    ) -> list[tuple[float, int]]:
        freq = bucket if isinstance(bucket, FrequencySpec) else FrequencySpec.parse(bucket)
        clauses, args = [], []
        if start is not None:
            clauses.append("ts >= ?")
            args.append(start)
        if end is not None:
            clauses.append("ts < ?")
            args.append(end)
        where = f"WHERE {' AND '.join(clauses)}" if clauses else ""
        with self._store.connect() as conn:
            rows = conn.execute(f"SELECT ts FROM points {where}", args).fetchall()
        counts: dict[float, int] = {}
        for r in rows:
            b = bucket_start(r["ts"], freq)
            counts[b] = counts.get(b, 0) + 1
        return [(b, counts[b]) for b in sorted(counts)]
