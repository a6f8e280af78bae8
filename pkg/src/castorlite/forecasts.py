"""Append-only forecast persistence and horizon-sliced retrieval.

Every issued prediction is kept forever under the key (model_id, issued_at,
target_time); nothing is ever overwritten.  Serving without a pinned model
uses the per-context ranking to pick the model and recency (max issued_at)
to pick the point per target time.
"""
from __future__ import annotations

import sqlite3
from dataclasses import dataclass

from .errors import (
    DuplicateIssue,
    LengthMismatch,
    NoOverlap,
    NonCausalPoint,
    UnknownModel,
    ZeroActual,
)
from .registry import ModelRegistry
from .semantics import SemanticStore
from .store import Store


@dataclass(frozen=True)
class HorizonSlice:
    horizon: float  # seconds
    points: list[tuple[float, float, float]]  # (target_ts, value, issued_at)


class ForecastStore:
    def __init__(self, store: Store, semantics: SemanticStore, registry: ModelRegistry):
        self._store = store
        self._semantics = semantics
        self._registry = registry

    def save_forecast(
        self,
        model_id: str,
        model_version: int | None,
        entity_name: str,
        signal_name: str,
        issued_at: float,
        points: list[tuple[float, float]],
    ) -> int:
        self._registry.get_deployment(model_id)  # raises UnknownModel
        ctx = self._semantics.context(entity_name, signal_name)
        last = None
        for target, _value in points:
            if target <= issued_at:
                raise NonCausalPoint(
                    f"target {target} is not after issue time {issued_at}"
                )
            if last is not None and target <= last:
                raise NonCausalPoint("forecast points must be strictly increasing")
            last = target
        self._store.simulate_backend_latency()
        try:
            with self._store.write() as conn:
                existing = conn.execute(
                    "SELECT 1 FROM forecasts WHERE model_id = ? AND issued_at = ? LIMIT 1",
                    (model_id, issued_at),
                ).fetchone()
                if existing is not None:
                    raise DuplicateIssue(
                        f"forecast for model {model_id!r} issued at {issued_at} already stored"
                    )
                conn.executemany(
                    "INSERT INTO forecasts (model_id, model_version, entity_id, signal_id, "
                    "issued_at, target_ts, value) VALUES (?, ?, ?, ?, ?, ?, ?)",
                    [
                        (model_id, model_version, ctx.entity.id, ctx.signal.id,
                         issued_at, t, v)
                        for t, v in points
                    ],
                )
        except sqlite3.IntegrityError as exc:
            raise DuplicateIssue(str(exc)) from exc
        return len(points)

    def get_forecasts(
        self,
        entity_name: str,
        signal_name: str,
        target_start: float,
        target_end: float,
        model_id: str | None = None,
    ) -> list[tuple[float, float, float, str]]:
        """Freshest prediction per target time, as (target_ts, value,
        issued_at, model_id) tuples."""
        ctx = self._semantics.require_bound_context(entity_name, signal_name)
        if model_id is None:
            ranked = self._semantics.list_deployed_models(entity_name, signal_name)
            if not ranked:
                return []
            model_id = ranked[0][0]
        with self._store.connect() as conn:
            rows = conn.execute(
                "SELECT target_ts, value, issued_at FROM forecasts "
                "WHERE model_id = ? AND entity_id = ? AND signal_id = ? "
                "AND target_ts >= ? AND target_ts < ? "
                "ORDER BY target_ts, issued_at",
                (model_id, ctx.entity.id, ctx.signal.id, target_start, target_end),
            ).fetchall()
        freshest: dict[float, tuple[float, float]] = {}
        for r in rows:
            freshest[r["target_ts"]] = (r["value"], r["issued_at"])
        return [
            (t, v, issued, model_id)
            for t, (v, issued) in sorted(freshest.items())
        ]

    def get_by_horizon(
        self,
        entity_name: str,
        signal_name: str,
        model_id: str,
        horizon: float,
        target_start: float,
        target_end: float,
        nearest: bool = False,
    ) -> HorizonSlice:
        """Points whose target - issued equals the horizon exactly, or (with
        nearest=True) the largest stored horizon <= the requested one per target."""
        self._registry.get_deployment(model_id)  # raises UnknownModel
        ctx = self._semantics.context(entity_name, signal_name)
        with self._store.connect() as conn:
            rows = conn.execute(
                "SELECT target_ts, value, issued_at FROM forecasts "
                "WHERE model_id = ? AND entity_id = ? AND signal_id = ? "
                "AND target_ts >= ? AND target_ts < ? ORDER BY target_ts, issued_at",
                (model_id, ctx.entity.id, ctx.signal.id, target_start, target_end),
            ).fetchall()
        if not nearest:
            points = [
                (r["target_ts"], r["value"], r["issued_at"])
                for r in rows
                if r["target_ts"] - r["issued_at"] == horizon
            ]
        else:
            best: dict[float, tuple[float, float, float]] = {}
            for r in rows:
                h = r["target_ts"] - r["issued_at"]
                if h > horizon:
                    continue
                prev = best.get(r["target_ts"])
                if prev is None or h > prev[0] - prev[2]:
                    best[r["target_ts"]] = (r["target_ts"], r["value"], r["issued_at"])
            points = [best[t] for t in sorted(best)]
        return HorizonSlice(horizon, points)

    def count_rows(self, model_id: str | None = None) -> int:
        with self._store.connect() as conn:
            if model_id is None:
                row = conn.execute("SELECT COUNT(*) AS n FROM forecasts").fetchone()
            else:
                row = conn.execute(
                    "SELECT COUNT(*) AS n FROM forecasts WHERE model_id = ?", (model_id,)
                ).fetchone()
        return row["n"]

    def evaluate(
        self,
        timeseries,
        entity_name: str,
        signal_name: str,
        model_id: str,
        horizon: float,
        start: float,
        end: float,
    ) -> dict:
        """Join horizon-sliced forecasts with actuals and compute MAPE."""
        forecast = self.get_by_horizon(
            entity_name, signal_name, model_id, horizon, start, end
        )
        ctx = self._semantics.require_bound_context(entity_name, signal_name)
        actual_window = timeseries.get_timeseries(ctx, start, end)
        actuals = dict(actual_window.points)
        pairs = [
            (value, actuals[target])
            for target, value, _issued in forecast.points
            if target in actuals
        ]
        if not pairs:
            raise NoOverlap("no forecast/actual pairs in the requested period")
        preds = [p for p, _ in pairs]
        obs = [a for _, a in pairs]
        return {"mape": mape(preds, obs), "n": len(pairs)}


def mape(predictions, actuals) -> float:
    """Mean absolute percentage error, (100/n) * sum(|a-p| / |a|)."""
    preds = list(predictions)
    obs = list(actuals)
    if len(preds) != len(obs):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(obs)} actuals")
    if not preds:
        raise LengthMismatch("need at least one pair")
    total = 0.0
    for p, a in zip(preds, obs):
        if a == 0:
            raise ZeroActual("actual value of zero makes MAPE undefined")
        total += abs(a - p) / abs(a)
    return 100.0 * total / len(preds)
