"""Cron-like schedule evaluation with exactly-once firing.

Each tick walks every registered deployment, computes the latest occurrence
of each schedule at or before `now`, and emits a job request unless that
(model, task, due_time) triple is already in the durable firing ledger.
Missed intermediate occurrences are skipped, never back-filled.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .registry import ModelRegistry, ScheduleSpec
from .store import Store

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class JobRequest:
    model_id: str
    task: str  # "train" | "score"
    due_time: float
    entity_name: str
    signal_name: str
    user_parameters: dict


def next_due(spec: ScheduleSpec, after: float) -> float | None:
    """Smallest occurrence t >= after; the first occurrence is start_time."""
    if spec.repeat_every is None:
        return spec.start_time if spec.start_time >= after else None
    if after <= spec.start_time:
        return spec.start_time
    k = math.ceil((after - spec.start_time) / spec.repeat_every)
    return spec.start_time + k * spec.repeat_every


def latest_occurrence(spec: ScheduleSpec, now: float) -> float | None:
    """Largest occurrence t <= now, or None if the schedule has not started."""
    if now < spec.start_time:
        return None
    if spec.repeat_every is None:
        return spec.start_time
    k = math.floor((now - spec.start_time) / spec.repeat_every)
    return spec.start_time + k * spec.repeat_every


class FiringLedger:
    """Durable append-only set of fired (model_id, task, due_time) triples."""

    def __init__(self, store: Store):
        self._store = store

    def contains(self, model_id: str, task: str, due_time: float) -> bool:
        with self._store.connect() as conn:
            row = conn.execute(
                "SELECT 1 FROM firing_ledger WHERE model_id = ? AND task = ? AND due_ts = ?",
                (model_id, task, due_time),
            ).fetchone()
        return row is not None

    def mark_fired(self, model_id: str, task: str, due_time: float) -> None:
        with self._store.write() as conn:
            conn.execute(
                "INSERT OR IGNORE INTO firing_ledger (model_id, task, due_ts) VALUES (?, ?, ?)",
                (model_id, task, due_time),
            )

    def size(self) -> int:
        with self._store.connect() as conn:
            return conn.execute("SELECT COUNT(*) AS n FROM firing_ledger").fetchone()["n"]


class Scheduler:
    def __init__(self, registry: ModelRegistry, ledger: FiringLedger):
        self._registry = registry
        self.ledger = ledger

    def tick(self, now: float) -> list[JobRequest]:
        emitted: list[JobRequest] = []
        for config in self._registry.list_deployments():
            schedules = (
                ("train", config.training_schedule),
                ("score", config.scoring_schedule),
            )
            for task, spec in schedules:
                if spec is None:
                    continue
                try:
                    due = latest_occurrence(spec, now)
                except Exception:
                    log.exception("schedule resolution failed for %s/%s", config.model_id, task)
                    continue
                if due is None or self.ledger.contains(config.model_id, task, due):
                    continue
                self.ledger.mark_fired(config.model_id, task, due)
                emitted.append(
                    JobRequest(
                        model_id=config.model_id,
                        task=task,
                        due_time=due,
                        entity_name=config.entity_name,
                        signal_name=config.signal_name,
                        user_parameters=dict(config.user_parameters),
                    )
                )
        return emitted

    def mark_fired(self, model_id: str, task: str, due_time: float) -> None:
        self.ledger.mark_fired(model_id, task, due_time)
