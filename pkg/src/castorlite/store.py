"""Embedded SQLite store shared by every castorlite module.

One file-backed database per data directory, WAL mode, one connection per
thread.  Concurrent reads run freely; SQLite serializes writers, which is
the per-series write serialization the platform promises.

``latency_s`` injects an artificial per-write delay behind a shared lock,
used by the scalability harness to emulate a constrained back-end database.
"""
from __future__ import annotations

import sqlite3
import threading
import time
from contextlib import contextmanager
from pathlib import Path

_SCHEMA = """
CREATE TABLE IF NOT EXISTS entities (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL UNIQUE,
    kind TEXT NOT NULL,
    latitude REAL,
    longitude REAL,
    attributes TEXT NOT NULL DEFAULT '{}'
);
CREATE TABLE IF NOT EXISTS signals (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL UNIQUE,
    unit TEXT NOT NULL,
    quantity TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS series (
    id INTEGER PRIMARY KEY,
    entity_id INTEGER NOT NULL REFERENCES entities(id),
    signal_id INTEGER NOT NULL REFERENCES signals(id),
    UNIQUE (entity_id, signal_id)
);
CREATE TABLE IF NOT EXISTS topology (
    id INTEGER PRIMARY KEY,
    parent_id INTEGER NOT NULL REFERENCES entities(id),
    child_id INTEGER NOT NULL REFERENCES entities(id),
    relation TEXT NOT NULL,
    UNIQUE (parent_id, child_id, relation)
);
CREATE TABLE IF NOT EXISTS points (
    series_id INTEGER NOT NULL REFERENCES series(id),
    ts REAL NOT NULL,
    value REAL NOT NULL,
    PRIMARY KEY (series_id, ts)
) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS deployments (
    model_id TEXT PRIMARY KEY,
    entity_id INTEGER NOT NULL,
    signal_id INTEGER NOT NULL,
    config TEXT NOT NULL,
    seq INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS model_versions (
    model_id TEXT NOT NULL REFERENCES deployments(model_id),
    version INTEGER NOT NULL,
    blob BLOB NOT NULL,
    metadata TEXT NOT NULL,
    PRIMARY KEY (model_id, version)
);
CREATE TABLE IF NOT EXISTS rankings (
    entity_id INTEGER NOT NULL,
    signal_id INTEGER NOT NULL,
    model_ids TEXT NOT NULL,
    PRIMARY KEY (entity_id, signal_id)
);
CREATE TABLE IF NOT EXISTS forecasts (
    model_id TEXT NOT NULL,
    model_version INTEGER,
    entity_id INTEGER NOT NULL,
    signal_id INTEGER NOT NULL,
    issued_at REAL NOT NULL,
    target_ts REAL NOT NULL,
    value REAL NOT NULL,
    PRIMARY KEY (model_id, issued_at, target_ts)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS forecasts_ctx
    ON forecasts (entity_id, signal_id, target_ts);
CREATE TABLE IF NOT EXISTS firing_ledger (
    model_id TEXT NOT NULL,
    task TEXT NOT NULL,
    due_ts REAL NOT NULL,
    PRIMARY KEY (model_id, task, due_ts)
) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS job_records (
    job_id TEXT PRIMARY KEY,
    model_id TEXT NOT NULL,
    task TEXT NOT NULL,
    submitted_at REAL NOT NULL,
    started_at REAL,
    finished_at REAL,
    outcome TEXT,
    message TEXT
);
CREATE TABLE IF NOT EXISTS counters (
    name TEXT PRIMARY KEY,
    value INTEGER NOT NULL
);
"""


class Store:
    def __init__(self, path: str | Path, latency_s: float = 0.0):
        self.path = str(path)
        self.latency_s = latency_s
        self._local = threading.local()
        self._latency_lock = threading.Lock()
        with self.connect() as conn:
            conn.executescript(_SCHEMA)

    def _connection(self) -> sqlite3.Connection:
        conn = getattr(self._local, "conn", None)
        if conn is None:
            conn = sqlite3.connect(self.path, timeout=60.0)
            conn.execute("PRAGMA journal_mode = WAL")
            conn.execute("PRAGMA synchronous = NORMAL")
            conn.row_factory = sqlite3.Row
            self._local.conn = conn
        return conn

    @contextmanager
    def connect(self):
        """Read access; no transaction is opened explicitly."""
        yield self._connection()

    @contextmanager
    def write(self):
        """A write transaction, committed on success and rolled back on error."""
        conn = self._connection()
        try:
            conn.execute("BEGIN IMMEDIATE")
            yield conn
            conn.commit()
        except BaseException:
            conn.rollback()
            raise

    def simulate_backend_latency(self) -> None:
        """Hold a shared lock for the configured latency (0 = no-op).

        Called on the hot write paths the scalability harness exercises to
        model a saturated shared back-end.
        """
        if self.latency_s > 0:
            with self._latency_lock:
                time.sleep(self.latency_s)

    def next_counter(self, name: str) -> int:
        with self.write() as conn:
            row = conn.execute(
                "SELECT value FROM counters WHERE name = ?", (name,)
            ).fetchone()
            value = (row["value"] if row else 0) + 1
            conn.execute(
                "INSERT INTO counters (name, value) VALUES (?, ?) "
                "ON CONFLICT(name) DO UPDATE SET value = excluded.value",
                (name, value),
            )
        return value

    def close(self) -> None:
        conn = getattr(self._local, "conn", None)
        if conn is not None:
            conn.close()
            self._local.conn = None
