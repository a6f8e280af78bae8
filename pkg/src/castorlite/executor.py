"""Bounded parallel job execution over out-of-process runners.

A runner is any executable speaking the wire protocol: it reads a single
JSON job spec from stdin (keys: task, context, model_id, model_version,
user_params, service_url, job_id) and writes a single JSON result to stdout
(keys: status, and model_blob+metadata, or points, or message).

The pool holds at most max_parallel runner processes alive at a time; jobs
are dequeued FIFO.  A crashing runner affects only its own job.
"""
from __future__ import annotations

import base64
import json
import logging
import os
import queue
import statistics
import subprocess
import threading
import time
import uuid
from dataclasses import dataclass

from .errors import (
    MalformedResult,
    RunnerCrashed,
    RunnerTimeout,
    UnknownModel,
    UnresolvableImplementation,
)
from .registry import ModelRegistry, RunnerSpec
from .scheduler import JobRequest
from .semantics import SemanticStore
from .store import Store
from .timeutil import format_rfc3339, parse_rfc3339

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 300.0


@dataclass
class JobSpec:
    task: str
    context: dict  # fully resolved entity+signal records
    model_id: str
    model_version: int | None
    user_params: dict
    service_url: str
    job_id: str

    def to_json(self) -> dict:
        return {
            "task": self.task,
            "context": self.context,
            "model_id": self.model_id,
            "model_version": self.model_version,
            "user_params": self.user_params,
            "service_url": self.service_url,
            "job_id": self.job_id,
        }


@dataclass
class JobResult:
    status: str  # "ok" | "error"
    model_blob: bytes | None = None
    metadata: dict | None = None
    points: list[tuple[float, float]] | None = None
    message: str | None = None

    @classmethod
    def parse(cls, text: str) -> "JobResult":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedResult(f"runner output is not JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("status") not in ("ok", "error"):
            raise MalformedResult("runner output missing a valid 'status'")
        if doc["status"] == "error":
            return cls(status="error", message=str(doc.get("message", "unknown error")))
        blob = metadata = points = None
        if "model_blob" in doc:
            try:
                blob = base64.b64decode(doc["model_blob"])
            except Exception as exc:
                raise MalformedResult(f"model_blob is not valid base64: {exc}") from exc
            metadata = doc.get("metadata", {})
        if "points" in doc:
            points = []
            last = None
            for item in doc["points"]:
                ts = parse_rfc3339(item[0])
                value = float(item[1])
                if last is not None and ts <= last:
                    raise MalformedResult("score points are not strictly time-ordered")
                last = ts
                points.append((ts, value))
        return cls(status="ok", model_blob=blob, metadata=metadata, points=points)


@dataclass
class JobRecord:
    job_id: str
    model_id: str
    task: str
    submitted_at: float
    started_at: float | None = None
    finished_at: float | None = None
    outcome: str | None = None  # "ok" | "failed" | "timeout"
    message: str | None = None

    @property
    def duration(self) -> float | None:
        if self.started_at is None or self.finished_at is None:
            return None
        return self.finished_at - self.started_at


def invoke_runner(runner: RunnerSpec, spec: JobSpec, timeout_s: float = DEFAULT_TIMEOUT_S,
                  env: dict | None = None) -> JobResult:
    payload = json.dumps(spec.to_json()) + "\n"
    run_env = dict(os.environ)
    if env:
        run_env.update(env)
    try:
        proc = subprocess.run(
            runner.argv,
            input=payload,
            capture_output=True,
            text=True,
            timeout=timeout_s,
            env=run_env,
        )
    except subprocess.TimeoutExpired as exc:
        raise RunnerTimeout(f"runner exceeded {timeout_s}s and was killed") from exc
    except OSError as exc:
        raise RunnerCrashed(f"runner could not be started: {exc}") from exc
    stdout = proc.stdout.strip()
    if proc.returncode != 0:
        if stdout:
            try:
                return JobResult.parse(stdout)
            except MalformedResult:
                pass
        raise RunnerCrashed(
            f"runner exited {proc.returncode} without a result: {proc.stderr.strip()[:500]}"
        )
    return JobResult.parse(stdout)


class JobPool:
    """FIFO worker pool executing job requests against runner processes."""

    def __init__(
        self,
        store: Store,
        semantics: SemanticStore,
        registry: ModelRegistry,
        forecasts,
        service_url: str,
        max_parallel: int = 4,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        runner_env: dict | None = None,
    ):
        if max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        self._store = store
        self._semantics = semantics
        self._registry = registry
        self._forecasts = forecasts
        self.service_url = service_url
        self.max_parallel = max_parallel
        self.timeout_s = timeout_s
        self.runner_env = runner_env or {}
        self._queue: queue.Queue = queue.Queue()
        self._live = 0
        self._live_lock = threading.Lock()
        self.peak_live = 0
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()

    # --- lifecycle ---

    def start(self) -> None:
        if self._threads:
            return
        for i in range(self.max_parallel):
            t = threading.Thread(target=self._worker, name=f"job-worker-{i}", daemon=True)
            t.start()
            self._threads.append(t)

    def shutdown(self, wait: bool = True) -> None:
        self._stop.set()
        for _ in self._threads:
            self._queue.put(None)
        if wait:
            for t in self._threads:
                t.join()
        self._threads = []
        self._stop.clear()

    def wait_idle(self) -> None:
        self._queue.join()

    # --- submission ---

    def submit(self, request: JobRequest) -> str:
        config = self._registry.get_deployment(request.model_id)  # raises UnknownModel
        self._registry.resolve_implementation(config.dist_name, config.dist_ver, config.module)
        job_id = "j-" + uuid.uuid4().hex[:12]
        record = JobRecord(
            job_id=job_id,
            model_id=request.model_id,
            task=request.task,
            submitted_at=time.time(),
        )
        self._write_record(record)
        self._queue.put((job_id, request))
        return job_id

    # --- execution ---

    def _worker(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                self._queue.task_done()
                return
            job_id, request = item
            try:
                self._execute(job_id, request)
            except Exception:
                log.exception("job %s failed unexpectedly", job_id)
            finally:
                self._queue.task_done()

    def _execute(self, job_id: str, request: JobRequest) -> None:
        with self._live_lock:
            self._live += 1
            self.peak_live = max(self.peak_live, self._live)
        started = time.time()
        outcome, message = "ok", None
        try:
            config = self._registry.get_deployment(request.model_id)
            runner = self._registry.resolve_implementation(
                config.dist_name, config.dist_ver, config.module
            )
            spec = self.build_job_spec(job_id, request)
            result = invoke_runner(runner, spec, self.timeout_s, self.runner_env)
            if result.status == "error":
                outcome, message = "failed", result.message
            else:
                self._persist(request, spec, result, started)
        except RunnerTimeout as exc:
            outcome, message = "timeout", str(exc)
        except Exception as exc:  # noqa: BLE001  - per-job isolation
            outcome, message = "failed", f"{type(exc).__name__}: {exc}"
        finally:
            with self._live_lock:
                self._live -= 1
            finished = time.time()
            self._update_record(job_id, started, finished, outcome, message)

    def build_job_spec(self, job_id: str, request: JobRequest) -> JobSpec:
        ctx = self._semantics.context(request.entity_name, request.signal_name)
        model_version = None
        if request.task == "score":
            pinned = request.user_parameters.get("model_version")
            model_version = pinned if pinned is not None else self._registry.latest_version_number(
                request.model_id
            )
        user_params = dict(request.user_parameters)
        user_params["due_time"] = format_rfc3339(request.due_time)
        return JobSpec(
            task=request.task,
            context=ctx.to_json(),
            model_id=request.model_id,
            model_version=model_version,
            user_params=user_params,
            service_url=self.service_url,
            job_id=job_id,
        )

    def _persist(self, request: JobRequest, spec: JobSpec, result: JobResult,
                 started: float) -> None:
        if request.task == "train" and result.model_blob is not None:
            metadata = dict(result.metadata or {})
            metadata.setdefault("train_time", format_rfc3339(request.due_time))
            metadata["training_duration_s"] = round(time.time() - started, 6)
            self._registry.save_model_version(request.model_id, result.model_blob, metadata)
        elif request.task == "score" and result.points:
            self._forecasts.save_forecast(
                model_id=request.model_id,
                model_version=spec.model_version,
                entity_name=request.entity_name,
                signal_name=request.signal_name,
                issued_at=request.due_time,
                points=result.points,
            )

    # --- job records / metrics ---

    def _write_record(self, record: JobRecord) -> None:
        with self._store.write() as conn:
            conn.execute(
                "INSERT INTO job_records (job_id, model_id, task, submitted_at) "
                "VALUES (?, ?, ?, ?)",
                (record.job_id, record.model_id, record.task, record.submitted_at),
            )

    def _update_record(self, job_id: str, started: float, finished: float,
                       outcome: str, message: str | None) -> None:
        self._store.simulate_backend_latency()
        with self._store.write() as conn:
            conn.execute(
                "UPDATE job_records SET started_at = ?, finished_at = ?, outcome = ?, "
                "message = ? WHERE job_id = ?",
                (started, finished, outcome, message, job_id),
            )

    def get_record(self, job_id: str) -> JobRecord:
        with self._store.connect() as conn:
            row = conn.execute(
                "SELECT * FROM job_records WHERE job_id = ?", (job_id,)
            ).fetchone()
        if row is None:
            raise UnknownModel(f"no job with id {job_id!r}")
        return _record_from_row(row)

    def list_records(self, model_id: str | None = None, task: str | None = None,
                     outcome: str | None = None) -> list[JobRecord]:
        return job_records(self._store, model_id=model_id, task=task, outcome=outcome)


def _record_from_row(row) -> JobRecord:
    return JobRecord(
        job_id=row["job_id"],
        model_id=row["model_id"],
        task=row["task"],
        submitted_at=row["submitted_at"],
        started_at=row["started_at"],
        finished_at=row["finished_at"],
        outcome=row["outcome"],
        message=row["message"],
    )


def job_records(store: Store, model_id: str | None = None, task: str | None = None,
                outcome: str | None = None) -> list[JobRecord]:
    clauses, args = [], []
    if model_id is not None:
        clauses.append("model_id = ?")
        args.append(model_id)
    if task is not None:
        clauses.append("task = ?")
        args.append(task)
    if outcome is not None:
        clauses.append("outcome = ?")
        args.append(outcome)
    where = f"WHERE {' AND '.join(clauses)}" if clauses else ""
    with store.connect() as conn:
        rows = conn.execute(
            f"SELECT * FROM job_records {where} ORDER BY submitted_at", args
        ).fetchall()
    return [_record_from_row(r) for r in rows]


def job_metrics(store: Store, **filters) -> dict:
    durations = [
        r.duration for r in job_records(store, **filters) if r.duration is not None
    ]
    if not durations:
        return {"count": 0}
    out = {"count": len(durations), "mean_duration": statistics.fmean(durations)}
    if len(durations) == 1:
        out["p95_duration"] = durations[0]
    else:
        ranked = sorted(durations)
        idx = min(len(ranked) - 1, max(0, round(0.95 * (len(ranked) - 1))))
        out["p95_duration"] = ranked[idx]
    return out
