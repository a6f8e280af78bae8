"""Scalability harness: parallel scoring-job sweeps and jobs/hour arithmetic.

Absolute durations depend on the host; the report's jobs/hour column is the
projection parallel * 3600 / mean_duration.  An artificial per-write store
latency can be injected (Platform(store_latency_s=...)) to reproduce the
saturation shape caused by a constrained shared back-end.
"""
from __future__ import annotations

import json
import stat
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import NonPositiveDuration
from .executor import JobPool, job_metrics
from .platform import Platform
from .scheduler import JobRequest

STUB_DIST = "stub-runner"
STUB_VER = "1.0.0"


@dataclass(frozen=True)
class ScaleRow:
    parallel_jobs: int
    jobs_per_hour: int
    mean_duration_s: float


@dataclass(frozen=True)
class ScaleReport:
    rows: list[ScaleRow]

    def to_csv(self) -> str:
        lines = ["parallel_jobs,jobs_per_hour,mean_duration_s"]
        for r in self.rows:
            lines.append(f"{r.parallel_jobs},{r.jobs_per_hour},{r.mean_duration_s:.4f}")
        return "\n".join(lines) + "\n"


def jobs_per_hour(parallel: int, mean_duration: float) -> int:
    if mean_duration <= 0:
        raise NonPositiveDuration(f"mean duration must be positive, got {mean_duration}")
    return round(parallel * 3600.0 / mean_duration)


def write_stub_runner(directory: str | Path, sleep_s: float) -> Path:
    """A minimal shell runner that sleeps and reports an empty ok result.

    Shell keeps per-job process overhead negligible compared to an
    interpreter start, so measured durations reflect the job itself.
    """
    path = Path(directory) / f"stub_runner_{int(sleep_s * 1000)}ms.sh"
    path.write_text(
        "#!/bin/sh\n"
        "cat > /dev/null\n"
        f"sleep {sleep_s}\n"
        "printf '%s' '{\"status\": \"ok\", \"points\": []}'\n"
    )
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return path


def prepare_stub_deployment(platform: Platform, sleep_s: float) -> str:
    """Register a context and a stub-runner deployment; returns the model id."""
    manifest_path = platform.registry.manifest_path
    if manifest_path is None:
        manifest_path = platform.data_dir / "manifest.json"
        platform.registry.manifest_path = manifest_path
    manifest = {}
    if Path(manifest_path).exists():
        manifest = json.loads(Path(manifest_path).read_text())
    stub = write_stub_runner(platform.data_dir, sleep_s)
    manifest.setdefault(STUB_DIST, {})[STUB_VER] = ["/bin/sh", str(stub)]
    Path(manifest_path).write_text(json.dumps(manifest, indent=2))

    sem = platform.semantics
    try:
        sem.register_entity("SCALE_RIG", "BENCH")
        sem.register_signal("STUB_SIGNAL", "n/a", "synthetic")
        sem.bind_timeseries("SCALE_RIG", "STUB_SIGNAL")
    except Exception:
        pass  # already prepared on a previous run
    return platform.registry.register_deployment(
        {
            "context": {"entity": "SCALE_RIG", "signal": "STUB_SIGNAL"},
            "model_name": "stub",
            "dist_name": STUB_DIST,
            "dist_ver": STUB_VER,
            "module": "StubModel",
            "scoring_deployment": {"time": "2019-03-01T00:00:00+00:00"},
            "user_parameters": {},
        }
    )


def run_level(platform: Platform, model_id: str, parallel: int, jobs: int) -> ScaleRow:
    pool = JobPool(
        platform.store,
        platform.semantics,
        platform.registry,
        platform.forecasts,
        service_url="http://localhost:0",  # stub jobs never call back
        max_parallel=parallel,
    )
    pool.start()
    base_due = time.time()
    job_ids = []
    for i in range(jobs):
        job_ids.append(
            pool.submit(
                JobRequest(
                    model_id=model_id,
                    task="score",
                    due_time=base_due + i,  # unique per job
                    entity_name="SCALE_RIG",
                    signal_name="STUB_SIGNAL",
                    user_parameters={},
                )
            )
        )
    pool.wait_idle()
    pool.shutdown()
    durations = [
        rec.duration
        for rec in (pool.get_record(j) for j in job_ids)
        if rec.duration is not None
    ]
    mean = sum(durations) / len(durations)
    return ScaleRow(parallel, jobs_per_hour(parallel, mean), mean)


def run_experiment(
    platform: Platform,
    parallel_levels: list[int],
    jobs_per_level: int | None = None,
    stub_sleep_s: float = 0.2,
    model_id: str | None = None,
) -> ScaleReport:
    if model_id is None:
        model_id = prepare_stub_deployment(platform, stub_sleep_s)
    rows = []
    for level in parallel_levels:
        n = jobs_per_level if jobs_per_level is not None else 3 * level
        rows.append(run_level(platform, model_id, level, n))
    return ScaleReport(rows)


def measured_throughput(platform: Platform, model_id: str, parallel: int,
                        jobs: int) -> float:
    """Sustained completed jobs/hour from wall-clock time over a full level."""
    t0 = time.time()
    run_level(platform, model_id, parallel, jobs)
    wall = time.time() - t0
    return jobs / wall * 3600.0
